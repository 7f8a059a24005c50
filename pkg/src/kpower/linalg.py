"""Dense matrix helpers shared by every other module.

Matrices are plain :class:`numpy.ndarray` objects. Real data stays
``float64``; anything complex is ``complex128``.
"""

from dataclasses import dataclass
from fractions import Fraction
from numbers import Real

import numpy as np

from .errors import NonFinite, NotHermitian, NotPSD, ShapeMismatch, SingularMatrix

__all__ = [
    "ToleranceConfig",
    "DEFAULT_TOL",
    "as_matrix",
    "residual",
    "matrices_close",
    "mat_int_pow",
    "herm_frac_pow",
    "power_series_coeffs",
    "frobenius_inner",
    "nullspace_min_singular",
    "normalize_phase",
    "MAX_SERIES_ORDER",
]

MAX_SERIES_ORDER = 8


@dataclass(frozen=True)
class ToleranceConfig:
    """Numerical comparison settings.

    Two matrices ``X`` and ``Y`` are considered equal when
    ``||X - Y||_F <= rel_tol * max(1, ||X||_F, ||Y||_F) + abs_tol``.
    ``neighborhood_radius`` is the Frobenius radius of the identity
    neighborhood that the k-power checkers sample from.
    """

    rel_tol: float = 1e-9
    abs_tol: float = 1e-12
    neighborhood_radius: float = 0.05

    def __post_init__(self):
        for name in ("rel_tol", "abs_tol", "neighborhood_radius"):
            value = getattr(self, name)
            if not (np.isfinite(value) and value > 0):
                raise ValueError(f"{name} must be strictly positive, got {value!r}")
        if self.rel_tol >= 1:
            raise ValueError("rel_tol must be < 1")
        if self.neighborhood_radius > 0.5:
            raise ValueError("neighborhood_radius must be <= 0.5")

    def close(self, X, Y) -> bool:
        return matrices_close(X, Y, self)


DEFAULT_TOL = ToleranceConfig()


def as_matrix(A, square: bool = False) -> np.ndarray:
    """Return ``A`` as a 2-D finite array, keeping it real when possible."""
    A = np.asarray(A)
    if A.ndim != 2:
        raise ShapeMismatch(f"expected a 2-D matrix, got shape {A.shape}")
    if square and A.shape[0] != A.shape[1]:
        raise ShapeMismatch(f"expected a square matrix, got shape {A.shape}")
    if A.dtype.kind in "biu":
        A = A.astype(float)
    elif A.dtype.kind not in "fc":
        A = A.astype(complex)
    if not np.all(np.isfinite(A)):
        raise NonFinite("matrix has NaN or infinite entries")
    return A


def residual(X, Y) -> float:
    """Relative Frobenius distance ``||X - Y|| / max(1, ||X||, ||Y||)``."""
    X = np.asarray(X)
    Y = np.asarray(Y)
    if X.shape != Y.shape:
        raise ShapeMismatch(f"shapes {X.shape} and {Y.shape} differ")
    scale = max(1.0, np.linalg.norm(X), np.linalg.norm(Y))
    return float(np.linalg.norm(X - Y) / scale)


def matrices_close(X, Y, cfg: ToleranceConfig = DEFAULT_TOL) -> bool:
    X = np.asarray(X)
    Y = np.asarray(Y)
    if X.shape != Y.shape:
        raise ShapeMismatch(f"shapes {X.shape} and {Y.shape} differ")
    scale = max(1.0, np.linalg.norm(X), np.linalg.norm(Y))
    return bool(np.linalg.norm(X - Y) <= cfg.rel_tol * scale + cfg.abs_tol)


def _checked_inv(A: np.ndarray, cfg: ToleranceConfig) -> np.ndarray:
    if np.linalg.cond(A) > 1.0 / cfg.abs_tol:
        raise SingularMatrix("matrix is numerically singular")
    return np.linalg.inv(A)


def mat_int_pow(A, k: int, cfg: ToleranceConfig = DEFAULT_TOL) -> np.ndarray:
    """Integer matrix power ``A**k``; ``A**0`` is the identity.

    Negative powers go through an explicit LU inverse rather than an
    eigendecomposition, which stays reliable for non-normal ``A``.

    >>> mat_int_pow(np.array([[1.0, 1.0], [0.0, 1.0]]), 2)
    array([[1., 2.],
           [0., 1.]])
    """
    A = as_matrix(A, square=True)
    k = int(k)
    if k >= 0:
        return np.linalg.matrix_power(A, k)
    return np.linalg.matrix_power(_checked_inv(A, cfg), -k)


def _is_hermitian(A: np.ndarray, cfg: ToleranceConfig) -> bool:
    return bool(
        np.linalg.norm(A - A.conj().T) <= cfg.rel_tol * max(1.0, np.linalg.norm(A))
    )


def herm_frac_pow(A, r, cfg: ToleranceConfig = DEFAULT_TOL) -> np.ndarray:
    """Spectral power ``A**r`` of a Hermitian positive semidefinite matrix.

    Eigenvalues above ``-abs_tol`` (scaled by ``max(1, ||A||_2)``) are
    clamped to zero. A negative exponent needs every eigenvalue strictly
    above that threshold.

    Args:
        A: Hermitian PSD matrix (real symmetric inputs give real output).
        r: exponent; ``int``, ``float`` or :class:`fractions.Fraction`.
        cfg: tolerance settings.

    Raises:
        NotHermitian: ``A`` is not Hermitian within ``rel_tol``.
        NotPSD: an eigenvalue is clearly negative, or zero with ``r < 0``.
    """
    A = as_matrix(A, square=True)
    if not isinstance(r, (Real, Fraction)):
        raise TypeError(f"exponent must be real, got {r!r}")
    r = float(r)
    if not _is_hermitian(A, cfg):
        raise NotHermitian("matrix is not Hermitian")
    A = (A + A.conj().T) / 2
    w, V = np.linalg.eigh(A)
    floor = cfg.abs_tol * max(1.0, float(np.max(np.abs(w))))
    if w[0] < -floor:
        raise NotPSD(f"smallest eigenvalue {w[0]:.3e} is negative")
    if r < 0 and w[0] <= floor:
        raise NotPSD("negative power of a singular PSD matrix")
    w = np.where(w < floor, 0.0, w) if r > 0 else w
    with np.errstate(divide="ignore"):
        wr = np.where(w > 0, np.abs(w) ** r, 0.0) if r != 0 else np.ones_like(w)
    out = (V * wr) @ V.conj().T
    return (out + out.conj().T) / 2


def _poly_mul(p: list, q: list, order: int) -> list:
    n = p[0].shape[0]
    dtype = np.result_type(p[0], q[0])
    out = [np.zeros((n, n), dtype=dtype) for _ in range(order + 1)]
    for i, a in enumerate(p):
        for j, b in enumerate(q):
            if i + j <= order:
                out[i + j] = out[i + j] + a @ b
    return out


def power_series_coeffs(M0, M1, k: int, order: int,
                        cfg: ToleranceConfig = DEFAULT_TOL) -> list:
    """Coefficients ``F_0..F_order`` of ``(M0 + x*M1)**k`` as a series in ``x``.

    The expansion is noncommutative. For ``k >= 0`` it is the truncated
    product of ``k`` linear factors; for ``k < 0`` the inverse is
    expanded as ``sum_j (-x M0^{-1} M1)^j M0^{-1}`` and then raised to
    ``|k|``.
    """
    M0 = as_matrix(M0, square=True)
    M1 = as_matrix(M1, square=True)
    if M0.shape != M1.shape:
        raise ShapeMismatch("M0 and M1 must have the same shape")
    order = int(order)
    if not 0 <= order <= MAX_SERIES_ORDER:
        raise ValueError(f"order must lie in [0, {MAX_SERIES_ORDER}]")
    k = int(k)
    n = M0.shape[0]
    dtype = np.result_type(M0, M1)
    if k >= 0:
        factor = [M0, M1]
    else:
        inv0 = _checked_inv(M0, cfg)
        step = -(inv0 @ M1)
        factor = [inv0]
        for _ in range(order):
            factor.append(step @ factor[-1])
    result = [np.eye(n, dtype=dtype)] + [np.zeros((n, n), dtype=dtype)] * order
    for _ in range(abs(k)):
        result = _poly_mul(result, factor, order)
    return result


def frobenius_inner(A, B) -> complex:
    """``tr(A^* B)``."""
    A = np.asarray(A)
    B = np.asarray(B)
    if A.shape != B.shape:
        raise ShapeMismatch(f"shapes {A.shape} and {B.shape} differ")
    return complex(np.vdot(A, B))


def normalize_phase(v: np.ndarray, rel: float = 1e-8) -> np.ndarray:
    """Rotate ``v`` so its first non-negligible entry is real and positive."""
    flat = v.reshape(-1)
    mags = np.abs(flat)
    if mags.max() == 0:
        return v
    idx = int(np.argmax(mags > rel * mags.max()))
    phase = flat[idx] / mags[idx]
    if not np.iscomplexobj(v):
        return v * np.sign(phase.real)
    out = v * np.conj(phase)
    out.reshape(-1)[idx] = mags[idx]          # exactly real, not real up to roundoff
    return out


def nullspace_min_singular(M):
    """Right singular vector of the smallest singular value of ``M``.

    Returns ``(vector, sigma_min, gap)`` where ``gap`` is the distance
    from ``sigma_min`` to the next singular value. Wide matrices count
    their missing singular values as zero. The vector has unit norm and
    a normalized phase, so the result is deterministic.
    """
    M = as_matrix(M)
    if not np.any(M):
        raise ValueError("M must be nonzero")
    _, s, vh = np.linalg.svd(M, full_matrices=True)
    ncols = M.shape[1]
    if s.size < ncols:
        s = np.concatenate([s, np.zeros(ncols - s.size)])
    vector = normalize_phase(vh[-1].conj())
    sigma_min = float(s[-1])
    gap = float(s[-2] - s[-1]) if ncols > 1 else float("inf")
    return vector, sigma_min, gap
