"""Linear maps in coordinates and the canonical preserver families.

A :class:`LinearMap` stores the coordinate matrix of a map between two
spaces with respect to their orthonormal bases. The canonical forms
(``Similarity``, ``UnitarySimilarity``, ...) and pair forms
(``SimilarityPair``, ``SandwichPair``, ...) are small frozen records
that :func:`make_canonical` and :func:`make_pair` turn into maps.
"""

from dataclasses import dataclass, replace
from typing import Callable, Optional, Union

import numpy as np

from .errors import (BadK, FormSpaceMismatch, InvalidForm, NotInCodomain,
                     NotLinear, ShapeMismatch, SingularP)
from .linalg import DEFAULT_TOL, ToleranceConfig, normalize_phase
from .spaces import FieldTag, Space, SpaceKind, sample

__all__ = [
    "LinearMap", "apply", "from_rule", "compose", "rank", "is_bijective",
    "identity_map", "zero_map", "scaled", "perturbed",
    "Similarity", "UnitarySimilarity", "OrthCongruence", "DiagSelection",
    "TriSimilarity", "ZeroMap", "Degenerate", "CanonicalForm",
    "SimilarityPair", "SandwichPair", "CongruencePair", "DiagPair",
    "WeightedPair", "PairForm",
    "make_canonical", "make_pair", "normalize_form", "normalize_pair",
    "forms_close", "random_canonical", "random_pair_form", "fixtures",
    "anti_transpose", "exchange_matrix", "random_unitary",
    "random_orthogonal", "random_invertible",
]


# ---------------------------------------------------------------------------
# Linear maps


@dataclass(frozen=True, eq=False)
class LinearMap:
    """Linear map ``domain -> codomain``.

    ``coord`` has shape ``(codomain.dim, domain.dim)``; column ``j``
    holds the coordinates of the image of the ``j``-th basis element.
    """

    domain: Space
    codomain: Space
    coord: np.ndarray

    def __post_init__(self):
        coord = np.array(self.coord)
        if coord.shape != (self.codomain.dim, self.domain.dim):
            raise ShapeMismatch(
                f"coord shape {coord.shape} does not match "
                f"({self.codomain.dim}, {self.domain.dim})")
        if (self.domain.scalar_field is FieldTag.REAL
                and self.codomain.scalar_field is FieldTag.REAL):
            if np.iscomplexobj(coord):
                if np.abs(coord.imag).max(initial=0) > 1e-12 * max(1, np.abs(coord).max()):
                    raise InvalidForm("real spaces need a real coordinate matrix")
                coord = coord.real
        coord = coord.astype(float if coord.dtype.kind != "c" else complex)
        coord.setflags(write=False)
        object.__setattr__(self, "coord", coord)

    def __call__(self, A, cfg: ToleranceConfig = DEFAULT_TOL):
        return apply(self, A, cfg)

    def __repr__(self):
        return f"LinearMap({self.domain} -> {self.codomain})"

    @property
    def n(self) -> int:
        return self.domain.n

    def apply_many(self, As) -> np.ndarray:
        """Apply to a stack of domain members without membership checks."""
        As = np.asarray(As)
        rows = self.domain._conj_rows
        c = As.reshape(As.shape[0], -1) @ rows.T
        if self.domain.coord_dtype is float:
            c = c.real
        out = np.tensordot(c @ self.coord.T, self.codomain._basis, axes=1)
        return out if self.codomain.complex_entries else out.real


def apply(m: LinearMap, A, cfg: ToleranceConfig = DEFAULT_TOL) -> np.ndarray:
    """Image of ``A``; raises :class:`NotInDomain` if ``A`` is off the span."""
    c = m.domain.span.coordinates(A, cfg)
    return m.codomain.from_coordinates(m.coord @ c)


def _image_coords(space: Space, images: np.ndarray) -> np.ndarray:
    c = space._conj_rows @ images.reshape(images.shape[0], -1).T
    return c.real if space.coord_dtype is float else c


def _map_from_images(domain: Space, codomain: Space, images) -> LinearMap:
    images = np.asarray(images)
    if images.shape[0] == 0:
        return LinearMap(domain, codomain, np.zeros((codomain.dim, 0)))
    return LinearMap(domain, codomain, _image_coords(codomain, images))


def from_rule(rule: Callable, domain: Space, codomain: Space = None,
              cfg: ToleranceConfig = DEFAULT_TOL, rng=None,
              checks: int = 5) -> LinearMap:
    """Coordinate matrix of a matrix-to-matrix function.

    The function is evaluated on the basis of ``domain``. Images must
    land in ``codomain`` and the resulting map must agree with ``rule``
    on ``checks`` random members, otherwise :class:`NotInCodomain` or
    :class:`NotLinear` is raised.
    """
    codomain = domain if codomain is None else codomain
    rng = np.random.default_rng(0) if rng is None else rng
    span = codomain.span
    images = np.array([np.asarray(rule(B)) for B in domain.basis()])
    for M in images:
        coords = span.coordinates(M)
        if np.linalg.norm(M - span.from_coordinates(coords)) > (
                cfg.rel_tol * max(1.0, np.linalg.norm(M)) + cfg.abs_tol):
            raise NotInCodomain(f"rule leaves {codomain}")
    m = _map_from_images(domain, codomain, images)
    for _ in range(checks):
        A = sample(domain.span, rng)
        if not cfg.close(rule(A), apply(m, A, cfg)):
            raise NotLinear("rule disagrees with its linear interpolation")
    return m


def compose(f: LinearMap, g: LinearMap) -> LinearMap:
    """``f o g``."""
    if g.codomain != f.domain:
        raise ShapeMismatch(f"cannot compose {f} after {g}")
    return LinearMap(g.domain, f.codomain, f.coord @ g.coord)


def rank(m: LinearMap, cfg: ToleranceConfig = DEFAULT_TOL) -> int:
    if m.coord.size == 0:
        return 0
    s = np.linalg.svd(m.coord, compute_uv=False)
    if s[0] == 0:
        return 0
    return int(np.sum(s > cfg.abs_tol * s[0]))


def is_bijective(m: LinearMap, cfg: ToleranceConfig = DEFAULT_TOL) -> bool:
    return m.domain.dim == m.codomain.dim == rank(m, cfg)


def identity_map(space: Space) -> LinearMap:
    return LinearMap(space, space, np.eye(space.dim, dtype=space.coord_dtype))


def zero_map(space: Space) -> LinearMap:
    return LinearMap(space, space, np.zeros((space.dim, space.dim), dtype=space.coord_dtype))


def scaled(m: LinearMap, mu) -> LinearMap:
    """``mu * m``."""
    return LinearMap(m.domain, m.codomain, mu * m.coord)


def perturbed(m: LinearMap, eps: float, rng) -> LinearMap:
    """``m`` plus Gaussian coordinate noise of Frobenius size ``eps * max(1, ||m||)``."""
    noise = rng.standard_normal(m.coord.shape)
    if np.iscomplexobj(m.coord):
        noise = noise + 1j * rng.standard_normal(m.coord.shape)
    noise *= eps * max(1.0, np.linalg.norm(m.coord)) / np.linalg.norm(noise)
    return LinearMap(m.domain, m.codomain, m.coord + noise)


# ---------------------------------------------------------------------------
# Forms


@dataclass(frozen=True, eq=False)
class Similarity:
    """``A -> lam P A P^{-1}`` (or with ``A^t``) on general matrices."""
    lam: complex
    P: np.ndarray
    transpose: bool = False


@dataclass(frozen=True, eq=False)
class UnitarySimilarity:
    """``A -> sign U^* A U`` (or with ``A^t``) on Hermitian matrices / the cone."""
    sign: int
    U: np.ndarray
    transpose: bool = False


@dataclass(frozen=True, eq=False)
class OrthCongruence:
    """``A -> lam O A O^t`` on symmetric matrices, ``O O^t = I``."""
    lam: complex
    O: np.ndarray


@dataclass(frozen=True, eq=False)
class DiagSelection:
    """``A -> C diag(a_{p(1)}, ..., a_{p(n)})`` with ``a_0 = 0``; ``p`` is 1-based."""
    C: np.ndarray
    p: tuple


@dataclass(frozen=True, eq=False)
class TriSimilarity:
    """``A -> lam P A P^{-1}`` or ``lam P A^- P^{-1}`` on upper triangular matrices."""
    lam: complex
    P: np.ndarray
    flip: bool = False


@dataclass(frozen=True)
class ZeroMap:
    pass


@dataclass(frozen=True)
class Degenerate:
    description: str


CanonicalForm = Union[Similarity, UnitarySimilarity, OrthCongruence,
                      DiagSelection, TriSimilarity, ZeroMap, Degenerate]


@dataclass(frozen=True, eq=False)
class SimilarityPair:
    """``phi = c^{-k} P (.) P^{-1}``, ``psi = c P (.) P^{-1}``.

    On Hermitian matrices and the cone ``P`` is unitary, on symmetric
    matrices it is orthogonal.
    """
    c: complex
    P: np.ndarray
    transpose: bool = False


@dataclass(frozen=True, eq=False)
class SandwichPair:
    """``phi(A) = P A Q``, ``psi(B) = P B Q`` (general matrices, ``k = -1``)."""
    P: np.ndarray
    Q: np.ndarray
    transpose: bool = False


@dataclass(frozen=True, eq=False)
class CongruencePair:
    """Congruence pair for ``k = -1``.

    Hermitian matrices and the cone: ``c P^* A P``; symmetric
    matrices: ``c P A P^t``. Both maps of the pair are equal.
    """
    c: complex
    P: np.ndarray
    transpose: bool = False


@dataclass(frozen=True, eq=False)
class DiagPair:
    """``phi(A) = P C^{-k} A P^{-1}``, ``psi(B) = P C B P^{-1}``; ``P`` a permutation."""
    C: np.ndarray
    P: np.ndarray


@dataclass(frozen=True, eq=False)
class WeightedPair:
    """``phi(A) = (P^* A^c P)^{1/a}``, ``psi(B) = (P^{-1} B^d P^{-*})^{1/b}``."""
    P: np.ndarray
    a: float
    b: float
    c: float
    d: float
    transpose: bool = False


PairForm = Union[SimilarityPair, SandwichPair, CongruencePair, DiagPair, WeightedPair]


# ---------------------------------------------------------------------------
# Helpers


def exchange_matrix(n: int) -> np.ndarray:
    """Anti-diagonal identity ``J_n``."""
    return np.eye(n)[::-1].copy()


def anti_transpose(A) -> np.ndarray:
    """``A^- = J A^t J``, i.e. ``(A^-)_{ij} = A_{n+1-j, n+1-i}``."""
    A = np.asarray(A)
    return A[::-1, ::-1].T.copy() if A.ndim == 2 else np.swapaxes(A[..., ::-1, ::-1], -1, -2)


def _transpose(A):
    return np.swapaxes(A, -1, -2)


def _ct(A):
    return np.swapaxes(A, -1, -2).conj()


def _real_scalar(x, what, tol=1e-9):
    x = complex(x)
    if abs(x.imag) > tol * max(1.0, abs(x)):
        raise InvalidForm(f"{what} must be real for a real space")
    return x.real


def _field_matrix(M, space: Space, what: str, tol=1e-9) -> np.ndarray:
    M = np.array(M, dtype=complex)
    if M.shape != (space.n, space.n):
        raise InvalidForm(f"{what} must be {space.n}x{space.n}")
    if not np.all(np.isfinite(M)):
        raise InvalidForm(f"{what} has non-finite entries")
    if not space.complex_entries:
        if np.abs(M.imag).max(initial=0) > tol * max(1.0, np.abs(M).max()):
            raise InvalidForm(f"{what} must be real for a real space")
        return M.real
    return M


def _field_scalar(x, space: Space, what: str):
    return complex(x) if space.complex_entries else _real_scalar(x, what)


def _checked_inverse(P, what="P", max_cond=1e12):
    if np.linalg.cond(P) > max_cond:
        raise SingularP(f"{what} is singular")
    return np.linalg.inv(P)


def _is_scalar_identity(M, target, tol):
    return np.linalg.norm(M - target * np.eye(M.shape[0])) <= tol * max(1.0, np.linalg.norm(M))


def _check_root(lam, k, tol, what="lambda"):
    if k is None:
        return
    if abs(complex(lam) ** (k - 1) - 1) > tol:
        raise InvalidForm(f"{what}^(k-1) = 1 fails for {what}={lam!r}, k={k}")


def _check_k(k):
    if k is not None and int(k) in (0, 1):
        raise BadK("k must not be 0 or 1")


def _kind(space: Space) -> SpaceKind:
    return space.kind


# ---------------------------------------------------------------------------
# Canonical maps


def make_canonical(form, space: Space, k: Optional[int] = None,
                   cfg: ToleranceConfig = DEFAULT_TOL) -> LinearMap:
    """Build the linear map of a canonical form on ``space``.

    When ``k`` is given the k-dependent invariants are enforced too:
    ``lam**(k-1) = 1``, ``C**k = C`` for selections, sign rules on
    Hermitian matrices.
    """
    _check_k(k)
    B = space.basis().elements
    tol = 1e-8
    kind = space.kind
    if isinstance(form, ZeroMap):
        return zero_map(space)
    if isinstance(form, Degenerate):
        raise FormSpaceMismatch(f"degenerate form cannot be built: {form.description}")
    if isinstance(form, Similarity):
        if kind is not SpaceKind.GEN:
            raise FormSpaceMismatch("Similarity needs a general matrix space")
        lam = _field_scalar(form.lam, space, "lambda")
        _check_root(lam, k, tol)
        P = _field_matrix(form.P, space, "P")
        Pinv = _checked_inverse(P)
        X = _transpose(B) if form.transpose else B
        return _map_from_images(space, space, lam * (P @ X @ Pinv))
    if isinstance(form, UnitarySimilarity):
        if kind not in (SpaceKind.HERM, SpaceKind.POSDEF):
            raise FormSpaceMismatch("UnitarySimilarity needs Hermitian matrices or the cone")
        sign = form.sign
        if sign not in (1, -1):
            raise InvalidForm("sign must be +1 or -1")
        if kind is SpaceKind.POSDEF and sign != 1:
            raise InvalidForm("maps on the cone need sign +1")
        if k is not None and k % 2 == 0 and sign != 1:
            raise InvalidForm("even k forces sign +1")
        U = _field_matrix(form.U, space, "U")
        if not _is_scalar_identity(U.conj().T @ U, 1.0, tol):
            raise InvalidForm("U must be unitary")
        X = _transpose(B) if form.transpose else B
        return _map_from_images(space, space, sign * (U.conj().T @ X @ U))
    if isinstance(form, OrthCongruence):
        if kind is not SpaceKind.SYM:
            raise FormSpaceMismatch("OrthCongruence needs symmetric matrices")
        lam = _field_scalar(form.lam, space, "lambda")
        _check_root(lam, k, tol)
        O = _field_matrix(form.O, space, "O")
        if not _is_scalar_identity(O @ O.T, 1.0, tol):
            raise InvalidForm("O must satisfy O O^t = I")
        return _map_from_images(space, space, lam * (O @ B @ O.T))
    if isinstance(form, DiagSelection):
        if kind is not SpaceKind.DIAG:
            raise FormSpaceMismatch("DiagSelection needs diagonal matrices")
        C, p = _check_selection(form, space, k, tol)
        c = np.diag(C)
        coord = np.zeros((space.n, space.n), dtype=space.coord_dtype)
        for i, j in enumerate(p):
            if j:
                coord[i, j - 1] = c[i]
        return LinearMap(space, space, coord)
    if isinstance(form, TriSimilarity):
        if kind is not SpaceKind.UPPER_TRI:
            raise FormSpaceMismatch("TriSimilarity needs upper triangular matrices")
        lam = _field_scalar(form.lam, space, "lambda")
        _check_root(lam, k, tol)
        P = _field_matrix(form.P, space, "P")
        if np.abs(np.tril(P, -1)).max(initial=0) > tol * np.abs(P).max():
            raise InvalidForm("P must be upper triangular")
        P = np.triu(P)
        Pinv = np.triu(_checked_inverse(P))
        X = anti_transpose(B) if form.flip else B
        return _map_from_images(space, space, lam * (P @ X @ Pinv))
    raise FormSpaceMismatch(f"unknown canonical form {type(form).__name__}")


def _check_selection(form: DiagSelection, space: Space, k, tol):
    n = space.n
    C = _field_matrix(form.C, space, "C")
    if np.abs(C - np.diag(np.diag(C))).max(initial=0) > tol:
        raise InvalidForm("C must be diagonal")
    p = tuple(int(j) for j in form.p)
    if len(p) != n or any(j < 0 or j > n for j in p):
        raise InvalidForm(f"p must have {n} entries in 0..{n}")
    c = np.diag(C)
    for i in range(n):
        is_zero = abs(c[i]) <= tol
        if (p[i] == 0) != is_zero:
            raise InvalidForm("C_ii = 0 exactly when p(i) = 0")
        if k is not None and not is_zero and abs(c[i] ** (k - 1) - 1) > tol:
            raise InvalidForm("C^k = C fails")
        if k is not None and k < 0 and p[i] == 0:
            raise InvalidForm("negative k needs every p(i) != 0")
    return np.diag(c), p


# ---------------------------------------------------------------------------
# Pair maps


def _sigma(B, flag):
    return _transpose(B) if flag else B


def make_pair(form, space: Space, k: int,
              cfg: ToleranceConfig = DEFAULT_TOL) -> tuple:
    """``(phi, psi)`` maps of a pair form for the trace identity with power ``k``."""
    _check_k(k)
    k = int(k)
    B = space.basis().elements
    kind = space.kind
    tol = 1e-8
    if isinstance(form, WeightedPair):
        raise FormSpaceMismatch("weighted pairs are nonlinear; use make_weighted_pair")
    if isinstance(form, SimilarityPair):
        if kind not in (SpaceKind.GEN, SpaceKind.HERM, SpaceKind.SYM, SpaceKind.POSDEF):
            raise FormSpaceMismatch(f"SimilarityPair not available on {space}")
        if kind in (SpaceKind.HERM, SpaceKind.POSDEF):
            c = _real_scalar(form.c, "c")
        else:
            c = _field_scalar(form.c, space, "c")
        if c == 0 or (kind is SpaceKind.POSDEF and c <= 0):
            raise InvalidForm("c must be nonzero (positive on the cone)")
        P = _field_matrix(form.P, space, "P")
        if kind in (SpaceKind.HERM, SpaceKind.POSDEF):
            if not _is_scalar_identity(P.conj().T @ P, 1.0, tol):
                raise InvalidForm("P must be unitary here")
            Pinv = P.conj().T
        elif kind is SpaceKind.SYM:
            if form.transpose:
                raise InvalidForm("no transpose variant on symmetric matrices")
            if not _is_scalar_identity(P @ P.T, 1.0, tol):
                raise InvalidForm("P must be orthogonal here")
            Pinv = P.T
        else:
            Pinv = _checked_inverse(P)
        core = P @ _sigma(B, form.transpose) @ Pinv
        return (_map_from_images(space, space, c ** (-k) * core),
                _map_from_images(space, space, c * core))
    if isinstance(form, SandwichPair):
        if kind is not SpaceKind.GEN or k != -1:
            raise FormSpaceMismatch("SandwichPair needs general matrices and k = -1")
        P = _field_matrix(form.P, space, "P")
        Q = _field_matrix(form.Q, space, "Q")
        _checked_inverse(P)
        _checked_inverse(Q, "Q")
        m = _map_from_images(space, space, P @ _sigma(B, form.transpose) @ Q)
        return m, m
    if isinstance(form, CongruencePair):
        if kind not in (SpaceKind.HERM, SpaceKind.SYM, SpaceKind.POSDEF) or k != -1:
            raise FormSpaceMismatch("CongruencePair needs Hermitian/symmetric/cone and k = -1")
        P = _field_matrix(form.P, space, "P")
        _checked_inverse(P)
        if kind is SpaceKind.SYM:
            if form.transpose:
                raise InvalidForm("no transpose variant on symmetric matrices")
            c = _field_scalar(form.c, space, "c")
            imgs = c * (P @ B @ P.T)
        else:
            c = _real_scalar(form.c, "c")
            if kind is SpaceKind.POSDEF and c <= 0:
                raise InvalidForm("c must be positive on the cone")
            imgs = c * (P.conj().T @ _sigma(B, form.transpose) @ P)
        if c == 0:
            raise InvalidForm("c must be nonzero")
        m = _map_from_images(space, space, imgs)
        return m, m
    if isinstance(form, DiagPair):
        if kind is not SpaceKind.DIAG:
            raise FormSpaceMismatch("DiagPair needs diagonal matrices")
        C = _field_matrix(form.C, space, "C")
        c = np.diag(C)
        if np.abs(C - np.diag(c)).max(initial=0) > tol or np.min(np.abs(c)) <= tol:
            raise InvalidForm("C must be diagonal and invertible")
        P = _field_matrix(form.P, space, "P").real
        if not (np.all(np.isin(P, (0.0, 1.0))) and np.all(P.sum(0) == 1)
                and np.all(P.sum(1) == 1)):
            raise InvalidForm("P must be a permutation matrix")
        imgs_phi = P @ (np.diag(c ** (-k)) @ B) @ P.T
        imgs_psi = P @ (np.diag(c) @ B) @ P.T
        return (_map_from_images(space, space, imgs_phi),
                _map_from_images(space, space, imgs_psi))
    raise FormSpaceMismatch(f"unknown pair form {type(form).__name__}")


# ---------------------------------------------------------------------------
# Normalization


def _norm_general(P: np.ndarray) -> np.ndarray:
    n = P.shape[0]
    return normalize_phase(P * (np.sqrt(n) / np.linalg.norm(P)))


def _norm_sign(O: np.ndarray, rel=1e-8) -> np.ndarray:
    flat = O.reshape(-1)
    mags = np.abs(flat)
    idx = int(np.argmax(mags > rel * mags.max()))
    z = complex(flat[idx])
    key = z.real if abs(z.real) > rel * mags.max() else z.imag
    return O if key > 0 else -O


def _snap_scalar(z, rel=1e-14):
    """Drop real or imaginary parts that are pure roundoff."""
    z = complex(z)
    scale = abs(z)
    re = 0.0 if abs(z.real) <= rel * scale else z.real
    im = 0.0 if abs(z.imag) <= rel * scale else z.imag
    return complex(re, im) if im else re


def _norm_for_kind(P, space: Space):
    if space.kind in (SpaceKind.HERM, SpaceKind.POSDEF):
        return normalize_phase(P)
    if space.kind is SpaceKind.SYM:
        return _norm_sign(P)
    return _norm_general(P)


def normalize_form(form, space: Space):
    """Deterministic representative of a canonical form.

    ``P`` is scaled to ``||P||_F = sqrt(n)`` with its first non-negligible
    row-major entry real and positive. Unitary and orthogonal factors
    keep their scale and only fix the phase (resp. sign).
    """
    if isinstance(form, (Similarity, TriSimilarity)):
        return replace(form, lam=_snap_scalar(form.lam), P=_norm_general(np.asarray(form.P)))
    if isinstance(form, UnitarySimilarity):
        return replace(form, U=normalize_phase(np.asarray(form.U)))
    if isinstance(form, OrthCongruence):
        return replace(form, lam=_snap_scalar(form.lam), O=_norm_sign(np.asarray(form.O)))
    if isinstance(form, DiagSelection):
        c = np.diag(np.asarray(form.C)).copy()
        p = list(int(j) for j in form.p)
        for i in range(len(p)):
            if abs(c[i]) <= 1e-8 or p[i] == 0:
                c[i] = 0
                p[i] = 0
        return DiagSelection(np.diag(c), tuple(p))
    return form


def normalize_pair(form, space: Space):
    """Deterministic representative of a pair form (see :func:`normalize_form`).

    Sandwich pairs move the scale of ``P`` into ``Q``; congruence pairs
    move ``|c|`` into ``P`` so that ``c`` is ``+1``/``-1`` (or ``1`` for
    complex symmetric matrices and the cone).
    """
    if isinstance(form, SimilarityPair):
        return replace(form, P=_norm_for_kind(np.asarray(form.P), space))
    if isinstance(form, SandwichPair):
        P = np.asarray(form.P)
        Pn = _norm_general(P)
        mu = np.vdot(P, Pn) / np.vdot(P, P)
        Q = np.asarray(form.Q) / mu
        if not space.complex_entries:
            Q = Q.real
        return SandwichPair(Pn, Q, form.transpose)
    if isinstance(form, CongruencePair):
        c = complex(form.c)
        P = np.asarray(form.P, dtype=complex)
        if space.kind is SpaceKind.SYM and space.complex_entries:
            P = P * np.sqrt(c)
            c_new = 1.0
        else:
            P = P * np.sqrt(abs(c))
            c_new = float(np.sign(c.real))
        if not space.complex_entries:
            P = P.real
        P = _norm_sign(P) if space.kind is SpaceKind.SYM else normalize_phase(P)
        return CongruencePair(c_new, P, form.transpose)
    return form


def _close_scalar(a, b, tol):
    return abs(complex(a) - complex(b)) <= tol * max(1.0, abs(complex(a)), abs(complex(b)))


def _close_matrix(a, b, tol):
    a = np.asarray(a)
    b = np.asarray(b)
    return a.shape == b.shape and np.linalg.norm(a - b) <= tol * max(
        1.0, np.linalg.norm(a), np.linalg.norm(b))


def forms_close(f, g, tol: float = 1e-8) -> bool:
    """Parameter-wise comparison of two (already normalized) forms."""
    if type(f) is not type(g):
        return False
    if isinstance(f, (ZeroMap, Degenerate)):
        return f == g
    for name in f.__dataclass_fields__:
        a, b = getattr(f, name), getattr(g, name)
        if isinstance(a, (bool, np.bool_, str)) or isinstance(b, (bool, np.bool_, str)):
            if bool(a) != bool(b) if not isinstance(a, str) else a != b:
                return False
        elif isinstance(a, tuple):
            if tuple(a) != tuple(b):
                return False
        elif np.ndim(a) == 0:
            if not _close_scalar(a, b, tol):
                return False
        elif not _close_matrix(a, b, tol):
            return False
    return True


# ---------------------------------------------------------------------------
# Random members of the families


def _gauss(rng, shape, complex_):
    g = rng.standard_normal(shape)
    return g + 1j * rng.standard_normal(shape) if complex_ else g


def random_invertible(n: int, complex_: bool, rng, max_cond: float = 10.0,
                      upper: bool = False) -> np.ndarray:
    """Gaussian matrix rejected until its condition number is below ``max_cond``."""
    for _ in range(100000):
        P = _gauss(rng, (n, n), complex_)
        if upper:
            P = np.triu(P)
            d = np.diag(P)
            P[np.diag_indices(n)] = np.where(np.abs(d) < 0.5, d + np.sign(d.real + 1e-300) * 0.5, d)
        if np.linalg.cond(P) < max_cond:
            return P
    raise RuntimeError("could not sample a well-conditioned matrix")


def random_unitary(n: int, complex_: bool, rng) -> np.ndarray:
    Q, R = np.linalg.qr(_gauss(rng, (n, n), complex_))
    d = np.diag(R)
    return Q * (d / np.abs(d))


def random_orthogonal(n: int, complex_: bool, rng, scale: float = 0.5) -> np.ndarray:
    """Real orthogonal, or complex orthogonal ``expm(K)`` with ``K`` skew-symmetric."""
    if not complex_:
        return random_unitary(n, False, rng)
    from scipy.linalg import expm
    G = _gauss(rng, (n, n), True) * scale
    O = random_unitary(n, False, rng) @ expm((G - G.T) / 2)
    return O


def _random_root(k, complex_, rng):
    m = abs(k - 1)
    if complex_:
        return complex(np.exp(2j * np.pi * rng.integers(m) / m))
    roots = [1.0, -1.0] if m % 2 == 0 else [1.0]
    return roots[rng.integers(len(roots))]


def random_canonical(space: Space, k: int, rng, max_cond: float = 10.0):
    """A random valid canonical form for ``space`` and exponent ``k``."""
    _check_k(k)
    n = space.n
    cx = space.complex_entries
    kind = space.kind
    flag = bool(rng.integers(2)) if n > 1 else False
    if kind is SpaceKind.GEN:
        return Similarity(_random_root(k, cx, rng), random_invertible(n, cx, rng, max_cond), flag)
    if kind in (SpaceKind.HERM, SpaceKind.POSDEF):
        sign = 1
        if kind is SpaceKind.HERM and k % 2:
            sign = int(rng.choice([1, -1]))
        return UnitarySimilarity(sign, random_unitary(n, cx, rng), flag and cx)
    if kind is SpaceKind.SYM:
        return OrthCongruence(_random_root(k, cx, rng), random_orthogonal(n, cx, rng))
    if kind is SpaceKind.DIAG:
        c = np.array([_random_root(k, cx, rng) for _ in range(n)], dtype=complex if cx else float)
        if k > 0:
            drop = rng.random(n) < 0.25
            drop[rng.integers(n)] = False
            c[drop] = 0
        p = tuple(int(rng.integers(1, n + 1)) if c[i] != 0 else 0 for i in range(n))
        return DiagSelection(np.diag(c), p)
    if kind is SpaceKind.UPPER_TRI:
        P = random_invertible(n, cx, rng, max_cond * 10, upper=True)
        return TriSimilarity(_random_root(k, cx, rng), P, flag)
    raise FormSpaceMismatch(f"no canonical family on {space}")


def _random_c(complex_, rng, positive=False):
    mag = rng.uniform(0.5, 2.0)
    if positive:
        return mag
    if complex_:
        return complex(mag * np.exp(2j * np.pi * rng.random()))
    return float(mag * rng.choice([1, -1]))


def random_pair_form(space: Space, k: int, rng, max_cond: float = 10.0):
    """A random valid pair form for ``space`` and ``k`` (the variant the theory prescribes)."""
    _check_k(k)
    n = space.n
    cx = space.complex_entries
    kind = space.kind
    flag = bool(rng.integers(2)) if n > 1 else False
    if kind is SpaceKind.GEN:
        if k == -1:
            return SandwichPair(random_invertible(n, cx, rng, max_cond),
                                random_invertible(n, cx, rng, max_cond), flag)
        return SimilarityPair(_random_c(cx, rng), random_invertible(n, cx, rng, max_cond), flag)
    if kind in (SpaceKind.HERM, SpaceKind.POSDEF):
        cone = kind is SpaceKind.POSDEF
        if k == -1:
            c = 1.0 if cone else float(rng.choice([1, -1]))
            return CongruencePair(c * rng.uniform(0.5, 2.0),
                                  random_invertible(n, cx, rng, max_cond), flag and cx)
        return SimilarityPair(_random_c(False, rng, positive=cone),
                              random_unitary(n, cx, rng), flag and cx)
    if kind is SpaceKind.SYM:
        if k == -1:
            return CongruencePair(_random_c(cx, rng), random_invertible(n, cx, rng, max_cond))
        return SimilarityPair(_random_c(cx, rng), random_orthogonal(n, cx, rng))
    if kind is SpaceKind.DIAG:
        c = np.array([_random_c(cx, rng) for _ in range(n)])
        return DiagPair(np.diag(c), np.eye(n)[rng.permutation(n)])
    raise FormSpaceMismatch(f"no pair family on {space}")


# ---------------------------------------------------------------------------
# Counterexample fixtures


def fixtures(n: int = 3, c: float = 2.0, d: float = 0.0,
             field: FieldTag = FieldTag.COMPLEX) -> dict:
    """Named maps that preserve powers without having a canonical form.

    * ``zero_map`` on ``n x n`` general matrices.
    * ``block_transpose``: ``A (+) B -> A (+) B^t`` on the 8-dimensional
      space of block diagonal ``4 x 4`` matrices with two ``2 x 2`` blocks.
    * ``t3_map_1`` .. ``t3_map_3``: the non-injective maps on ``3 x 3``
      upper triangular matrices. ``t3_map_1`` keeps ``c a12`` and
      ``d a23``; it preserves powers only when ``c * d = 0``, hence the
      default ``d = 0``.
    """
    field = FieldTag(field)
    gen = Space(SpaceKind.GEN, field, n)
    block = Space(SpaceKind.BLOCK_DIAG, field, 4, blocks=(2, 2))
    t3 = Space(SpaceKind.UPPER_TRI, field, 3)

    def block_transpose(A):
        out = np.array(A, copy=True)
        out[2:, 2:] = out[2:, 2:].T
        return out

    def t3_1(A):
        out = np.zeros_like(A)
        out[0, 0], out[1, 1], out[2, 2] = A[0, 0], A[1, 1], A[2, 2]
        out[0, 1], out[1, 2] = c * A[0, 1], d * A[1, 2]
        return out

    def t3_2(A):
        return np.diag([A[2, 2], A[0, 0], A[1, 1]]).astype(A.dtype)

    def t3_3(A):
        out = np.zeros_like(A)
        out[0, 0], out[0, 2], out[2, 2] = A[1, 1], c * A[0, 1], A[0, 0]
        return out

    return {
        "zero_map": zero_map(gen),
        "block_transpose": from_rule(block_transpose, block),
        "t3_map_1": from_rule(t3_1, t3),
        "t3_map_2": from_rule(t3_2, t3),
        "t3_map_3": from_rule(t3_3, t3),
    }
