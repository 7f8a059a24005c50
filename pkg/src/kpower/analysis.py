"""Checking k-power preservers and recovering their canonical form."""

from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

import numpy as np

from .errors import (AmbiguousIntertwiner, BadK, DegenerateZeroMap,
                     HypothesisViolated, InjectivityRequired, NotAPreserver,
                     NotInCodomain, NonUnitRootLambda, ShapeMismatch,
                     SingularMatrix, UnsupportedN, UnsupportedSpace)
from .linalg import (DEFAULT_TOL, ToleranceConfig, mat_int_pow,
                     nullspace_min_singular, power_series_coeffs, residual)
from .operators import (DiagSelection, LinearMap, OrthCongruence, Similarity,
                        TriSimilarity, UnitarySimilarity, _image_coords,
                        _norm_general, _norm_sign, anti_transpose,
                        is_bijective, make_canonical, normalize_form, scaled)
from .linalg import normalize_phase
from .spaces import Space, SpaceKind, sample, sample_invertible, sample_near_identity

__all__ = [
    "Verdict", "CheckReport", "check_kpower", "check_jordan",
    "check_power_consequences", "check_proof_identities",
    "recover_canonical", "unital_part", "is_zero_map",
    "SIGMA_MIN_GATE", "GAP_GATE", "RECON_GATE",
]

# Gates of the intertwiner solve, relative to the largest singular value
# of the stacked system.
SIGMA_MIN_GATE = 1e-8
GAP_GATE = 1e-4
RECON_GATE = 1e-8
_BRANCH_TIE = 1e-6


class Verdict(str, Enum):
    VERIFIED = "Verified"
    FALSIFIED = "Falsified"
    DEGENERATE = "Degenerate"


@dataclass(frozen=True)
class CheckReport:
    """Outcome of a sampled identity check.

    ``witness`` is the worst falsifying input when the verdict is
    ``Falsified``. ``details`` collects per-identity residuals and notes.
    """

    verdict: Verdict
    max_residual: float
    witness: Optional[np.ndarray] = None
    trials: int = 0
    details: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return self.verdict is Verdict.VERIFIED


def _check_k(k):
    if int(k) in (0, 1):
        raise BadK("k must not be 0 or 1")
    return int(k)


def _endo(m: LinearMap):
    if m.domain != m.codomain:
        raise ShapeMismatch("map must send a space to itself")
    return m.domain


def _rng(rng):
    return np.random.default_rng(0) if rng is None else rng


def is_zero_map(m: LinearMap, cfg: ToleranceConfig = DEFAULT_TOL) -> bool:
    return not np.any(np.abs(m.coord) > cfg.abs_tol)


def _invertible(Y, cfg) -> bool:
    return np.linalg.cond(Y) < 1.0 / cfg.abs_tol


def check_kpower(m: LinearMap, k: int, cfg: ToleranceConfig = DEFAULT_TOL,
                 trials: int = 20, rng=None) -> CheckReport:
    """Sample ``A`` near ``I`` and compare ``psi(A^k)`` with ``psi(A)^k``.

    The zero map satisfies the identity but is reported ``Degenerate``.
    For negative ``k``, samples with singular ``psi(A)`` are skipped and
    the verdict is ``Degenerate`` if nothing is left.
    """
    k = _check_k(k)
    space = _endo(m)
    rng = _rng(rng)
    if is_zero_map(m, cfg):
        return CheckReport(Verdict.DEGENERATE, 0.0, trials=0,
                           details={"reason": "zero map", "identity_holds": True})
    worst, witness, used, skipped = 0.0, None, 0, 0
    failed = False
    for _ in range(trials):
        A = sample_near_identity(space, cfg.neighborhood_radius, rng)
        Y = m(A, cfg)
        if k < 0 and not _invertible(Y, cfg):
            skipped += 1
            continue
        lhs = m(mat_int_pow(A, k, cfg), cfg)
        rhs = mat_int_pow(Y, k, cfg)
        res = residual(lhs, rhs)
        used += 1
        bad = not cfg.close(lhs, rhs)
        if bad and (not failed or res > worst):
            witness = A
        failed = failed or bad
        worst = max(worst, res)
    if used == 0:
        return CheckReport(Verdict.DEGENERATE, 0.0, trials=trials,
                           details={"reason": "psi(A) singular on every sample",
                                    "skipped": skipped})
    verdict = Verdict.FALSIFIED if failed else Verdict.VERIFIED
    return CheckReport(verdict, worst, witness, used, {"skipped": skipped})


def check_jordan(m: LinearMap, cfg: ToleranceConfig = DEFAULT_TOL) -> CheckReport:
    """``psi(X^2) = psi(X)^2`` for every basis element and every sum of two.

    By polarization this covers the full quadratic identity, hence
    ``psi(AB + BA) = psi(A) psi(B) + psi(B) psi(A)``.
    """
    space = _endo(m)
    B = space.basis().elements
    d = B.shape[0]
    iu, ju = np.triu_indices(d, 1)
    X = np.concatenate([B, B[iu] + B[ju]]) if d > 1 else B
    Y = m.apply_many(X)
    lhs = m.apply_many(X @ X)
    rhs = Y @ Y
    scale = np.maximum(1.0, np.maximum(np.linalg.norm(lhs, axis=(1, 2)),
                                       np.linalg.norm(rhs, axis=(1, 2))))
    res = np.linalg.norm(lhs - rhs, axis=(1, 2)) / scale
    worst = int(np.argmax(res)) if res.size else 0
    bad = np.linalg.norm(lhs - rhs, axis=(1, 2)) > cfg.rel_tol * scale + cfg.abs_tol
    verdict = Verdict.FALSIFIED if bad.any() else Verdict.VERIFIED
    witness = X[int(np.argmax(np.where(bad, res, -1)))] if bad.any() else None
    return CheckReport(verdict, float(res[worst]) if res.size else 0.0, witness, len(X))


def unital_part(m: LinearMap, cfg: ToleranceConfig = DEFAULT_TOL) -> LinearMap:
    """``psi(I)^{-1} psi``; needs an invertible ``psi(I)`` commuting into the space."""
    space = _endo(m)
    Y0 = m(space.identity(), cfg)
    if not _invertible(Y0, cfg):
        raise HypothesisViolated("psi(I) is singular")
    images = np.linalg.solve(Y0, m.apply_many(space.basis().elements))
    coords = _image_coords(space, images)
    back = np.tensordot(coords.T, space._basis, axes=1)
    if np.linalg.norm(back - images) > 1e-8 * max(1.0, np.linalg.norm(images)):
        raise NotInCodomain("psi(I)^{-1} psi leaves the space")
    return LinearMap(space, space, coords)


_R_SET = tuple(r for r in range(-3, 6) if r != 0)


def check_power_consequences(m: LinearMap, k: int, cfg: ToleranceConfig = DEFAULT_TOL,
                             rng=None, trials: int = 10, rs=_R_SET,
                             tol: float = 1e-8, max_cond: float = 20.0,
                             precheck: bool = True) -> CheckReport:
    """``psi(A^r) = psi(A)^r`` for ``r`` in ``rs`` on invertible samples.

    Requires a unital map. With ``precheck`` the k-power identity is
    tested first and a failing report is returned unchanged.
    """
    k = _check_k(k)
    space = _endo(m)
    rng = _rng(rng)
    I = space.identity()
    if not cfg.close(m(I, cfg), I):
        raise HypothesisViolated("psi(I) != I")
    if precheck:
        pre = check_kpower(m, k, cfg, rng=rng)
        if not pre.ok:
            return pre
    worst, witness, per_r = 0.0, None, {}
    for _ in range(trials):
        A = sample_invertible(space, rng, max_cond=max_cond)
        Y = m(A, cfg)
        for r in rs:
            try:
                rhs = mat_int_pow(Y, r, cfg)
            except SingularMatrix:
                res = float("inf")
            else:
                res = residual(m(mat_int_pow(A, r, cfg), cfg), rhs)
            per_r[r] = max(per_r.get(r, 0.0), res)
            if res > tol and (witness is None or res > worst):
                witness = A
            worst = max(worst, res)
    verdict = Verdict.VERIFIED if worst <= tol else Verdict.FALSIFIED
    return CheckReport(verdict, worst, witness, trials, {"per_r": per_r})


def _binom(k: int, r: int) -> float:
    out = 1.0
    for i in range(r):
        out *= (k - i) / (i + 1)
    return out


def check_proof_identities(m: LinearMap, k: int, cfg: ToleranceConfig = DEFAULT_TOL,
                           rng=None, trials: int = 10,
                           tol: Optional[float] = None) -> CheckReport:
    """Low-degree coefficient identities that any k-power preserver satisfies.

    Writing ``Y0 = psi(I)`` and ``Y = psi(A)``:

    * degree one, ``k >= 2``: ``sum_{i<k} Y0^i Y Y0^{k-1-i} = k Y``;
      ``k < 0``: ``sum_{i<|k|} Y0^i Y Y0^{|k|-1-i} = -k Y0^{-1} Y Y0^{-1}``;
    * degree two: ``Y0^{k-2} Y^2 = psi(A^2)``;
    * ``Y0`` commutes with ``Y``;
    * the coefficients ``F_1, F_2`` of ``(Y0 + x Y)^k`` equal
      ``binom(k, r) psi(A^r)``.
    """
    k = _check_k(k)
    space = _endo(m)
    rng = _rng(rng)
    tol = cfg.rel_tol if tol is None else tol
    Y0 = m(space.identity(), cfg)
    names = ("degree1", "degree2", "commute", "series1", "series2")
    if k < 0 and not _invertible(Y0, cfg):
        return CheckReport(Verdict.FALSIFIED, float("inf"), np.eye(space.n), 0,
                           {"reason": "psi(I) singular with negative k",
                            **{n: float("inf") for n in names}})
    Y0inv = np.linalg.inv(Y0) if _invertible(Y0, cfg) else None
    pw = {j: np.linalg.matrix_power(Y0, j) for j in range(abs(k) + 1)}
    worst = dict.fromkeys(names, 0.0)
    witness, overall = None, 0.0
    for _ in range(trials):
        A = sample(space.span, rng)
        A = A / np.linalg.norm(A)
        Y = m(A, cfg)
        Y2 = m(A @ A, cfg)
        s = sum(pw[i] @ Y @ pw[abs(k) - 1 - i] for i in range(abs(k)))
        if k >= 2:
            d1 = residual(s, k * Y)
            d2 = residual(pw[k - 2] @ Y @ Y, Y2)
        else:
            d1 = residual(s, -k * Y0inv @ Y @ Y0inv)
            d2 = residual(np.linalg.matrix_power(Y0inv, 2 - k) @ Y @ Y, Y2)
        cm = residual(Y0 @ Y, Y @ Y0)
        try:
            F = power_series_coeffs(Y0, Y, k, 2, cfg)
            s1 = residual(F[1], _binom(k, 1) * Y)
            s2 = residual(F[2], _binom(k, 2) * Y2)
        except SingularMatrix:
            s1 = s2 = float("inf")
        vals = dict(zip(names, (d1, d2, cm, s1, s2)))
        top = max(vals.values())
        if top > tol and (witness is None or top > overall):
            witness = A
        overall = max(overall, top)
        for n_, v in vals.items():
            worst[n_] = max(worst[n_], v)
    verdict = Verdict.VERIFIED if overall <= tol else Verdict.FALSIFIED
    return CheckReport(verdict, overall, witness, trials, worst)


# ---------------------------------------------------------------------------
# Recovery


def _sigma_fn(branch):
    if branch == "transpose":
        return lambda X: np.swapaxes(X, -1, -2)
    if branch == "flip":
        return anti_transpose
    return lambda X: X


def _complex_extension(f):
    """``M = H1 + i H2 -> f(H1) + i f(H2)`` for a stack map ``f`` on Hermitian matrices."""
    def ext(M):
        H1 = (M + M.conj().T) / 2
        H2 = (M - M.conj().T) / 2j
        Y = f(np.array([H1, H2]))
        return Y[0] + 1j * Y[1]
    return ext


def _branch_residuals(fn, gen: Space, rng, pairs=5):
    mult = anti = 0.0
    for _ in range(pairs):
        A, B = sample(gen, rng), sample(gen, rng)
        fa, fb, fab = fn(A), fn(B), fn(A @ B)
        mult = max(mult, residual(fab, fa @ fb))
        anti = max(anti, residual(fab, fb @ fa))
    return mult, anti


def _choose_branch(space: Space, f, rng):
    """Pick ``identity`` or the transpose/flip branch for the stack map ``f``.

    ``f`` acts on stacks of members of ``space``. Hermitian maps are
    compared through their complex-linear extension; symmetric and real
    Hermitian maps have only one branch.
    """
    alt = "flip" if space.kind is SpaceKind.UPPER_TRI else "transpose"
    if space.n == 1 or space.kind is SpaceKind.SYM or (
            space.kind in (SpaceKind.HERM, SpaceKind.POSDEF) and not space.complex_entries):
        return "identity", {}
    if space.kind in (SpaceKind.HERM, SpaceKind.POSDEF):
        fn = _complex_extension(f)
        gen = Space(SpaceKind.GEN, space.field, space.n)
    else:
        fn = lambda M: f(M[None])[0]  # noqa: E731
        gen = space
    mult, anti = _branch_residuals(fn, gen, rng)
    info = {"mult_residual": mult, "anti_residual": anti}
    if mult <= _BRANCH_TIE and anti <= _BRANCH_TIE:
        raise AmbiguousIntertwiner("multiplicative and anti-multiplicative branches tie")
    return ("identity" if mult <= anti else alt), info


def _intertwiner(images, basis, sigma):
    """Stacked system ``psi1(B_a) X = X sigma(B_a)`` on row-major ``vec(X)``."""
    n = basis.shape[-1]
    I = np.eye(n)
    S = sigma(basis)
    rows = [np.kron(Y, I) - np.kron(I, Sb.T) for Y, Sb in zip(images, S)]
    M = np.vstack(rows)
    smax = np.linalg.norm(M, 2)
    scale = max(np.linalg.norm(np.vstack([np.kron(Y, I) for Y in images]), 2),
                np.linalg.norm(np.vstack([np.kron(I, Sb.T) for Sb in S]), 2))
    if smax <= 1e-10 * scale:
        if n == 1:
            return np.ones((1, 1)), 0.0, float("inf")
        raise NotAPreserver("intertwiner system vanishes")
    v, smin, gap = nullspace_min_singular(M / smax)
    return v.reshape(n, n), smin, gap


def _snap_real(X, space):
    if not space.complex_entries:
        return np.real(X)
    return X


def recover_canonical(m: LinearMap, k: int, cfg: ToleranceConfig = DEFAULT_TOL,
                      rng=None, trials: int = 10):
    """Canonical form of a k-power preserver given only its coordinates.

    The map is checked first. ``psi(I) = lam I`` gives ``lam``; the
    branch (plain, transpose or anti-transpose) is chosen by comparing
    multiplicativity and anti-multiplicativity of ``lam^{-1} psi``; the
    similarity factor is the one-dimensional solution ``X`` of
    ``psi1(B) X = X sigma(B)`` over the basis. Diagonal maps are read
    directly off the coordinate rows. The result is normalized and must
    rebuild the map to within ``1e-8``.
    """
    k = _check_k(k)
    space = _endo(m)
    rng = _rng(rng)
    kind = space.kind
    if kind in (SpaceKind.STRICT_UPPER, SpaceKind.BLOCK_DIAG):
        raise UnsupportedSpace(f"no canonical classification on {space}")
    if is_zero_map(m, cfg):
        raise DegenerateZeroMap("the zero map has no canonical form")
    if kind is SpaceKind.UPPER_TRI:
        if space.n < 3:
            raise UnsupportedN("upper triangular recovery needs n >= 3")
        if not is_bijective(m, cfg):
            raise InjectivityRequired("upper triangular recovery needs an injective map")
    report = check_kpower(m, k, cfg, trials, rng)
    if not report.ok:
        raise NotAPreserver(f"k-power check {report.verdict.value} "
                            f"(residual {report.max_residual:.3e})")
    if kind is SpaceKind.DIAG:
        form = _recover_diag(m, k, cfg)
    else:
        form = normalize_form(_recover_similarity(m, k, cfg, rng), space)
    rebuilt = make_canonical(form, space, k)
    res = residual(rebuilt.coord, m.coord)
    if res > RECON_GATE:
        raise NotAPreserver(f"reconstruction residual {res:.3e}")
    return form


def _recover_similarity(m: LinearMap, k: int, cfg, rng):
    space = m.domain
    kind = space.kind
    n = space.n
    Y0 = m(space.identity(), cfg)
    lam = complex(np.trace(Y0) / n)
    if residual(Y0, lam * np.eye(n)) > 1e-8:
        raise NotAPreserver("psi(I) is not a scalar matrix")
    if abs(lam ** (k - 1) - 1) > 1e-8:
        raise NonUnitRootLambda(f"lambda = {lam:.6g} is not a (k-1)-th root of unity")
    if not space.complex_entries or kind in (SpaceKind.HERM, SpaceKind.POSDEF):
        lam = lam.real
    psi1 = scaled(m, 1 / lam)
    branch, _ = _choose_branch(space, psi1.apply_many, rng)
    sigma = _sigma_fn(branch)
    basis = space.basis().elements
    images = psi1.apply_many(basis)
    X, smin, gap = _intertwiner(images, basis, sigma)
    if smin > SIGMA_MIN_GATE:
        raise NotAPreserver(f"no intertwiner (sigma_min {smin:.3e})")
    if gap < GAP_GATE:
        raise AmbiguousIntertwiner(f"intertwiner not unique (gap {gap:.3e})")
    X = _snap_real(X, space)
    if np.linalg.cond(X) > 1e10:
        raise NotAPreserver("intertwiner is singular")
    transpose = branch != "identity"
    if kind is SpaceKind.GEN:
        return Similarity(lam, _norm_general(X), transpose)
    if kind is SpaceKind.UPPER_TRI:
        if np.abs(np.tril(X, -1)).max(initial=0) > 1e-8 * np.abs(X).max():
            raise NotAPreserver("intertwiner is not upper triangular")
        return TriSimilarity(lam, _norm_general(np.triu(X)), transpose)
    if kind in (SpaceKind.HERM, SpaceKind.POSDEF):
        U = X.conj().T
        c = np.real(np.trace(U.conj().T @ U)) / n
        U = U / np.sqrt(c)
        if residual(U.conj().T @ U, np.eye(n)) > 1e-8:
            raise NotAPreserver("intertwiner is not a multiple of a unitary")
        sign = 1 if lam > 0 else -1
        return UnitarySimilarity(sign, normalize_phase(U), transpose)
    if kind is SpaceKind.SYM:
        c = complex(np.trace(X @ X.T) / n)
        O = X / np.sqrt(c)
        O = _snap_real(O, space)
        if residual(O @ O.T, np.eye(n)) > 1e-8:
            raise NotAPreserver("intertwiner is not a multiple of an orthogonal matrix")
        return OrthCongruence(lam, _norm_sign(O))
    raise UnsupportedSpace(str(space))


def _recover_diag(m: LinearMap, k: int, cfg):
    space = m.domain
    n = space.n
    L = np.asarray(m.coord)
    thresh = 1e-8 * max(1.0, np.abs(L).max())
    c = L.sum(axis=1)
    p = []
    for i in range(n):
        nz = np.flatnonzero(np.abs(L[i]) > thresh)
        if nz.size == 0:
            p.append(0)
            c[i] = 0
            continue
        if nz.size > 1:
            raise NotAPreserver(f"row {i} of the coordinate matrix has several nonzeros")
        j = int(nz[0])
        if abs(c[i] ** (k - 1) - 1) > 1e-8:
            raise NonUnitRootLambda(f"psi(I)_{i}{i} = {c[i]:.6g} fails C^k = C")
        p.append(j + 1)
    if k < 0 and 0 in p:
        raise NotAPreserver("negative k forbids vanishing rows")
    C = np.diag(c if space.complex_entries else np.real(c))
    return DiagSelection(C, tuple(p))
