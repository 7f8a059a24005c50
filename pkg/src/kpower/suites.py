"""Property suites behind ``kpower verify``.

Each suite expands ``(n, k)`` grids into cases. Case ``i`` draws from
its own generator ``default_rng([seed, i])``, so results depend only on
the seed and the case index, never on evaluation order.
"""

from dataclasses import asdict, dataclass
from typing import Callable, Iterable, List, Optional, Sequence

import numpy as np

from .analysis import check_kpower, check_power_consequences, check_proof_identities, \
    recover_canonical, unital_part
from .errors import HypothesisViolated, PreserverError, UnsupportedN
from .linalg import DEFAULT_TOL, ToleranceConfig, residual
from .operators import LinearMap, WeightedPair, forms_close, make_canonical, make_pair, \
    normalize_form, normalize_pair, random_canonical, random_invertible, random_pair_form, \
    random_unitary
from .pairs import check_multi_product, check_trace_power_pair, check_weighted_pair, \
    dual_map, make_multi_product, make_weighted_pair, recover_pair
from .spaces import FieldTag, Space, SpaceKind, sample

__all__ = ["SUITES", "CaseResult", "parse_n_range", "parse_k_set", "run_suite"]

DEFAULT_K_SET = (-3, -2, -1, 2, 3, 5)
PAIR_K_SET = (-3, -2, -1, 2, 3)


@dataclass
class CaseResult:
    suite: str
    case: int
    space: str
    n: int
    k: Optional[int]
    status: str            # "pass", "fail" or "skip"
    residual: float
    note: str = ""

    def to_json(self) -> dict:
        out = asdict(self)
        r = float(out["residual"])
        out["residual"] = r if np.isfinite(r) else None
        return out


def parse_n_range(text: str) -> List[int]:
    """``"a..b"`` or a single integer; bounds are inclusive."""
    text = str(text).strip()
    if ".." in text:
        lo, hi = text.split("..", 1)
        lo, hi = int(lo), int(hi)
    else:
        lo = hi = int(text)
    if lo < 1 or hi < lo:
        raise ValueError(f"bad n-range {text!r}")
    return list(range(lo, hi + 1))


def parse_k_set(text: str) -> List[int]:
    ks = [int(t) for t in str(text).split(",") if t.strip()]
    if not ks or any(k in (0, 1) for k in ks):
        raise ValueError("k-set must be non-empty and avoid 0 and 1")
    return ks


# ---------------------------------------------------------------------------
# Single-map suites


def _canonical_case(space: Space, k: int, rng, cfg, maps: int):
    worst = 0.0
    for _ in range(maps):
        form = normalize_form(random_canonical(space, k, rng), space)
        m = make_canonical(form, space, k)
        rep = check_kpower(m, k, cfg, rng=rng)
        if not rep.ok:
            return "fail", rep.max_residual, f"k-power check {rep.verdict.value}"
        ids = check_proof_identities(m, k, cfg, rng=rng)
        if not ids.ok:
            return "fail", ids.max_residual, "proof identities"
        got = recover_canonical(m, k, cfg, rng)
        rec = residual(make_canonical(got, space, k).coord, m.coord)
        if not forms_close(got, form):
            return "fail", rec, "recovered parameters differ"
        try:
            u = unital_part(m, cfg)
        except HypothesisViolated:
            u = None          # selection maps with a zero row have no unital part
        if u is not None:
            cons = check_power_consequences(u, k, cfg, rng=rng, precheck=False)
            if not cons.ok:
                return "fail", cons.max_residual, "power consequences"
            worst = max(worst, cons.max_residual)
        worst = max(worst, rep.max_residual, ids.max_residual, rec)
    return "pass", worst, ""


def _single_map_suite(kind: SpaceKind, min_n: int = 1):
    def cases(ns, ks, field):
        for n in ns:
            for k in ks:
                yield Space(kind, field, n), n, k, min_n

    return cases


# ---------------------------------------------------------------------------
# Pair and duality suites


def _random_bijection(space: Space, rng) -> LinearMap:
    d = space.dim
    while True:
        M = rng.standard_normal((d, d))
        if space.coord_dtype is complex:
            M = M + 1j * rng.standard_normal((d, d))
        M = M / np.sqrt(d) + np.eye(d)
        if np.linalg.cond(M) < 50:
            return LinearMap(space, space, M)


def _duality_case(space: Space, k, rng, cfg, maps: int, pairs: int = 20):
    worst = 0.0
    for _ in range(maps):
        phi = _random_bijection(space, rng)
        psi = dual_map(phi, cfg)
        for _ in range(pairs):
            A, B = sample(space, rng), sample(space, rng)
            lhs = np.trace(phi(A) @ psi(B))
            rhs = np.trace(A @ B)
            worst = max(worst, abs(lhs - rhs) / max(1.0, abs(rhs)))
        back = residual(dual_map(psi, cfg).coord, phi.coord)
        if worst > 1e-10 or back > 1e-9:
            return "fail", max(worst, back), "duality residual"
        worst = max(worst, back)
    return "pass", worst, ""


def _pair_case(space: Space, k: int, rng, cfg, maps: int):
    worst = 0.0
    for _ in range(maps):
        form = normalize_pair(random_pair_form(space, k, rng), space)
        phi, psi = make_pair(form, space, k)
        rep = check_trace_power_pair(phi, psi, k, cfg, rng=rng, tol=1e-9)
        if not rep.ok:
            return "fail", rep.max_residual, "trace identity"
        got = recover_pair(phi, psi, k, cfg=cfg, rng=rng)
        if not forms_close(got, form):
            return "fail", rep.max_residual, "recovered parameters differ"
        worst = max(worst, rep.max_residual)
    return "pass", worst, ""


def _multi_case(space: Space, m: int, rng, cfg, maps: int):
    n = space.n
    cx = space.complex_entries
    worst = 0.0
    for _ in range(maps):
        cs = list(rng.uniform(0.5, 2.0, m - 1))
        cs.append(1.0 / float(np.prod(cs)))
        alphas = [float(rng.choice([1.0, 2.0])) for _ in range(m)]
        betas = [float(rng.choice([1.0, -1.0])) for _ in range(m)]
        U = random_unitary(n, cx, rng)
        M = random_invertible(n, cx, rng, 10.0) if m % 2 == 0 else None
        rules = make_multi_product(m, cs, alphas, betas, U=U, M=M, cfg=cfg)
        rep = check_multi_product(rules, alphas, betas, space, cfg, trials=10, rng=rng)
        if not rep.ok:
            return "fail", rep.max_residual, f"multi-product m={m}"
        a, b = (float(rng.choice([1.0, 2.0])) for _ in range(2))
        c, d = (float(rng.choice([1.0, -1.0, 2.0])) for _ in range(2))
        wf = WeightedPair(random_invertible(n, cx, rng, 10.0), a, b, c, d,
                          bool(rng.integers(2)) and cx)
        phi, psi = make_weighted_pair(wf, space, cfg)
        wrep = check_weighted_pair(phi, psi, a, b, c, d, space, cfg, trials=10, rng=rng)
        if not wrep.ok:
            return "fail", wrep.max_residual, "weighted pair"
        worst = max(worst, rep.max_residual, wrep.max_residual)
    return "pass", worst, ""


def _pair_cases(ns, ks, field):
    for kind in (SpaceKind.GEN, SpaceKind.HERM, SpaceKind.SYM, SpaceKind.POSDEF,
                 SpaceKind.DIAG):
        for n in ns:
            for k in ks:
                yield Space(kind, field, n), n, k, 1


def _duality_cases(ns, ks, field):
    for kind in (SpaceKind.GEN, SpaceKind.HERM, SpaceKind.SYM, SpaceKind.DIAG):
        for n in ns:
            yield Space(kind, field, n), n, None, 1


def _multi_cases(ns, ks, field):
    for n in ns:
        for m in (3, 4):
            yield Space(SpaceKind.POSDEF, field, n), n, m, 1


# name -> (case generator, case runner, default k-set)
SUITES = {
    "mn": (_single_map_suite(SpaceKind.GEN), _canonical_case, DEFAULT_K_SET),
    "hn": (_single_map_suite(SpaceKind.HERM), _canonical_case, DEFAULT_K_SET),
    "sn": (_single_map_suite(SpaceKind.SYM), _canonical_case, DEFAULT_K_SET),
    "pn": (_single_map_suite(SpaceKind.POSDEF), _canonical_case, DEFAULT_K_SET),
    "dn": (_single_map_suite(SpaceKind.DIAG), _canonical_case, DEFAULT_K_SET),
    "tn": (_single_map_suite(SpaceKind.UPPER_TRI, min_n=3), _canonical_case, DEFAULT_K_SET),
    "duality": (_duality_cases, _duality_case, (None,)),
    "pairs": (_pair_cases, _pair_case, PAIR_K_SET),
    "multi": (_multi_cases, _multi_case, (None,)),
}


def run_suite(name: str, ns: Sequence[int] = (2, 3), ks: Optional[Iterable[int]] = None,
              field: FieldTag = FieldTag.COMPLEX, seed: int = 0, maps: int = 3,
              cfg: ToleranceConfig = DEFAULT_TOL,
              progress: Optional[Callable[[CaseResult], None]] = None) -> List[CaseResult]:
    """Run suite ``name`` over sizes ``ns`` and exponents ``ks``.

    ``maps`` random instances are drawn per case. Cases below the
    suite's minimum size are reported as ``skip`` with an
    ``UnsupportedN`` note instead of being run.
    """
    if name not in SUITES:
        raise KeyError(f"unknown suite {name!r}; choose from {', '.join(SUITES)}")
    gen, runner, default_ks = SUITES[name]
    ks = tuple(ks) if ks is not None else default_ks
    field = FieldTag(field)
    results = []
    for idx, (space, n, k, min_n) in enumerate(gen(ns, ks, field)):
        rng = np.random.default_rng([seed, idx])
        if n < min_n:
            notice = UnsupportedN(f"{space.kind.value} needs n >= {min_n}")
            res = CaseResult(name, idx, str(space), n, k, "skip", 0.0,
                             f"{type(notice).__name__}: {notice}")
        else:
            try:
                status, worst, note = runner(space, k, rng, cfg, maps)
            except PreserverError as exc:
                status, worst, note = "fail", float("inf"), f"{type(exc).__name__}: {exc}"
            res = CaseResult(name, idx, str(space), n, k, status, worst, note)
        results.append(res)
        if progress is not None:
            progress(res)
    return results
