"""Command-line front end.

stdout carries JSON only; diagnostics and tables go to stderr. Exit
codes: 0 verified or success, 1 falsified, 2 usage or parse error,
3 degenerate or numerical failure.

Examples::

    kpower gen --space gen --field C --n 3 --form similarity --random --seed 7 -o sim.json
    kpower check sim.json --k 3
    kpower recover sim.json --k 3
    kpower gen --space herm --n 2 --form congruence-pair --k -1 --c -1 -o pair
    kpower pair-check pair.phi.json pair.psi.json --k -1
    kpower verify --suite dn --n-range 1..5 --k-set -2,2,3
"""

import argparse
import json
import os
import sys

import numpy as np

from . import errors as E
from .analysis import Verdict, check_kpower, check_proof_identities, recover_canonical
from .linalg import DEFAULT_TOL, ToleranceConfig
from .operators import (CongruencePair, DiagPair, DiagSelection, OrthCongruence, SandwichPair,
                        Similarity, SimilarityPair, TriSimilarity, UnitarySimilarity, ZeroMap,
                        fixtures, make_canonical, make_pair, normalize_form, normalize_pair,
                        random_canonical, random_pair_form)
from .pairs import REGIMES, check_trace_power_pair, dual_map, recover_pair
from .serialization import (doc_to_map, dumps, form_to_json, load_doc, map_to_doc,
                            matrix_to_json, save_doc)
from .spaces import FieldTag, Space, SpaceKind
from .suites import SUITES, parse_k_set, parse_n_range, run_suite

__all__ = ["main", "build_parser", "exit_code_for"]

EXIT_OK, EXIT_FALSIFIED, EXIT_USAGE, EXIT_DEGENERATE = 0, 1, 2, 3

CANONICAL_FORMS = {
    "similarity": Similarity,
    "unitary-similarity": UnitarySimilarity,
    "orth-congruence": OrthCongruence,
    "diag-selection": DiagSelection,
    "tri-similarity": TriSimilarity,
    "zero": ZeroMap,
}
PAIR_FORMS = {
    "similarity-pair": SimilarityPair,
    "sandwich-pair": SandwichPair,
    "congruence-pair": CongruencePair,
    "diag-pair": DiagPair,
}

_FALSIFIED = (E.NotAPreserver, E.NonUnitRootLambda, E.NotVerifiedPair)
_USAGE = (E.DocumentError, E.UnsupportedSpace, E.FormSpaceMismatch, E.InvalidForm, E.BadK,
          E.BadExponent, E.BadArity, E.ShapeMismatch, E.SpaceNotStarClosed,
          E.NotInDomain, E.NotInCodomain)


class UsageError(Exception):
    """Bad flag combination detected after parsing."""


def exit_code_for(exc: BaseException) -> int:
    """Map an exception to the documented exit code."""
    if isinstance(exc, _FALSIFIED):
        return EXIT_FALSIFIED
    if isinstance(exc, _USAGE + (UsageError,)):
        return EXIT_USAGE
    if isinstance(exc, (E.PreserverError, np.linalg.LinAlgError, ArithmeticError)):
        return EXIT_DEGENERATE
    if isinstance(exc, ValueError):
        return EXIT_USAGE
    raise exc


def _verdict_code(verdict: Verdict) -> int:
    return {Verdict.VERIFIED: EXIT_OK, Verdict.FALSIFIED: EXIT_FALSIFIED,
            Verdict.DEGENERATE: EXIT_DEGENERATE}[verdict]


# ---------------------------------------------------------------------------
# Output helpers


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return matrix_to_json(x) if x.ndim == 2 else [_jsonable(v) for v in x]
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        return float(x) if np.isfinite(x) else None
    if isinstance(x, (complex, np.complexfloating)):
        return [float(x.real), float(x.imag)]
    return x


def _emit(obj) -> None:
    sys.stdout.write(dumps(_jsonable(obj)))


def _note(msg: str) -> None:
    print(msg, file=sys.stderr)


def _report_json(rep) -> dict:
    out = {"verdict": rep.verdict.value, "max_residual": rep.max_residual,
           "trials": rep.trials, "details": rep.details}
    out["witness"] = None if rep.witness is None else rep.witness
    return out


def _cfg(args) -> ToleranceConfig:
    return ToleranceConfig(rel_tol=args.tol, abs_tol=DEFAULT_TOL.abs_tol,
                           neighborhood_radius=args.radius)


# ---------------------------------------------------------------------------
# Flag parsing for form parameters


def _parse_complex(text: str) -> complex:
    try:
        return complex(text.strip().replace(" ", "").replace("i", "j"))
    except ValueError:
        raise UsageError(f"cannot parse scalar {text!r}") from None


def _parse_list(text: str, conv):
    return [conv(t) for t in text.split(",") if t.strip()]


def _scalar_value(z: complex, space: Space):
    return z.real if z.imag == 0 and not space.complex_entries else z


def _parse_matrix(text: str, n: int) -> np.ndarray:
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise UsageError(f"--P must be a JSON matrix: {exc}") from None

    def entry(v):
        if isinstance(v, list) and len(v) == 2:
            return complex(float(v[0]), float(v[1]))
        return complex(v)

    M = np.array([[entry(v) for v in row] for row in obj])
    if M.shape != (n, n):
        raise UsageError(f"--P must be {n} x {n}")
    return M.real if not np.any(M.imag) else M


def _explicit_form(args, space: Space, name: str):
    n = space.n
    cx = space.complex_entries
    P = _parse_matrix(args.P, n) if args.P else np.eye(n)
    lam = _scalar_value(_parse_complex(args.lam), space)
    c = _scalar_value(_parse_complex(args.c), space)
    if name == "similarity":
        return Similarity(lam, P, args.transpose)
    if name == "unitary-similarity":
        return UnitarySimilarity(args.sign, P, args.transpose)
    if name == "orth-congruence":
        return OrthCongruence(lam, P)
    if name == "tri-similarity":
        return TriSimilarity(lam, P, args.flip)
    if name == "zero":
        return ZeroMap()
    if name == "diag-selection":
        C = [_scalar_value(_parse_complex(t), space) for t in (args.C or ",".join(["1"] * n)).split(",")]
        p = _parse_list(args.p, int) if args.p else list(range(1, n + 1))
        if len(C) != n or len(p) != n:
            raise UsageError(f"--C and --p need {n} entries")
        return DiagSelection(np.diag(np.array(C, dtype=complex if cx else float)), tuple(p))
    if name == "similarity-pair":
        return SimilarityPair(c, P, args.transpose)
    if name == "sandwich-pair":
        Q = _parse_matrix(args.Q, n) if args.Q else np.eye(n)
        return SandwichPair(P, Q, args.transpose)
    if name == "congruence-pair":
        return CongruencePair(c, P, args.transpose)
    if name == "diag-pair":
        C = [_scalar_value(_parse_complex(t), space) for t in (args.C or ",".join(["1"] * n)).split(",")]
        perm = _parse_list(args.p, int) if args.p else list(range(1, n + 1))
        if len(C) != n or sorted(perm) != list(range(1, n + 1)):
            raise UsageError(f"--C needs {n} entries and --p a permutation of 1..{n}")
        return DiagPair(np.diag(np.array(C, dtype=complex if cx else float)),
                        np.eye(n)[[i - 1 for i in perm]])
    raise UsageError(f"unknown form {name!r}")


def _space_from_args(args) -> Space:
    blocks = tuple(_parse_list(args.blocks, int)) if getattr(args, "blocks", None) else ()
    return Space(args.space, args.field, args.n, blocks)


# ---------------------------------------------------------------------------
# Subcommands


def cmd_gen(args) -> int:
    space = _space_from_args(args)
    name = args.form
    is_pair = name in PAIR_FORMS
    rng = np.random.default_rng(args.seed)
    k = args.k
    if args.random:
        if name == "zero":
            raise UsageError("the zero map has no random parameters")
        form = random_pair_form(space, k, rng) if is_pair else random_canonical(space, k, rng)
        expected = (PAIR_FORMS if is_pair else CANONICAL_FORMS).get(name)
        if name is not None and not isinstance(form, expected):
            raise UsageError(f"--form {name} is not the random family on {space} for k={k}")
    else:
        if name is None:
            raise UsageError("--form is required unless --random is given")
        form = _explicit_form(args, space, name)
    if is_pair:
        form = normalize_pair(form, space)
        phi, psi = make_pair(form, space, k)
        docs = {"phi": map_to_doc(phi, pair=form, role="phi", k=k),
                "psi": map_to_doc(psi, pair=form, role="psi", k=k)}
        if args.output:
            stem = args.output[:-5] if args.output.endswith(".json") else args.output
            files = []
            for role, doc in docs.items():
                path = f"{stem}.{role}.json"
                save_doc(path, doc)
                files.append(path)
            _note(f"wrote {', '.join(files)}")
            _emit({"pair": form_to_json(form), "k": k, "files": files})
        else:
            _emit(docs)
        return EXIT_OK
    if not isinstance(form, ZeroMap):
        form = normalize_form(form, space)
    m = make_canonical(form, space, k if args.random else None)
    doc = map_to_doc(m, canonical=form)
    if args.output:
        save_doc(args.output, doc)
        _note(f"wrote {args.output}")
        _emit({"canonical": form_to_json(form), "files": [args.output]})
    else:
        _emit(doc)
    return EXIT_OK


def _load_map(path):
    m, _ = doc_to_map(load_doc(path))
    return m


def cmd_check(args) -> int:
    m = _load_map(args.map_file)
    cfg = _cfg(args)
    rng = np.random.default_rng(args.seed)
    rep = check_kpower(m, args.k, cfg, args.trials, rng)
    out = {"command": "check", "k": args.k, "kpower": _report_json(rep)}
    verdict = rep.verdict
    if rep.ok:
        ids = check_proof_identities(m, args.k, cfg, rng, trials=args.trials)
        out["identities"] = _report_json(ids)
        verdict = ids.verdict
    out["verdict"] = verdict.value
    _emit(out)
    _note(f"check k={args.k}: {verdict.value} (k-power residual {rep.max_residual:.3e})")
    return _verdict_code(verdict)


def cmd_recover(args) -> int:
    m = _load_map(args.map_file)
    rng = np.random.default_rng(args.seed)
    form = recover_canonical(m, args.k, _cfg(args), rng, trials=args.trials)
    _emit({"canonical": form_to_json(form)})
    _note(f"recovered {type(form).__name__}")
    return EXIT_OK


def cmd_dual(args) -> int:
    m = _load_map(args.map_file)
    doc = map_to_doc(dual_map(m, _cfg(args)))
    if args.output:
        save_doc(args.output, doc)
        _note(f"wrote {args.output}")
        _emit({"files": [args.output]})
    else:
        _emit(doc)
    return EXIT_OK


def cmd_pair_check(args) -> int:
    phi, psi = _load_map(args.phi_file), _load_map(args.psi_file)
    rng = np.random.default_rng(args.seed)
    rep = check_trace_power_pair(phi, psi, args.k, _cfg(args), args.trials, rng, args.regime)
    out = {"command": "pair-check", "k": args.k, **_report_json(rep)}
    _emit(out)
    _note(f"pair-check k={args.k}: {rep.verdict.value} (residual {rep.max_residual:.3e})")
    return _verdict_code(rep.verdict)


def cmd_pair_recover(args) -> int:
    phi, psi = _load_map(args.phi_file), _load_map(args.psi_file)
    rng = np.random.default_rng(args.seed)
    form = recover_pair(phi, psi, args.k, cfg=_cfg(args), rng=rng, trials=args.trials)
    _emit({"pair": form_to_json(form), "k": args.k})
    _note(f"recovered {type(form).__name__}")
    return EXIT_OK


def cmd_verify(args) -> int:
    if args.suite not in SUITES:
        _note(f"unknown suite {args.suite!r}; choose from {', '.join(SUITES)}")
        return EXIT_USAGE
    try:
        ns = parse_n_range(args.n_range)
        ks = parse_k_set(args.k_set) if args.k_set else None
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    _note(f"{'case':>4}  {'space':<22} {'k':>3}  {'status':<6} {'residual':>10}  note")

    def row(r):
        res = "-" if r.status == "skip" else f"{r.residual:10.3e}"
        k = "-" if r.k is None else r.k
        _note(f"{r.case:>4}  {r.space:<22} {k:>3}  {r.status:<6} {res:>10}  {r.note}")

    results = run_suite(args.suite, ns, ks, args.field, args.seed, args.maps, _cfg(args), row)
    counts = {s: sum(r.status == s for r in results) for s in ("pass", "fail", "skip")}
    ok = counts["fail"] == 0
    _note(f"{args.suite}: {counts['pass']} pass, {counts['fail']} fail, {counts['skip']} skip")
    _emit({"command": "verify", "suite": args.suite, "seed": args.seed,
           "field": FieldTag(args.field).value, "n_range": ns,
           "k_set": list(ks) if ks is not None else None,
           "cases": [r.to_json() for r in results], "summary": counts, "ok": ok})
    return EXIT_OK if ok else EXIT_FALSIFIED


def cmd_fixtures(args) -> int:
    fx = fixtures(args.n, args.c_value, args.d_value, args.field)
    names = [args.name] if args.name else sorted(fx)
    for nm in names:
        if nm not in fx:
            raise UsageError(f"unknown fixture {nm!r}; choose from {', '.join(sorted(fx))}")
    docs = {nm: map_to_doc(fx[nm]) for nm in names}
    if args.output:
        os.makedirs(args.output, exist_ok=True)
        files = []
        for nm, doc in docs.items():
            path = os.path.join(args.output, f"{nm}.json")
            save_doc(path, doc)
            files.append(path)
        _emit({"files": files})
    else:
        _emit(docs)
    return EXIT_OK


# ---------------------------------------------------------------------------
# Parser


def _add_numeric(p, trials=20):
    p.add_argument("--seed", type=int, default=0, help="seed for numpy's PCG64 generator")
    p.add_argument("--tol", type=float, default=DEFAULT_TOL.rel_tol, help="relative tolerance")
    p.add_argument("--radius", type=float, default=DEFAULT_TOL.neighborhood_radius,
                   help="sampling radius around the identity")
    p.add_argument("--trials", type=int, default=trials)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="kpower",
                                     description="Linear k-power preservers and trace pairs.")
    sub = parser.add_subparsers(dest="command", required=True)
    kinds = [k.value for k in SpaceKind]
    fields = [f.value for f in FieldTag]

    g = sub.add_parser("gen", help="build a canonical map or pair and write it as JSON")
    g.add_argument("--space", required=True, choices=kinds)
    g.add_argument("--field", default="C", choices=fields)
    g.add_argument("--n", type=int, default=2)
    g.add_argument("--blocks", help="block sizes for block_diag, e.g. 2,2")
    g.add_argument("--k", type=int, default=2)
    g.add_argument("--form", choices=sorted(CANONICAL_FORMS) + sorted(PAIR_FORMS))
    g.add_argument("--random", action="store_true", help="draw parameters from --seed")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--lambda", dest="lam", default="1")
    g.add_argument("--sign", type=int, default=1, choices=(1, -1))
    g.add_argument("--c", default="1")
    g.add_argument("--C", help="comma separated diagonal, e.g. 1,1")
    g.add_argument("--p", help="comma separated 1-based indices (0 = absent)")
    g.add_argument("--P", help="JSON matrix, entries numbers or [re, im]")
    g.add_argument("--Q", help="JSON matrix for sandwich pairs")
    g.add_argument("--transpose", action="store_true")
    g.add_argument("--flip", action="store_true")
    g.add_argument("-o", "--output")
    g.set_defaults(func=cmd_gen)

    for name, func, text in (("check", cmd_check, "test the k-power identity"),
                             ("recover", cmd_recover, "recover the canonical form")):
        p = sub.add_parser(name, help=text)
        p.add_argument("map_file")
        p.add_argument("--k", type=int, required=True)
        _add_numeric(p, 20 if name == "check" else 10)
        p.set_defaults(func=func)

    d = sub.add_parser("dual", help="trace dual of a bijection")
    d.add_argument("map_file")
    _add_numeric(d)
    d.add_argument("-o", "--output")
    d.set_defaults(func=cmd_dual)

    for name, func, text in (("pair-check", cmd_pair_check, "test tr(phi(A) psi(B)^k) = tr(A B^k)"),
                             ("pair-recover", cmd_pair_recover, "recover the pair form")):
        p = sub.add_parser(name, help=text)
        p.add_argument("phi_file")
        p.add_argument("psi_file")
        p.add_argument("--k", type=int, required=True)
        p.add_argument("--regime", default=REGIMES[0], choices=REGIMES)
        _add_numeric(p)
        p.set_defaults(func=func)

    v = sub.add_parser("verify", help="run a property suite")
    v.add_argument("--suite", required=True)
    v.add_argument("--n-range", default="2..3")
    v.add_argument("--k-set")
    v.add_argument("--field", default="C", choices=fields)
    v.add_argument("--maps", type=int, default=3, help="random instances per case")
    _add_numeric(v)
    v.set_defaults(func=cmd_verify)

    f = sub.add_parser("fixtures", help="write the documented counterexample maps")
    f.add_argument("--name")
    f.add_argument("--n", type=int, default=3)
    f.add_argument("--c", dest="c_value", type=float, default=2.0)
    f.add_argument("--d", dest="d_value", type=float, default=0.0)
    f.add_argument("--field", default="C", choices=fields)
    f.add_argument("-o", "--output", help="directory for <name>.json files")
    f.set_defaults(func=cmd_fixtures)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except Exception as exc:  # noqa: BLE001 - mapped to exit codes
        code = exit_code_for(exc)
        _note(f"error: {type(exc).__name__}: {exc}")
        return code


def console() -> None:
    sys.exit(main())


if __name__ == "__main__":
    console()
