import numpy as np
import pytest
from hypothesis import given, strategies as st

from kpower.analysis import (Verdict, check_jordan, check_kpower, check_power_consequences,
                             check_proof_identities, recover_canonical, unital_part)
from kpower.errors import (BadK, DegenerateZeroMap, HypothesisViolated, InjectivityRequired,
                           NotAPreserver, UnsupportedN, UnsupportedSpace)
from kpower.linalg import ToleranceConfig, residual
from kpower.operators import (DiagSelection, OrthCongruence, Similarity, TriSimilarity,
                              UnitarySimilarity, compose, fixtures, forms_close, from_rule,
                              identity_map, make_canonical, normalize_form, perturbed,
                              random_canonical, random_invertible, random_orthogonal,
                              random_unitary, scaled, zero_map)
from kpower.spaces import Space

seeds = st.integers(0, 2**32 - 1)
KS = [-3, -2, -1, 2, 3, 5]


def E(n, i, j):
    M = np.zeros((n, n))
    M[i, j] = 1
    return M


# -- check_kpower ----------------------------------------------------------------

def test_kpower_identity(rng):
    rep = check_kpower(identity_map(Space("gen", "C", 3)), 2, rng=rng)
    assert rep.verdict is Verdict.VERIFIED and rep.max_residual <= 1e-12


def test_kpower_falsified_with_witness(rng):
    sp = Space("gen", "C", 2)
    m = from_rule(lambda A: A + E(2, 0, 1) * np.trace(A), sp)
    rep = check_kpower(m, 2, rng=rng)
    assert rep.verdict is Verdict.FALSIFIED and rep.witness is not None
    A = rep.witness
    assert residual(m(A @ A), m(A) @ m(A)) > 1e-9
    # the hand-picked point from the oracle agrees
    A = np.eye(2) + 0.05 * E(2, 1, 0)
    assert residual(m(A @ A), m(A) @ m(A)) > 1e-3


def test_kpower_zero_map_is_degenerate():
    rep = check_kpower(zero_map(Space("gen", "C", 3)), 3)
    assert rep.verdict is Verdict.DEGENERATE
    assert rep.details["identity_holds"]


def test_kpower_rejects_bad_k():
    for k in (0, 1):
        with pytest.raises(BadK):
            check_kpower(identity_map(Space("gen", "C", 2)), k)


# -- check_jordan ------------------------------------------------------------------

def test_jordan_examples(rng):
    sp = Space("gen", "C", 3)
    sim = make_canonical(Similarity(1, random_invertible(3, True, rng), False), sp)
    assert check_jordan(sim).ok
    rep = check_jordan(scaled(identity_map(sp), 2))
    assert rep.verdict is Verdict.FALSIFIED and rep.witness is not None
    assert check_jordan(fixtures()["block_transpose"]).ok


@given(st.sampled_from(["gen", "upper_tri", "sym", "herm", "diag"]), st.integers(1, 3), seeds,
       st.floats(0, 1e-2))
def test_jordan_iff_square_preserver(kind, n, seed, eps):
    # for unital-ish maps with psi(I) invertible both checks agree (tolerance 10 rel_tol)
    rng = np.random.default_rng(seed)
    sp = Space(kind, "C", n)
    if kind == "upper_tri" and n < 3:
        n = 3
        sp = Space(kind, "C", n)
    m = make_canonical(normalize_form(random_canonical(sp, 2, rng), sp), sp, 2)
    m = perturbed(m, eps, rng) if eps > 1e-6 else m
    if abs(np.linalg.det(m(np.eye(n)))) < 1e-6:
        return
    loose = ToleranceConfig(rel_tol=1e-8)
    assert check_jordan(m, loose).ok == check_kpower(m, 2, loose, trials=40, rng=rng).ok


# -- consequences and proof identities ---------------------------------------------

def test_power_consequences_examples(rng):
    sp = Space("gen", "C", 3)
    assert check_power_consequences(identity_map(sp), 2, rng=rng).ok
    t = from_rule(lambda A: A.T, sp)
    rep = check_power_consequences(t, 2, rng=rng, rs=(-1,))
    assert rep.ok and rep.details["per_r"][-1] <= 1e-12
    P = random_invertible(3, True, rng)
    form = recover_canonical(make_canonical(Similarity(1, P, False), sp), 3, rng=rng)
    rep = check_power_consequences(make_canonical(form, sp), 3, rng=rng)
    assert rep.ok and max(rep.details["per_r"].values()) <= 1e-8
    with pytest.raises(HypothesisViolated):
        check_power_consequences(scaled(identity_map(sp), -1), 3)


def test_proof_identities_examples(rng):
    sp = Space("gen", "C", 3)
    rep = check_proof_identities(identity_map(sp), 4, rng=rng)
    assert rep.ok and rep.max_residual <= 1e-14
    m = make_canonical(Similarity(-1, random_invertible(3, True, rng), False), sp, 3)
    rep = check_proof_identities(m, 3, rng=rng)
    assert rep.ok and rep.details["degree2"] <= 1e-9 and rep.details["commute"] <= 1e-12
    noisy = perturbed(m, 1e-3, rng)
    rep = check_proof_identities(noisy, 3, rng=rng)
    assert rep.verdict is Verdict.FALSIFIED
    assert max(rep.details[n] for n in ("degree1", "degree2", "commute")) > 1e-6


def test_proof_identities_negative_k(rng):
    sp = Space("sym", "C", 3)
    w = np.exp(2j * np.pi / 4)  # lam^{k-1} = 1 for k = -3
    m = make_canonical(OrthCongruence(w, random_orthogonal(3, True, rng)), sp, -3)
    assert check_proof_identities(m, -3, rng=rng).ok


def test_unital_part(rng):
    sp = Space("gen", "C", 2)
    m = make_canonical(Similarity(-1, random_invertible(2, True, rng), True), sp, 3)
    u = unital_part(m)
    assert np.allclose(u(np.eye(2)), np.eye(2))
    with pytest.raises(HypothesisViolated):
        unital_part(make_canonical(DiagSelection(np.diag([1, 0]), (1, 0)), Space("diag", "C", 2)))


# -- recover_canonical ---------------------------------------------------------------

def test_recover_identity_k5():
    sp = Space("gen", "C", 3)
    form = recover_canonical(identity_map(sp), 5)
    assert isinstance(form, Similarity) and not form.transpose
    assert np.allclose(form.P, np.eye(3)) and form.lam == pytest.approx(1)


def test_recover_transpose():
    sp = Space("gen", "C", 3)
    form = recover_canonical(from_rule(lambda A: A.T, sp), 2)
    assert form.transpose and np.allclose(form.P, np.eye(3))


def test_recover_root_of_unity_round_trip(rng):
    sp = Space("gen", "C", 4)
    lam = np.exp(2j * np.pi / 3)
    form = normalize_form(Similarity(lam, random_invertible(4, True, rng), True), sp)
    m = make_canonical(form, sp, 4)
    got = recover_canonical(m, 4, rng=rng)
    assert residual(make_canonical(got, sp, 4).coord, m.coord) <= 1e-8
    assert forms_close(got, form)


def test_recover_diag_selection():
    sp = Space("diag", "C", 3)
    m = from_rule(lambda A: np.diag([A[1, 1], 0, A[1, 1]]), sp)
    form = recover_canonical(m, 2)
    assert isinstance(form, DiagSelection)
    assert np.allclose(form.C, np.diag([1, 0, 1])) and form.p == (2, 0, 2)


def test_recover_unitary_similarity_sign(rng):
    sp = Space("herm", "C", 3)
    form = normalize_form(UnitarySimilarity(-1, random_unitary(3, True, rng), True), sp)
    got = recover_canonical(make_canonical(form, sp, 3), 3, rng=rng)
    assert got.sign == -1 and got.transpose and forms_close(got, form)


def test_recover_tri_flip(rng):
    sp = Space("upper_tri", "R", 4)
    P = random_invertible(4, False, rng, upper=True)
    form = normalize_form(TriSimilarity(-1.0, P, True), sp)
    got = recover_canonical(make_canonical(form, sp, 3), 3, rng=rng)
    assert forms_close(got, form)


def test_recover_refusals(rng):
    fx = fixtures()
    with pytest.raises(DegenerateZeroMap):
        recover_canonical(fx["zero_map"], 3)
    for name in ("t3_map_1", "t3_map_2", "t3_map_3"):
        for k in (2, 3):
            assert check_kpower(fx[name], k, rng=rng).ok
            with pytest.raises((InjectivityRequired, NotAPreserver)):
                recover_canonical(fx[name], k)
    with pytest.raises(UnsupportedSpace):
        recover_canonical(fx["block_transpose"], 2)
    with pytest.raises(UnsupportedN):
        recover_canonical(identity_map(Space("upper_tri", "C", 2)), 2)
    with pytest.raises(NotAPreserver):
        recover_canonical(scaled(identity_map(Space("gen", "C", 2)), 2), 2)
    noisy = perturbed(identity_map(Space("gen", "C", 3)), 1e-4, rng)
    with pytest.raises(NotAPreserver):
        recover_canonical(noisy, 3)


CANON = [("gen", "R"), ("gen", "C"), ("herm", "C"), ("herm", "R"), ("sym", "R"), ("sym", "C"),
         ("posdef", "R"), ("posdef", "C"), ("diag", "R"), ("diag", "C"), ("upper_tri", "R"),
         ("upper_tri", "C")]


@given(st.sampled_from(CANON), st.integers(1, 4), st.sampled_from(KS), seeds)
def test_recovery_soundness(spf, n, k, seed):
    kind, field = spf
    if kind == "upper_tri":
        n = max(n, 3)
    rng = np.random.default_rng(seed)
    sp = Space(kind, field, n)
    form = normalize_form(random_canonical(sp, k, rng), sp)
    m = make_canonical(form, sp, k)
    got = recover_canonical(m, k, rng=rng)
    assert residual(make_canonical(got, sp, k).coord, m.coord) <= 1e-8
    assert forms_close(got, form)


@given(st.integers(2, 4), st.sampled_from(KS), seeds)
def test_branch_invariance(n, k, seed):
    rng = np.random.default_rng(seed)
    sp = Space("gen", "C", n)
    form = normalize_form(random_canonical(sp, k, rng), sp)
    m = make_canonical(form, sp, k)
    flipped = compose(m, from_rule(lambda A: A.T, sp))
    got = recover_canonical(flipped, k, rng=rng)
    assert got.transpose != form.transpose
    assert np.isclose(got.lam, form.lam) and np.allclose(got.P, form.P, atol=1e-8)


@given(st.integers(1, 4), st.sampled_from([3, 4, 5]), st.integers(0, 10), seeds)
def test_scaling_by_root_of_unity(n, k, j, seed):
    rng = np.random.default_rng(seed)
    sp = Space("gen", "C", n)
    mu = np.exp(2j * np.pi * j / (k - 1))
    form = normalize_form(random_canonical(sp, k, rng), sp)
    m = make_canonical(form, sp, k)
    a = recover_canonical(m, k, rng=rng)
    b = recover_canonical(scaled(m, mu), k, rng=rng)
    assert abs(b.lam - mu * a.lam) <= 1e-9
