"""Pairs of maps that keep tr(A B^k) fixed.

Start with the trace dual of a random bijection, then build pairs for
tr(phi(A) psi(B)^k) = tr(A B^k) and recover their parameters. The
k = -1 congruence on Hermitian matrices admits a negative constant, which
the similarity families for other k do not. The last part shows the
upper triangular structure check catching a single leaked entry.

Run with ``python3 demos/03_trace_pairs.py``.
"""

import numpy as np

from kpower import (CongruencePair, DiagPair, LinearMap, Space, check_trace_power_pair,
                    dual_map, make_pair, recover_pair, tn_pair_from_diag,
                    tn_pair_structure_check)
from kpower.operators import normalize_pair, random_invertible
from kpower.spaces import sample

rng = np.random.default_rng(11)

# -- trace duality -------------------------------------------------------------
space = Space("sym", "R", 3)
d = space.dim
phi = LinearMap(space, space, np.eye(d) + 0.3 * rng.standard_normal((d, d)))
psi = dual_map(phi)
A, B = sample(space, rng), sample(space, rng)
print(f"tr(phi(A) psi(B)) = {np.trace(phi(A) @ psi(B)):+.12f}")
print(f"tr(A B)           = {np.trace(A @ B):+.12f}")

# -- a congruence pair with c = -1 ----------------------------------------------
herm = Space("herm", "C", 3)
form = normalize_pair(CongruencePair(-1.0, random_invertible(3, True, rng)), herm)
phi, psi = make_pair(form, herm, -1)
rep = check_trace_power_pair(phi, psi, -1, rng=rng)
print()
print(f"congruence pair, k=-1: {rep.verdict.value} (residual {rep.max_residual:.1e})")
got = recover_pair(phi, psi, -1, rng=rng)
print(f"recovered {type(got).__name__} with c = {got.c:+.3f}")
rep = check_trace_power_pair(phi, psi, 2, rng=rng)
print(f"same pair tested at k=2: {rep.verdict.value}")

# -- upper triangular pairs ------------------------------------------------------
n, k = 4, 3
ut = Space("upper_tri", "C", n)
diag_form = DiagPair(np.diag(rng.uniform(0.5, 2.0, n)), np.eye(n)[[2, 0, 3, 1]])
phi, psi = tn_pair_from_diag(diag_form, ut, k, rng)
rep = tn_pair_structure_check(phi, psi, k, rng=rng)
print()
print(f"upper triangular pair from a DiagPair: {rep.verdict.value}")
print(f"diagonal part recovered with permutation rows {np.argmax(rep.recovered.P, 1)}")

# leak E12 into E11 and the strict-upper test fails first
E11, E12 = np.zeros((n, n)), np.zeros((n, n))
E11[0, 0] = E12[0, 1] = 1
leak = np.outer(ut.coordinates(E11), np.conj(ut.coordinates(E12)))
bad = LinearMap(ut, ut, phi.coord + 1e-2 * leak)
rep = tn_pair_structure_check(bad, psi, k, rng=rng)
print(f"with a 1e-2 leak E12 -> E11: {rep.verdict.value} ({rep.details['failed']})")
