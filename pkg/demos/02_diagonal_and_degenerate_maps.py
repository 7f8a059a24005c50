"""Where bijectivity is not automatic: diagonal selections and the T3 family.

On diagonal matrices a k-power preserver may copy one diagonal slot into
several places, or drop slots altogether. On 3 x 3 upper triangular
matrices there are preservers that are not injective at all, so no
similarity can describe them. Both cases are shown here.

Run with ``python3 demos/02_diagonal_and_degenerate_maps.py``.
"""

import numpy as np

from kpower import (Space, check_jordan, check_kpower, fixtures, from_rule,
                    recover_canonical)
from kpower.errors import DegenerateZeroMap, InjectivityRequired
from kpower.operators import rank

rng = np.random.default_rng(5)

# -- a selection map on 4 x 4 diagonals -----------------------------------------
space = Space("diag", "R", 4)
select = from_rule(lambda A: np.diag([A[2, 2], A[2, 2], 0.0, A[0, 0]]), space)
for k in (2, 3, 5):
    print(f"selection, k={k}: {check_kpower(select, k, rng=rng).verdict.value}")
form = recover_canonical(select, 3)
print(f"recovered selection p = {form.p} (0 marks a dropped slot), C = {np.diag(form.C)}")
print(f"rank {rank(select)} of {space.dim}")

# negative k needs psi(A) invertible; with a dropped slot every sample is
# skipped and the check reports Degenerate
print(f"selection, k=-1: {check_kpower(select, -1, rng=rng).verdict.value}")

# -- documented fixtures -------------------------------------------------------
print()
fx = fixtures(n=3, c=2.0, d=0.0)
print(f"zero map, k=3: {check_kpower(fx['zero_map'], 3).verdict.value}")
try:
    recover_canonical(fx["zero_map"], 3)
except DegenerateZeroMap as exc:
    print(f"  recovery refused: {exc}")

for name in ("t3_map_1", "t3_map_2", "t3_map_3"):
    m = fx[name]
    verdicts = [check_kpower(m, k, rng=rng).verdict.value for k in (2, 3)]
    try:
        recover_canonical(m, 2)
        outcome = "recovered (unexpected)"
    except InjectivityRequired:
        outcome = "refused, not injective"
    print(f"{name}: k=2 {verdicts[0]}, k=3 {verdicts[1]}, rank {rank(m)}/6, {outcome}")

bt = fx["block_transpose"]
print(f"block transpose on {bt.domain}: Jordan check {check_jordan(bt).verdict.value}")
