"""Recover a k-power preserver from nothing but its coordinate matrix.

We hide a transpose-similarity ``A -> lam P A^t P^{-1}`` with ``lam`` a root of
``lam^{k-1} = 1``, hand only the coordinates to the library, and ask for the
canonical form back. Then we break the map slightly and watch every check
notice.

Run with ``python3 demos/01_recover_a_hidden_similarity.py``.
"""

import numpy as np

from kpower import (Similarity, Space, check_kpower, check_proof_identities, forms_close,
                    make_canonical, normalize_form, recover_canonical)
from kpower.operators import perturbed, random_invertible

rng = np.random.default_rng(2)
k = 4
space = Space("gen", "C", 3)

lam = np.exp(2j * np.pi / 3)          # lam^3 = 1, so lam^{k-1} = 1 for k = 4
P = random_invertible(3, True, rng)
hidden = normalize_form(Similarity(lam, P, transpose=True), space)
psi = make_canonical(hidden, space, k)
print(f"hidden map on {space}: coordinate matrix {psi.coord.shape}")

rep = check_kpower(psi, k, rng=rng)
print(f"k-power check near I: {rep.verdict.value}, worst residual {rep.max_residual:.2e}")

found = recover_canonical(psi, k, rng=rng)
print(f"recovered lambda = {found.lam:.6f}  (hidden {hidden.lam:.6f})")
print(f"recovered transpose flag = {found.transpose}")
print(f"same normalized form: {forms_close(found, hidden)}")
print("recovered P (scaled so ||P||_F^2 = n, first entry real positive):")
print(np.round(found.P, 6))

# a 1e-4 coordinate perturbation already breaks the identity
noisy = perturbed(psi, 1e-4, rng)
print()
print("after a 1e-4 perturbation")
print(f"  k-power check: {check_kpower(noisy, k, rng=rng).verdict.value}")
ids = check_proof_identities(noisy, k, rng=rng)
for name in ("degree1", "degree2", "commute"):
    print(f"  {name:<8} residual {ids.details[name]:.2e}")
