"""Linear k-power preservers and trace power-product pairs on matrix spaces.

The main entry points are :func:`make_canonical` / :func:`recover_canonical`
for maps with ``psi(A^k) = psi(A)^k`` and :func:`make_pair` /
:func:`recover_pair` for pairs with ``tr(phi(A) psi(B)^k) = tr(A B^k)``.
"""

from .errors import *  # noqa: F401,F403
from .linalg import (DEFAULT_TOL, ToleranceConfig, frobenius_inner, herm_frac_pow,
                     mat_int_pow, matrices_close, normalize_phase, power_series_coeffs,
                     residual)
from .spaces import (FieldTag, Space, SpaceBasis, SpaceKind, basis, contains, project,
                     rank1_projection_basis, sample, sample_invertible, sample_near_identity)
from .operators import (CongruencePair, Degenerate, DiagPair, DiagSelection, LinearMap,
                        OrthCongruence, SandwichPair, Similarity, SimilarityPair,
                        TriSimilarity, UnitarySimilarity, WeightedPair, ZeroMap, anti_transpose,
                        apply, compose, exchange_matrix, fixtures, forms_close, from_rule,
                        identity_map, is_bijective, make_canonical, make_pair, normalize_form,
                        normalize_pair, perturbed, random_canonical, random_invertible,
                        random_orthogonal, random_pair_form, random_unitary, rank, scaled,
                        zero_map)
from .analysis import (CheckReport, Verdict, check_jordan, check_kpower,
                       check_power_consequences, check_proof_identities, recover_canonical,
                       unital_part)
from .pairs import (REGIMES, PairReport, check_multi_product, check_trace_power_pair,
                    check_weighted_pair, diagonal_restriction, dual_map, make_multi_product,
                    make_weighted_pair, pairing_nondegeneracy, recover_pair, sample_pd,
                    tn_pair_from_diag, tn_pair_structure_check, trace_pairing_gram)
from .serialization import doc_to_map, dumps, form_from_json, form_to_json, load_doc, \
    loads, map_to_doc, save_doc
from .suites import SUITES, run_suite

__version__ = "0.1.0"
