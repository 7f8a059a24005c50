"""Matrix spaces and cones over the real and complex fields.

A :class:`Space` knows its orthonormal basis, how to take and rebuild
coordinates, and how to draw random members. Coordinates are taken over
the space's *scalar field*, which is the real field for Hermitian
matrices and the positive definite cone even when entries are complex.
"""

from dataclasses import dataclass, field as dc_field
from enum import Enum
from functools import cached_property

import numpy as np

from .errors import NotInDomain, ShapeMismatch, UnsupportedSpace
from .linalg import DEFAULT_TOL, ToleranceConfig, as_matrix

__all__ = [
    "FieldTag",
    "SpaceKind",
    "Space",
    "SpaceBasis",
    "basis",
    "rank1_projection_basis",
    "contains",
    "project",
    "sample",
    "sample_near_identity",
    "sample_invertible",
    "GOLDEN_ROOTS",
]

GOLDEN_ROOTS = ((1 + 5 ** 0.5) / 2, (1 - 5 ** 0.5) / 2)


class FieldTag(str, Enum):
    REAL = "R"
    COMPLEX = "C"


class SpaceKind(str, Enum):
    GEN = "gen"
    HERM = "herm"
    SYM = "sym"
    POSDEF = "posdef"
    DIAG = "diag"
    UPPER_TRI = "upper_tri"
    STRICT_UPPER = "strict_upper"
    # Direct sum of full matrix blocks embedded block-diagonally.
    BLOCK_DIAG = "block_diag"


def _unit(n, i, j, dtype=float):
    E = np.zeros((n, n), dtype=dtype)
    E[i, j] = 1
    return E


@dataclass(frozen=True)
class SpaceBasis:
    space: "Space"
    elements: np.ndarray = dc_field(repr=False)
    span_of_cone: bool = False

    def __len__(self):
        return self.elements.shape[0]

    def __iter__(self):
        return iter(self.elements)

    def __getitem__(self, i):
        return self.elements[i]


@dataclass(frozen=True)
class Space:
    """A matrix space (or the positive definite cone) of ``n x n`` matrices.

    ``blocks`` is only used by ``BLOCK_DIAG`` and lists the sizes of the
    diagonal blocks; they must add up to ``n``.
    """

    kind: SpaceKind
    field: FieldTag = FieldTag.COMPLEX
    n: int = 2
    blocks: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "kind", SpaceKind(self.kind))
        object.__setattr__(self, "field", FieldTag(self.field))
        object.__setattr__(self, "blocks", tuple(int(b) for b in self.blocks))
        if int(self.n) < 1:
            raise ValueError("n must be positive")
        object.__setattr__(self, "n", int(self.n))
        if self.kind is SpaceKind.BLOCK_DIAG:
            if not self.blocks or sum(self.blocks) != self.n or min(self.blocks) < 1:
                raise ValueError("BLOCK_DIAG needs positive block sizes summing to n")
        elif self.blocks:
            raise ValueError("blocks only apply to BLOCK_DIAG")

    def __str__(self):
        extra = f", blocks={self.blocks}" if self.blocks else ""
        return f"{self.kind.value}({self.field.value}, n={self.n}{extra})"

    @property
    def scalar_field(self) -> FieldTag:
        if self.kind in (SpaceKind.HERM, SpaceKind.POSDEF):
            return FieldTag.REAL
        return self.field

    @property
    def complex_entries(self) -> bool:
        return self.field is FieldTag.COMPLEX

    @property
    def entry_dtype(self):
        return complex if self.complex_entries else float

    @property
    def coord_dtype(self):
        return complex if self.scalar_field is FieldTag.COMPLEX else float

    @property
    def is_cone(self) -> bool:
        return self.kind is SpaceKind.POSDEF

    @property
    def star_closed(self) -> bool:
        return self.kind not in (SpaceKind.UPPER_TRI, SpaceKind.STRICT_UPPER)

    @property
    def span(self) -> "Space":
        """The vector space spanned by this set (itself unless a cone)."""
        if self.kind is SpaceKind.POSDEF:
            kind = SpaceKind.HERM if self.complex_entries else SpaceKind.SYM
            return Space(kind, self.field, self.n)
        return self

    @property
    def dim(self) -> int:
        return self._basis.shape[0]

    @cached_property
    def _basis(self) -> np.ndarray:
        B = _build_basis(self)
        B.setflags(write=False)
        return B

    @cached_property
    def _conj_rows(self) -> np.ndarray:
        rows = self._basis.reshape(self._basis.shape[0], -1).conj()
        rows.setflags(write=False)
        return rows

    def basis(self) -> SpaceBasis:
        return SpaceBasis(self, self._basis, span_of_cone=self.is_cone)

    def identity(self) -> np.ndarray:
        if self.kind is SpaceKind.STRICT_UPPER:
            raise UnsupportedSpace("strictly upper triangular matrices exclude I")
        return np.eye(self.n, dtype=self.entry_dtype)

    def coordinates(self, A, cfg: ToleranceConfig = None) -> np.ndarray:
        """Coordinates of ``A`` in :meth:`basis` over the scalar field.

        With ``cfg`` given, ``A`` must lie in the span within tolerance,
        otherwise :class:`NotInDomain` is raised.
        """
        A = np.asarray(A)
        if A.shape != (self.n, self.n):
            raise ShapeMismatch(f"expected {self.n}x{self.n}, got {A.shape}")
        c = self._conj_rows @ A.reshape(-1)
        if self.coord_dtype is float:
            c = c.real
        if cfg is not None:
            back = self.from_coordinates(c)
            scale = max(1.0, np.linalg.norm(A))
            if np.linalg.norm(A - back) > cfg.rel_tol * scale + cfg.abs_tol:
                raise NotInDomain(f"matrix is not in {self}")
        return c

    def from_coordinates(self, c) -> np.ndarray:
        c = np.asarray(c)
        if c.shape != (self.dim,):
            raise ShapeMismatch(f"expected {self.dim} coordinates, got {c.shape}")
        out = np.tensordot(c, self._basis, axes=1)
        if not self.complex_entries:
            out = out.real
        return out


def _build_basis(space: Space) -> np.ndarray:
    n = space.n
    kind = space.kind
    dt = space.entry_dtype
    s = 1 / np.sqrt(2)
    out = []
    pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
    if kind is SpaceKind.POSDEF:
        return _build_basis(space.span)
    if kind is SpaceKind.GEN:
        out = [_unit(n, i, j, dt) for i in range(n) for j in range(n)]
    elif kind is SpaceKind.HERM:
        out = [_unit(n, i, i, dt) for i in range(n)]
        out += [s * (_unit(n, i, j, dt) + _unit(n, j, i, dt)) for i, j in pairs]
        if space.complex_entries:
            out += [s * (1j * _unit(n, i, j, dt) - 1j * _unit(n, j, i, dt)) for i, j in pairs]
    elif kind is SpaceKind.SYM:
        out = [_unit(n, i, i, dt) for i in range(n)]
        out += [s * (_unit(n, i, j, dt) + _unit(n, j, i, dt)) for i, j in pairs]
    elif kind is SpaceKind.DIAG:
        out = [_unit(n, i, i, dt) for i in range(n)]
    elif kind is SpaceKind.UPPER_TRI:
        out = [_unit(n, i, j, dt) for i in range(n) for j in range(i, n)]
    elif kind is SpaceKind.STRICT_UPPER:
        out = [_unit(n, i, j, dt) for i, j in pairs]
    elif kind is SpaceKind.BLOCK_DIAG:
        start = 0
        for size in space.blocks:
            idx = range(start, start + size)
            out += [_unit(n, i, j, dt) for i in idx for j in idx]
            start += size
    if not out:
        return np.zeros((0, n, n), dtype=dt)
    return np.array(out)


def basis(space: Space) -> SpaceBasis:
    """Deterministic orthonormal basis (of the span, for the cone)."""
    return space.basis()


def rank1_projection_basis(space: Space) -> list:
    """A basis of the space made of idempotent matrices.

    For complex general matrices and Hermitian matrices the family is
    ``E_ii`` plus ``(E_ii + E_jj + d E_ij + conj(d) E_ji) / 2`` with
    ``d`` in ``{1, i}``; symmetric matrices keep only ``d = 1``. Real
    general matrices replace the ``d = i`` members by
    ``w1 E_ii + w2 E_jj + E_ij - E_ji`` where ``w1, w2`` are the roots
    of ``x**2 - x - 1``; these are idempotent as well.
    """
    n = space.n
    kind = space.kind
    if kind not in (SpaceKind.GEN, SpaceKind.HERM, SpaceKind.SYM):
        raise UnsupportedSpace(f"no projection basis for {space}")
    dt = space.entry_dtype
    E = lambda i, j: _unit(n, i, j, dt)  # noqa: E731
    out = [E(i, i) for i in range(n)]
    w1, w2 = GOLDEN_ROOTS
    for i in range(n):
        for j in range(i + 1, n):
            base = E(i, i) + E(j, j)
            out.append((base + E(i, j) + E(j, i)) / 2)
            if kind is SpaceKind.SYM or (kind is SpaceKind.HERM and not space.complex_entries):
                continue
            if space.complex_entries:
                out.append((base + 1j * E(i, j) - 1j * E(j, i)) / 2)
            else:
                out.append(w1 * E(i, i) + w2 * E(j, j) + E(i, j) - E(j, i))
    return out


def project(space: Space, A) -> np.ndarray:
    """Orthogonal projection onto ``space`` for the trace inner product.

    For a real scalar field the inner product is ``Re tr(A^* B)``.
    """
    if space.is_cone:
        raise UnsupportedSpace("cannot project onto the positive definite cone")
    A = as_matrix(A, square=True)
    return space.from_coordinates(space.coordinates(A))


def contains(space: Space, A, tol: ToleranceConfig = DEFAULT_TOL) -> bool:
    A = np.asarray(A)
    if A.shape != (space.n, space.n):
        raise ShapeMismatch(f"expected {space.n}x{space.n}, got {A.shape}")
    if not np.all(np.isfinite(A)):
        return False
    span = space.span
    diff = A - span.from_coordinates(span.coordinates(A))
    if np.linalg.norm(diff) > tol.rel_tol * max(1.0, np.linalg.norm(A)) + tol.abs_tol:
        return False
    if space.is_cone:
        w = np.linalg.eigvalsh((A + A.conj().T) / 2)
        return bool(w[0] > tol.abs_tol)
    return True


def _gaussian(rng, shape, complex_: bool):
    if complex_:
        return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)
    return rng.standard_normal(shape)


def _sample_span(space: Space, rng) -> np.ndarray:
    span = space.span
    c = _gaussian(rng, span.dim, span.coord_dtype is complex)
    return span.from_coordinates(c)


def sample(space: Space, rng, cfg: ToleranceConfig = DEFAULT_TOL) -> np.ndarray:
    """Random member with i.i.d. standard normal basis coordinates.

    Cone samples are ``G^* G + abs_tol I`` for a Gaussian ``G``.
    """
    if space.is_cone:
        G = _gaussian(rng, (space.n, space.n), space.complex_entries)
        return G.conj().T @ G + cfg.abs_tol * np.eye(space.n)
    return _sample_span(space, rng)


def sample_near_identity(space: Space, radius: float, rng) -> np.ndarray:
    """``I + x E`` with ``||E||_F = 1`` and ``|x| <= radius``.

    Since ``radius <= 0.5`` the result is always invertible (and positive
    definite for the cone).
    """
    if not 0 < radius <= 0.5:
        raise ValueError("radius must lie in (0, 0.5]")
    if space.kind is SpaceKind.STRICT_UPPER:
        raise UnsupportedSpace("strictly upper triangular matrices exclude I")
    E = _sample_span(space, rng)
    E = E / np.linalg.norm(E)
    x = rng.uniform(-radius, radius)
    return space.identity() + x * E


def sample_invertible(space: Space, rng, max_cond: float = 1e6,
                      max_tries: int = 10000) -> np.ndarray:
    """Rejection-sample a member with condition number below ``max_cond``."""
    if space.kind is SpaceKind.STRICT_UPPER:
        raise UnsupportedSpace("strictly upper triangular matrices are nilpotent")
    for _ in range(max_tries):
        A = sample(space, rng)
        if np.linalg.cond(A) < max_cond:
            return A
    raise RuntimeError(f"no sample with condition number < {max_cond} in {max_tries} tries")
