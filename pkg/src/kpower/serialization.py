"""JSON documents for maps and forms.

Every scalar is written as an ``[re, im]`` pair, also for real data, so
one schema covers both fields. A map document looks like::

    {
      "schema_version": 1,
      "space": {"kind": "gen", "field": "C", "n": 2},
      "coord": [[[1.0, 0.0], ...], ...],
      "canonical": {"type": "Similarity", ...}      # optional
    }

Pair documents carry ``"pair"`` (the pair form), ``"role"`` (``"phi"``
or ``"psi"``) and ``"k"`` instead of ``"canonical"``.
"""

import json
import re
from dataclasses import MISSING, fields, is_dataclass

import numpy as np

from . import operators as ops
from .errors import DocumentError, PreserverError
from .operators import LinearMap
from .spaces import Space

__all__ = [
    "SCHEMA_VERSION", "scalar_to_json", "scalar_from_json", "matrix_to_json",
    "matrix_from_json", "form_to_json", "form_from_json", "space_to_json",
    "space_from_json", "map_to_doc", "doc_to_map", "dumps", "loads",
    "save_doc", "load_doc", "FORM_TYPES",
]

SCHEMA_VERSION = 1

FORM_TYPES = {
    cls.__name__: cls
    for cls in (ops.Similarity, ops.UnitarySimilarity, ops.OrthCongruence,
                ops.DiagSelection, ops.TriSimilarity, ops.ZeroMap, ops.Degenerate,
                ops.SimilarityPair, ops.SandwichPair, ops.CongruencePair,
                ops.DiagPair, ops.WeightedPair)
}

# Attribute names that differ from their JSON keys.
_RENAME = {"lam": "lambda"}
_UNRENAME = {v: k for k, v in _RENAME.items()}
_MATRIX_FIELDS = {"P", "Q", "U", "O", "C"}
_REAL_FIELDS = {"a", "b", "c", "d"}


def _clean(x: float) -> float:
    x = float(x)
    return 0.0 if x == 0 else x


def scalar_to_json(z) -> list:
    z = complex(z)
    return [_clean(z.real), _clean(z.imag)]


def scalar_from_json(obj) -> complex:
    if (not isinstance(obj, (list, tuple)) or len(obj) != 2
            or not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in obj)):
        raise DocumentError(f"expected an [re, im] pair, got {obj!r}")
    z = complex(float(obj[0]), float(obj[1]))
    if not np.isfinite(z):
        raise DocumentError("non-finite scalar")
    return z


def matrix_to_json(M) -> list:
    M = np.asarray(M)
    if M.ndim != 2:
        raise DocumentError("expected a 2-D matrix")
    return [[scalar_to_json(z) for z in row] for row in M]


def matrix_from_json(obj, real: bool = False) -> np.ndarray:
    if not isinstance(obj, list) or not obj or not all(isinstance(r, list) for r in obj):
        raise DocumentError("matrix must be a non-empty list of rows")
    width = len(obj[0])
    if any(len(r) != width for r in obj):
        raise DocumentError("ragged matrix")
    M = np.array([[scalar_from_json(z) for z in row] for row in obj], dtype=complex)
    if M.size == 0:
        M = M.reshape(len(obj), 0)
    if real:
        if np.any(M.imag != 0):
            raise DocumentError("real data must have zero imaginary parts")
        return M.real
    return M


def space_to_json(space: Space) -> dict:
    out = {"kind": space.kind.value, "field": space.field.value, "n": space.n}
    if space.blocks:
        out["blocks"] = list(space.blocks)
    return out


def space_from_json(obj) -> Space:
    if not isinstance(obj, dict):
        raise DocumentError("space must be an object")
    try:
        return Space(obj["kind"], obj.get("field", "C"), int(obj["n"]),
                     tuple(obj.get("blocks", ())))
    except (KeyError, ValueError, TypeError) as exc:
        raise DocumentError(f"bad space: {exc}") from exc


def form_to_json(form) -> dict:
    """Serialize a canonical or pair form; keys follow the dataclass field order."""
    if not is_dataclass(form) or type(form).__name__ not in FORM_TYPES:
        raise DocumentError(f"not a form: {form!r}")
    out = {"type": type(form).__name__}
    for f in fields(form):
        v = getattr(form, f.name)
        key = _RENAME.get(f.name, f.name)
        if isinstance(v, (bool, np.bool_)):
            out[key] = bool(v)
        elif isinstance(v, str):
            out[key] = v
        elif isinstance(v, tuple):
            out[key] = [int(x) for x in v]
        elif f.name == "sign":
            out[key] = int(v)
        elif np.ndim(v) == 2:
            out[key] = matrix_to_json(v)
        else:
            out[key] = scalar_to_json(v)
    return out


def form_from_json(obj, real: bool = False):
    """Inverse of :func:`form_to_json`; ``real`` casts matrices and scalars to float."""
    if not isinstance(obj, dict) or obj.get("type") not in FORM_TYPES:
        raise DocumentError(f"unknown form {obj!r:.80}")
    cls = FORM_TYPES[obj["type"]]
    kwargs = {}
    for f in fields(cls):
        key = _RENAME.get(f.name, f.name)
        if key not in obj:
            if f.default is not MISSING:
                continue
            raise DocumentError(f"{cls.__name__} is missing {key!r}")
        v = obj[key]
        if f.name in ("transpose", "flip"):
            if not isinstance(v, bool):
                raise DocumentError(f"{key} must be a boolean")
            kwargs[f.name] = v
        elif f.name == "description":
            kwargs[f.name] = str(v)
        elif f.name == "p":
            if not isinstance(v, list) or not all(isinstance(x, int) for x in v):
                raise DocumentError("p must be a list of integers")
            kwargs[f.name] = tuple(v)
        elif f.name == "sign":
            if v not in (1, -1):
                raise DocumentError("sign must be 1 or -1")
            kwargs[f.name] = int(v)
        elif f.name in _MATRIX_FIELDS:
            kwargs[f.name] = matrix_from_json(v, real)
        else:
            z = scalar_from_json(v)
            if f.name in _REAL_FIELDS and cls is ops.WeightedPair:
                if z.imag != 0:
                    raise DocumentError(f"{key} must be real")
                kwargs[f.name] = z.real
            else:
                kwargs[f.name] = z.real if real and z.imag == 0 else z
    try:
        return cls(**kwargs)
    except TypeError as exc:
        raise DocumentError(str(exc)) from exc


def map_to_doc(m: LinearMap, canonical=None, pair=None, role: str = None,
               k: int = None) -> dict:
    doc = {"schema_version": SCHEMA_VERSION, "space": space_to_json(m.domain)}
    if k is not None:
        doc["k"] = int(k)
    if role is not None:
        doc["role"] = role
    doc["coord"] = matrix_to_json(m.coord) if m.coord.size else []
    if canonical is not None:
        doc["canonical"] = form_to_json(canonical)
    if pair is not None:
        doc["pair"] = form_to_json(pair)
    return doc


def doc_to_map(doc) -> tuple:
    """Parse and validate a map document; returns ``(map, form_or_None)``."""
    if not isinstance(doc, dict):
        raise DocumentError("document must be a JSON object")
    if doc.get("schema_version") != SCHEMA_VERSION:
        raise DocumentError(f"unsupported schema_version {doc.get('schema_version')!r}")
    space = space_from_json(doc.get("space"))
    real = space.coord_dtype is float
    coord_obj = doc.get("coord")
    if coord_obj == [] and space.dim == 0:
        coord = np.zeros((0, 0))
    else:
        coord = matrix_from_json(coord_obj, real)
    if coord.shape != (space.dim, space.dim):
        raise DocumentError(f"coord shape {coord.shape} does not match dim {space.dim}")
    try:
        m = LinearMap(space, space, coord)
    except PreserverError as exc:
        raise DocumentError(str(exc)) from exc
    form = None
    entries_real = not space.complex_entries
    for key in ("canonical", "pair"):
        if key in doc:
            form = form_from_json(doc[key], entries_real)
    return m, form


_PAIR = re.compile(r"\[\s+(-?[0-9][0-9.eE+-]*),\s+(-?[0-9][0-9.eE+-]*)\s+\]")


def dumps(obj) -> str:
    """Canonical text form: two-space indent, insertion order, trailing newline.

    Numeric pairs (the ``[re, im]`` scalars) are kept on one line.
    """
    text = json.dumps(obj, indent=2, allow_nan=False)
    return _PAIR.sub(r"[\1, \2]", text) + "\n"


def loads(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise DocumentError(f"invalid JSON: {exc}") from exc


def save_doc(path, doc) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps(doc))


def load_doc(path):
    try:
        with open(path, encoding="utf-8") as fh:
            return loads(fh.read())
    except OSError as exc:
        raise DocumentError(f"cannot read {path}: {exc}") from exc
