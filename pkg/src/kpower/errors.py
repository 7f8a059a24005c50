"""Exception hierarchy.

Every error raised on purpose by the package derives from
:class:`PreserverError`, so callers can catch one type.
"""

import numpy as np


class PreserverError(Exception):
    """Base class for all package errors."""


class SingularMatrix(PreserverError, np.linalg.LinAlgError):
    pass


class NotHermitian(PreserverError, ValueError):
    pass


class NotPSD(PreserverError, ValueError):
    pass


class ShapeMismatch(PreserverError, ValueError):
    pass


class NonFinite(PreserverError, ValueError):
    pass


class UnsupportedSpace(PreserverError, ValueError):
    pass


class NotInDomain(PreserverError, ValueError):
    pass


class NotInCodomain(PreserverError, ValueError):
    pass


class NotLinear(PreserverError, ValueError):
    pass


class FormSpaceMismatch(PreserverError, ValueError):
    pass


class InvalidForm(PreserverError, ValueError):
    """A canonical or pair form violates one of its invariants."""


class SingularP(InvalidForm):
    pass


class BadK(PreserverError, ValueError):
    pass


class HypothesisViolated(PreserverError, ValueError):
    pass


class NotAPreserver(PreserverError):
    pass


class DegenerateZeroMap(PreserverError):
    pass


class AmbiguousIntertwiner(PreserverError):
    pass


class NonUnitRootLambda(PreserverError):
    pass


class InjectivityRequired(PreserverError):
    pass


class UnsupportedN(PreserverError):
    pass


class NotBijective(PreserverError):
    pass


class SpaceNotStarClosed(PreserverError, ValueError):
    pass


class NotVerifiedPair(PreserverError):
    pass


class RecoveryFailed(PreserverError):
    pass


class BadExponent(PreserverError, ValueError):
    pass


class BadArity(PreserverError, ValueError):
    pass


class DocumentError(PreserverError, ValueError):
    """A JSON document does not follow the map/form schema."""


__all__ = [name for name, obj in list(globals().items())
           if isinstance(obj, type) and issubclass(obj, PreserverError)]
