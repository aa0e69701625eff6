"""Exception types shared across the package."""


class ThetaDimError(Exception):
    """Base class for all package errors."""


class DomainError(ThetaDimError, ValueError):
    """An argument lies outside its mathematical domain."""


class EmptySetError(ThetaDimError, ValueError):
    """An operation needs a non-empty set or point cloud."""


class RangeError(ThetaDimError, IndexError):
    """A level index is outside the stored tree."""


class ConfigError(ThetaDimError, ValueError):
    """Inconsistent configuration, e.g. mismatched depths."""


class ResolutionError(ThetaDimError, ValueError):
    """The requested scales are finer than the set resolution.

    ``min_delta`` is the smallest coarse scale that would have been
    admissible at the set depth, when it can be computed.
    """

    def __init__(self, message, min_delta=None):
        super().__init__(message)
        self.min_delta = min_delta


class DegenerateScaleError(ThetaDimError, ValueError):
    """Coarse and fine scales fall into the same dyadic level."""


class NonBracketedError(ThetaDimError, ValueError):
    """A root search in ``s`` found no sign change on its bracket."""


class OverLimitError(ThetaDimError, ValueError):
    """Brute-force enumeration refused: instance too large."""


class ZeroEnergyError(ThetaDimError, ZeroDivisionError):
    """Energy vanished where a positive value is required."""
