"""Exception hierarchy shared by every module."""


class GurariiError(Exception):
    """Base class for all errors raised by this package."""


class DimensionMismatch(GurariiError, ValueError):
    pass


class InfeasibleError(GurariiError):
    """The linear program has no feasible point."""


class UnboundedError(GurariiError):
    """The objective is unbounded, or a polyhedron is not bounded."""


class DegenerateError(GurariiError, ValueError):
    """A polytope is lower-dimensional or does not contain the origin in its interior."""


class AsymmetricError(GurariiError, ValueError):
    """A unit ball is not centrally symmetric."""


class SingularError(GurariiError, ValueError):
    """A matrix that must be invertible (or of full column rank) is not."""


class NotInjectiveError(SingularError):
    pass


class DefectTooLarge(GurariiError, ValueError):
    """The requested epsilon does not strictly exceed the isometry defect of a map."""

    def __init__(self, message, threshold):
        super().__init__(message)
        self.threshold = threshold


class ScheduleError(GurariiError, ValueError):
    """An epsilon schedule fails the summability budget."""

    def __init__(self, message, deficit):
        super().__init__(message)
        self.deficit = deficit


class ChainExhausted(GurariiError):
    pass


class CertificateError(GurariiError):
    """A recomputed certificate disagrees with the claimed value."""


class InputError(GurariiError, ValueError):
    """A file could not be read or does not match its schema.

    ``line`` and ``column`` are set for JSON syntax errors; schema errors
    carry the JSON path in the message instead.
    """

    def __init__(self, message, line=None, column=None):
        super().__init__(message)
        self.line = line
        self.column = column
