class SkruinError(Exception):
    """Base class for errors raised by this package."""


class DomainError(SkruinError, ValueError):
    """An argument lies outside the mathematical domain of the operation."""


class ConfigurationError(SkruinError, ValueError):
    """Inconsistent solver or experiment configuration."""


class TruncationError(SkruinError):
    """A grid truncates more probability mass than allowed."""


class NumericalError(SkruinError, ArithmeticError):
    """A numerical routine failed to meet its internal tolerance."""


class PreconditionError(SkruinError, ValueError):
    """An operation was called outside the regime where it is defined."""


class GridRangeError(SkruinError, ValueError):
    """A query falls outside the computed grid."""
