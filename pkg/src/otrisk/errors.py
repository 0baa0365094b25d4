"""Exception types raised by the library.

Everything derives from :class:`ValueError` so callers that do not care
about the fine distinctions can catch one base class.
"""


class OTRiskError(ValueError):
    """Base class for all library errors."""


class EmptyInput(OTRiskError):
    """A sample or atom list was empty."""


class NonFiniteValue(OTRiskError):
    """A position, weight, or parameter was NaN or infinite where finiteness is required."""


class NegativeWeight(OTRiskError):
    """A weight was negative (or zero where strict positivity is required)."""


class ZeroTotalWeight(OTRiskError):
    """Weights summed to zero, so no probability measure can be formed."""


class OutOfRange(OTRiskError):
    """A scalar argument fell outside its admissible interval."""


class InvalidOrder(OTRiskError):
    """A moment order p was below 1 (the order must be >= 1 or infinite)."""


class WrongMode(OTRiskError):
    """An operation was called on a generator set in the wrong hull mode."""


class InvalidParams(OTRiskError):
    """Risk-measure parameters violated their constraints (e.g. p <= 1 or c <= 1)."""


class InvalidMixture(OTRiskError):
    """A mixture of tail-expectation levels was malformed."""


class LengthMismatch(OTRiskError):
    """Paired sequences had different lengths."""


class BadOptions(OTRiskError):
    """Solver options were inconsistent or out of range."""
