"""Exception hierarchy shared by every module."""


class RegionError(Exception):
    """Base class for all errors raised by cnnregions."""


class ValidationError(RegionError, ValueError):
    """Malformed architecture or argument."""


class FilterExceedsInput(ValidationError):
    """A filter does not fit inside the layer input.

    ``layer_index`` is 0-based; the message counts layers from 1.
    """

    def __init__(self, message, layer_index=None):
        super().__init__(message)
        self.layer_index = layer_index


class UnknownPosition(ValidationError, KeyError):
    pass


class DimensionMismatch(ValidationError):
    pass


class HypothesisViolated(RegionError):
    """A bound was requested outside the hypotheses it is proven under."""


class TooManyHyperplanes(RegionError):
    pass


class OracleMismatch(RegionError):
    """Closed-form count and arrangement count disagree after a retry."""

    def __init__(self, message, seeds=()):
        super().__init__(message)
        self.seeds = tuple(seeds)


class ParseError(RegionError):
    pass
