class NeifaError(Exception):
    """Base class for errors raised by this package."""


class ArgumentError(NeifaError, ValueError):
    pass


class ParseError(NeifaError, ValueError):
    pass


class ValidationError(NeifaError, ValueError):
    pass


class SamplingError(NeifaError, RuntimeError):
    pass


class NumericError(NeifaError, FloatingPointError):
    """A non-finite value appeared; the message names the offending tensor."""


class CheckpointError(NeifaError, OSError):
    pass
