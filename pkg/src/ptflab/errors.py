"""Exception hierarchy. The CLI maps these onto exit codes."""


class PtfLabError(Exception):
    """Base class for all library errors."""


class InputError(PtfLabError, ValueError):
    """Malformed or mismatched input (dimensions, ranges, overlapping blocks)."""


class NumericError(PtfLabError, ArithmeticError):
    """A non-finite value showed up where a finite one is required."""


class DegenerateInputError(PtfLabError, ValueError):
    """Input is well-formed but the requested quantity is undefined for it."""


class CapacityError(PtfLabError):
    """Problem size exceeds the desk-scale limits of an exact routine."""


class ConfigError(PtfLabError, ValueError):
    """A sampler configuration cannot be realised in double precision."""
