"""Exception hierarchy shared by all modules."""


class DcsiError(Exception):
    """Base class for every error raised by this package."""


class InvalidInputError(DcsiError, ValueError):
    """Malformed numerical input (wrong shape, NaN/Inf entries)."""


class DomainError(DcsiError, ValueError):
    """A parameter lies outside the domain where a formula is defined."""


class DegenerateChannelError(DcsiError, ArithmeticError):
    """The precoder normalization vanished (zero channel estimate)."""


class ConvergenceError(DcsiError, ArithmeticError):
    """An iterative solver hit its iteration cap."""


class ConfigError(DcsiError, ValueError):
    """Inconsistent experiment or system configuration."""
