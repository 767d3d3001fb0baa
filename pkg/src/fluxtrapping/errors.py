"""Exception hierarchy shared by all modules."""


class FluxTrapError(Exception):
    """Base class for errors raised by this package."""


class InvalidParameterError(FluxTrapError, ValueError):
    """Input violates a documented invariant."""


class DataError(FluxTrapError, ValueError):
    """Malformed or inconsistent input data (files, tables, traces)."""


class ConvergenceError(FluxTrapError, ArithmeticError):
    """A numerical procedure did not reach its tolerance."""


class UnidentifiableError(ConvergenceError):
    """The data cannot determine the requested parameter."""


class ProtocolError(FluxTrapError, ValueError):
    """A cooldown timeline cannot trap flux as described."""
