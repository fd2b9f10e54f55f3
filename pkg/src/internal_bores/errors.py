"""Exception hierarchy shared by the solver modules and the CLI."""


class BoreError(Exception):
    """Base class; ``exit_code`` is what the CLI returns when this escapes."""

    exit_code = 3


class InvalidParameterError(BoreError, ValueError):
    exit_code = 1


class DegenerateStratificationError(InvalidParameterError):
    pass


class InvalidStateError(InvalidParameterError):
    pass


class OutOfChannelError(InvalidParameterError):
    pass


class DegenerateRestPointError(InvalidParameterError):
    pass


class StagnationViolationError(BoreError):
    """A height field with ``h_p <= 0`` somewhere (horizontal stagnation)."""

    exit_code = 2


class BoundaryOfDomainError(StagnationViolationError):
    """Every damped Newton step left the stagnation-free set."""


class ConvergenceError(BoreError):
    exit_code = 2


class OnsetFailureError(ConvergenceError):
    pass


class NumericalFailureError(BoreError):
    exit_code = 3


class ConfigError(BoreError, ValueError):
    exit_code = 1
