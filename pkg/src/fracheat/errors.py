"""Exception hierarchy shared by every module."""


class FracHeatError(Exception):
    """Base class for all package errors."""


class PoleError(FracHeatError, ValueError):
    """Argument sits on a pole of a Gamma-type expression."""


class DomainError(FracHeatError, ValueError):
    """Argument lies outside the domain of a function."""


class PreconditionError(FracHeatError, ValueError):
    """A documented precondition on the inputs was violated."""


class NoSolutionError(FracHeatError, ValueError):
    """An inverse problem has no solution for the requested value."""


class ConvergenceError(FracHeatError, RuntimeError):
    """An iterative or adaptive procedure exhausted its budget."""


class QuadratureError(ConvergenceError):
    """Adaptive quadrature did not reach the requested tolerance."""


class AssemblyError(FracHeatError, RuntimeError):
    """A discrete operator violated its sign structure during assembly."""


class ConfigError(FracHeatError, ValueError):
    """Malformed experiment configuration."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
