"""Exception types raised across the package."""


class VsgssError(Exception):
    """Base class for all package errors."""


class ConfigError(VsgssError, ValueError):
    """Configuration document violates the schema or a parameter bound.

    ``path`` names the offending location, e.g. ``"vsg.H_s"``.
    """

    def __init__(self, message, path=None):
        self.path = path
        self.detail = message
        if path:
            message = f"{path}: {message}"
        super().__init__(message)


class ConvergenceError(VsgssError, RuntimeError):
    """An iterative solver hit its iteration cap."""

    def __init__(self, message, residual=None):
        self.residual = residual
        super().__init__(message)


class SingularError(VsgssError, ArithmeticError):
    """A division, inverse or pencil turned out to be singular."""


class PoleProximityError(VsgssError, ValueError):
    """A rational function was evaluated too close to one of its poles."""


class UnsettledWindowError(VsgssError, ValueError):
    """An averaging window is not a settled, pre-switch interval."""


class IntegrationError(VsgssError, RuntimeError):
    """Time integration diverged. ``t_last`` is the last valid time."""

    def __init__(self, message, t_last=None):
        self.t_last = t_last
        super().__init__(message)
