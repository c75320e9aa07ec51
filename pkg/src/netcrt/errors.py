"""Exception types raised across the package."""


class NetcrtError(Exception):
    """Base class for package errors."""


class InvalidSpec(NetcrtError, ValueError):
    """A parameter set violates a precondition."""


class EmptyGraph(NetcrtError, ValueError):
    """An operation needs at least one edge."""


class RewiringError(NetcrtError, RuntimeError):
    """The target mixing level could not be reached."""


class StalledEpidemic(NetcrtError, RuntimeError):
    """The stopping incidence was not reached within ``max_steps``."""

    def __init__(self, message, record=None):
        super().__init__(message)
        self.record = record


class ZeroArm(NetcrtError, ValueError):
    """An arm ended with zero infections, so its log proportion is undefined."""


class NoEvents(NetcrtError, ValueError):
    """A logrank table carries no information (zero variance)."""


class StalledReplicates(NetcrtError, RuntimeError):
    """Too many replicates stalled for the power estimate to be trusted."""

    def __init__(self, message, stalled=0, total=0):
        super().__init__(message)
        self.stalled = stalled
        self.total = total


class ConfigError(NetcrtError, ValueError):
    """An experiment configuration failed validation."""


class OdeInstability(NetcrtError, ArithmeticError):
    """The fixed-step integrator left [0, 1]; the step size is too large."""
