"""Exception hierarchy shared by every module."""


class ErgmError(Exception):
    """Base class for all package errors."""


class DomainError(ErgmError, ValueError):
    """An argument lies outside the domain of the function."""


class ConvergenceError(ErgmError, RuntimeError):
    """A numerical solver failed to converge."""


class NotAttractingError(ErgmError, ValueError):
    """A density is not an attracting fixed point, so a variance proxy is undefined."""


class CriticalRegimeError(ErgmError, RuntimeError):
    """Refusal to run a Gaussian-fluctuation experiment in the critical regime."""


class ConfigError(ErgmError, ValueError):
    """Invalid experiment configuration."""


class BudgetError(ErgmError, ValueError):
    """Requested exact computation exceeds the configured size budget."""
