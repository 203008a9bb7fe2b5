"""Exception hierarchy shared across the package."""


class CilwalkError(Exception):
    """Base class for all package-specific failures."""


class ConfigError(CilwalkError):
    """Invalid configuration file or parameter combination."""


class NumericalError(CilwalkError):
    """Numerical routine failed (non-convergence, singular system, sampling budget)."""


class VerificationFailure(CilwalkError):
    """One or more bound checks did not hold."""
