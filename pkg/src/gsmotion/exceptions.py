"""Exception types shared across the package."""


class ParameterDomainError(ValueError):
    """A kernel parameter is outside its valid domain (sigma <= 0, |rho| >= 1, ...)."""


class ConfigError(ValueError):
    """A configuration file or estimator configuration is invalid."""


class InitializationError(RuntimeError):
    """Kernel initialization produced no usable kernels (e.g. all pruned)."""
