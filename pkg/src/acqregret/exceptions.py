"""Exception types raised by the library."""


class InvalidKernelError(ValueError):
    """A kernel hyperparameter is nonpositive or non-finite."""


class IllConditionedModelError(RuntimeError):
    """Cholesky factorization failed even at the largest jitter level."""


class ConfigError(ValueError):
    """An experiment, acquisition or optimizer configuration is invalid."""


class RegistryError(KeyError):
    """Unknown benchmark name."""


class DomainError(ValueError):
    """A point lies outside its domain or the domain itself is degenerate."""
