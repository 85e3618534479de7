"""Exception types shared across the package."""


class AgedynError(Exception):
    """Base class for package errors."""


class ConfigError(AgedynError):
    """Invalid experiment configuration (schema violation, unknown model, bad key)."""


class NumericError(AgedynError):
    """A numerical procedure failed (bracket not found, quadrature tail, no convergence)."""


class ViabilityError(AgedynError):
    """Operation requested at a trait whose resident population is not viable."""


class ExplosionError(AgedynError):
    """Simulated population exceeded the configured cap."""
