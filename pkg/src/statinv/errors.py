"""Exception types shared across the package."""

__all__ = ["ConfigError", "WhiteNoiseError", "DataUnavailableError"]


class ConfigError(Exception):
    """Invalid or missing experiment configuration."""


class WhiteNoiseError(ValueError):
    """Raised when a method that needs bounded noise receives white noise.

    The residual norm of a white-noise observation is unbounded as the
    discretization is refined, so residual-based rules (e.g. the discrepancy
    principle) are not applicable to the covariance-normalized noise model.
    """


class DataUnavailableError(RuntimeError):
    """A data source cannot supply an observation at the requested level."""
