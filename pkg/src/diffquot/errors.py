"""Exception types shared across the package."""

from __future__ import annotations

__all__ = [
    "DiffquotError",
    "ConfigError",
    "InconclusiveTruncation",
    "ResolutionFailure",
    "NotConverged",
    "EndpointAttained",
]


class DiffquotError(Exception):
    """Base class for all package errors."""


class ConfigError(DiffquotError):
    """Invalid experiment configuration."""


class InconclusiveTruncation(DiffquotError):
    """The certified mass outside the sampled shells is too large to conclude."""


class ResolutionFailure(DiffquotError):
    """Grid refinement moved a value by more than its error bound."""


class NotConverged(DiffquotError):
    """A limit or extrapolation failed its convergence gate."""


class EndpointAttained(DiffquotError):
    """A supremum over the sampled window sits at the window edge."""
