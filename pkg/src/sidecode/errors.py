"""Shared exception types.

Argument errors (bad sizes, out-of-range parameters) raise plain
``ValueError``; the classes below exist so callers can tell resource-cap
refusals and configuration problems apart from ordinary bugs.
"""


class ResourceLimitError(RuntimeError):
    """An enumeration or materialization would exceed its declared cap."""


class ConfigError(ValueError):
    """An experiment configuration failed validation."""
