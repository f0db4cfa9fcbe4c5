"""Exceptions shared across the simulator."""


class ConfigError(ValueError):
    """Raised when a configuration value or combination is invalid."""
