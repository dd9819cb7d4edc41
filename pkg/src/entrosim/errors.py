"""Shared exception types."""


class ConfigError(ValueError):
    """A scenario configuration is malformed; the message names the field."""


class AuditError(RuntimeError):
    """The run-level conservation audit found an imbalance."""
