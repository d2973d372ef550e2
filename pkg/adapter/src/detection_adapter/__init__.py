"""Decouples the street-view / detector ecosystem from the height pipeline:
fetches Mapillary v4 image metadata and turns facade detector output (or
precomputed fixtures) into the canonical detection-interchange JSON."""

__version__ = "0.1.0"


class AdapterError(Exception):
    """Base class; CLI maps subclasses to exit codes."""


class AuthError(AdapterError):
    """Rejected or missing API credentials (HTTP 401/403)."""


class ParamError(AdapterError):
    """Bad request parameters or unusable input files (other 4xx, bad files)."""


class TransientError(AdapterError):
    """Upstream failure that persisted through retries (5xx, timeouts)."""


class SetupError(AdapterError):
    """Missing local prerequisites, e.g. detector weights."""


class SchemaError(AdapterError):
    """A detection record violates the interchange schema."""
