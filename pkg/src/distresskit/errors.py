"""Exception types shared across the toolkit.

Everything raised on bad data, bad configuration, or a violated contract
derives from ``DistressKitError`` so the CLI can map failures to exit
code 2 while genuine bugs still surface as ordinary tracebacks.
"""

from __future__ import annotations


class DistressKitError(Exception):
    """Base class for all data/validation/configuration failures."""


class DataError(DistressKitError):
    """Malformed input data: unparseable cells, bad labels, empty datasets."""


class SchemaError(DistressKitError):
    """Column names or counts do not match what an artifact was fitted on."""


class ConfigError(DistressKitError):
    """Invalid configuration: unknown keys, out-of-range values."""


class FitError(DistressKitError):
    """A model or transform cannot be fitted on the given data."""


class StageError(DistressKitError):
    """Pipeline stage failure wrapper; remembers which stage blew up."""

    def __init__(self, stage: str, cause: Exception):
        super().__init__(f"stage '{stage}' failed: {cause}")
        self.stage = stage
        self.cause = cause
