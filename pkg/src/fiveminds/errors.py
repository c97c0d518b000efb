"""Exception types shared across the package.

The CLI maps these onto exit codes: ConfigError -> 2, DataError -> 3,
ModelError -> 4; anything else is an internal error -> 5.
"""

from __future__ import annotations


class ConfigError(ValueError):
    """Bad or unknown configuration keys/values."""


class DataError(ValueError):
    """Missing or malformed traces, ground truth, or corpora."""


class ModelError(ValueError):
    """Missing, stale, or schema-incompatible model files."""
