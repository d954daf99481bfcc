"""Domain exception hierarchy. The CLI maps these onto exit codes."""


class LoadganError(Exception):
    """Base class for all domain errors."""


class DataError(LoadganError):
    """Malformed, empty, or inconsistent input data."""


class ConfigError(LoadganError):
    """Invalid configuration value or combination."""


class CheckpointFormatError(DataError):
    """Checkpoint file is corrupt, truncated, or of an unknown version."""


class DivergenceError(LoadganError):
    """Training produced non-finite losses repeatedly and was aborted."""
