"""Exception types shared across the package."""


class StreamTreeError(Exception):
    """Base class for errors raised by this package."""


class DataError(StreamTreeError):
    """Malformed input data: unreadable files, bad cells, schema violations."""


class ConfigError(StreamTreeError):
    """Invalid configuration: unknown algorithms, flags, or option values."""
