"""Exception types shared across the package."""


class StlcpError(Exception):
    """Base class for package errors."""


class DataFormatError(StlcpError):
    """Malformed dataset file: bad row, inconsistent dimension, bad label."""


class SplitError(StlcpError):
    """A requested dataset split would leave some part empty."""


class HorizonError(StlcpError):
    """A formula's temporal window reaches past the end of the signal."""


class TemplateError(StlcpError):
    """A formula template cannot be instantiated for the given signal shape."""


class ConfigError(StlcpError):
    """A training or CLI configuration violates its invariants."""
