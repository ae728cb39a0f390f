"""Exception types shared across the package."""


class ConfigurationError(ValueError):
    """A user-supplied setting is invalid or inconsistent."""


class FormatError(ValueError):
    """A file or byte stream does not match its declared layout."""


class NumericError(ArithmeticError):
    """A computation produced degenerate or non-finite values."""
