"""Exception hierarchy shared across the package.

Validation-style errors derive from ValueError so plain library users can
catch broadly; the CLI and service map the classes below onto exit codes
and HTTP statuses.
"""


class DataError(ValueError):
    """Base class for malformed or inconsistent input data."""


class DatasetFormatError(DataError):
    """File does not match the declared binary/CSV format (bad magic, size)."""


class DatasetLengthError(DataError):
    """File shorter or longer than its header promises."""


class DatasetConsistencyError(DataError):
    """Mutually inconsistent inputs (e.g. image/label counts differ)."""


class DatasetParseError(DataError):
    """A cell or field failed to parse; message names row and column."""


class DimensionError(DataError):
    """Array shapes incompatible with the requested operation."""


class ConfigurationError(ValueError):
    """Semantically invalid configuration (empty class, bad parameter)."""


class InsufficientClassSizeError(ConfigurationError):
    """Order of mixture exceeds the size of some class."""


class CalibrationError(ValueError):
    """Noise calibration could not reach the target budget inside the bracket."""


class PrecisionFailureError(ArithmeticError):
    """A numerically unstable quantity could not be resolved at any supported
    precision. Raised instead of returning a silently wrong value."""
