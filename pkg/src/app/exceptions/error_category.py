from enum import Enum


class ErrorCategory(Enum):
    """
    ErrorCategory is an enumeration of the failure kinds raised across the pipeline.

    Attributes:
        USAGE (str): An API was called in an unsupported way (e.g. a reused tape).
        CONFIG (str): A configuration value is invalid.
        DIMENSION (str): Tensor shapes or extents do not agree.
        DATA (str): Input data violates a precondition (missing class, empty split).
        FORMAT (str): A binary or JSON document is malformed.
        NUMERICAL (str): A computation produced non-finite values or diverged.
    """

    USAGE = "usage"
    CONFIG = "config"
    DIMENSION = "dimension"
    DATA = "data"
    FORMAT = "format"
    NUMERICAL = "numerical"

    @property
    def exit_code(self) -> int:
        return _EXIT_CODES[self]


_EXIT_CODES = {
    ErrorCategory.USAGE: 1,
    ErrorCategory.CONFIG: 2,
    ErrorCategory.DIMENSION: 2,
    ErrorCategory.DATA: 3,
    ErrorCategory.FORMAT: 3,
    ErrorCategory.NUMERICAL: 4,
}
