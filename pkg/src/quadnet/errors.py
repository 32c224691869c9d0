class QuadnetError(Exception):
    """Base class for all errors raised by this package."""

    exit_code = 2


class DataError(QuadnetError):
    """Bad or insufficient input data (files, ids, sampling failures)."""

    exit_code = 2


class NumericError(QuadnetError):
    """Non-finite values or degenerate geometry during computation."""

    exit_code = 3
