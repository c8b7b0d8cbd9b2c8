"""
Shared error types and helpers.
"""

import hashlib
from typing import Any, Optional

import numpy as np

from src.logger import logger

NUMERICAL = 'numerical'
UNDEFINED_INPUT = 'undefined-input'
DIMENSION_MISMATCH = 'dimension-mismatch'
FAILURE_KINDS = (NUMERICAL, UNDEFINED_INPUT, DIMENSION_MISMATCH)


class ResimError(Exception):
    """Base class for all errors raised by this package."""


class MeasureError(ResimError):
    """A measure (or a primitive it relies on) cannot produce a value."""

    def __init__(self, kind: str, message: str):
        if kind not in FAILURE_KINDS:
            raise ValueError(f"Unknown failure kind: {kind}")
        super().__init__(message)
        self.kind = kind
        self.message = message


class EvaluationError(MeasureError):
    """An evaluation statistic is undefined for its inputs."""

    def __init__(self, message: str, kind: str = UNDEFINED_INPUT):
        super().__init__(kind, message)


class ConfigError(ResimError):
    """Invalid run configuration."""


class ReportError(ResimError):
    """Report cannot be written or read."""


def validate_matrix(matrix: Any, min_rows: int = 2) -> tuple[bool, Optional[str]]:
    """Validate a representation matrix.

    Args:
        matrix: Candidate matrix
        min_rows: Minimum number of instance rows

    Returns:
        Tuple of (is_valid, error_message)
    """
    if not isinstance(matrix, np.ndarray):
        return False, f"Expected a numpy array, got {type(matrix).__name__}"

    if matrix.ndim != 2:
        return False, f"Expected a 2-D matrix, got {matrix.ndim} dimension(s)"

    if not np.issubdtype(matrix.dtype, np.number) or np.iscomplexobj(matrix):
        return False, f"Expected real entries, got dtype {matrix.dtype}"

    n, d = matrix.shape
    if n < min_rows:
        return False, f"Need at least {min_rows} rows, got {n}"

    if d < 1:
        return False, "Need at least one column"

    if not np.all(np.isfinite(matrix)):
        return False, "Matrix contains non-finite entries"

    return True, None


def hash_arrays(*parts: Any) -> str:
    """Generate a stable hash over arrays and plain values.

    Arrays contribute dtype, shape and raw bytes; everything else its repr.

    Returns:
        SHA256 hash string
    """
    digest = hashlib.sha256()
    for part in parts:
        if isinstance(part, np.ndarray):
            arr = np.ascontiguousarray(part)
            digest.update(str(arr.dtype).encode('utf-8'))
            digest.update(repr(arr.shape).encode('utf-8'))
            digest.update(arr.tobytes())
        else:
            digest.update(repr(part).encode('utf-8'))
        digest.update(b'|')
    return digest.hexdigest()


def format_error_message(error: Exception, include_details: bool = False) -> str:
    """Format error message for CLI display.

    Args:
        error: Exception instance
        include_details: Whether to include the exception type

    Returns:
        User-friendly error message
    """
    if isinstance(error, MeasureError):
        return f"{error.kind}: {error.message}"
    elif isinstance(error, ConfigError):
        return f"Invalid configuration: {error}"
    elif isinstance(error, ReportError):
        return f"Report error: {error}"
    elif isinstance(error, FileNotFoundError):
        return f"File not found: {error.filename or error}"
    elif isinstance(error, ValueError):
        return f"Invalid input: {error}"
    else:
        if include_details:
            return f"An error occurred: {type(error).__name__} - {error}"
        logger.debug(f"Unformatted error: {type(error).__name__}: {error}")
        return "An unexpected error occurred. Re-run with --debug for details."
