"""
Descriptive-statistic measures: summarize each representation by one
scalar and report the absolute difference.
"""

import numpy as np
from scipy.spatial.distance import pdist
from scipy.special import logsumexp

from src.config import UNIFORMITY_T
from src.measures.registry import DISTANCE, register_measure
from src.utils import MeasureError, UNDEFINED_INPUT


def magnitude(R: np.ndarray) -> float:
    """Mean Euclidean norm of the instances."""
    return float(np.linalg.norm(R, axis=1).mean())


def concentricity(R: np.ndarray) -> float:
    """Mean cosine similarity of the instances to the mean instance."""
    mean_row = R.mean(axis=0)
    mean_norm = np.linalg.norm(mean_row)
    if mean_norm == 0:
        raise MeasureError(UNDEFINED_INPUT, "Concentricity undefined for a zero mean instance")
    row_norms = np.linalg.norm(R, axis=1)
    if np.any(row_norms == 0):
        raise MeasureError(UNDEFINED_INPUT, "Concentricity undefined for all-zero rows")
    cosines = (R @ mean_row) / (row_norms * mean_norm)
    return float(np.clip(cosines, -1.0, 1.0).mean())


def uniformity(R: np.ndarray, t: float = UNIFORMITY_T) -> float:
    """Log of the mean Gaussian potential between L2-normalized instances.

    Averaging over unordered pairs equals averaging over ordered pairs i != j.
    """
    row_norms = np.linalg.norm(R, axis=1)
    if np.any(row_norms == 0):
        raise MeasureError(UNDEFINED_INPUT, "Uniformity undefined for all-zero rows")
    unit = R / row_norms[:, None]
    squared = pdist(unit, metric='sqeuclidean')
    return float(logsumexp(-t * squared) - np.log(squared.size))


@register_measure('magnitude_diff', 'MagDiff', 'statistic', DISTANCE, requires_equal_n=False)
def magnitude_diff(X: np.ndarray, Y: np.ndarray) -> float:
    """Absolute difference of mean instance norms."""
    return abs(magnitude(X) - magnitude(Y))


@register_measure('concentricity_diff', 'ConcDiff', 'statistic', DISTANCE, requires_equal_n=False)
def concentricity_diff(X: np.ndarray, Y: np.ndarray) -> float:
    """Absolute difference of concentricities."""
    return abs(concentricity(X) - concentricity(Y))


@register_measure(
    'uniformity_diff', 'UnifDiff', 'statistic', DISTANCE,
    hyperparams={'t': UNIFORMITY_T}, requires_equal_n=False,
)
def uniformity_diff(X: np.ndarray, Y: np.ndarray, t: float = UNIFORMITY_T) -> float:
    """Absolute difference of uniformities at temperature t."""
    if t <= 0:
        raise ValueError(f"Uniformity temperature must be positive, got {t}")
    return abs(uniformity(X, t) - uniformity(Y, t))
