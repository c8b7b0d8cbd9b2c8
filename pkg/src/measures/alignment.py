"""
Alignment-based measures: similarity through an explicit optimal map
(orthogonal, permutation or linear) between the two representations.
"""

import numpy as np
from scipy.linalg import orthogonal_procrustes
from scipy.optimize import linear_sum_assignment

from src.config import RANK_TOL
from src.measures.registry import DISTANCE, SIMILARITY, register_measure
from src.preprocess import (
    CENTER_COLUMNS, UNIT_NORM, clamp_nonnegative, column_correlations, nuclear_norm,
    orthonormal_basis, zero_pad_columns
)
from src.utils import MeasureError, NUMERICAL, UNDEFINED_INPUT


@register_measure(
    'orth_procrustes', 'OrthProc', 'alignment', DISTANCE,
    preprocessing=(CENTER_COLUMNS, UNIT_NORM),
)
def orth_procrustes(X: np.ndarray, Y: np.ndarray) -> float:
    """Orthogonal Procrustes distance; in [0, 2] on unit-norm inputs."""
    return np.sqrt(clamp_nonnegative(2.0 - 2.0 * nuclear_norm(X.T @ Y)))


@register_measure(
    'angular_shape', 'AngShape', 'alignment', DISTANCE,
    preprocessing=(CENTER_COLUMNS, UNIT_NORM),
)
def angular_shape(X: np.ndarray, Y: np.ndarray) -> float:
    """Orthogonal angular shape metric in radians, within [0, pi/2]."""
    return float(np.arccos(np.clip(nuclear_norm(X.T @ Y), 0.0, 1.0)))


@register_measure(
    'procrustes_size_shape', 'ProcDist', 'alignment', DISTANCE,
    preprocessing=(CENTER_COLUMNS,),
)
def procrustes_size_shape(X: np.ndarray, Y: np.ndarray) -> float:
    """Procrustes size-and-shape distance on centered, unscaled inputs."""
    energy = np.sum(X ** 2) + np.sum(Y ** 2)
    return np.sqrt(clamp_nonnegative(energy - 2.0 * nuclear_norm(X.T @ Y), energy))


@register_measure('perm_procrustes', 'PermProc', 'alignment', DISTANCE)
def perm_procrustes(X: np.ndarray, Y: np.ndarray) -> float:
    """Procrustes distance when the map is restricted to column permutations."""
    X, Y = zero_pad_columns(X, Y)
    gains = X.T @ Y
    try:
        rows, cols = linear_sum_assignment(gains, maximize=True)
    except ValueError as e:
        raise MeasureError(NUMERICAL, f"Assignment failed: {e}")
    optimum = gains[rows, cols].sum()
    energy = np.sum(X ** 2) + np.sum(Y ** 2)
    return np.sqrt(clamp_nonnegative(energy - 2.0 * optimum, energy))


@register_measure(
    'linreg', 'LinReg', 'alignment', SIMILARITY,
    preprocessing=(CENTER_COLUMNS,), hyperparams={'tol': RANK_TOL}, symmetric=False,
)
def linreg_r2(X: np.ndarray, Y: np.ndarray, tol: float = RANK_TOL) -> float:
    """R^2 of the least-squares prediction of Y from X.

    Asymmetric: the right argument is predicted from the left one.
    """
    y_energy = np.sum(Y ** 2)
    if y_energy == 0:
        raise MeasureError(UNDEFINED_INPUT, "Target representation is constant")
    Q = orthonormal_basis(X, tol)
    if Q.shape[1] == 0:
        return 0.0
    return float(np.clip(np.sum((Q.T @ Y) ** 2) / y_energy, 0.0, 1.0))


@register_measure('aligned_cosine', 'AlignCos', 'alignment', SIMILARITY)
def aligned_cosine(X: np.ndarray, Y: np.ndarray) -> float:
    """Mean instance-wise cosine after orthogonally aligning Y onto X."""
    X, Y = zero_pad_columns(X, Y)
    x_norms = np.linalg.norm(X, axis=1)
    y_norms = np.linalg.norm(Y, axis=1)
    if np.any(x_norms == 0) or np.any(y_norms == 0):
        raise MeasureError(UNDEFINED_INPUT, "Aligned cosine undefined for all-zero rows")
    try:
        Q, _ = orthogonal_procrustes(Y, X)
    except (ValueError, np.linalg.LinAlgError) as e:
        raise MeasureError(NUMERICAL, f"Orthogonal alignment failed: {e}")
    aligned = Y @ Q
    cosines = np.sum(X * aligned, axis=1) / (x_norms * np.linalg.norm(aligned, axis=1))
    return float(np.clip(cosines, -1.0, 1.0).mean())


@register_measure('hard_corr_match', 'HardCorr', 'alignment', SIMILARITY)
def hard_corr_match(X: np.ndarray, Y: np.ndarray) -> float:
    """Mean correlation of a one-to-one optimal matching of units."""
    C = column_correlations(X, Y)
    try:
        rows, cols = linear_sum_assignment(C, maximize=True)
    except ValueError as e:
        raise MeasureError(NUMERICAL, f"Assignment failed: {e}")
    return float(C[rows, cols].mean())


@register_measure('soft_corr_match', 'SoftCorr', 'alignment', SIMILARITY, symmetric=False)
def soft_corr_match(X: np.ndarray, Y: np.ndarray) -> float:
    """Mean over units of X of the best-correlated unit of Y."""
    C = column_correlations(X, Y)
    return float(C.max(axis=1).mean())
