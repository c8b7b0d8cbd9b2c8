"""
RSM-based measures: compare instance-by-instance similarity structure or
second-moment statistics of the two representations.
"""

import numpy as np
from scipy.linalg import pinvh
from scipy.stats import spearmanr

from src.config import GULP_LAMBDA, RANK_TOL
from src.measures.registry import DISTANCE, SIMILARITY, register_measure
from src.preprocess import (
    CENTER_COLUMNS, SQRT_N_NORM, clamp_nonnegative, euclidean_rsm, orthonormal_basis,
    pearson_row_rsm
)
from src.utils import MeasureError, NUMERICAL, UNDEFINED_INPUT


@register_measure('cka', 'CKA', 'rsm', SIMILARITY, preprocessing=(CENTER_COLUMNS,))
def cka_linear(X: np.ndarray, Y: np.ndarray) -> float:
    """Linear centered kernel alignment."""
    x_self = np.linalg.norm(X.T @ X)
    y_self = np.linalg.norm(Y.T @ Y)
    if x_self == 0 or y_self == 0:
        raise MeasureError(UNDEFINED_INPUT, "CKA undefined for a constant representation")
    cross = np.linalg.norm(Y.T @ X) ** 2
    return float(np.clip(cross / (x_self * y_self), 0.0, 1.0))


def _upper_triangle(S: np.ndarray) -> np.ndarray:
    return S[np.triu_indices(S.shape[0], k=1)]


@register_measure('rsa', 'RSA', 'rsm', SIMILARITY)
def rsa(X: np.ndarray, Y: np.ndarray) -> float:
    """Spearman correlation between the Pearson RSMs of both inputs."""
    if X.shape[0] < 4:
        raise MeasureError(UNDEFINED_INPUT, f"RSA needs at least 4 instances, got {X.shape[0]}")
    left = _upper_triangle(pearson_row_rsm(X))
    right = _upper_triangle(pearson_row_rsm(Y))
    if np.ptp(left) == 0 or np.ptp(right) == 0:
        raise MeasureError(UNDEFINED_INPUT, "RSA undefined for a constant RSM")
    return float(spearmanr(left, right).statistic)


@register_measure('rsm_norm_diff', 'RSMDiff', 'rsm', DISTANCE)
def rsm_norm_diff(X: np.ndarray, Y: np.ndarray) -> float:
    """Frobenius norm of the difference of the Euclidean RSMs (unnormalized)."""
    return float(np.linalg.norm(euclidean_rsm(X) - euclidean_rsm(Y)))


def _double_center(D: np.ndarray) -> np.ndarray:
    return D - D.mean(axis=0, keepdims=True) - D.mean(axis=1, keepdims=True) + D.mean()


@register_measure('dist_corr', 'DistCorr', 'rsm', SIMILARITY)
def dist_corr(X: np.ndarray, Y: np.ndarray) -> float:
    """Distance correlation of the two instance clouds."""
    A = _double_center(euclidean_rsm(X))
    B = _double_center(euclidean_rsm(Y))
    dcov = np.mean(A * B)
    dvar_x = np.mean(A * A)
    dvar_y = np.mean(B * B)
    if dvar_x <= 0 or dvar_y <= 0:
        raise MeasureError(UNDEFINED_INPUT, "Distance correlation undefined when all instances coincide")
    scale = np.sqrt(dvar_x * dvar_y)
    return float(np.sqrt(np.clip(clamp_nonnegative(dcov, scale) / scale, 0.0, 1.0)))


@register_measure(
    'eigenspace_overlap', 'EOS', 'rsm', SIMILARITY, hyperparams={'tol': RANK_TOL},
)
def eigenspace_overlap(X: np.ndarray, Y: np.ndarray, tol: float = RANK_TOL) -> float:
    """Overlap of the left singular subspaces, normalized by the larger retained rank."""
    U = orthonormal_basis(X, tol)
    V = orthonormal_basis(Y, tol)
    denominator = max(U.shape[1], V.shape[1])
    if denominator == 0:
        raise MeasureError(UNDEFINED_INPUT, "Eigenspace overlap undefined for zero matrices")
    return float(np.clip(np.sum((U.T @ V) ** 2) / denominator, 0.0, 1.0))


def _regularized_inverse(S: np.ndarray, lam: float, tol: float) -> np.ndarray:
    try:
        if lam == 0:
            return pinvh(S, rtol=tol)
        return np.linalg.inv(S + lam * np.eye(S.shape[0]))
    except np.linalg.LinAlgError as e:
        raise MeasureError(NUMERICAL, f"Inverse of covariance failed: {e}")


@register_measure(
    'gulp', 'GULP', 'rsm', DISTANCE,
    preprocessing=(CENTER_COLUMNS, SQRT_N_NORM), hyperparams={'lam': GULP_LAMBDA, 'tol': RANK_TOL},
)
def gulp(X: np.ndarray, Y: np.ndarray, lam: float = GULP_LAMBDA, tol: float = RANK_TOL) -> float:
    """GULP distance between the linear predictors the two representations support."""
    if lam < 0:
        raise ValueError(f"GULP regularization must be nonnegative, got {lam}")
    n = X.shape[0]
    cov_x = X.T @ X / n
    cov_y = Y.T @ Y / n
    cov_xy = X.T @ Y / n

    inv_x = _regularized_inverse(cov_x, lam, tol)
    inv_y = _regularized_inverse(cov_y, lam, tol)

    term_x = np.trace(inv_x @ cov_x @ inv_x @ cov_x)
    term_y = np.trace(inv_y @ cov_y @ inv_y @ cov_y)
    cross = np.trace(inv_x @ cov_xy @ inv_y @ cov_xy.T)
    squared = term_x + term_y - 2.0 * cross
    if not np.isfinite(squared):
        raise MeasureError(NUMERICAL, "GULP produced a non-finite value")
    return float(np.sqrt(clamp_nonnegative(squared, term_x + term_y)))
