"""
CCA-family measures: SVCCA and PWCCA on top of a shared canonical
correlation kernel.
"""

from dataclasses import dataclass

import numpy as np

from src.config import RANK_TOL, SVCCA_THRESHOLD
from src.logger import logger
from src.measures.registry import SIMILARITY, register_measure
from src.preprocess import center_columns
from src.utils import DIMENSION_MISMATCH, MeasureError, NUMERICAL, UNDEFINED_INPUT


@dataclass(frozen=True)
class CcaSolution:
    """Canonical correlations (descending) with the left argument's directions.

    `directions_left` holds canonical weight vectors (D x m) and
    `variates_left` the unit-norm canonical variates X @ directions_left.
    """

    correlations: np.ndarray
    directions_left: np.ndarray
    variates_left: np.ndarray


def _truncated_svd(X: np.ndarray, tol: float):
    try:
        U, s, Vt = np.linalg.svd(X, full_matrices=False)
    except np.linalg.LinAlgError as e:
        raise MeasureError(NUMERICAL, f"SVD did not converge: {e}")
    if s.size == 0 or s[0] == 0:
        return U[:, :0], s[:0], Vt[:0]
    rank = int(np.sum(s > tol * s[0]))
    return U[:, :rank], s[:rank], Vt[:rank]


def cca_core(X: np.ndarray, Y: np.ndarray, tol: float = RANK_TOL) -> CcaSolution:
    """Canonical correlation analysis of two centered matrices.

    Args:
        X: N x D centered matrix
        Y: N x D' centered matrix
        tol: Relative rank tolerance for the orthonormalization

    Returns:
        CcaSolution with min(rank X, rank Y) correlations in [0, 1]
    """
    if X.shape[0] != Y.shape[0]:
        raise MeasureError(DIMENSION_MISMATCH, f"CCA needs the same instances, got {X.shape[0]} and {Y.shape[0]}")
    if X.shape[0] < 2:
        raise MeasureError(UNDEFINED_INPUT, "CCA needs at least 2 instances")

    Ux, sx, Vtx = _truncated_svd(X, tol)
    Uy, _, _ = _truncated_svd(Y, tol)
    if Ux.shape[1] == 0 or Uy.shape[1] == 0:
        raise MeasureError(UNDEFINED_INPUT, "CCA undefined for a rank-0 input")

    try:
        A, rho, _ = np.linalg.svd(Ux.T @ Uy, full_matrices=False)
    except np.linalg.LinAlgError as e:
        raise MeasureError(NUMERICAL, f"SVD did not converge: {e}")

    m = rho.size
    A = A[:, :m]
    logger.debug(f"CCA ranks: {Ux.shape[1]} x {Uy.shape[1]}, {m} correlations")
    return CcaSolution(
        correlations=np.clip(rho, 0.0, 1.0),
        directions_left=Vtx.T @ (A / sx[:, None]),
        variates_left=Ux @ A,
    )


def _svd_reduce(X: np.ndarray, threshold: float) -> np.ndarray:
    """Keep the top singular directions explaining `threshold` of the energy."""
    U, s, _ = _truncated_svd(X, RANK_TOL)
    if s.size == 0:
        raise MeasureError(UNDEFINED_INPUT, "SVCCA undefined for a rank-0 input")
    energy = np.cumsum(s ** 2) / np.sum(s ** 2)
    keep = int(np.searchsorted(energy, threshold - 1e-12) + 1)
    keep = min(keep, s.size)
    return U[:, :keep] * s[:keep]


@register_measure(
    'svcca', 'SVCCA', 'cca', SIMILARITY, hyperparams={'threshold': SVCCA_THRESHOLD},
)
def svcca(X: np.ndarray, Y: np.ndarray, threshold: float = SVCCA_THRESHOLD) -> float:
    """Mean canonical correlation after SVD reduction of both inputs."""
    if not 0 < threshold <= 1:
        raise ValueError(f"Variance threshold must lie in (0, 1], got {threshold}")
    X_reduced = _svd_reduce(center_columns(X), threshold)
    Y_reduced = _svd_reduce(center_columns(Y), threshold)
    solution = cca_core(X_reduced, Y_reduced)
    return float(solution.correlations.mean())


@register_measure('pwcca', 'PWCCA', 'cca', SIMILARITY, symmetric=False)
def pwcca(X: np.ndarray, Y: np.ndarray) -> float:
    """Canonical correlations weighted by how much of X each variate accounts for."""
    Xc = center_columns(X)
    solution = cca_core(Xc, center_columns(Y))
    weights = np.abs(solution.variates_left.T @ Xc).sum(axis=1)
    total = weights.sum()
    if not np.isfinite(total) or total <= 0:
        raise MeasureError(NUMERICAL, "PWCCA projection weights have no mass")
    return float(np.clip(np.dot(weights / total, solution.correlations), 0.0, 1.0))
