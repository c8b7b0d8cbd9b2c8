"""
Numerical primitives shared by all measure families.

Centering, normalization, representational similarity matrices (RSMs),
orthonormal bases and cosine k-nearest neighbors. All functions are pure
and work in float64.
"""

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.spatial.distance import pdist, squareform

from src.config import K_NEIGHBORS, RANK_TOL
from src.utils import MeasureError, NUMERICAL, UNDEFINED_INPUT

# Preprocessing step names used in measure recipes
CENTER_COLUMNS = 'center_columns'
UNIT_NORM = 'unit_frobenius_norm'
SQRT_N_NORM = 'frobenius_norm_sqrt_n'
PREPROCESSING_STEPS = (CENTER_COLUMNS, UNIT_NORM, SQRT_N_NORM)

# Values down to this far below zero are treated as rounding noise
NEGATIVE_SLACK = 1e-10


def center_columns(R: np.ndarray) -> np.ndarray:
    """Subtract the column means.

    Args:
        R: N x D matrix

    Returns:
        Column-centered copy of R
    """
    R = np.asarray(R, dtype=np.float64)
    return R - R.mean(axis=0, keepdims=True)


def normalize_matrix(R: np.ndarray, target: float = 1.0) -> np.ndarray:
    """Rescale R so its Frobenius norm equals `target`.

    Args:
        R: Matrix with nonzero norm
        target: Desired Frobenius norm (positive)

    Returns:
        Rescaled copy of R
    """
    if target <= 0:
        raise ValueError(f"Target norm must be positive, got {target}")
    R = np.asarray(R, dtype=np.float64)
    norm = np.linalg.norm(R)
    if norm == 0 or not np.isfinite(norm):
        raise MeasureError(UNDEFINED_INPUT, "Cannot normalize a zero matrix")
    return R * (target / norm)


def apply_preprocessing(R: np.ndarray, steps: Sequence[str]) -> np.ndarray:
    """Apply an ordered preprocessing recipe.

    Args:
        R: N x D matrix
        steps: Step names from PREPROCESSING_STEPS

    Returns:
        Preprocessed matrix
    """
    out = np.asarray(R, dtype=np.float64)
    for step in steps:
        if step == CENTER_COLUMNS:
            out = center_columns(out)
        elif step == UNIT_NORM:
            out = normalize_matrix(out, 1.0)
        elif step == SQRT_N_NORM:
            out = normalize_matrix(out, np.sqrt(out.shape[0]))
        else:
            raise ValueError(f"Unknown preprocessing step: {step}")
    return out


def clamp_nonnegative(value: float, scale: float = 1.0) -> float:
    """Clamp small negative rounding noise to zero before a square root.

    `scale` is the magnitude of the terms that were subtracted.
    """
    if value < -NEGATIVE_SLACK * max(1.0, abs(scale)):
        raise MeasureError(NUMERICAL, f"Expected a nonnegative quantity, got {value:.3e}")
    return max(0.0, float(value))


def nuclear_norm(M: np.ndarray) -> float:
    """Sum of singular values."""
    try:
        return float(np.linalg.svd(M, compute_uv=False).sum())
    except np.linalg.LinAlgError as e:
        raise MeasureError(NUMERICAL, f"SVD did not converge: {e}")


def zero_pad_columns(X: np.ndarray, Y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Zero-pad the narrower matrix to the wider column count."""
    d = max(X.shape[1], Y.shape[1])
    if X.shape[1] < d:
        X = np.hstack([X, np.zeros((X.shape[0], d - X.shape[1]))])
    if Y.shape[1] < d:
        Y = np.hstack([Y, np.zeros((Y.shape[0], d - Y.shape[1]))])
    return X, Y


def orthonormal_basis(X: np.ndarray, tol: float = RANK_TOL) -> np.ndarray:
    """Orthonormal basis of the column space of X.

    Singular values below `tol * sigma_max` count as zero.

    Args:
        X: N x D matrix
        tol: Relative rank tolerance

    Returns:
        N x r matrix with orthonormal columns (r may be 0)
    """
    try:
        U, s, _ = np.linalg.svd(X, full_matrices=False)
    except np.linalg.LinAlgError as e:
        raise MeasureError(NUMERICAL, f"SVD did not converge: {e}")
    if s.size == 0 or s[0] == 0:
        return U[:, :0]
    rank = int(np.sum(s > tol * s[0]))
    return U[:, :rank]


def euclidean_rsm(R: np.ndarray) -> np.ndarray:
    """Pairwise Euclidean distances between instances (rows).

    Args:
        R: N x D matrix

    Returns:
        Symmetric N x N matrix with zero diagonal
    """
    R = np.asarray(R, dtype=np.float64)
    return squareform(pdist(R, metric='euclidean'))


def pearson_row_rsm(R: np.ndarray) -> np.ndarray:
    """Pearson correlations between instances (rows).

    Args:
        R: N x D matrix with D >= 2 and non-constant rows

    Returns:
        Symmetric N x N matrix with unit diagonal
    """
    R = np.asarray(R, dtype=np.float64)
    if R.shape[1] < 2:
        raise MeasureError(UNDEFINED_INPUT, "Row correlations need at least 2 columns")
    centered = R - R.mean(axis=1, keepdims=True)
    norms = np.linalg.norm(centered, axis=1)
    if np.any(norms == 0):
        raise MeasureError(UNDEFINED_INPUT, "Row correlation undefined for constant rows")
    Z = centered / norms[:, None]
    S = np.clip(Z @ Z.T, -1.0, 1.0)
    np.fill_diagonal(S, 1.0)
    return S


def cosine_similarity_matrix(R: np.ndarray) -> np.ndarray:
    """Cosine similarities between instances (rows); rows must be nonzero."""
    R = np.asarray(R, dtype=np.float64)
    norms = np.linalg.norm(R, axis=1)
    if np.any(norms == 0):
        raise MeasureError(UNDEFINED_INPUT, "Cosine similarity undefined for all-zero rows")
    Z = R / norms[:, None]
    return np.clip(Z @ Z.T, -1.0, 1.0)


def column_correlations(X: np.ndarray, Y: np.ndarray) -> np.ndarray:
    """Pearson correlations between the columns of X and Y.

    Constant columns correlate 0 with everything.

    Returns:
        D x D' correlation matrix
    """
    Xc = center_columns(X)
    Yc = center_columns(Y)
    x_norms = np.linalg.norm(Xc, axis=0)
    y_norms = np.linalg.norm(Yc, axis=0)
    Xn = np.divide(Xc, x_norms, out=np.zeros_like(Xc), where=x_norms > 0)
    Yn = np.divide(Yc, y_norms, out=np.zeros_like(Yc), where=y_norms > 0)
    return np.clip(Xn.T @ Yn, -1.0, 1.0)


@dataclass(frozen=True)
class NeighborLists:
    """Per-instance k nearest neighbors, ordered by rank (rank 1 first)."""

    indices: np.ndarray  # N x k, column r holds the neighbor of rank r + 1
    k: int

    def neighbor_set(self, i: int) -> set:
        return set(self.indices[i].tolist())

    def rank_of(self, i: int) -> dict:
        """Map neighbor index -> rank (1..k) for instance i."""
        return {int(j): r + 1 for r, j in enumerate(self.indices[i])}


def cosine_knn(R: np.ndarray, k: int = K_NEIGHBORS) -> NeighborLists:
    """Cosine k-nearest neighbors of every instance, excluding itself.

    Ties are broken by the lower row index.

    Args:
        R: N x D matrix without all-zero rows
        k: Neighborhood size (N > k)

    Returns:
        NeighborLists
    """
    R = np.asarray(R, dtype=np.float64)
    n = R.shape[0]
    if k < 1:
        raise ValueError(f"k must be positive, got {k}")
    if n <= k:
        raise MeasureError(UNDEFINED_INPUT, f"Need more than k={k} instances, got {n}")

    return knn_from_similarity(cosine_similarity_matrix(R), k)


def knn_from_similarity(S: np.ndarray, k: int) -> NeighborLists:
    """Top-k most similar other instances per row of a similarity matrix."""
    S = np.array(S, dtype=np.float64, copy=True)
    np.fill_diagonal(S, -np.inf)
    # stable sort keeps ascending index order among equal similarities
    order = np.argsort(-S, axis=1, kind="stable")[:, :k]
    return NeighborLists(indices=order, k=k)
