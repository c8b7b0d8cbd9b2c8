"""
Neighborhood measures: compare the cosine k-nearest-neighbor structure
around every instance in both representations.
"""

import numpy as np

from src.config import K_NEIGHBORS
from src.logger import logger
from src.measures.registry import SIMILARITY, register_measure
from src.preprocess import cosine_knn, cosine_similarity_matrix, knn_from_similarity
from src.utils import MeasureError, UNDEFINED_INPUT


def _check_k(k: int, n: int):
    if k < 1:
        raise ValueError(f"k must be positive, got {k}")
    if n <= k:
        raise MeasureError(UNDEFINED_INPUT, f"Need more than k={k} instances, got {n}")


@register_measure('jaccard', 'Jaccard', 'neighbors', SIMILARITY, hyperparams={'k': K_NEIGHBORS})
def jaccard_knn(X: np.ndarray, Y: np.ndarray, k: int = K_NEIGHBORS) -> float:
    """Mean Jaccard similarity of the k-NN sets of every instance."""
    k = int(k)
    left = cosine_knn(X, k)
    right = cosine_knn(Y, k)

    overlaps = []
    for i in range(X.shape[0]):
        a = left.neighbor_set(i)
        b = right.neighbor_set(i)
        overlaps.append(len(a & b) / len(a | b))
    return float(np.mean(overlaps))


@register_measure('rank_sim', 'RankSim', 'neighbors', SIMILARITY, hyperparams={'k': K_NEIGHBORS})
def rank_sim(X: np.ndarray, Y: np.ndarray, k: int = K_NEIGHBORS) -> float:
    """Rank-weighted overlap of k-NN lists, 1 when sets and ranks coincide.

    Each shared neighbor j of instance i contributes 2 / (rank_R(j) + rank_R'(j));
    the sum is divided by the harmonic number H_k.
    """
    k = int(k)
    left = cosine_knn(X, k)
    right = cosine_knn(Y, k)
    harmonic = np.sum(1.0 / np.arange(1, k + 1))

    scores = np.empty(X.shape[0])
    for i in range(X.shape[0]):
        ranks_left = left.rank_of(i)
        ranks_right = right.rank_of(i)
        shared = ranks_left.keys() & ranks_right.keys()
        total = sum(2.0 / (ranks_left[j] + ranks_right[j]) for j in shared)
        scores[i] = total / harmonic
    return float(np.clip(scores.mean(), 0.0, 1.0))


@register_measure(
    'second_order_cosine', '2nd-Cos', 'neighbors', SIMILARITY, hyperparams={'k': K_NEIGHBORS},
)
def second_order_cosine(X: np.ndarray, Y: np.ndarray, k: int = K_NEIGHBORS) -> float:
    """Mean cosine between each instance's similarity profiles over its joint neighborhood.

    The joint neighborhood is the union of both k-NN sets, in ascending index
    order. Instances whose profile is zero in either representation are skipped.
    """
    k = int(k)
    _check_k(k, X.shape[0])
    S_x = cosine_similarity_matrix(X)
    S_y = cosine_similarity_matrix(Y)
    left = knn_from_similarity(S_x, k)
    right = knn_from_similarity(S_y, k)

    scores = []
    skipped = 0
    for i in range(X.shape[0]):
        union = np.array(sorted(left.neighbor_set(i) | right.neighbor_set(i)))
        s = S_x[i, union]
        t = S_y[i, union]
        s_norm = np.linalg.norm(s)
        t_norm = np.linalg.norm(t)
        if s_norm == 0 or t_norm == 0:
            skipped += 1
            continue
        scores.append(np.dot(s, t) / (s_norm * t_norm))

    if not scores:
        raise MeasureError(UNDEFINED_INPUT, "Second-order cosine undefined: every similarity profile is zero")
    if skipped:
        logger.debug(f"second_order_cosine skipped {skipped} instances with zero profiles")
    return float(np.clip(np.mean(scores), -1.0, 1.0))
