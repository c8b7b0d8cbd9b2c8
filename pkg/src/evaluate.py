"""
Evaluation statistics for the benchmark tests.

Functional differences between model outputs (accuracy difference,
disagreement, mean Jensen-Shannon divergence), rank correlation, average
precision and the group/layer conformity rates. All functions are pure;
undefined inputs raise EvaluationError.
"""

from dataclasses import dataclass
from itertools import combinations
from typing import Dict, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.special import rel_entr
from scipy.stats import spearmanr
from sklearn.metrics import average_precision_score

from src.measures.registry import MeasureDescriptor, MeasureResult
from src.representation import ModelOutputs
from src.utils import DIMENSION_MISMATCH, EvaluationError

OutputsLike = Union[ModelOutputs, np.ndarray]

# Scores closer than this many decimals count as ties.
TIE_DECIMALS = 12


def _snap(values: np.ndarray) -> np.ndarray:
    return np.round(values, TIE_DECIMALS)


@dataclass(frozen=True)
class PairScore:
    """Score of one representation pair, oriented so that higher = more similar."""

    left_id: str
    right_id: str
    raw: MeasureResult
    similarity_oriented: Optional[float] = None

    @classmethod
    def from_result(
        cls, left_id: str, right_id: str, result: MeasureResult, descriptor: MeasureDescriptor
    ) -> 'PairScore':
        oriented = descriptor.orient(result.value) if result.ok else None
        return cls(left_id=left_id, right_id=right_id, raw=result, similarity_oriented=oriented)

    @property
    def ok(self) -> bool:
        return self.similarity_oriented is not None


def _probs(outputs: OutputsLike) -> np.ndarray:
    if isinstance(outputs, ModelOutputs):
        return outputs.probs
    probs = np.asarray(outputs, dtype=np.float64)
    if probs.ndim != 2:
        raise EvaluationError(f"Outputs must be 2-D, got {probs.ndim} dimension(s)")
    return probs


def _check_same_shape(P: np.ndarray, Q: np.ndarray):
    if P.shape != Q.shape:
        raise EvaluationError(f"Output shapes differ: {P.shape} vs {Q.shape}", kind=DIMENSION_MISMATCH)


def predictions(outputs: OutputsLike) -> np.ndarray:
    """Predicted class per instance; ties go to the lowest class index."""
    return np.argmax(_probs(outputs), axis=1)


def accuracy(outputs: ModelOutputs) -> float:
    """Fraction of instances whose predicted class equals the label."""
    return float(np.mean(predictions(outputs) == outputs.labels))


def accuracy_diff(outputs: ModelOutputs, other: ModelOutputs) -> float:
    """Absolute difference in accuracies."""
    return abs(accuracy(outputs) - accuracy(other))


def disagreement(outputs: OutputsLike, other: OutputsLike) -> float:
    """Fraction of instances on which the predicted classes differ."""
    P = _probs(outputs)
    Q = _probs(other)
    _check_same_shape(P, Q)
    return float(np.mean(predictions(P) != predictions(Q)))


def _renormalized(P: np.ndarray) -> np.ndarray:
    if np.any(P < 0):
        raise EvaluationError("Probabilities must be nonnegative")
    totals = P.sum(axis=1, keepdims=True)
    if np.any(totals <= 0):
        raise EvaluationError("Probability rows must have positive mass")
    return P / totals


def jsd_mean(outputs: OutputsLike, other: OutputsLike) -> float:
    """Mean Jensen-Shannon divergence (base 2) with a 1/(2N) prefactor.

    Each row's JSD lies in [0, 1], so the result lies in [0, 0.5].
    """
    P = _probs(outputs)
    Q = _probs(other)
    _check_same_shape(P, Q)
    P = _renormalized(P)
    Q = _renormalized(Q)
    M = 0.5 * (P + Q)
    divergences = 0.5 * (rel_entr(P, M).sum(axis=1) + rel_entr(Q, M).sum(axis=1)) / np.log(2.0)
    return float(np.clip(divergences, 0.0, 1.0).sum() / (2.0 * P.shape[0]))


OUTPUT_DIFFERENCES = {
    'jsd': jsd_mean,
    'disagreement': disagreement,
}


def spearman(x: Sequence[float], y: Sequence[float]) -> float:
    """Spearman rank correlation with average ranks for ties.

    Args:
        x: Values, length >= 3, not constant
        y: Values of the same length, not constant

    Returns:
        Correlation in [-1, 1]
    """
    x = np.asarray(x, dtype=np.float64).ravel()
    y = np.asarray(y, dtype=np.float64).ravel()
    if x.shape != y.shape:
        raise EvaluationError(f"Spearman needs equal lengths, got {x.size} and {y.size}", kind=DIMENSION_MISMATCH)
    if x.size < 3:
        raise EvaluationError(f"Spearman needs at least 3 values, got {x.size}")
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
        raise EvaluationError("Spearman inputs must be finite")
    x = _snap(x)
    y = _snap(y)
    if np.ptp(x) == 0 or np.ptp(y) == 0:
        raise EvaluationError("Spearman correlation undefined for a constant input")
    return float(np.clip(spearmanr(x, y).statistic, -1.0, 1.0))


def auprc(scores: Sequence[float], labels: Sequence[int]) -> float:
    """Average precision of scores against binary labels.

    Tied scores form a single threshold step.
    """
    scores = np.asarray(scores, dtype=np.float64).ravel()
    labels = np.asarray(labels).ravel()
    if scores.shape != labels.shape:
        raise EvaluationError(
            f"AUPRC needs one label per score, got {scores.size} and {labels.size}", kind=DIMENSION_MISMATCH
        )
    if not np.all(np.isin(labels, (0, 1))):
        raise EvaluationError("AUPRC labels must be binary")
    positives = int(np.sum(labels == 1))
    if positives == 0 or positives == labels.size:
        raise EvaluationError("AUPRC needs at least one positive and one negative label")
    if not np.all(np.isfinite(scores)):
        raise EvaluationError("AUPRC scores must be finite")
    return float(average_precision_score(labels.astype(int), scores))


def _pair_key(a: str, b: str) -> Tuple[str, str]:
    return (a, b) if a <= b else (b, a)


def conformity_groups(pair_scores: Sequence[PairScore], group_of: Mapping[str, str]) -> Dict[str, float]:
    """Group conformity rate and AUPRC of same-group pairs.

    A triple (anchor, same-group member, other-group member) conforms when
    the anchor is at least as similar to its group member as to the other
    model. Failed pairs are left out of every triple and of the AUPRC.

    Args:
        pair_scores: Scores covering every unordered pair of models in group_of
        group_of: Model id -> group tag

    Returns:
        Dict with conformity_rate, auprc, n_pairs and n_failed_pairs
    """
    members: Dict[str, list] = {}
    for model_id, group in group_of.items():
        members.setdefault(group, []).append(model_id)
    if len(members) < 2:
        raise EvaluationError(f"Group conformity needs at least 2 groups, got {len(members)}")
    small = sorted(g for g, ids in members.items() if len(ids) < 2)
    if small:
        raise EvaluationError(f"Groups need at least 2 members each: {small}")

    scores: Dict[Tuple[str, str], Optional[float]] = {}
    for pair in pair_scores:
        scores[_pair_key(pair.left_id, pair.right_id)] = pair.similarity_oriented

    ids = sorted(group_of)
    missing = [key for key in combinations(ids, 2) if key not in scores]
    if missing:
        raise EvaluationError(f"Missing scores for {len(missing)} pairs, e.g. {missing[0]}")

    index = {model_id: i for i, model_id in enumerate(ids)}
    S = np.full((len(ids), len(ids)), np.nan)
    for (a, b) in combinations(ids, 2):
        value = scores[(a, b)]
        if value is not None:
            S[index[a], index[b]] = S[index[b], index[a]] = value
    S = _snap(S)

    groups = np.array([group_of[model_id] for model_id in ids])
    conforming = 0
    total = 0
    for a in range(len(ids)):
        same_mask = groups == groups[a]
        same_mask[a] = False
        same = S[a, same_mask]
        other = S[a, groups != groups[a]]
        same = same[~np.isnan(same)]
        other = other[~np.isnan(other)]
        conforming += int(np.sum(other[:, None] <= same[None, :]))
        total += same.size * other.size
    if total == 0:
        raise EvaluationError("No evaluable triples: too many failed pairs")

    upper = np.triu_indices(len(ids), k=1)
    pair_values = S[upper]
    pair_labels = (groups[upper[0]] == groups[upper[1]]).astype(int)
    valid = ~np.isnan(pair_values)

    return {
        'conformity_rate': conforming / total,
        'auprc': auprc(pair_values[valid], pair_labels[valid]),
        'n_pairs': int(pair_values.size),
        'n_failed_pairs': int(np.sum(~valid)),
    }


def conformity_layers(
    layer_scores: Mapping[Tuple[int, int], Optional[float]], n_layers: int
) -> Dict[str, Optional[float]]:
    """Layer conformity rate and Spearman correlation with layer distance.

    Layers are numbered 1..n_layers. A tuple i <= j < k <= l with
    (i, l) != (j, k) conforms when m(i, l) <= m(j, k): nested layer pairs are
    at least as similar as the pairs enclosing them.

    Args:
        layer_scores: (i, j) -> oriented similarity, None for a failed pair;
            (j, i) is accepted in place of (i, j). An absent pair counts as
            failed, same as None
        n_layers: Number of layers L >= 3

    Returns:
        Dict with conformity_rate, spearman_vs_distance (None when the
        correlation is undefined, e.g. all scores tied) and n_failed_pairs
    """
    if n_layers < 3:
        raise EvaluationError(f"Layer conformity needs at least 3 layers, got {n_layers}")

    S = np.full((n_layers + 1, n_layers + 1), np.nan)
    for i, j in combinations(range(1, n_layers + 1), 2):
        value = layer_scores.get((i, j), layer_scores.get((j, i)))
        if value is not None:
            S[i, j] = value
    S = _snap(S)

    conforming = 0
    total = 0
    for i in range(1, n_layers + 1):
        for l in range(i + 1, n_layers + 1):
            outer = S[i, l]
            if np.isnan(outer):
                continue
            for j in range(i, l):
                for k in range(j + 1, l + 1):
                    if (i, l) == (j, k) or np.isnan(S[j, k]):
                        continue
                    total += 1
                    conforming += int(outer <= S[j, k])
    if total == 0:
        raise EvaluationError("No evaluable layer tuples: too many failed pairs")

    pairs = [(i, j) for i, j in combinations(range(1, n_layers + 1), 2) if not np.isnan(S[i, j])]
    distances = [j - i for i, j in pairs]
    oriented_distance = [-S[i, j] for i, j in pairs]
    try:
        correlation = spearman(oriented_distance, distances)
    except EvaluationError:
        correlation = None

    return {
        'conformity_rate': conforming / total,
        'spearman_vs_distance': correlation,
        'n_failed_pairs': n_layers * (n_layers - 1) // 2 - len(pairs),
    }
