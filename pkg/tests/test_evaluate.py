from itertools import combinations

import numpy as np
import pytest
from scipy.stats import rankdata

from src.evaluate import (
    PairScore, accuracy, accuracy_diff, auprc, conformity_groups, conformity_layers, disagreement,
    jsd_mean, spearman
)
from src.measures.registry import MeasureResult
from src.representation import ModelOutputs
from src.utils import EvaluationError


def _pair(a, b, value):
    result = MeasureResult.success(0.0 if value is None else value)
    return PairScore(left_id=a, right_id=b, raw=result, similarity_oriented=value)


class TestOutputDifferences:
    def test_accuracy(self):
        outs = ModelOutputs(probs=[[0.9, 0.1], [0.2, 0.8], [0.6, 0.4]], labels=[0, 1, 1])
        assert accuracy(outs) == pytest.approx(2.0 / 3.0)

    def test_accuracy_diff(self):
        labels = [0, 1]
        left = ModelOutputs(probs=[[0.9, 0.1], [0.2, 0.8]], labels=labels)
        right = ModelOutputs(probs=[[0.9, 0.1], [0.7, 0.3]], labels=labels)
        assert accuracy_diff(left, right) == pytest.approx(0.5)

    def test_disagreement(self):
        P = np.array([[0.9, 0.1], [0.2, 0.8], [0.5, 0.5]])
        Q = np.array([[0.1, 0.9], [0.2, 0.8], [0.5, 0.5]])
        assert disagreement(P, Q) == pytest.approx(1.0 / 3.0)

    def test_jsd_disjoint_single_instance(self):
        assert jsd_mean(np.array([[1.0, 0.0]]), np.array([[0.0, 1.0]])) == pytest.approx(0.5, abs=1e-15)

    def test_jsd_identical(self):
        P = np.array([[0.3, 0.7], [0.5, 0.5]])
        assert jsd_mean(P, P) == 0.0

    def test_jsd_oracle(self):
        P = np.array([[0.7, 0.2, 0.1], [0.1, 0.1, 0.8]])
        Q = np.array([[0.2, 0.5, 0.3], [0.3, 0.3, 0.4]])
        M = (P + Q) / 2.0
        kl = lambda a, b: np.sum(a * np.log2(a / b), axis=1)
        expected = np.sum(0.5 * kl(P, M) + 0.5 * kl(Q, M)) / (2.0 * 2)
        assert jsd_mean(P, Q) == pytest.approx(expected, abs=1e-12)

    def test_jsd_shape_mismatch(self):
        with pytest.raises(EvaluationError):
            jsd_mean(np.ones((2, 2)) / 2, np.ones((3, 2)) / 2)


class TestSpearman:
    def test_tie_case(self):
        x, y = [1, 2, 2, 3], [2, 1, 3, 4]
        expected = np.corrcoef(rankdata(x), rankdata(y))[0, 1]
        assert spearman(x, y) == pytest.approx(expected, abs=1e-12)

    def test_monotone(self):
        assert spearman([1, 2, 3, 4], [10, 20, 30, 45]) == pytest.approx(1.0)
        assert spearman([1, 2, 3, 4], [4, 3, 2, 1]) == pytest.approx(-1.0)

    def test_rounding_noise_counts_as_tie(self):
        x = [0.2, 0.2 + 1e-15, 0.4, 0.4 - 1e-15, 0.6]
        y = [1, 1, 2, 2, 3]
        assert spearman(x, y) == pytest.approx(1.0, abs=1e-12)

    @pytest.mark.parametrize("x, y", [([1, 2], [1, 2]), ([1, 1, 1], [1, 2, 3]), ([1, 2, np.nan], [1, 2, 3])])
    def test_undefined(self, x, y):
        with pytest.raises(EvaluationError):
            spearman(x, y)


class TestAuprc:
    def test_perfect(self):
        assert auprc([0.9, 0.8, 0.2, 0.1], [1, 1, 0, 0]) == pytest.approx(1.0)

    def test_interleaved(self):
        assert auprc([0.9, 0.8, 0.7, 0.6], [1, 0, 1, 0]) == pytest.approx(5.0 / 6.0)

    def test_all_tied_gives_prevalence(self):
        assert auprc([0.5] * 5, [1, 0, 0, 1, 0]) == pytest.approx(0.4)

    def test_monotone_transform(self, rng):
        scores = rng.random(30)
        labels = np.r_[np.ones(10), np.zeros(20)].astype(int)
        assert auprc(np.exp(3 * scores), labels) == pytest.approx(auprc(scores, labels))

    def test_single_class(self):
        with pytest.raises(EvaluationError):
            auprc([0.1, 0.2], [1, 1])


def _brute_force_groups(S, groups):
    ids = sorted(groups)
    conforming = total = 0
    for a in ids:
        for b in ids:
            for c in ids:
                if len({a, b, c}) < 3 or groups[b] != groups[a] or groups[c] == groups[a]:
                    continue
                total += 1
                conforming += S[frozenset((a, c))] <= S[frozenset((a, b))]
    return conforming / total


class TestConformityGroups:
    GROUPS = {'a0': 'A', 'a1': 'A', 'a2': 'A', 'b0': 'B', 'b1': 'B', 'c0': 'C', 'c1': 'C'}

    def _scores(self, value_of):
        return [_pair(a, b, value_of(a, b)) for a, b in combinations(sorted(self.GROUPS), 2)]

    def test_block_constant(self):
        same = lambda a, b: 1.0 if self.GROUPS[a] == self.GROUPS[b] else 0.2
        result = conformity_groups(self._scores(same), self.GROUPS)
        assert result['conformity_rate'] == 1.0
        assert result['auprc'] == pytest.approx(1.0)
        assert result['n_pairs'] == 21

    def test_all_equal(self):
        result = conformity_groups(self._scores(lambda a, b: 0.5), self.GROUPS)
        assert result['conformity_rate'] == 1.0
        assert result['auprc'] == pytest.approx(5.0 / 21.0)

    def test_failed_pairs_are_skipped(self):
        same = lambda a, b: None if (a, b) == ('a0', 'b0') else (1.0 if self.GROUPS[a] == self.GROUPS[b] else 0.0)
        result = conformity_groups(self._scores(same), self.GROUPS)
        assert result['n_failed_pairs'] == 1
        assert result['conformity_rate'] == 1.0

    def test_missing_pair(self):
        pairs = self._scores(lambda a, b: 0.5)[1:]
        with pytest.raises(EvaluationError):
            conformity_groups(pairs, self.GROUPS)

    def test_single_member_group(self):
        with pytest.raises(EvaluationError):
            conformity_groups([_pair('a', 'b', 0.1)], {'a': 'A', 'b': 'B'})


def _brute_force_layers(S, n):
    conforming = total = 0
    for i in range(1, n + 1):
        for j in range(i, n + 1):
            for k in range(j + 1, n + 1):
                for l in range(k, n + 1):
                    if (i, l) == (j, k):
                        continue
                    total += 1
                    conforming += S[(i, l)] <= S[(j, k)]
    return conforming / total


class TestConformityLayers:
    def test_closer_is_more_similar(self):
        scores = {(i, j): -float(j - i) for i, j in combinations(range(1, 6), 2)}
        result = conformity_layers(scores, 5)
        assert result['conformity_rate'] == 1.0
        assert result['spearman_vs_distance'] == pytest.approx(1.0)

    def test_reversed(self):
        scores = {(i, j): float(j - i) for i, j in combinations(range(1, 6), 2)}
        result = conformity_layers(scores, 5)
        assert result['conformity_rate'] == 0.0
        assert result['spearman_vs_distance'] == pytest.approx(-1.0)

    def test_reversed_keys(self):
        scores = {(j, i): -float(j - i) for i, j in combinations(range(1, 5), 2)}
        assert conformity_layers(scores, 4)['conformity_rate'] == 1.0

    def test_all_tied(self):
        scores = {(i, j): 0.3 for i, j in combinations(range(1, 5), 2)}
        result = conformity_layers(scores, 4)
        assert result['conformity_rate'] == 1.0
        assert result['spearman_vs_distance'] is None

    def test_absent_pair_counts_as_failed(self, rng):
        scores = {(i, j): float(rng.random()) for i, j in combinations(range(1, 6), 2)}
        failed = {**scores, (2, 4): None}
        absent = {key: value for key, value in scores.items() if key != (2, 4)}
        assert conformity_layers(absent, 5) == conformity_layers(failed, 5)
        assert conformity_layers(absent, 5)['n_failed_pairs'] == 1

    def test_all_failed(self):
        with pytest.raises(EvaluationError):
            conformity_layers({(1, 2): None}, 4)

    def test_too_few_layers(self):
        with pytest.raises(EvaluationError):
            conformity_layers({(1, 2): 0.0}, 2)


SEEDS = range(200)


def _draw(rng, size):
    """Exact values plus a copy with sub-grid float noise.

    About half the draws come from a coarse grid, so ties are frequent; the
    noisy copy must rank exactly like the exact one.
    """
    if rng.integers(2) == 0:
        exact = rng.integers(0, 4, size) / 3.0
    else:
        exact = rng.random(size)
    noise = rng.choice([-1e-14, 0.0, 1e-14], size)
    return exact, exact + noise


def _average_ranks(values):
    values = list(values)
    return [sum(v < x for v in values) + (sum(v == x for v in values) + 1) / 2.0 for x in values]


def _pearson(a, b):
    a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    a, b = a - a.mean(), b - b.mean()
    return float(a @ b / np.sqrt((a @ a) * (b @ b)))


def _threshold_sweep_ap(scores, labels):
    """Step-wise precision/recall sum over distinct thresholds, highest first."""
    positives = sum(labels)
    ap = 0.0
    previous_recall = 0.0
    for threshold in sorted(set(scores), reverse=True):
        selected = [label for score, label in zip(scores, labels) if score >= threshold]
        recall = sum(selected) / positives
        ap += (recall - previous_recall) * (sum(selected) / len(selected))
        previous_recall = recall
    return ap


@pytest.mark.parametrize("seed", SEEDS)
def test_spearman_matches_rank_oracle(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(3, 9))
    x_exact, x = _draw(rng, n)
    y_exact, y = _draw(rng, n)
    if len(set(x_exact)) == 1 or len(set(y_exact)) == 1:
        with pytest.raises(EvaluationError):
            spearman(x, y)
        return
    expected = _pearson(_average_ranks(x_exact), _average_ranks(y_exact))
    assert spearman(x, y) == pytest.approx(expected, abs=1e-12)


@pytest.mark.parametrize("seed", SEEDS)
def test_auprc_matches_threshold_sweep(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 9))
    labels = rng.permutation(np.r_[1, 0, rng.integers(0, 2, n - 2)]).astype(int)
    exact, _ = _draw(rng, n)
    expected = _threshold_sweep_ap(list(exact), list(labels))
    assert auprc(exact, labels) == pytest.approx(expected, abs=1e-12)


@pytest.mark.parametrize("seed", SEEDS)
def test_conformity_groups_matches_triple_oracle(seed):
    rng = np.random.default_rng(seed)
    n_groups = int(rng.integers(2, 5))
    sizes = [2] * n_groups
    for _ in range(int(rng.integers(0, 8 - 2 * n_groups + 1))):
        sizes[int(rng.integers(n_groups))] += 1
    group_of = {f"m{g}_{i}": f"g{g}" for g, size in enumerate(sizes) for i in range(size)}
    ids = sorted(group_of)
    keys = list(combinations(ids, 2))
    exact, noisy = _draw(rng, len(keys))

    pairs = [_pair(a, b, float(value)) for (a, b), value in zip(keys, noisy)]
    result = conformity_groups(pairs, group_of)

    S = {frozenset(key): value for key, value in zip(keys, exact)}
    assert result['conformity_rate'] == _brute_force_groups(S, group_of)
    labels = [int(group_of[a] == group_of[b]) for a, b in keys]
    assert result['auprc'] == pytest.approx(_threshold_sweep_ap(list(exact), labels), abs=1e-12)


@pytest.mark.parametrize("seed", SEEDS)
def test_conformity_layers_matches_tuple_oracle(seed):
    rng = np.random.default_rng(seed)
    n_layers = int(rng.integers(3, 6))
    keys = list(combinations(range(1, n_layers + 1), 2))
    exact, noisy = _draw(rng, len(keys))
    result = conformity_layers({key: float(value) for key, value in zip(keys, noisy)}, n_layers)
    S = {key: value for key, value in zip(keys, exact)}
    assert result['conformity_rate'] == _brute_force_layers(S, n_layers)
