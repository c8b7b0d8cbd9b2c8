"""
Benchmark harness: runs the grounding tests over sets of representations,
scores every model pair with every requested measure, and aggregates the
per-cell measure rankings.

Usage:
    from src.harness import BenchmarkRunner, TestSpec

    runner = BenchmarkRunner(n_jobs=4)
    cells = runner.run_group_test(TestSpec(kind='group', name='shortcut'), groups)
"""

from collections import Counter
from dataclasses import dataclass, field
from itertools import combinations
from typing import Any, Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np
from joblib import Parallel, delayed
from scipy.stats import rankdata
from tqdm import tqdm

from src.cache import ResultCache, result_cache
from src.config import DEFAULT_JOBS, DEFAULT_SEED, FAILURE_THRESHOLD
from src.evaluate import (
    OUTPUT_DIFFERENCES, PairScore, accuracy_diff, conformity_groups, conformity_layers, spearman
)
from src.logger import logger
from src.measures import get_measure, list_measures
from src.measures.registry import MeasureResult, compute_measure
from src.metrics import MetricsCollector, metrics_collector
from src.representation import ModelOutputs, Representation
from src.utils import EvaluationError

# Test kinds
ACCURACY_CORR = 'accuracy-corr'
OUTPUT_CORR = 'output-corr'
GROUP = 'group'
LAYER = 'layer'
TEST_KINDS = (ACCURACY_CORR, OUTPUT_CORR, GROUP, LAYER)
PREDICTION_KINDS = (ACCURACY_CORR, OUTPUT_CORR)

OUTPUT_DIFF_CHOICES = ('jsd', 'disagreement', 'both')

# Score used to rank measures within a cell group
PRIMARY_SCORES = {
    ACCURACY_CORR: 'spearman',
    OUTPUT_CORR: 'spearman',
    GROUP: 'auprc',
    LAYER: 'conformity_rate',
}


@dataclass(frozen=True)
class TestSpec:
    """One benchmark test: its kind, tags, measures and input references.

    Input references are file paths; in-memory runs pass loaded
    representations to the runner directly and may leave them empty.
    """

    __test__ = False

    kind: str
    name: str
    measures: Tuple[str, ...] = ()
    seed: int = DEFAULT_SEED
    output_diff: str = 'jsd'
    dataset: str = 'synthetic'
    architecture: str = 'synthetic'
    domain: str = 'synthetic'
    representations: Tuple[str, ...] = ()
    groups: Tuple[Tuple[str, ...], ...] = ()
    outputs: Tuple[str, ...] = ()
    labels: Optional[str] = None
    layer_order: Tuple[Tuple[str, ...], ...] = ()

    def __post_init__(self):
        if self.kind not in TEST_KINDS:
            raise ValueError(f"Unknown test kind: {self.kind}. Choose from {TEST_KINDS}")
        if self.output_diff not in OUTPUT_DIFF_CHOICES:
            raise ValueError(f"Unknown output_diff: {self.output_diff}. Choose from {OUTPUT_DIFF_CHOICES}")
        object.__setattr__(self, 'measures', tuple(self.measures))

    @property
    def primary_score(self) -> str:
        if self.kind == OUTPUT_CORR and self.output_diff == 'both':
            return 'spearman_jsd'
        return PRIMARY_SCORES[self.kind]


@dataclass(frozen=True)
class CellResult:
    """Outcome of one (test, dataset, architecture, measure) cell."""

    test: str
    kind: str
    measure: str
    scores: Dict[str, Optional[float]]
    primary: str
    status: str = 'ok'
    message: str = ''
    dataset: str = 'synthetic'
    architecture: str = 'synthetic'
    domain: str = 'synthetic'
    n_pairs: int = 0
    n_failed_pairs: int = 0

    @property
    def ok(self) -> bool:
        return self.status == 'ok'

    @property
    def score(self) -> Optional[float]:
        return self.scores.get(self.primary) if self.ok else None

    @property
    def group_key(self) -> Tuple[str, str, str]:
        return (self.test, self.dataset, self.architecture)

    @property
    def sort_key(self) -> Tuple[str, str, str, str]:
        return (self.test, self.dataset, self.architecture, self.measure)

    def to_dict(self) -> Dict[str, Any]:
        return {
            'test': self.test,
            'kind': self.kind,
            'dataset': self.dataset,
            'architecture': self.architecture,
            'domain': self.domain,
            'measure': self.measure,
            'status': self.status,
            'message': self.message,
            'primary': self.primary,
            'score': self.score,
            'scores': dict(self.scores),
            'n_pairs': self.n_pairs,
            'n_failed_pairs': self.n_failed_pairs,
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> 'CellResult':
        return cls(
            test=data['test'],
            kind=data['kind'],
            measure=data['measure'],
            scores=dict(data.get('scores', {})),
            primary=data['primary'],
            status=data.get('status', 'ok'),
            message=data.get('message', ''),
            dataset=data.get('dataset', 'synthetic'),
            architecture=data.get('architecture', 'synthetic'),
            domain=data.get('domain', 'synthetic'),
            n_pairs=int(data.get('n_pairs', 0)),
            n_failed_pairs=int(data.get('n_failed_pairs', 0)),
        )


@dataclass
class BenchmarkReport:
    """All cells of a run plus their rank aggregation."""

    cells: List[CellResult] = field(default_factory=list)
    seed: int = DEFAULT_SEED
    measures: List[str] = field(default_factory=list)
    ranks: List[Dict[str, Any]] = field(default_factory=list)
    aggregates: Dict[str, Dict[str, Any]] = field(default_factory=dict)
    domain_aggregates: Dict[str, Dict[str, Optional[float]]] = field(default_factory=dict)

    def __post_init__(self):
        self.cells = sorted(self.cells, key=lambda cell: cell.sort_key)

    @property
    def failed_cells(self) -> List[CellResult]:
        return [cell for cell in self.cells if not cell.ok]

    def to_dict(self) -> Dict[str, Any]:
        return {
            'seed': self.seed,
            'measures': list(self.measures),
            'cells': [cell.to_dict() for cell in self.cells],
            'ranks': list(self.ranks),
            'aggregates': dict(self.aggregates),
            'domain_aggregates': dict(self.domain_aggregates),
        }


def _failed_cell(spec: TestSpec, measure_id: str, kind: str, message: str, n_pairs: int, n_failed: int) -> CellResult:
    logger.warning(f"[{spec.name}] {measure_id} failed ({kind}): {message}")
    return CellResult(
        test=spec.name, kind=spec.kind, measure=measure_id, scores={}, primary=spec.primary_score,
        status=f"failed:{kind}", message=message, dataset=spec.dataset,
        architecture=spec.architecture, domain=spec.domain, n_pairs=n_pairs, n_failed_pairs=n_failed,
    )


def _ok_cell(spec: TestSpec, measure_id: str, scores: Dict[str, Optional[float]], n_pairs: int, n_failed: int) -> CellResult:
    return CellResult(
        test=spec.name, kind=spec.kind, measure=measure_id, scores=scores, primary=spec.primary_score,
        dataset=spec.dataset, architecture=spec.architecture, domain=spec.domain,
        n_pairs=n_pairs, n_failed_pairs=n_failed,
    )


def _dominant_failure(results: Sequence[MeasureResult]) -> Tuple[str, str]:
    """Most frequent failure kind among results, with a sample message."""
    failures = [result.failure for result in results if not result.ok]
    counts = Counter(failure.kind for failure in failures)
    kind = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))[0][0]
    message = next(failure.message for failure in failures if failure.kind == kind)
    return kind, message


def _canonical_pairs(model_ids: Sequence[str]) -> List[Tuple[int, int]]:
    """Index pairs of models, lexicographic by model id."""
    if len(set(model_ids)) != len(model_ids):
        duplicates = sorted(m for m, c in Counter(model_ids).items() if c > 1)
        raise EvaluationError(f"Model ids must be unique, duplicated: {duplicates}")
    order = sorted(range(len(model_ids)), key=lambda i: model_ids[i])
    return [(a, b) for a, b in combinations(order, 2)]


class BenchmarkRunner:
    """Scores representation pairs in parallel and evaluates the tests."""

    def __init__(
        self,
        measures: Optional[Sequence[str]] = None,
        n_jobs: int = DEFAULT_JOBS,
        measure_params: Optional[Mapping[str, Mapping[str, Any]]] = None,
        failure_threshold: float = FAILURE_THRESHOLD,
        cache: Optional[ResultCache] = result_cache,
        collector: MetricsCollector = metrics_collector,
        show_progress: bool = False,
    ):
        """Initialize runner.

        Args:
            measures: Default measure ids (all registered measures if None)
            n_jobs: Parallel workers, -1 for all cores
            measure_params: Per-measure hyperparameter overrides
            failure_threshold: Fraction of failed pairs above which a cell fails
            cache: Shared result cache (None disables caching)
            collector: Run statistics collector
            show_progress: Whether to show tqdm progress bars
        """
        self.measures = list(measures) if measures else [d.id for d in list_measures()]
        for measure_id in self.measures:
            get_measure(measure_id)
        self.n_jobs = n_jobs
        self.measure_params = {k: dict(v) for k, v in (measure_params or {}).items()}
        self.failure_threshold = failure_threshold
        self.cache = cache
        self.collector = collector
        self.show_progress = show_progress

    def _measures_for(self, spec: TestSpec) -> List[str]:
        measure_ids = list(spec.measures) if spec.measures else list(self.measures)
        for measure_id in measure_ids:
            get_measure(measure_id)
        return measure_ids

    def _score(self, measure_id: str, left: Representation, right: Representation, seed: int) -> MeasureResult:
        return compute_measure(
            measure_id, left, right, seed=seed, cache=self.cache, collector=self.collector,
            **self.measure_params.get(measure_id, {})
        )

    def score_pairs(
        self,
        measure_ids: Sequence[str],
        pairs: Sequence[Tuple[Representation, Representation]],
        seed: int = DEFAULT_SEED,
        desc: str = 'pairs',
    ) -> Dict[str, List[MeasureResult]]:
        """Score every pair with every measure.

        Work items run in parallel threads; results come back in item order.

        Returns:
            measure id -> results in pair order
        """
        items = [(measure_id, p) for measure_id in measure_ids for p in range(len(pairs))]
        results = Parallel(n_jobs=self.n_jobs, prefer='threads')(
            delayed(self._score)(measure_id, pairs[p][0], pairs[p][1], seed)
            for measure_id, p in tqdm(items, desc=desc, disable=not self.show_progress)
        )
        scored: Dict[str, List[MeasureResult]] = {measure_id: [] for measure_id in measure_ids}
        for (measure_id, _), result in zip(items, results):
            scored[measure_id].append(result)
        return scored

    def _too_many_failures(self, results: Sequence[MeasureResult]) -> bool:
        n_failed = sum(1 for result in results if not result.ok)
        return n_failed > self.failure_threshold * len(results)

    def run_prediction_test(
        self, spec: TestSpec, reps: Sequence[Representation], outs: Sequence[ModelOutputs]
    ) -> List[CellResult]:
        """Correlate representation distances with output differences.

        Args:
            spec: Test of kind accuracy-corr or output-corr
            reps: One representation per model
            outs: Outputs of the same models, aligned with reps

        Returns:
            One CellResult per measure
        """
        if spec.kind not in PREDICTION_KINDS:
            raise ValueError(f"Prediction test needs kind in {PREDICTION_KINDS}, got {spec.kind}")
        if len(reps) != len(outs):
            raise EvaluationError(f"Got {len(reps)} representations but {len(outs)} outputs")
        if len(reps) < 3:
            raise EvaluationError(f"Prediction test needs at least 3 models, got {len(reps)}")

        pairs = _canonical_pairs([rep.model_id for rep in reps])
        logger.info(f"[{spec.name}] {spec.kind} test over {len(reps)} models ({len(pairs)} pairs)")

        if spec.kind == ACCURACY_CORR:
            differences = {'spearman': [accuracy_diff(outs[a], outs[b]) for a, b in pairs]}
        else:
            names = ('jsd', 'disagreement') if spec.output_diff == 'both' else (spec.output_diff,)
            differences = {}
            for name in names:
                key = f"spearman_{name}" if spec.output_diff == 'both' else 'spearman'
                func = OUTPUT_DIFFERENCES[name]
                differences[key] = [func(outs[a], outs[b]) for a, b in pairs]

        measure_ids = self._measures_for(spec)
        scored = self.score_pairs(measure_ids, [(reps[a], reps[b]) for a, b in pairs], spec.seed, spec.name)

        cells = []
        for measure_id in measure_ids:
            results = scored[measure_id]
            n_failed = sum(1 for result in results if not result.ok)
            if self._too_many_failures(results):
                kind, message = _dominant_failure(results)
                cells.append(_failed_cell(spec, measure_id, kind, message, len(pairs), n_failed))
                continue

            descriptor = get_measure(measure_id)
            keep = [p for p, result in enumerate(results) if result.ok]
            # oriented distance: larger = less similar
            distances = [-descriptor.orient(results[p].value) for p in keep]
            scores: Dict[str, Optional[float]] = {}
            failure = None
            for key, deltas in differences.items():
                try:
                    scores[key] = spearman(distances, [deltas[p] for p in keep])
                except EvaluationError as e:
                    scores[key] = None
                    if key == spec.primary_score:
                        failure = e
            if failure is not None:
                cells.append(_failed_cell(spec, measure_id, failure.kind, failure.message, len(pairs), n_failed))
            else:
                cells.append(_ok_cell(spec, measure_id, scores, len(pairs), n_failed))
        return cells

    def run_group_test(self, spec: TestSpec, groups: Sequence[Sequence[Representation]]) -> List[CellResult]:
        """Check that models of the same group are scored as more similar.

        Args:
            spec: Test of kind group
            groups: Representations per group (at least 2 groups of 2)

        Returns:
            One CellResult per measure with auprc and conformity_rate
        """
        if len(groups) < 2:
            raise EvaluationError(f"Group test needs at least 2 groups, got {len(groups)}")
        reps: List[Representation] = []
        # keyed by position; sidecar tags are labels only and may repeat across groups
        group_of: Dict[str, str] = {}
        labels: List[str] = []
        for g, members in enumerate(groups):
            if len(members) < 2:
                raise EvaluationError(f"Group {g} has {len(members)} member(s), need at least 2")
            for rep in members:
                reps.append(rep)
                group_of[rep.model_id] = f"group{g}"
            tags = sorted({rep.group for rep in members if rep.group is not None})
            labels.append('/'.join(tags) or f"group{g}")

        pairs = _canonical_pairs([rep.model_id for rep in reps])
        logger.info(
            f"[{spec.name}] group test over {len(groups)} groups ({', '.join(labels)}), "
            f"{len(reps)} models ({len(pairs)} pairs)"
        )

        measure_ids = self._measures_for(spec)
        scored = self.score_pairs(measure_ids, [(reps[a], reps[b]) for a, b in pairs], spec.seed, spec.name)

        cells = []
        for measure_id in measure_ids:
            results = scored[measure_id]
            n_failed = sum(1 for result in results if not result.ok)
            if self._too_many_failures(results):
                kind, message = _dominant_failure(results)
                cells.append(_failed_cell(spec, measure_id, kind, message, len(pairs), n_failed))
                continue

            descriptor = get_measure(measure_id)
            pair_scores = [
                PairScore.from_result(reps[a].model_id, reps[b].model_id, result, descriptor)
                for (a, b), result in zip(pairs, results)
            ]
            try:
                evaluation = conformity_groups(pair_scores, group_of)
            except EvaluationError as e:
                cells.append(_failed_cell(spec, measure_id, e.kind, e.message, len(pairs), n_failed))
                continue
            scores = {'auprc': evaluation['auprc'], 'conformity_rate': evaluation['conformity_rate']}
            cells.append(_ok_cell(spec, measure_id, scores, len(pairs), n_failed))
        return cells

    def run_layer_test(
        self, spec: TestSpec, models: Sequence[Sequence[Optional[Representation]]]
    ) -> List[CellResult]:
        """Check that nearby layers are scored as more similar than distant ones.

        Args:
            spec: Test of kind layer
            models: Per model, its representations in layer order (L >= 3)

        Returns:
            One CellResult per measure with conformity_rate and spearman,
            averaged over models
        """
        if not models:
            raise EvaluationError("Layer test needs at least one model")
        for m, layers in enumerate(models):
            if len(layers) < 3:
                raise EvaluationError(f"Model {m} has {len(layers)} layer(s), need at least 3")
            missing = [position + 1 for position, rep in enumerate(layers) if rep is None]
            if missing:
                raise EvaluationError(f"Model {m} is missing layer matrices at positions {missing}")

        work = []
        for m, layers in enumerate(models):
            for i, j in combinations(range(len(layers)), 2):
                work.append((m, i, j))
        logger.info(f"[{spec.name}] layer test over {len(models)} model(s) ({len(work)} layer pairs)")

        measure_ids = self._measures_for(spec)
        scored = self.score_pairs(
            measure_ids, [(models[m][i], models[m][j]) for m, i, j in work], spec.seed, spec.name
        )

        cells = []
        for measure_id in measure_ids:
            results = scored[measure_id]
            n_failed = sum(1 for result in results if not result.ok)
            if self._too_many_failures(results):
                kind, message = _dominant_failure(results)
                cells.append(_failed_cell(spec, measure_id, kind, message, len(work), n_failed))
                continue

            descriptor = get_measure(measure_id)
            per_model: Dict[int, Dict[Tuple[int, int], Optional[float]]] = {m: {} for m in range(len(models))}
            for (m, i, j), result in zip(work, results):
                per_model[m][(i + 1, j + 1)] = descriptor.orient(result.value) if result.ok else None

            rates = []
            correlations = []
            failure = None
            for m in range(len(models)):
                try:
                    evaluation = conformity_layers(per_model[m], len(models[m]))
                except EvaluationError as e:
                    failure = e
                    break
                rates.append(evaluation['conformity_rate'])
                if evaluation['spearman_vs_distance'] is not None:
                    correlations.append(evaluation['spearman_vs_distance'])
            if failure is not None:
                cells.append(_failed_cell(spec, measure_id, failure.kind, failure.message, len(work), n_failed))
                continue

            scores = {
                'conformity_rate': float(np.mean(rates)),
                'spearman': float(np.mean(correlations)) if correlations else None,
            }
            cells.append(_ok_cell(spec, measure_id, scores, len(work), n_failed))
        return cells

    def run(self, tests: Sequence[Tuple[TestSpec, Mapping[str, Any]]], seed: int = DEFAULT_SEED) -> BenchmarkReport:
        """Run several tests and aggregate their measure rankings.

        Args:
            tests: (spec, inputs) pairs; inputs hold 'reps' and 'outs' for
                prediction tests, 'groups' for group tests, 'models' for layer tests
            seed: Run seed recorded in the report

        Returns:
            BenchmarkReport
        """
        cells: List[CellResult] = []
        for spec, inputs in tests:
            if spec.kind in PREDICTION_KINDS:
                cells.extend(self.run_prediction_test(spec, inputs['reps'], inputs['outs']))
            elif spec.kind == GROUP:
                cells.extend(self.run_group_test(spec, inputs['groups']))
            else:
                cells.extend(self.run_layer_test(spec, inputs['models']))

        aggregation = aggregate_ranks(cells)
        measures = sorted({cell.measure for cell in cells})
        report = BenchmarkReport(
            cells=cells,
            seed=seed,
            measures=measures,
            ranks=aggregation['ranks'],
            aggregates=aggregation['aggregates'],
            domain_aggregates=aggregation['domain_aggregates'],
        )
        n_failed = len(report.failed_cells)
        logger.info(f"Benchmark finished: {len(report.cells)} cells, {n_failed} failed")
        self.collector.log_summary()
        return report


def run_prediction_test(spec: TestSpec, reps, outs, runner: Optional[BenchmarkRunner] = None) -> List[CellResult]:
    """Prediction test with a default runner."""
    return (runner or BenchmarkRunner()).run_prediction_test(spec, reps, outs)


def run_group_test(spec: TestSpec, groups, runner: Optional[BenchmarkRunner] = None) -> List[CellResult]:
    """Group test with a default runner."""
    return (runner or BenchmarkRunner()).run_group_test(spec, groups)


def run_layer_test(spec: TestSpec, models, runner: Optional[BenchmarkRunner] = None) -> List[CellResult]:
    """Layer test with a default runner."""
    return (runner or BenchmarkRunner()).run_layer_test(spec, models)


def _median(values: Sequence[float]) -> Optional[float]:
    return float(np.median(values)) if len(values) else None


def aggregate_ranks(cells: Sequence[CellResult]) -> Dict[str, Any]:
    """Rank measures within every (test, dataset, architecture) cell group.

    Rank 1 is the best primary score; tied scores share their average rank.
    Failed cells take the worst rank (the number of measures in the group)
    and are flagged.

    Args:
        cells: Cell results of any number of tests

    Returns:
        Dict with 'ranks' (one entry per cell), 'aggregates' (per measure:
        rank list, median rank, failed count) and 'domain_aggregates'
        (per domain: measure -> median rank)
    """
    grouped: Dict[Tuple[str, str, str], List[CellResult]] = {}
    for cell in sorted(cells, key=lambda c: c.sort_key):
        grouped.setdefault(cell.group_key, []).append(cell)

    ranks: List[Dict[str, Any]] = []
    for key in sorted(grouped):
        members = grouped[key]
        n_measures = len(members)
        ok_members = [cell for cell in members if cell.ok]
        ok_ranks = {}
        if ok_members:
            values = np.array([cell.score for cell in ok_members], dtype=np.float64)
            for cell, rank in zip(ok_members, rankdata(-values, method='average')):
                ok_ranks[cell.measure] = float(rank)
        for cell in members:
            failed = not cell.ok
            ranks.append({
                'test': cell.test,
                'dataset': cell.dataset,
                'architecture': cell.architecture,
                'domain': cell.domain,
                'measure': cell.measure,
                'rank': float(n_measures) if failed else ok_ranks[cell.measure],
                'failed': failed,
            })

    per_measure: Dict[str, List[float]] = {}
    failed_counts: Dict[str, int] = {}
    per_domain: Dict[str, Dict[str, List[float]]] = {}
    for entry in ranks:
        per_measure.setdefault(entry['measure'], []).append(entry['rank'])
        failed_counts[entry['measure']] = failed_counts.get(entry['measure'], 0) + int(entry['failed'])
        per_domain.setdefault(entry['domain'], {}).setdefault(entry['measure'], []).append(entry['rank'])

    aggregates = {
        measure: {
            'ranks': per_measure[measure],
            'median_rank': _median(per_measure[measure]),
            'n_failed': failed_counts[measure],
        }
        for measure in sorted(per_measure)
    }
    domain_aggregates = {
        domain: {measure: _median(values) for measure, values in sorted(per_domain[domain].items())}
        for domain in sorted(per_domain)
    }
    return {'ranks': ranks, 'aggregates': aggregates, 'domain_aggregates': domain_aggregates}


def measures_by_median_rank(aggregates: Mapping[str, Mapping[str, Any]]) -> List[str]:
    """Measure ids ordered by median rank, best first (ties by id)."""
    return sorted(aggregates, key=lambda m: (aggregates[m]['median_rank'], m))
