import dataclasses

import numpy as np
import pytest

from src.harness import (
    ACCURACY_CORR, GROUP, LAYER, OUTPUT_CORR, BenchmarkRunner, CellResult, TestSpec, aggregate_ranks,
    measures_by_median_rank, run_group_test
)
from src.measures import registry
from src.metrics import MetricsCollector
from src.representation import Representation
from src.synthgen import ORTHOGONAL, gen_grouped, gen_outputs, gen_rotation_chain
from src.utils import MeasureError, NUMERICAL, EvaluationError


def _cell(test, measure, score, status='ok'):
    return CellResult(
        test=test, kind=GROUP, measure=measure, scores={} if score is None else {'auprc': score},
        primary='auprc', status=status,
    )


class TestTestSpec:
    def test_unknown_kind(self):
        with pytest.raises(ValueError):
            TestSpec(kind='cluster', name='x')

    def test_primary_score(self):
        assert TestSpec(kind=GROUP, name='g').primary_score == 'auprc'
        assert TestSpec(kind=LAYER, name='l').primary_score == 'conformity_rate'
        assert TestSpec(kind=OUTPUT_CORR, name='o', output_diff='both').primary_score == 'spearman_jsd'


class TestPredictionTest:
    def test_pair_count(self, runner):
        reps, outs = gen_outputs(seed=0, n_models=10, n_instances=120, n_classes=4, n_features=8)
        spec = TestSpec(kind=ACCURACY_CORR, name='acc', measures=('cka',))
        cell, = runner.run_prediction_test(spec, reps, outs)
        assert cell.n_pairs == 45

    def test_distances_track_output_divergence(self, runner):
        reps, outs = gen_outputs(seed=0)
        spec = TestSpec(kind=OUTPUT_CORR, name='out', measures=('orth_procrustes',), output_diff='both')
        cell, = runner.run_prediction_test(spec, reps, outs)
        assert cell.ok
        assert cell.scores['spearman_jsd'] >= 0.9
        assert 'spearman_disagreement' in cell.scores

    def test_identical_models_fail(self, runner):
        reps, outs = gen_outputs(seed=0, n_models=4, n_instances=60, n_classes=3, n_features=6,
                                 divergence=[0.0] * 4)
        spec = TestSpec(kind=OUTPUT_CORR, name='same', measures=('orth_procrustes',))
        cell, = runner.run_prediction_test(spec, reps, outs)
        assert cell.status == 'failed:undefined-input'
        assert cell.score is None

    def test_too_few_models(self, runner):
        reps, outs = gen_outputs(seed=0, n_models=2, n_instances=30, n_classes=3, n_features=4)
        with pytest.raises(EvaluationError):
            runner.run_prediction_test(TestSpec(kind=ACCURACY_CORR, name='a'), reps, outs)

    def test_duplicate_ids(self, runner):
        reps, outs = gen_outputs(seed=0, n_models=3, n_instances=30, n_classes=3, n_features=4)
        reps[1] = Representation(data=reps[1].data, model_id=reps[0].model_id)
        with pytest.raises(EvaluationError):
            runner.run_prediction_test(TestSpec(kind=ACCURACY_CORR, name='a', measures=('cka',)), reps, outs)


class TestGroupTest:
    MEASURES = ('cka', 'orth_procrustes', 'jaccard')

    def test_grouped_models_are_recovered(self, runner):
        groups = gen_grouped(seed=0)
        cells = runner.run_group_test(TestSpec(kind=GROUP, name='groups', measures=self.MEASURES), groups)
        assert [cell.measure for cell in cells] == list(self.MEASURES)
        for cell in cells:
            assert cell.ok
            assert cell.scores['auprc'] == pytest.approx(1.0)
            assert cell.scores['conformity_rate'] == pytest.approx(1.0)
            assert cell.n_pairs == 105

    def test_orthogonal_maps_are_invisible_to_cka(self, runner):
        groups = gen_grouped(seed=0, between_map=ORTHOGONAL)
        cell, = runner.run_group_test(TestSpec(kind=GROUP, name='control', measures=('cka',)), groups)
        assert cell.scores['auprc'] <= 0.6

    def test_module_level_entry_point(self, runner):
        groups = gen_grouped(seed=1, n_groups=2, members=2, n_instances=40, n_features=4)
        cell, = run_group_test(TestSpec(kind=GROUP, name='g', measures=('magnitude_diff',)), groups, runner=runner)
        assert cell.n_pairs == 6

    def test_single_member_group(self, runner):
        groups = gen_grouped(seed=0, n_groups=2, members=2, n_instances=40, n_features=4)
        with pytest.raises(EvaluationError):
            runner.run_group_test(TestSpec(kind=GROUP, name='g'), [groups[0], groups[1][:1]])


class TestLayerTest:
    def test_rotation_chain(self, runner):
        chain = gen_rotation_chain(seed=0, n_layers=5, theta=0.2)
        cell, = runner.run_layer_test(TestSpec(kind=LAYER, name='layers', measures=('angular_shape',)), [chain])
        assert cell.scores['conformity_rate'] == 1.0
        assert cell.scores['spearman'] == pytest.approx(1.0, abs=1e-12)
        assert cell.n_pairs == 10

    def test_zero_angle(self, runner):
        chain = gen_rotation_chain(seed=0, n_layers=4, theta=0.0)
        cell, = runner.run_layer_test(TestSpec(kind=LAYER, name='flat', measures=('angular_shape',)), [chain])
        assert cell.ok
        assert cell.scores['conformity_rate'] == 1.0
        assert cell.scores['spearman'] is None

    def test_missing_layer(self, runner):
        chain = gen_rotation_chain(seed=0, n_layers=4)
        chain[2] = None
        with pytest.raises(EvaluationError):
            runner.run_layer_test(TestSpec(kind=LAYER, name='l'), [chain])


class TestAggregation:
    def test_ties_share_average_rank(self):
        cells = [_cell('t', 'a', 0.9), _cell('t', 'b', 0.9), _cell('t', 'c', 0.1)]
        ranks = {entry['measure']: entry['rank'] for entry in aggregate_ranks(cells)['ranks']}
        assert ranks == {'a': 1.5, 'b': 1.5, 'c': 3.0}

    def test_failed_cell_takes_worst_rank(self):
        cells = [
            _cell('t1', 'a', 0.9), _cell('t1', 'b', None, status='failed:numerical'), _cell('t1', 'c', 0.5),
            _cell('t2', 'a', 0.8), _cell('t2', 'b', 0.2), _cell('t2', 'c', 0.5),
        ]
        aggregation = aggregate_ranks(cells)
        failed = [entry for entry in aggregation['ranks'] if entry['failed']]
        assert len(failed) == 1
        assert failed[0]['rank'] == 3.0
        aggregates = aggregation['aggregates']
        assert aggregates['a']['median_rank'] == 1.0
        assert aggregates['b']['median_rank'] == 3.0
        assert aggregates['b']['n_failed'] == 1
        assert measures_by_median_rank(aggregates) == ['a', 'c', 'b']

    def test_domain_medians(self):
        cells = [_cell('t', 'a', 0.9), _cell('t', 'b', 0.1)]
        assert aggregate_ranks(cells)['domain_aggregates'] == {'synthetic': {'a': 1.0, 'b': 2.0}}


def test_injected_failure_ranks_worst(monkeypatch, runner):
    def failing(R, R_prime, **params):
        raise MeasureError(NUMERICAL, "singular covariance")

    descriptor = registry.get_measure('pwcca')
    monkeypatch.setitem(registry._REGISTRY, 'pwcca', dataclasses.replace(descriptor, func=failing))

    groups = gen_grouped(seed=1, n_groups=2, members=3, n_instances=60, n_features=6)
    measures = ('cka', 'pwcca', 'orth_procrustes')
    report = runner.run([(TestSpec(kind=GROUP, name='g', measures=measures), {'groups': groups})])

    pwcca_cell = next(cell for cell in report.cells if cell.measure == 'pwcca')
    assert pwcca_cell.status == 'failed:numerical'
    rank = next(entry for entry in report.ranks if entry['measure'] == 'pwcca')
    assert rank['failed'] is True
    assert rank['rank'] == 3.0


def test_parallel_and_serial_runs_agree():
    groups = gen_grouped(seed=2, n_groups=2, members=3, n_instances=60, n_features=6)
    spec = TestSpec(kind=GROUP, name='g', measures=('cka', 'jaccard', 'imd', 'rsa'))
    reports = []
    for n_jobs in (1, 8):
        runner = BenchmarkRunner(n_jobs=n_jobs, cache=None, collector=MetricsCollector(enabled=False))
        reports.append(runner.run([(spec, {'groups': groups})]).to_dict())
    assert reports[0] == reports[1]


def test_group_tags_fall_back_to_position(runner, rng):
    groups = [
        [Representation(data=rng.standard_normal((30, 4)) + 5.0 * g, model_id=f"m{g}{m}") for m in range(2)]
        for g in range(2)
    ]
    cell, = runner.run_group_test(TestSpec(kind=GROUP, name='g', measures=('magnitude_diff',)), groups)
    assert cell.ok
    assert np.isfinite(cell.scores['auprc'])


def test_shared_group_tags_stay_separate(runner, rng):
    groups = [
        [Representation(data=rng.standard_normal((30, 4)) * (1.0 + 4.0 * g), model_id=f"m{g}{m}", group='resnet')
         for m in range(2)]
        for g in range(2)
    ]
    cell, = runner.run_group_test(TestSpec(kind=GROUP, name='g', measures=('magnitude_diff',)), groups)
    assert cell.ok
    assert cell.n_pairs == 6
    assert cell.scores['auprc'] == pytest.approx(1.0)
    assert cell.scores['conformity_rate'] == pytest.approx(1.0)
