import numpy as np
import pytest

from src.cache import ResultCache
from src.measures import compute_measure, get_measure, list_measures
from src.measures.registry import FAMILIES, MeasureResult
from src.metrics import MetricsCollector
from src.representation import Representation
from src.utils import ConfigError, MeasureError, format_error_message, hash_arrays, validate_matrix


def test_registry_contents():
    descriptors = list_measures()
    ids = [d.id for d in descriptors]
    assert len(ids) == 23
    assert ids == sorted(ids)
    assert {d.family for d in descriptors} == set(FAMILIES)
    assert get_measure('cka').abbreviation == 'CKA'
    assert get_measure('imd').seeded
    assert not get_measure('magnitude_diff').requires_equal_n


def test_unknown_measure():
    with pytest.raises(KeyError) as err:
        get_measure('cosine')
    assert 'Known measures' in str(err.value)


def test_orientation():
    assert get_measure('cka').orient(0.7) == 0.7
    assert get_measure('orth_procrustes').orient(0.7) == -0.7


def test_measure_result_invariants():
    assert MeasureResult.success(np.inf).status == 'failed:numerical'
    with pytest.raises(ValueError):
        MeasureResult()


def test_representation_inputs(rng):
    data = rng.standard_normal((12, 3))
    rep = Representation(data=data, model_id='m')
    assert get_measure('cka')(rep, data) == pytest.approx(1.0)


def test_dimension_mismatch(rng):
    result = compute_measure('cka', rng.standard_normal((10, 3)), rng.standard_normal((9, 3)), cache=None)
    assert result.status == 'failed:dimension-mismatch'


def test_invalid_input_is_a_failure(rng):
    bad = rng.standard_normal((10, 3))
    bad[0, 0] = np.nan
    result = compute_measure('rsa', bad, rng.standard_normal((10, 3)), cache=None)
    assert result.status == 'failed:undefined-input'


def test_unknown_hyperparameter_raises(rng):
    with pytest.raises(TypeError):
        compute_measure('cka', rng.standard_normal((10, 3)), rng.standard_normal((10, 3)), cache=None, k=3)


def test_cache_and_metrics(random_pair):
    R, R_prime = random_pair
    cache = ResultCache(max_size=10, enabled=True)
    collector = MetricsCollector(enabled=True)
    first = compute_measure('rsm_norm_diff', R, R_prime, cache=cache, collector=collector)
    second = compute_measure('rsm_norm_diff', R, R_prime, cache=cache, collector=collector)
    assert first == second
    stats = collector.get_stats()
    assert stats['cache_hits'] == 1
    assert stats['cache_misses'] == 1
    assert cache.stats()['size'] == 1

    compute_measure('cka', np.ones((5, 2)), R[:5, :2], cache=cache, collector=collector)
    assert collector.get_stats()['failure_kinds'] == {'undefined-input': 1}


def test_cache_eviction():
    cache = ResultCache(max_size=2, enabled=True)
    for key in ('a', 'b', 'c'):
        cache.set(key, MeasureResult.success(1.0))
    assert cache.get('a') is None
    assert cache.get('c') is not None


def test_seed_enters_cache_key(rng):
    R = rng.standard_normal((30, 3))
    cache = ResultCache(max_size=10, enabled=True)
    collector = MetricsCollector(enabled=True)
    for seed in (0, 1):
        compute_measure('imd', R, R + 0.1, seed=seed, cache=cache, collector=collector, method='slq', probes=20)
    assert collector.get_stats()['cache_hits'] == 0


@pytest.mark.parametrize("measure_id", [d.id for d in list_measures()])
def test_row_permutation_invariance(measure_id, rng):
    R = rng.standard_normal((40, 6))
    R_prime = R @ rng.standard_normal((6, 6)) + 0.5 * rng.standard_normal((40, 6))
    perm = rng.permutation(40)
    base = compute_measure(measure_id, R, R_prime, seed=3, cache=None)
    permuted = compute_measure(measure_id, R[perm], R_prime[perm], seed=3, cache=None)
    assert base.ok, base.status
    assert permuted.value == pytest.approx(base.value, rel=1e-8, abs=1e-8)


class TestUtils:
    def test_validate_matrix(self):
        assert validate_matrix(np.zeros((3, 2))) == (True, None)
        assert not validate_matrix(np.zeros(3))[0]
        assert not validate_matrix(np.zeros((1, 2)))[0]
        assert not validate_matrix(np.array([['a', 'b'], ['c', 'd']]))[0]
        assert not validate_matrix([[1.0, 2.0]])[0]

    def test_hash_arrays(self):
        a = np.arange(6, dtype=np.float64).reshape(2, 3)
        assert hash_arrays('x', a) == hash_arrays('x', a.copy())
        assert hash_arrays('x', a) != hash_arrays('x', a.reshape(3, 2))
        assert hash_arrays('x', a) != hash_arrays('x', a.astype(np.float32))

    def test_format_error_message(self):
        assert format_error_message(MeasureError('numerical', 'boom')) == 'numerical: boom'
        assert format_error_message(ConfigError('bad')).startswith('Invalid configuration')
        assert 'RuntimeError' in format_error_message(RuntimeError('x'), include_details=True)
