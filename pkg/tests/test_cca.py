import numpy as np
import pytest

from src.measures import cca_core, compute_measure, pwcca, svcca
from src.preprocess import center_columns
from src.utils import MeasureError


class TestCcaCore:
    def test_identical_inputs(self, rng):
        X = center_columns(rng.standard_normal((50, 4)))
        solution = cca_core(X, X)
        np.testing.assert_allclose(solution.correlations, 1.0, atol=1e-10)
        assert solution.directions_left.shape == (4, 4)

    def test_orthogonal_column_spaces(self):
        X = np.array([[1.0], [-1.0], [0.0], [0.0]])
        Y = np.array([[0.0], [0.0], [1.0], [-1.0]])
        np.testing.assert_allclose(cca_core(X, Y).correlations, 0.0, atol=1e-12)

    def test_correlations_sorted_and_bounded(self, random_pair):
        R, R_prime = random_pair
        rho = cca_core(center_columns(R), center_columns(R_prime)).correlations
        assert np.all(np.diff(rho) <= 1e-12)
        assert np.all((rho >= 0.0) & (rho <= 1.0))

    def test_variates_are_projections(self, rng):
        X = center_columns(rng.standard_normal((40, 3)))
        Y = center_columns(rng.standard_normal((40, 5)))
        solution = cca_core(X, Y)
        np.testing.assert_allclose(X @ solution.directions_left, solution.variates_left, atol=1e-10)
        np.testing.assert_allclose(
            solution.variates_left.T @ solution.variates_left, np.eye(3), atol=1e-10
        )

    def test_rank_zero(self):
        with pytest.raises(MeasureError):
            cca_core(np.zeros((5, 2)), np.ones((5, 2)))


class TestSvcca:
    def test_rotated_copy(self, random_pair, orthogonal):
        R, _ = random_pair
        assert svcca(R, R @ orthogonal) == pytest.approx(1.0, abs=1e-8)

    def test_threshold_range(self, random_pair):
        R, R_prime = random_pair
        result = compute_measure('svcca', R, R_prime, cache=None, threshold=1.5)
        assert not result.ok


class TestPwcca:
    def test_identical(self, random_pair):
        R, _ = random_pair
        assert pwcca(R, R) == pytest.approx(1.0, abs=1e-8)

    def test_bounded(self, random_pair):
        R, R_prime = random_pair
        value = pwcca(R, R_prime)
        assert 0.0 <= value <= 1.0

    def test_rank_zero_input_fails(self, rng):
        result = compute_measure('pwcca', np.ones((10, 3)), rng.standard_normal((10, 3)), cache=None)
        assert result.status == 'failed:undefined-input'
