import unittest

import numpy as np
from numpy.testing import assert_allclose

from hvnet.covariance import (
    CovMatrix,
    SignalBatch,
    as_cov_matrix,
    covariance_rank,
    empirical_cov_matrix,
    empirical_cov_operator_apply,
    largest_eigenvalue,
    normalize_cov,
)
from hvnet.discretize import FunctionGrid
from hvnet.errors import InvalidInputError, SampleSizeError, ShapeError
from hvnet.linalg import sym_eigendecomp


class TestEmpiricalCovariance(unittest.TestCase):
    def setUp(self):
        self.rng = np.random.default_rng(4)

    def test_matches_biased_numpy_estimator(self):
        x = self.rng.standard_normal((5, 9))
        cov = empirical_cov_matrix(SignalBatch(x))
        assert_allclose(cov.matrix, np.cov(x, bias=True), atol=1e-12)
        self.assertEqual(cov.rank_bound, 8)

    def test_two_signals(self):
        cov = empirical_cov_matrix(SignalBatch(np.array([[1.0, -1.0], [0.0, 0.0]])))
        assert_allclose(cov.matrix, [[1.0, 0.0], [0.0, 0.0]])

    def test_rank_is_bounded_by_samples(self):
        cov = empirical_cov_matrix(SignalBatch(self.rng.standard_normal((10, 4))))
        self.assertEqual(covariance_rank(sym_eigendecomp(cov.matrix, psd=True)), 3)

    def test_constant_signals_give_zero(self):
        cov = empirical_cov_matrix(SignalBatch(np.ones((3, 5))))
        assert_allclose(cov.matrix, np.zeros((3, 3)))
        self.assertEqual(covariance_rank(sym_eigendecomp(cov.matrix)), 0)

    def test_sample_size_errors(self):
        with self.assertRaises(SampleSizeError):
            empirical_cov_matrix(SignalBatch(np.ones((3, 1))))
        with self.assertRaises(SampleSizeError):
            SignalBatch(np.ones((3, 0)))
        with self.assertRaises(InvalidInputError):
            SignalBatch(np.array([[np.nan, 1.0]]))

    def test_from_signals_stacks_columns(self):
        batch = SignalBatch.from_signals([np.array([1.0, 2.0]), np.array([3.0, 4.0])])
        assert_allclose(batch.columns, [[1.0, 3.0], [2.0, 4.0]])
        assert_allclose(batch.centered().mean(), [0.0, 0.0])


class TestCovarianceOperator(unittest.TestCase):
    def test_operator_matches_matrix_on_grid_values(self):
        rng = np.random.default_rng(8)
        samples = [FunctionGrid(rng.standard_normal((16, 1))) for _ in range(5)]
        v = FunctionGrid(rng.standard_normal((16, 1)))
        out = empirical_cov_operator_apply(samples, v)
        x = np.column_stack([s.values[:, 0] for s in samples])
        expected = np.cov(x, bias=True) @ v.values[:, 0] / 16
        assert_allclose(out.values[:, 0], expected, atol=1e-12)

    def test_self_adjoint_on_grid(self):
        rng = np.random.default_rng(12)
        for channels in (1, 3):
            samples = [FunctionGrid(rng.standard_normal((32, channels))) for _ in range(6)]
            v = FunctionGrid(rng.standard_normal((32, channels)))
            w = FunctionGrid(rng.standard_normal((32, channels)))
            left = empirical_cov_operator_apply(samples, v).inner(w)
            right = v.inner(empirical_cov_operator_apply(samples, w))
            self.assertAlmostEqual(left, right, places=12)
            self.assertGreaterEqual(empirical_cov_operator_apply(samples, v).inner(v), -1e-12)

    def test_errors(self):
        samples = [FunctionGrid(np.zeros(8)), FunctionGrid(np.ones(8))]
        with self.assertRaises(SampleSizeError):
            empirical_cov_operator_apply(samples[:1], FunctionGrid(np.zeros(8)))
        with self.assertRaises(ShapeError):
            empirical_cov_operator_apply(samples, FunctionGrid(np.zeros(4)))


class TestNormalization(unittest.TestCase):
    def test_largest_eigenvalue(self):
        c = np.diag([4.0, 1.0, 0.5])
        self.assertAlmostEqual(largest_eigenvalue(c), 4.0, places=12)
        self.assertEqual(largest_eigenvalue(np.zeros((3, 3))), 0.0)
        # Nearly equal top pair.
        q, _ = np.linalg.qr(np.random.default_rng(1).standard_normal((5, 5)))
        close = (q * np.array([2.0, 2.0 - 1e-9, 1.0, 0.5, 0.0])) @ q.T
        self.assertAlmostEqual(largest_eigenvalue(0.5 * (close + close.T)), 2.0, places=12)

    def test_normalized_spectral_radius_is_at_most_one(self):
        rng = np.random.default_rng(6)
        worst = 0.0
        for _ in range(200):
            cov = empirical_cov_matrix(SignalBatch(rng.standard_normal((40, 30))))
            worst = max(worst, float(np.linalg.eigvalsh(normalize_cov(cov).matrix)[-1]))
        self.assertLessEqual(worst, 1.0 + 1e-10)
        self.assertGreater(worst, 1.0 - 1e-10)

    def test_normalize_keeps_eigenvectors_and_order(self):
        rng = np.random.default_rng(9)
        cov = empirical_cov_matrix(SignalBatch(rng.standard_normal((6, 20))))
        before = sym_eigendecomp(cov.matrix, psd=True)
        normalized = normalize_cov(cov, es=before)
        after = sym_eigendecomp(normalized.matrix, psd=True)
        assert_allclose(after.eigenvalues, before.eigenvalues / before.lambda_max, atol=1e-12)
        assert_allclose(after.eigenvectors, before.eigenvectors, atol=1e-10)
        assert_allclose(normalize_cov(cov).matrix, normalized.matrix, rtol=1e-12, atol=1e-15)

    def test_zero_covariance_is_left_alone(self):
        cov = CovMatrix(np.zeros((2, 2)))
        self.assertIs(normalize_cov(cov), cov)

    def test_as_cov_matrix_validates(self):
        self.assertEqual(as_cov_matrix(np.eye(3)).dim, 3)
        with self.assertRaises(InvalidInputError):
            as_cov_matrix(np.array([[1.0, 2.0], [0.0, 1.0]]))


if __name__ == "__main__":
    unittest.main()
