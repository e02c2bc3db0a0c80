import numpy as np

from constants.quadrature_constants import LikelihoodKind
from libs.exceptions import DimensionMismatchError
from libs.objective import (CoefficientState, gradient, linear_predictor, lipschitz, logistic_negll, negll,
    poisson_negll)
from libs.quadrature.exceptions import QuadratureKindError
from tests.common import CommonTestCase


class TestLikelihoods(CommonTestCase):

    def setUp(self):
        super().setUp()
        field = self.generate_field("z1")
        self.poisson = self.generate_scheme(field=field)
        self.logistic = self.generate_scheme(kind=LikelihoodKind.logistic, nd=80, field=field)

    def random_beta(self, quad, seed=1):
        beta = 0.3 * self.rng(seed).normal(size=quad.design.shape)
        beta[:, 0] += 3.0
        return beta

    def test_poisson_matches_the_weighted_sum(self):
        quad, beta = self.poisson, self.random_beta(self.poisson)
        eta = (quad.design * beta).sum(axis=1)
        expected = -np.sum(quad.indicator * eta - quad.weights * np.exp(eta)) / quad.domain_measure
        self.assertAlmostEqual(poisson_negll(quad, beta), expected, places=10)
        self.assertAlmostEqual(negll(quad, beta), expected, places=10)

    def test_logistic_matches_the_bernoulli_sum(self):
        quad, beta = self.logistic, self.random_beta(self.logistic)
        eta = (quad.design * beta).sum(axis=1)
        probability = np.exp(eta) / (np.exp(eta) + quad.baseline)
        expected = -np.sum(
            quad.indicator * np.log(probability) + (1 - quad.indicator) * np.log(1 - probability)
        ) / quad.domain_measure
        self.assertAlmostEqual(logistic_negll(quad, beta), expected, places=9)

    def test_gradients_match_finite_differences(self):
        h = 1e-6
        for quad in (self.poisson, self.logistic):
            beta = self.random_beta(quad)
            analytic = gradient(quad, beta)
            for i, k in ((0, 0), (3, 1), (quad.n, 0), (quad.m - 1, 1)):
                up, down = beta.copy(), beta.copy()
                up[i, k] += h
                down[i, k] -= h
                numeric = (negll(quad, up) - negll(quad, down)) / (2 * h)
                self.assertAlmostEqual(analytic[i, k], numeric, delta=1e-6, msg=f"{quad.kind} ({i}, {k})")

    def test_lipschitz_is_the_largest_block_curvature(self):
        quad, beta = self.poisson, self.random_beta(self.poisson)
        eta = (quad.design * beta).sum(axis=1)
        expected = np.max(quad.weights * np.exp(eta) * (quad.design ** 2).sum(axis=1)) / quad.domain_measure
        self.assertAlmostEqual(lipschitz(quad, beta), expected, places=10)
        self.assertLessEqual(lipschitz(self.logistic, self.random_beta(self.logistic)),
                             0.25 * np.max((self.logistic.design ** 2).sum(axis=1)) / self.logistic.domain_measure)

    def test_linear_predictor_is_clipped(self):
        beta = np.zeros(self.poisson.design.shape)
        beta[:, 0] = 1e4
        self.assert_allclose(linear_predictor(self.poisson, beta), np.full(self.poisson.m, 50.0))
        self.assertTrue(np.isfinite(negll(self.poisson, beta)))
        self.assertTrue(np.isfinite(negll(self.logistic, np.full(self.logistic.design.shape, -1e4))))

    def test_shape_and_kind_checks(self):
        with self.assertRaises(DimensionMismatchError):
            negll(self.poisson, np.zeros((self.poisson.m, 5)))
        with self.assertRaises(QuadratureKindError):
            poisson_negll(self.logistic, np.zeros(self.logistic.design.shape))


class TestCoefficientState(CommonTestCase):

    def test_blocks_are_stacked_column_major(self):
        beta = np.arange(6.0).reshape(3, 2)
        state = CoefficientState(beta)
        self.assert_array_equal(state.flatten(), [0.0, 2.0, 4.0, 1.0, 3.0, 5.0])
        self.assert_array_equal(CoefficientState.from_flat(state.flatten(), 3, 2).beta, beta)
        self.assert_array_equal(CoefficientState.constant(2, [1.0, 2.0]).beta, [[1.0, 2.0], [1.0, 2.0]])

    def test_validation(self):
        with self.assertRaises(DimensionMismatchError):
            CoefficientState(np.zeros(3))
        with self.assertRaises(DimensionMismatchError):
            CoefficientState(np.array([[np.nan]]))
        with self.assertRaises(DimensionMismatchError):
            CoefficientState.from_flat(np.zeros(5), 3, 2)
