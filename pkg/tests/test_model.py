from types import SimpleNamespace
from unittest import mock

import numpy as np

from constants.graph_constants import GraphMethod
from constants.quadrature_constants import LikelihoodKind
from libs.geometry.locations import DomainLocation, Locations
from libs.model.evaluation import (cluster_rand_indices, coefficient_surface, log_intensity_surface, mise,
    rand_index)
from libs.model.exceptions import EvaluationInputError, ModelInputError
from libs.model.fitting import bic, extract_clusters, fit, fit_path, FitProblem, lambda_grid
from libs.model.prediction import predict, predict_coefficients
from libs.model.results import PathResult
from libs.model.specs import QuadratureSpec
from libs.solver.lambda_max import compute_lambda_max
from libs.solver.options import SolverOptions
from libs.spatial_graph.builders import GraphSpec
from libs.spatial_graph.graph import SpatialGraph
from libs.spatial_graph.incidence import IncidenceStructure
from tests.common import CommonTestCase
from tests.helpers import DummyThreadPool


class TestFit(CommonTestCase):

    def setUp(self):
        super().setUp()
        self.problem = self.generate_problem(self.generate_two_level_pattern(), field=self.generate_field("z1"))

    def test_fit_result(self):
        result = fit(None, None, None, None, 0.01, self.test_options, problem=self.problem, with_residual=True)
        self.assertEqual(result.beta.shape, (self.problem.quad.m, 2))
        self.assertEqual(result.names, ["intercept", "z1"])
        self.assertEqual(result.kind, LikelihoodKind.poisson)
        self.assertEqual(result.df, sum(result.cluster_counts))
        self.assertAlmostEqual(result.bic, 2.0 * result.negll + result.df * np.log(self.problem.quad.n))
        self.assertAlmostEqual(result.bic, bic(result, self.problem.quad))
        self.assertIsNotNone(result.fixed_point_residual)
        self.assertEqual(set(result.summary()),
                         {"lambda", "objective", "negll", "bic", "df", "cluster_counts", "converged"})
        self.assertEqual(result.diagnostics()["iterations"], result.trace.iterations)

    def test_fit_builds_its_own_problem(self):
        pattern = self.generate_two_level_pattern()
        result = fit(pattern, None, GraphSpec(GraphMethod.knn, k=4), QuadratureSpec(), 0.01, self.test_options)
        self.assertEqual(result.problem.quad.n, pattern.n)
        self.assertEqual(result.graph["method"], GraphMethod.knn)

    def test_homogeneous_patterns_fuse_to_the_mean_intensity(self):
        opts = SolverOptions(threads=1)
        for seed in range(20):
            pattern = self.generate_uniform_pattern(self.unit_window, 30 + seed, seed=seed)
            problem = self.generate_problem(pattern)
            certificate, _ = compute_lambda_max(problem.quad, problem.inc, opts, refine=False)
            result = fit(None, None, None, None, 1.05 * max(certificate, 1e-6), opts, problem=problem)
            self.assertEqual(result.cluster_counts, [1])
            expected = np.log(pattern.n / self.unit_window.measure())
            self.assert_allclose(result.beta[:, 0], np.full(problem.quad.m, expected), atol=1e-4)

    def test_lambda_must_be_positive(self):
        for lam in (0.0, -1.0):
            with self.assertRaises(ModelInputError):
                fit(None, None, None, None, lam, problem=self.problem)

    def test_graph_and_scheme_must_match(self):
        graph = SpatialGraph(3, np.array([[0, 1], [1, 2]]), np.ones(2), GraphMethod.knn)
        with self.assertRaises(ModelInputError):
            FitProblem(self.problem.quad, graph)

    def test_network_problems_default_to_chain_graphs(self):
        pattern = self.generate_uniform_pattern(self.small_network, 30)
        problem = FitProblem.build(pattern)
        self.assertEqual(problem.graph.method, GraphMethod.network_chain)
        self.assertTrue(problem.graph.is_connected())


class TestClusters(CommonTestCase):

    def test_extract_clusters(self):
        edges = np.array([[0, 1], [1, 2], [2, 3]])
        inc = IncidenceStructure(SpatialGraph(4, edges, np.ones(3), GraphMethod.knn))
        beta = np.array([[1.0, 5.0], [1.0, 5.0], [2.0, 5.0], [2.0 + 1e-9, 5.0]])
        self.assert_array_equal(extract_clusters(beta, inc), [[0, 0], [0, 0], [1, 0], [1, 0]])
        self.assert_array_equal(extract_clusters(beta, inc, epsilon=[2.0, 1.0])[:, 0], [0, 0, 0, 0])


    def test_labels_do_not_depend_on_the_vertex_order(self):
        rng = self.rng(2)
        n = 30
        graph = SpatialGraph(n, np.column_stack([np.arange(n - 1), np.arange(1, n)]), np.ones(n - 1), GraphMethod.knn)
        levels = rng.integers(0, 3, size=(6, 2)).astype(float)
        beta = np.repeat(levels, 5, axis=0)
        labels = extract_clusters(beta, IncidenceStructure(graph))
        for _ in range(5):
            order = rng.permutation(n)
            position = np.argsort(order)
            permuted_graph = SpatialGraph(n, position[graph.edges], graph.weights, GraphMethod.knn)
            permuted = extract_clusters(beta[order], IncidenceStructure(permuted_graph))
            for k in range(2):
                self.assertEqual(rand_index(labels[order, k], permuted[:, k]), 1.0)
                # labels are numbered by their smallest vertex
                _, first = np.unique(permuted[:, k], return_index=True)
                self.assert_array_equal(np.argsort(first), np.arange(len(first)))


class TestPath(CommonTestCase):

    def setUp(self):
        super().setUp()
        self.problem = self.generate_problem(self.generate_two_level_pattern())

    def test_lambda_grid(self):
        grid = lambda_grid(2.0, 4)
        self.assert_allclose(grid, [2.0, 0.2, 0.02, 0.002], rtol=1e-12)
        self.assert_allclose(lambda_grid(2.0, 1), [2.0])
        with self.assertRaises(ModelInputError):
            lambda_grid(0.0)

    def test_explicit_grids_are_sorted_decreasing(self):
        path = fit_path(None, None, None, None, [0.001, 0.01, 0.001, 0.1], opts=self.test_options,
                        problem=self.problem)
        self.assert_allclose(path.lambdas, [0.1, 0.01, 0.001])
        self.assertEqual(len(path.fits), 3)
        self.assertEqual(path.selected_index, int(np.argmin(path.bics)))
        self.assertEqual([row["selected"] for row in path.table()].count(True), 1)
        with self.assertRaises(ModelInputError):
            fit_path(None, None, None, None, [0.1, -0.1], problem=self.problem)

    def test_default_grid_starts_fully_fused(self):
        path = fit_path(None, None, None, None, n_lambda=3, opts=self.test_options, problem=self.problem)
        self.assertAlmostEqual(path.lambdas[0], path.lambda_max)
        self.assertEqual(path.fits[0].cluster_counts, [1])
        self.assertGreater(path.fits[-1].df, 1)

    @mock.patch("libs.model.fitting.ThreadPool", DummyThreadPool)
    def test_cold_starts_match_independent_fits(self):
        opts = self.test_options.replace(warm_start=False)
        path = fit_path(None, None, None, None, [0.05, 0.005], opts=opts, problem=self.problem)
        for lam, result in zip(path.lambdas, path.fits):
            single = fit(None, None, None, None, lam, opts, problem=self.problem)
            self.assert_array_equal(result.beta, single.beta)

    @mock.patch("libs.model.fitting.ThreadPool", DummyThreadPool)
    def test_warm_starts_are_no_worse_than_cold_starts(self):
        opts = self.test_options.replace(fixed_point_tolerance=1e-7)
        grid = [0.05, 0.02, 0.01, 0.005, 0.002]
        warm = fit_path(None, None, None, None, grid, opts=opts, problem=self.problem)
        cold = fit_path(None, None, None, None, grid, opts=opts.replace(warm_start=False), problem=self.problem)
        for warm_fit, cold_fit in zip(warm.fits, cold.fits):
            self.assertLessEqual(warm_fit.objective, cold_fit.objective + 1e-6)

    def test_bic_selects_inside_the_grid_for_two_levels(self):
        path = fit_path(None, None, None, None, n_lambda=10, opts=self.test_options, problem=self.problem)
        self.assertGreater(path.selected_index, 0)
        self.assertLess(path.selected_index, len(path.fits) - 1)
        self.assertLess(path.bics[path.selected_index], path.bics[0])
        self.assertLess(path.bics[path.selected_index], path.bics[-1])
        self.assertGreater(path.selected.df, 1)

    def test_bic_ties_go_to_the_larger_lambda(self):
        fits = [SimpleNamespace(bic=value) for value in (3.0, 1.0, 1.0, 2.0)]
        self.assertEqual(PathResult([4.0, 3.0, 2.0, 1.0], fits).selected_index, 1)


class TestPrediction(CommonTestCase):

    def setUp(self):
        super().setUp()
        problem = self.generate_problem(self.generate_two_level_pattern(), field=self.generate_field("z1"))
        self.result = fit(None, None, None, None, 0.005, self.test_options, problem=problem)

    def test_quadrature_points_predict_their_own_coefficients(self):
        quad = self.result.problem.quad
        self.assert_allclose(predict_coefficients(self.result, quad.locations[np.arange(10)]), self.result.beta[:10])

    def test_predict(self):
        beta, intensity = predict(self.result, Locations([(0.2, 0.3), (0.8, 0.3)]))
        self.assertEqual(beta.shape, (2, 2))
        self.assertTrue(np.all(intensity > 0))
        single_beta, single_intensity = predict(self.result, DomainLocation(0.2, 0.3))
        self.assert_allclose(single_beta, beta[0])
        self.assertAlmostEqual(single_intensity, intensity[0])

    def test_missing_covariates_give_nan_intensity(self):
        self.result.problem.quad.field.covariates[0].values[:] = np.nan
        beta, intensity = predict(self.result, Locations([(0.5, 0.5)]))
        self.assertTrue(np.all(np.isfinite(beta)))
        self.assertTrue(np.isnan(intensity[0]))

    def test_prediction_checks(self):
        with self.assertRaises(ModelInputError):
            predict_coefficients(self.result, Locations([(0.5, 0.5)]), k=0)
        self.result.problem = None
        with self.assertRaises(ModelInputError):
            predict_coefficients(self.result, Locations([(0.5, 0.5)]))


class TestEvaluation(CommonTestCase):

    def test_mise(self):
        window = self.unit_window
        zero = lambda locations: np.zeros((len(locations), 2))
        offset = lambda locations: np.column_stack([np.ones(len(locations)), np.zeros(len(locations))])
        self.assertEqual(mise(zero, zero, window, 25), 0.0)
        self.assertAlmostEqual(mise(zero, offset, window, 25), 0.5)
        self.assertAlmostEqual(mise(lambda l: np.full(len(l), 2.0), lambda l: np.zeros(len(l)), window, 16), 4.0)
        with self.assertRaises(EvaluationInputError):
            mise(zero, lambda l: np.full((len(l), 2), np.nan), window, 25)
        with self.assertRaises(EvaluationInputError):
            mise(zero, lambda l: np.zeros((len(l), 3)), window, 25)

    def test_mise_on_a_network(self):
        one = lambda locations: np.ones(len(locations))
        self.assertAlmostEqual(mise(one, lambda l: np.zeros(len(l)), self.small_network, 20), 1.0)

    def test_rand_index(self):
        self.assertEqual(rand_index([0, 0, 1, 1], [5, 5, 7, 7]), 1.0)
        self.assertAlmostEqual(rand_index([0, 0, 1, 1], [0, 1, 0, 1]), 1.0 / 3.0)
        self.assertAlmostEqual(rand_index([0, 0, 0, 0], [0, 0, 0, 1]), 0.5)
        with self.assertRaises(EvaluationInputError):
            rand_index([0, 1], [0, 1, 2])
        with self.assertRaises(EvaluationInputError):
            rand_index([0], [0])

    def test_rand_index_is_symmetric(self):
        rng = self.rng(9)
        for _ in range(20):
            a = rng.integers(0, rng.integers(1, 6), size=40)
            b = rng.integers(0, rng.integers(1, 6), size=40)
            self.assertAlmostEqual(rand_index(a, b), rand_index(b, a), places=12)
            self.assertEqual(rand_index(a, a), 1.0)

    def test_surfaces_and_cluster_scores(self):
        problem = self.generate_problem(self.generate_two_level_pattern(), field=self.generate_field("z1"))
        result = fit(None, None, None, None, 0.005, self.test_options, problem=problem)
        locations = Locations([(0.25, 0.5), (0.75, 0.5)])
        self.assertEqual(coefficient_surface(result)(locations).shape, (2, 2))
        self.assertEqual(coefficient_surface(result, columns=[0])(locations).shape, (2, 1))
        self.assertEqual(log_intensity_surface(result)(locations).shape, (2,))
        truth = (problem.quad.locations.coords[:, 0] >= 0.5).astype(int)
        scores = cluster_rand_indices(result, truth)
        self.assertEqual(len(scores), 2)
        self.assertTrue(all(0.0 <= score <= 1.0 for score in scores))
        with self.assertRaises(EvaluationInputError):
            cluster_rand_indices(result, np.zeros((3, 2)))
