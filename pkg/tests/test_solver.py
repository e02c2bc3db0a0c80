from unittest import mock

import numpy as np
from scipy.optimize import minimize

from constants.graph_constants import GraphMethod
from libs.exceptions import DimensionMismatchError
from libs.objective import gradient, negll
from libs.solver.exceptions import SolverInputError
from libs.solver.lambda_max import compute_lambda_max, constant_fit, dual_certificate, is_fully_fused
from libs.solver.options import SolverOptions
from libs.solver.prox import fused_prox, prox_objective, ProxWorkspace, soft_threshold
from libs.solver.prox_gradient import default_start, fixed_point_residual, objective, prox_gradient_fit
from libs.spatial_graph.graph import SpatialGraph
from libs.spatial_graph.incidence import IncidenceStructure
from tests.common import CommonTestCase


def chain_incidence(n: int) -> IncidenceStructure:
    edges = np.column_stack([np.arange(n - 1), np.arange(1, n)])
    return IncidenceStructure(SpatialGraph(n, edges, np.ones(n - 1), GraphMethod.knn))


def random_connected_incidence(rng: np.random.Generator, max_vertices: int = 6, max_edges: int = 8) -> IncidenceStructure:
    """ A random spanning tree plus random extra edges, with random edge weights. """
    n = int(rng.integers(2, max_vertices + 1))
    edges = {(int(rng.integers(0, i)), i) for i in range(1, n)}
    all_pairs = [(i, j) for i in range(n) for j in range(i + 1, n) if (i, j) not in edges]
    extra = min(int(rng.integers(0, max_edges - len(edges) + 1)), len(all_pairs))
    for index in rng.permutation(len(all_pairs))[:extra]:
        edges.add(all_pairs[index])
    edges = np.array(sorted(edges), dtype=np.int64)
    return IncidenceStructure(SpatialGraph(n, edges, rng.uniform(0.1, 2.0, len(edges)), GraphMethod.knn))


def dual_prox_bounds(r: np.ndarray, inc: IncidenceStructure, t: float):
    """ Solves the box-constrained dual  min_{|z| <= t} 1/2 ||r - H'z||^2  of every column.  Returns the
    primal objective at beta = r - H'z (an upper bound on the prox optimum) and the dual value (a
    lower bound). """
    H = inc.H.toarray()
    upper = lower = 0.0
    for k in range(r.shape[1]):
        column = r[:, k]

        def value_and_gradient(z):
            residual = column - H.T @ z
            return 0.5 * float(residual @ residual), -(H @ residual)

        z = minimize(value_and_gradient, np.zeros(inc.m), jac=True, method="L-BFGS-B", bounds=[(-t, t)] * inc.m,
                     options={"ftol": 1e-16, "gtol": 1e-12, "maxiter": 10000}).x
        beta = column - H.T @ z
        upper += prox_objective(beta, column, inc, t)
        lower += 0.5 * float(column @ column) - 0.5 * float(beta @ beta)
    return upper, lower


class TestSoftThreshold(CommonTestCase):

    def test_values(self):
        self.assert_allclose(soft_threshold([-3.0, -0.5, 0.0, 0.5, 2.0], 1.0), [-2.0, 0.0, 0.0, 0.0, 1.0])
        self.assert_allclose(soft_threshold([-3.0, 2.0], 0.0), [-3.0, 2.0])

    def test_negative_threshold(self):
        with self.assertRaises(SolverInputError):
            soft_threshold([1.0], -0.1)


class TestFusedProx(CommonTestCase):

    def test_two_vertices_closed_form(self):
        inc = chain_incidence(2)
        opts = self.test_options
        # far apart: each value moves t toward the other
        self.assert_allclose(fused_prox(np.array([0.0, 3.0]), inc, 0.5, opts=opts), [0.5, 2.5], atol=1e-8)
        # close together: both take the mean
        self.assert_allclose(fused_prox(np.array([0.0, 3.0]), inc, 2.0, opts=opts), [1.5, 1.5], atol=1e-8)

    def test_matches_a_direct_minimization(self):
        inc = chain_incidence(6)
        r = np.array([0.0, 0.2, 1.5, 1.4, 3.0, 2.9])
        t = 0.3
        ours = fused_prox(r, inc, t, opts=self.test_options)
        direct = minimize(lambda b: prox_objective(b, r, inc, t), r, method="Powell",
                          options={"xtol": 1e-10, "ftol": 1e-12, "maxiter": 20000})
        self.assertLessEqual(prox_objective(ours, r, inc, t), direct.fun + 1e-8)
        # the pairs within 2t of each other fuse
        self.assertAlmostEqual(ours[0], ours[1], places=8)
        self.assertAlmostEqual(ours[4], ours[5], places=8)

    def test_random_graphs_match_the_dual_solution(self):
        rng = self.rng(7)
        opts = self.test_options.tightened(2)
        for _ in range(200):
            inc = random_connected_incidence(rng)
            p = int(rng.integers(1, 3))
            r = rng.normal(scale=2.0, size=(inc.n_vertices, p))
            t = float(rng.uniform(0.0, 2.0))
            ours = prox_objective(fused_prox(r, inc, t, opts=opts), r, inc, t)
            upper, lower = dual_prox_bounds(r, inc, t)
            self.assertLessEqual(ours, upper + 1e-6, f"{inc}, t={t}")
            self.assertGreaterEqual(ours, lower - 1e-9, f"{inc}, t={t}")

    def test_the_prox_is_non_expansive(self):
        rng = self.rng(3)
        for inc in (chain_incidence(8), random_connected_incidence(rng), random_connected_incidence(rng)):
            for _ in range(10):
                a = rng.normal(size=inc.n_vertices)
                b = a + rng.normal(scale=rng.uniform(0.01, 2.0), size=inc.n_vertices)
                t = float(rng.uniform(0.05, 1.5))
                moved = np.linalg.norm(fused_prox(a, inc, t, opts=self.test_options)
                                       - fused_prox(b, inc, t, opts=self.test_options))
                self.assertLessEqual(moved, np.linalg.norm(a - b) + 1e-7)

    def test_constant_shifts_pass_through(self):
        rng = self.rng(4)
        inc = random_connected_incidence(rng)
        r = rng.normal(size=(inc.n_vertices, 2))
        shift = np.array([3.5, -1.25])
        self.assert_allclose(fused_prox(r + shift, inc, 0.4, opts=self.test_options),
                             fused_prox(r, inc, 0.4, opts=self.test_options) + shift, atol=1e-7)

    def test_a_capped_admm_returns_its_best_iterate(self):
        inc = chain_incidence(12)
        r = self.rng().normal(scale=3.0, size=12)
        t = 0.8
        visited = []
        solve = inc.solve

        def recorder(gamma, rhs):
            beta = solve(gamma, rhs)
            visited.append(prox_objective(beta, r, inc, t))
            return beta

        for cap in (1, 2, 3, 5):
            visited.clear()
            ws = ProxWorkspace(inc.m, 1, 1.0)
            opts = self.test_options.replace(admm_max_iterations=cap, polish=False)
            with mock.patch.object(inc, "solve", side_effect=recorder):
                result = fused_prox(r, inc, t, ws, opts)
            self.assertEqual(len(visited), cap)
            self.assertTrue(ws.capped[0])
            best = min(visited + [prox_objective(r, r, inc, t)])
            self.assertLessEqual(prox_objective(result, r, inc, t), best + 1e-12)

    def test_zero_threshold_returns_a_copy(self):
        r = np.array([[1.0], [2.0], [4.0]])
        result = fused_prox(r, chain_incidence(3), 0.0)
        self.assert_array_equal(result, r)
        self.assertIsNot(result, r)

    def test_blocks_do_not_depend_on_the_thread_count(self):
        inc = chain_incidence(30)
        r = self.rng().normal(size=(30, 3))
        single = fused_prox(r, inc, 0.4, opts=self.test_options.replace(threads=1))
        threaded = fused_prox(r, inc, 0.4, opts=self.test_options.replace(threads=3))
        self.assert_array_equal(single, threaded)
        for k in range(3):
            self.assert_array_equal(single[:, k], fused_prox(r[:, k], inc, 0.4, opts=self.test_options))

    def test_workspace_shape_is_checked(self):
        inc = chain_incidence(4)
        with self.assertRaises(DimensionMismatchError):
            fused_prox(np.zeros((4, 2)), inc, 0.1, ProxWorkspace(inc.m, 3, 1.0))
        with self.assertRaises(SolverInputError):
            ProxWorkspace(3, 1, 0.0)
        with self.assertRaises(SolverInputError):
            fused_prox(np.zeros(4), inc, -1.0)


class TestSolverOptions(CommonTestCase):

    def test_dict_round_trip_and_validation(self):
        opts = SolverOptions.from_dict({"outer_max_iterations": 10, "accelerate": True, "threads": 2})
        self.assertEqual(opts.as_dict()["outer_max_iterations"], 10)
        self.assertTrue(opts.replace(threads=1).accelerate)
        with self.assertRaises(SolverInputError):
            SolverOptions.from_dict({"step_size": 1.0})
        with self.assertRaises(SolverInputError):
            SolverOptions(outer_tolerance=0.0)
        with self.assertRaises(SolverInputError):
            SolverOptions(threads=0)
        with self.assertRaises(SolverInputError):
            SolverOptions(fixed_point_tolerance=-1e-5)

    def test_tightening(self):
        opts = SolverOptions(admm_max_iterations=100, admm_primal_tolerance=1e-6, admm_dual_tolerance=1e-4)
        self.assertIs(opts.tightened(0), opts)
        tight = opts.tightened(2)
        self.assertEqual(tight.admm_max_iterations, 400)
        self.assertAlmostEqual(tight.admm_primal_tolerance, 1e-8)
        self.assertAlmostEqual(tight.admm_dual_tolerance, 1e-6)
        self.assertEqual(tight.fixed_point_tolerance, opts.fixed_point_tolerance)
        # the floor
        self.assertEqual(opts.tightened(10).admm_primal_tolerance, 1e-12)


class TestProxGradient(CommonTestCase):

    def setUp(self):
        super().setUp()
        self.problem = self.generate_problem(self.generate_two_level_pattern())

    def test_objective_never_increases(self):
        for accelerate in (False, True):
            opts = self.test_options.replace(accelerate=accelerate)
            beta, trace = prox_gradient_fit(self.problem.quad, self.problem.inc, 0.01, opts=opts)
            self.assert_non_increasing(trace.objectives)
            self.assertAlmostEqual(trace.objectives[-1], objective(self.problem.quad, self.problem.inc, beta, 0.01))

    def test_the_fit_separates_the_two_levels(self):
        quad = self.problem.quad
        lam_max, _ = compute_lambda_max(quad, self.problem.inc, self.test_options, refine=False)
        beta, _ = prox_gradient_fit(quad, self.problem.inc, 0.1 * lam_max, opts=self.test_options)
        left = quad.locations.coords[:, 0] < 0.4
        right = quad.locations.coords[:, 0] > 0.6
        self.assertGreater(beta[left, 0].mean(), beta[right, 0].mean() + 0.5)

    def test_default_fits_converge_to_fixed_points(self):
        quad, inc = self.problem.quad, self.problem.inc
        opts = SolverOptions(threads=1)
        certificate, _ = compute_lambda_max(quad, inc, opts, refine=False)
        for fraction in (0.5, 0.1, 0.01):
            lam = fraction * certificate
            beta, trace = prox_gradient_fit(quad, inc, lam, opts=opts)
            if fraction >= 0.1:
                self.assertTrue(trace.converged, f"{fraction}: {trace.stop_reason}")
            if trace.converged:
                self.assertLessEqual(trace.fixed_point_residual, 1e-5)
                self.assertLessEqual(fixed_point_residual(quad, inc, beta, lam), 1e-5)
            else:
                self.assertNotEqual(trace.stop_reason, "fixed-point residual below tolerance")

    def test_converged_fits_are_near_fixed_points(self):
        quad, inc = self.problem.quad, self.problem.inc
        beta, _ = prox_gradient_fit(quad, inc, 0.01, opts=self.test_options)
        start_residual = fixed_point_residual(quad, inc, default_start(quad), 0.01, self.test_options)
        self.assertLess(fixed_point_residual(quad, inc, beta, 0.01, self.test_options), 1e-2 * start_residual)

    def test_accepted_steps_satisfy_the_descent_lemma(self):
        quad, inc, lam = self.problem.quad, self.problem.inc, 0.01
        one_step = self.test_options.replace(outer_max_iterations=1)
        point = default_start(quad)
        for _ in range(6):
            candidate, trace = prox_gradient_fit(quad, inc, lam, point, one_step)
            if trace.iterations == 0 or np.array_equal(candidate, point):
                break
            L = trace.rows[1].lipschitz
            step = candidate - point
            smooth = negll(quad, point)
            bound = smooth + float(np.sum(gradient(quad, point) * step)) + 0.5 * L * float(np.sum(step ** 2))
            self.assertLessEqual(negll(quad, candidate), bound + 1e-12 * max(1.0, abs(smooth)))
            # sufficient decrease of the full objective
            self.assertLessEqual(objective(quad, inc, candidate, lam),
                                 objective(quad, inc, point, lam) - 0.5 * L * float(np.sum(step ** 2)) + 1e-7)
            point = candidate

    def test_default_start(self):
        quad = self.problem.quad
        start = default_start(quad)
        self.assert_allclose(start[:, 0], np.full(quad.m, np.log(quad.n / quad.domain_measure)))

    def test_input_checks(self):
        with self.assertRaises(SolverInputError):
            prox_gradient_fit(self.problem.quad, self.problem.inc, -1.0)
        with self.assertRaises(SolverInputError):
            prox_gradient_fit(self.problem.quad, chain_incidence(3), 0.1)


class TestLambdaMax(CommonTestCase):

    def setUp(self):
        super().setUp()
        self.problem = self.generate_problem(self.generate_two_level_pattern())

    def test_constant_fit_without_covariates_is_the_mean_intensity(self):
        quad = self.problem.quad
        beta = constant_fit(quad)
        self.assert_allclose(beta[:, 0], np.full(quad.m, np.log(quad.n / quad.domain_measure)), atol=1e-5)

    def test_lambda_max_is_the_fusion_threshold(self):
        quad, inc = self.problem.quad, self.problem.inc
        opts = self.test_options
        lam_max, fused_beta = compute_lambda_max(quad, inc, opts)
        self.assertTrue(is_fully_fused(inc, fused_beta))
        above, _ = prox_gradient_fit(quad, inc, 1.05 * lam_max, fused_beta, opts)
        self.assertTrue(is_fully_fused(inc, above))
        below, _ = prox_gradient_fit(quad, inc, 0.3 * lam_max, fused_beta, opts)
        self.assertFalse(is_fully_fused(inc, below))

    def test_the_certificate_bounds_the_refined_value(self):
        quad, inc = self.problem.quad, self.problem.inc
        certificate, _ = compute_lambda_max(quad, inc, self.test_options, refine=False)
        self.assertAlmostEqual(certificate, dual_certificate(quad, inc, constant_fit(quad)), places=8)
        lam_max, _ = compute_lambda_max(quad, inc, self.test_options)
        self.assertLessEqual(lam_max, certificate * (1 + 1e-9))
