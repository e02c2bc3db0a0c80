from multiprocessing.pool import ThreadPool
from typing import List, Optional, Sequence

import numpy as np

from constants.common_constants import SeedComponent
from constants.graph_constants import GraphMethod
from constants.solver_constants import CLUSTER_EPSILON_SCALE, DEFAULT_N_LAMBDA, LAMBDA_GRID_RATIO
from libs.geometry.domain import Domain
from libs.geometry.linear_network import LinearNetwork
from libs.internal_types import FloatArray, IntArray
from libs.model.exceptions import ModelInputError
from libs.model.results import FitResult, PathResult
from libs.model.specs import QuadratureSpec
from libs.objective import negll
from libs.point_data.covariates import CovariateField
from libs.point_data.point_pattern import PointPattern
from libs.quadrature.builders import build_scheme
from libs.quadrature.scheme import QuadratureScheme
from libs.solver.lambda_max import compute_lambda_max
from libs.solver.options import SolverOptions
from libs.solver.prox import ProxWorkspace
from libs.solver.prox_gradient import fixed_point_residual, objective, prox_gradient_fit
from libs.spatial_graph.builders import GraphSpec, build_graph
from libs.spatial_graph.graph import SpatialGraph, connected_components
from libs.spatial_graph.incidence import IncidenceStructure
from libs.utils.general_utils import component_rng, log


class FitProblem:
    """ Everything a fit needs besides lambda: the quadrature scheme, the graph over its points,
    the incidence structure (whose factorization cache is shared by every fit on it) and the
    domain, which prediction needs for its nearest-neighbor search. """

    def __init__(
        self, quad: QuadratureScheme, graph: SpatialGraph, inc: Optional[IncidenceStructure] = None,
        domain: Optional[Domain] = None,
    ):
        if graph.n_vertices != quad.m:
            raise ModelInputError(f"the graph has {graph.n_vertices} vertices, the scheme {quad.m} points")
        self.quad = quad
        self.graph = graph
        self.inc = inc or IncidenceStructure(graph)
        self.domain = domain

    @classmethod
    def build(
        cls,
        pattern: PointPattern,
        field: Optional[CovariateField] = None,
        graph_spec: Optional[GraphSpec] = None,
        quad_spec: Optional[QuadratureSpec] = None,
        seed: int = 0,
    ) -> "FitProblem":
        quad_spec = quad_spec or QuadratureSpec()
        graph_spec = graph_spec or default_graph_spec(pattern.domain)
        quad = build_scheme(
            pattern,
            quad_spec.kind,
            quad_spec.nd_target,
            field,
            rng=component_rng(seed, SeedComponent.logistic_dummies),
            delta_mode=quad_spec.delta_mode,
            bandwidth=quad_spec.bandwidth,
        )
        graph = build_graph(quad.locations, pattern.domain, graph_spec)
        return cls(quad, graph, domain=pattern.domain)


def default_graph_spec(domain) -> GraphSpec:
    if isinstance(domain, LinearNetwork):
        return GraphSpec(GraphMethod.network_chain)
    return GraphSpec(GraphMethod.knn)


def extract_clusters(beta: FloatArray, inc: IncidenceStructure, epsilon: Optional[Sequence[float]] = None) -> IntArray:
    """ (M, p + 1) cluster labels: edge l separates two clusters of block k when
    |H_l beta_k| >= epsilon_k, with epsilon_k = 1e-6 (max beta_k - min beta_k + 1) by default. """
    beta = np.asarray(beta, dtype=float)
    if epsilon is None:
        epsilon = CLUSTER_EPSILON_SCALE * (beta.max(axis=0) - beta.min(axis=0) + 1.0)
    epsilon = np.broadcast_to(np.asarray(epsilon, dtype=float), (beta.shape[1],))
    differences = np.abs(inc.apply(beta))
    labels = np.empty(beta.shape, dtype=np.int64)
    for k in range(beta.shape[1]):
        labels[:, k] = connected_components(inc.n_vertices, inc.graph.edges, differences[:, k] < epsilon[k])
    return labels


def bic(fit: FitResult, quad: QuadratureScheme) -> float:
    """ 2 |D| negll + df log(n), df the number of fused groups summed over the coefficient blocks
    and n the number of observed points. """
    return 2.0 * quad.domain_measure * fit.negll + fit.df * np.log(max(quad.n, 1))


def fit(
    pattern: Optional[PointPattern],
    field: Optional[CovariateField],
    graph_spec: Optional[GraphSpec],
    quad_spec: Optional[QuadratureSpec],
    lam: float,
    opts: Optional[SolverOptions] = None,
    problem: Optional[FitProblem] = None,
    beta_init: Optional[FloatArray] = None,
    ws: Optional[ProxWorkspace] = None,
    with_residual: bool = False,
) -> FitResult:
    """ One SVCI fit at lambda.  A prebuilt problem (scheme + graph) is reused when given, otherwise
    it is built from the pattern with the seed in opts. """
    opts = opts or SolverOptions()
    if not lam > 0:
        raise ModelInputError(f"lambda must be positive, received {lam}")
    if problem is None:
        problem = FitProblem.build(pattern, field, graph_spec, quad_spec, opts.seed)
    return _fit_on(problem, lam, opts, beta_init, ws, with_residual)


def _fit_on(problem: FitProblem, lam: float, opts: SolverOptions, beta_init=None, ws=None,
            with_residual: bool = False) -> FitResult:
    quad, inc = problem.quad, problem.inc
    beta, trace = prox_gradient_fit(quad, inc, lam, beta_init, opts, ws)
    residual = trace.fixed_point_residual if trace.converged else None
    if with_residual and residual is None:
        residual = fixed_point_residual(quad, inc, beta, lam, opts)
    result = FitResult(
        beta=beta,
        lam=lam,
        kind=quad.kind,
        graph=problem.graph.describe(),
        objective=objective(quad, inc, beta, lam, opts.eta_max),
        negll=negll(quad, beta, opts.eta_max),
        labels=extract_clusters(beta, inc),
        trace=trace,
        names=["intercept"] + quad.field.names,
        problem=problem,
        fixed_point_residual=residual,
    )
    result.bic = bic(result, quad)
    return result


def lambda_grid(lambda_max: float, n_lambda: int = DEFAULT_N_LAMBDA, ratio: float = LAMBDA_GRID_RATIO) -> FloatArray:
    """ n_lambda values log-uniformly spaced from lambda_max down to lambda_max * ratio. """
    if not lambda_max > 0:
        raise ModelInputError(f"lambda_max must be positive, received {lambda_max}")
    if n_lambda == 1:
        return np.array([lambda_max])
    return np.logspace(np.log10(lambda_max), np.log10(lambda_max * ratio), int(n_lambda))


def fit_path(
    pattern: Optional[PointPattern],
    field: Optional[CovariateField],
    graph_spec: Optional[GraphSpec],
    quad_spec: Optional[QuadratureSpec],
    lambdas: Optional[Sequence[float]] = None,
    n_lambda: int = DEFAULT_N_LAMBDA,
    opts: Optional[SolverOptions] = None,
    problem: Optional[FitProblem] = None,
) -> PathResult:
    """ Fits along a decreasing lambda grid and selects by BIC (ties go to the larger lambda).
    Without an explicit grid, n_lambda values are spaced from lambda_max (the smallest fully fused
    lambda) down to lambda_max / 1000.  Fits are warm started from the previous lambda unless
    opts.warm_start is off, in which case they run independently on a thread pool. """
    opts = opts or SolverOptions()
    if problem is None:
        problem = FitProblem.build(pattern, field, graph_spec, quad_spec, opts.seed)

    lambda_max = None
    if lambdas is None:
        if int(n_lambda) < 1:
            raise ModelInputError(f"n_lambda must be at least 1, received {n_lambda}")
        lambda_max, _ = compute_lambda_max(problem.quad, problem.inc, opts)
        if not lambda_max > 0:
            raise ModelInputError("the unpenalized constant fit is already optimal, there is no lambda path")
        grid = lambda_grid(lambda_max, n_lambda)
    else:
        grid = np.asarray(lambdas, dtype=float).reshape(-1)
        if len(grid) == 0 or np.any(~(grid > 0)):
            raise ModelInputError("the lambda grid must be non-empty and positive")
        grid = np.unique(grid)[::-1]

    if opts.warm_start:
        fits: List[FitResult] = []
        beta, ws = None, ProxWorkspace(problem.inc.m, problem.quad.design.shape[1], opts.gamma_initial)
        for lam in grid:
            result = _fit_on(problem, float(lam), opts, beta, ws)
            beta = result.beta
            fits.append(result)
            log.info(f"lambda={lam:.6g} bic={result.bic:.6g} clusters={result.cluster_counts}")
    else:
        solve_options = opts.replace(threads=1)
        pool = ThreadPool(max(1, min(int(opts.threads), len(grid))))
        try:
            fits = pool.map(lambda lam: _fit_on(problem, float(lam), solve_options), list(grid), chunksize=1)
        finally:
            pool.close()
            pool.join()

    _check_df_monotone(fits)
    return PathResult(grid, fits, lambda_max)


def _check_df_monotone(fits: List[FitResult]):
    for previous, current in zip(fits[:-1], fits[1:]):
        if current.df < previous.df:
            log.warning(
                f"degrees of freedom fell from {previous.df} to {current.df} when lambda decreased "
                f"from {previous.lam:.6g} to {current.lam:.6g}"
            )
