from multiprocessing.pool import ThreadPool
from os import makedirs
from os.path import join
from time import perf_counter
from typing import Dict, List, Optional, Sequence

import numpy as np
from cronutils.error_handler import ErrorHandler

from config.settings import SVCI_THREADS
from constants.experiment_constants import (CLUSTER_RECOVERY_TARGET_N, DEFAULT_REPLICATES, DUMMY_RATIOS,
    EVALUATION_CELLS, GRAPH_VARIANTS, REPLICATE_N_LAMBDA, SAMPLE_SIZES, SCENARIO_2A_REPLICATES,
    EXPERIMENT_RESULTS_DIRECTORY, SCENARIO_2A_TARGET_N, THROUGHPUT_LAMBDA_FRACTION)
from constants.common_constants import SVCI_VERSION
from constants.quadrature_constants import LikelihoodKind
from constants.simulation_constants import ScenarioId
from libs.model.evaluation import cluster_rand_indices, coefficient_surface, log_intensity_surface, mise
from libs.model.fitting import fit, fit_path, FitProblem
from libs.model.specs import QuadratureSpec
from libs.sentry import report_exception, SentryTypes
from libs.simulate.scenarios import make_scenario, ScenarioSpec
from libs.solver.lambda_max import compute_lambda_max
from libs.solver.options import SolverOptions
from libs.spatial_graph.builders import GraphSpec
from libs.utils.general_utils import log
from serializers.result_serializers import write_json


"""
Replicate batches over seeds.  Replicate r of a batch simulates its data with seed base_seed + r,
fits a BIC-selected lambda path and scores the selected fit against the simulation truth.
Replicates run on a thread pool, a failing replicate is recorded and the batch carries on; the
collected errors are raised once every replicate has finished.
"""


class ReplicateMetrics:
    """ Scores of one replicate.  MISE values compare raw-scale coefficient surfaces (and the log
    intensity) with the truth on an evaluation grid, Rand indices compare fused clusters with the
    true regions at the quadrature points. """

    def __init__(
        self,
        seed: int,
        n_points: int,
        mise_coefficients: Dict[str, float],
        mise_beta: Optional[float],
        mise_log_intensity: float,
        rand_indices: Dict[str, float],
        selected_lambda: float,
        fit_seconds: float,
    ):
        self.seed = seed
        self.n_points = n_points
        self.mise_coefficients = mise_coefficients
        self.mise_beta = mise_beta
        self.mise_log_intensity = mise_log_intensity
        self.rand_indices = rand_indices
        self.selected_lambda = selected_lambda
        self.fit_seconds = fit_seconds

    def as_dict(self) -> Dict:
        return dict(vars(self))


class ReplicateBatch:
    """ The metrics of every finished replicate of one configuration, and their averages. """

    def __init__(self, label: str, metrics: List[ReplicateMetrics], failures: int = 0):
        self.label = label
        self.metrics = metrics
        self.failures = failures

    def mean(self, name: str) -> Optional[float]:
        values = [getattr(m, name) for m in self.metrics if getattr(m, name) is not None]
        return float(np.mean(values)) if values else None

    def mean_rand_index(self, coefficient: str) -> Optional[float]:
        values = [m.rand_indices[coefficient] for m in self.metrics if coefficient in m.rand_indices]
        return float(np.mean(values)) if values else None

    def summary(self) -> Dict:
        names = sorted({name for m in self.metrics for name in m.rand_indices})
        return {
            "label": self.label,
            "replicates": len(self.metrics),
            "failures": self.failures,
            "mean_n_points": self.mean("n_points"),
            "mean_mise_beta": self.mean("mise_beta"),
            "mean_mise_log_intensity": self.mean("mise_log_intensity"),
            "sd_mise_log_intensity": float(np.std([m.mise_log_intensity for m in self.metrics]))
                if self.metrics else None,
            "mean_rand_index": {name: self.mean_rand_index(name) for name in names},
            "mean_fit_seconds": self.mean("fit_seconds"),
            "mean_selected_lambda": self.mean("selected_lambda"),
        }

    def __repr__(self):
        return f"ReplicateBatch({self.label}, {len(self.metrics)} replicates, {self.failures} failures)"


#
## one replicate
#

def run_replicate(
    spec: ScenarioSpec,
    seed: int,
    quad_spec: Optional[QuadratureSpec] = None,
    graph_spec: Optional[GraphSpec] = None,
    opts: Optional[SolverOptions] = None,
    n_lambda: int = REPLICATE_N_LAMBDA,
    evaluation_cells: int = EVALUATION_CELLS,
) -> ReplicateMetrics:
    scenario = make_scenario(spec.replace(seed=seed))
    opts = (opts or SolverOptions(accelerate=True, threads=1)).replace(seed=seed)
    started = perf_counter()
    problem = FitProblem.build(scenario.pattern, scenario.covariate_field(), graph_spec, quad_spec, seed)
    path = fit_path(None, None, None, None, None, n_lambda, opts, problem=problem)
    fit_seconds = perf_counter() - started
    selected = path.selected

    grid = scenario.domain.subdivide(evaluation_cells)
    names = selected.names
    mise_coefficients = {
        name: mise(lambda locations, k=k: scenario.true_coefficients(locations)[:, k],
                   coefficient_surface(selected, columns=[k]), scenario.domain, grid)
        for k, name in enumerate(names)
    }
    covariate_columns = list(range(1, len(names)))
    mise_beta = mise(
        lambda locations: scenario.true_coefficients(locations)[:, covariate_columns],
        coefficient_surface(selected, columns=covariate_columns), scenario.domain, grid,
    ) if covariate_columns else None
    mise_log_intensity = mise(scenario.true_log_intensity, log_intensity_surface(selected), scenario.domain, grid)

    quad_locations = problem.quad.locations
    rand_indices = dict(zip(names, cluster_rand_indices(selected, scenario.true_labels(quad_locations))))
    log.info(
        f"replicate seed={seed} n={scenario.pattern.n} mise_log_intensity={mise_log_intensity:.4g} "
        f"lambda={selected.lam:.4g}"
    )
    return ReplicateMetrics(
        seed, scenario.pattern.n, mise_coefficients, mise_beta, mise_log_intensity, rand_indices,
        selected.lam, fit_seconds,
    )


#
## batches
#

def run_replicates(
    label: str,
    spec: ScenarioSpec,
    n_replicates: int,
    base_seed: int = 0,
    quad_spec: Optional[QuadratureSpec] = None,
    graph_spec: Optional[GraphSpec] = None,
    threads: Optional[int] = None,
    n_lambda: int = REPLICATE_N_LAMBDA,
    raise_errors: bool = True,
) -> ReplicateBatch:
    """ Runs replicates base_seed .. base_seed + n_replicates - 1.  Each replicate runs single
    threaded, the pool spreads replicates over threads. """
    error_handler = ErrorHandler()
    seeds = [base_seed + r for r in range(n_replicates)]
    results: Dict[int, ReplicateMetrics] = {}

    def one(seed: int):
        with error_handler:
            try:
                results[seed] = run_replicate(spec, seed, quad_spec, graph_spec, n_lambda=n_lambda)
            except Exception:
                log.error(f"{label}: replicate with seed {seed} failed")
                report_exception(SentryTypes.experiments, {"experiment": label, "seed": str(seed)})
                raise

    pool = ThreadPool(max(1, min(int(threads or SVCI_THREADS), len(seeds) or 1)))
    try:
        pool.map(one, seeds, chunksize=1)
    finally:
        pool.close()
        pool.join()

    batch = ReplicateBatch(label, [results[seed] for seed in seeds if seed in results], len(seeds) - len(results))
    log.info(f"{batch!r}")
    if raise_errors:
        error_handler.raise_errors()
    return batch


def network_spec(target_n: float, scenario: str = ScenarioId.network_piecewise, scale: float = 1.0) -> ScenarioSpec:
    return ScenarioSpec(scenario=scenario, scale=scale, target_n=target_n)


def planar_spec(target_n: float, scale: float = 1.0) -> ScenarioSpec:
    return ScenarioSpec(scenario=ScenarioId.planar_covariates, scale=scale, target_n=target_n)


#
## presets
#

def scenario_2a_comparison(
    n_replicates: int = SCENARIO_2A_REPLICATES, target_n: float = SCENARIO_2A_TARGET_N, base_seed: int = 0,
    threads: Optional[int] = None,
) -> Dict[str, Dict]:
    """ Piecewise constant network intensity fit with both composite likelihoods on the same
    replicates (nd = n). """
    spec = network_spec(target_n)
    return {
        kind: run_replicates(f"2a {kind}", spec, n_replicates, base_seed, QuadratureSpec(kind=kind),
                             threads=threads).summary()
        for kind in (LikelihoodKind.poisson, LikelihoodKind.logistic)
    }


def sample_size_trend(
    sizes: Sequence[float] = SAMPLE_SIZES, n_replicates: int = DEFAULT_REPLICATES, base_seed: int = 0,
    kind: str = LikelihoodKind.logistic, threads: Optional[int] = None,
) -> Dict[str, Dict]:
    return {
        str(int(size)): run_replicates(f"n={int(size)}", network_spec(size), n_replicates, base_seed,
                                       QuadratureSpec(kind=kind), threads=threads).summary()
        for size in sizes
    }


def cluster_recovery(
    target_n: float = CLUSTER_RECOVERY_TARGET_N, n_replicates: int = DEFAULT_REPLICATES, base_seed: int = 0,
    kind: str = LikelihoodKind.logistic, threads: Optional[int] = None,
) -> Dict:
    """ Planar covariate scenario on a 5-nn graph, Rand indices of the BIC selected fits. """
    return run_replicates(
        "cluster recovery", planar_spec(target_n), n_replicates, base_seed, QuadratureSpec(kind=kind),
        GraphSpec(k=5), threads=threads,
    ).summary()


def dummy_sensitivity(
    ratios: Sequence[float] = DUMMY_RATIOS, target_n: float = SCENARIO_2A_TARGET_N,
    n_replicates: int = DEFAULT_REPLICATES, base_seed: int = 0, kind: str = LikelihoodKind.logistic,
    threads: Optional[int] = None,
) -> Dict[str, Dict]:
    spec = network_spec(target_n)
    return {
        f"nd={ratio:g}n": run_replicates(
            f"nd={ratio:g}n", spec, n_replicates, base_seed,
            QuadratureSpec(kind=kind, nd_target=max(1, int(round(ratio * target_n)))), threads=threads,
        ).summary()
        for ratio in ratios
    }


def graph_comparison(
    target_n: float = CLUSTER_RECOVERY_TARGET_N, n_replicates: int = DEFAULT_REPLICATES, base_seed: int = 0,
    kind: str = LikelihoodKind.logistic, threads: Optional[int] = None,
) -> Dict[str, Dict]:
    spec = planar_spec(target_n)
    return {
        name: run_replicates(f"graph {name}", spec, n_replicates, base_seed, QuadratureSpec(kind=kind),
                             GraphSpec.from_dict(block), threads=threads).summary()
        for name, block in GRAPH_VARIANTS
    }


def throughput(
    target_n: float = CLUSTER_RECOVERY_TARGET_N, seed: int = 0, kind: str = LikelihoodKind.poisson,
    threads: Optional[int] = None,
) -> Dict:
    """ Wall time of a single fit on planar data with two covariates and a 5-nn graph.  Only the
    fit itself is timed, not the simulation, the scheme or the lambda_max certificate. """
    scenario = make_scenario(planar_spec(target_n).replace(seed=seed))
    opts = SolverOptions(seed=seed, threads=threads or SVCI_THREADS)
    problem = FitProblem.build(scenario.pattern, scenario.covariate_field(), GraphSpec(k=5),
                               QuadratureSpec(kind=kind), seed)
    lambda_max, _ = compute_lambda_max(problem.quad, problem.inc, opts, refine=False)
    lam = THROUGHPUT_LAMBDA_FRACTION * lambda_max if lambda_max > 0 else THROUGHPUT_LAMBDA_FRACTION
    started = perf_counter()
    result = fit(None, None, None, None, lam, opts, problem=problem)
    seconds = perf_counter() - started
    log.info(f"throughput: n={scenario.pattern.n} m={problem.quad.m} fit in {seconds:.2f}s")
    return {
        "n_points": scenario.pattern.n,
        "n_quadrature_points": problem.quad.m,
        "lambda": lam,
        "fit_seconds": seconds,
        "iterations": result.trace.iterations,
        "converged": result.converged,
    }


def save_experiment(name: str, payload: Dict, directory: str = EXPERIMENT_RESULTS_DIRECTORY) -> str:
    makedirs(directory, exist_ok=True)
    path = join(directory, f"{name}.json")
    write_json({"experiment": name, "version": SVCI_VERSION, "results": payload}, path)
    log.info(f"wrote {path}")
    return path
