from os.path import join
from typing import Dict, Optional, Tuple

import numpy as np
from scipy.spatial import cKDTree

from constants.cli_constants import (BIC_TABLE_CSV, COEFFICIENTS_CSV, Command, EVALUATION_JSON, GRAPH_CSV,
    PATH_JSON, RESULT_JSON, RUN_JSON, SCHEME_CSV, TRACE_CSV, TRUTH_CSV)
from libs.geometry.domain import Domain
from libs.geometry.domain_io import load_domain
from libs.geometry.locations import Locations
from libs.geometry.subdivision import Subdivision
from libs.internal_types import FloatArray, IntArray, JsonDict
from libs.model.evaluation import mise, rand_index
from libs.model.exceptions import EvaluationInputError
from libs.model.fitting import fit, fit_path, FitProblem
from libs.model.results import FitResult
from libs.point_data.covariate_io import covariate_field_from_config
from libs.point_data.covariates import CovariateField
from libs.point_data.point_pattern import load_pattern, PointPattern
from libs.simulate.scenarios import make_scenario, read_truth_csv, TruthTable
from libs.utils.general_utils import log
from serializers.result_serializers import (CoefficientTable, clean_float, dumps_stable, fit_to_dict, path_to_dict,
    read_coefficients_csv, write_bic_table_csv, write_coefficients_csv, write_graph_csv, write_json,
    write_scheme_csv, write_trace_csv)
from commands.manifest import RunManifest
from commands.run_config import RunConfig


#
## shared loading
#

def load_inputs(config: RunConfig) -> Tuple[PointPattern, CovariateField]:
    """ The pattern and covariate field a fit, path or export-graph run works on.  Inputs are only
    read, every file the run produces goes to the output directory. """
    domain = load_domain(config["domain"])
    pattern = load_pattern(
        config["points"], domain, strict=config["strict"], snap_tolerance=config["snap_tolerance"],
        dedup=config["dedup"],
    )
    log.info(f"loaded {pattern.n} points on {domain!r}")
    field = covariate_field_from_config(config["covariates"], pattern, standardize=config["standardize"])
    return pattern, field


def build_problem(config: RunConfig) -> FitProblem:
    pattern, field = load_inputs(config)
    return FitProblem.build(pattern, field, config.graph_spec(), config.quadrature_spec(), config["seed"])


def write_fit_outputs(result: FitResult, directory: str, manifest: RunManifest, include_result: bool = True):
    if include_result:
        write_json(fit_to_dict(result), join(directory, RESULT_JSON))
        manifest.add_output(RESULT_JSON)
    write_coefficients_csv(result, join(directory, COEFFICIENTS_CSV))
    write_trace_csv(result, join(directory, TRACE_CSV))
    write_scheme_csv(result.problem.quad, join(directory, SCHEME_CSV))
    write_graph_csv(result.problem.graph, join(directory, GRAPH_CSV))
    manifest.add_output(COEFFICIENTS_CSV, TRACE_CSV, SCHEME_CSV, GRAPH_CSV)


#
## commands
#

def simulate_command(config: RunConfig, manifest: RunManifest) -> JsonDict:
    spec = config.scenario_spec()
    scenario = make_scenario(spec, config.scenario_directory)
    data_block = scenario.save(config.output_directory)
    run_block = {
        **data_block,
        "seed": spec.seed,
        "graph": {},
        "quadrature": {},
    }
    write_json(run_block, join(config.output_directory, RUN_JSON))
    manifest.add_output(RUN_JSON, TRUTH_CSV, data_block["points"], *(c["path"] for c in data_block["covariates"]))
    manifest.add_output(*(value for key, value in data_block["domain"].items() if key in ("nodes", "edges", "window")))
    manifest.extra["scenario"] = {
        **spec.as_dict(),
        "n_points": scenario.pattern.n,
        "calibration": scenario.calibration,
        "expected_count": scenario.expected_count(),
    }
    log.info(f"simulated {scenario.pattern.n} points for scenario {spec.scenario}")
    return {"n_points": scenario.pattern.n}


def fit_command(config: RunConfig, manifest: RunManifest) -> JsonDict:
    problem = build_problem(config)
    result = fit(None, None, None, None, float(config["lambda"]), config.solver_options(), problem=problem,
                 with_residual=True)
    write_fit_outputs(result, config.output_directory, manifest)
    if not result.converged:
        log.warning(f"the fit stopped without converging ({result.trace.stop_reason})")
    return result.summary()


def path_command(config: RunConfig, manifest: RunManifest) -> JsonDict:
    problem = build_problem(config)
    opts = config.solver_options()
    if "accelerate" not in (config["solver"] or {}):
        opts = opts.replace(accelerate=True)
    path = fit_path(None, None, None, None, config["lambdas"], config["n_lambda"], opts, problem=problem)
    payload = path_to_dict(path)
    payload["selected"] = fit_to_dict(path.selected)
    write_json(payload, join(config.output_directory, PATH_JSON))
    write_bic_table_csv(path, join(config.output_directory, BIC_TABLE_CSV))
    manifest.add_output(PATH_JSON, BIC_TABLE_CSV)
    write_fit_outputs(path.selected, config.output_directory, manifest, include_result=False)
    return {"selected_lambda": path.selected.lam, "selected_index": path.selected_index, "n_lambda": len(path.fits)}


def export_graph_command(config: RunConfig, manifest: RunManifest) -> JsonDict:
    problem = build_problem(config)
    write_graph_csv(problem.graph, join(config.output_directory, GRAPH_CSV))
    write_scheme_csv(problem.quad, join(config.output_directory, SCHEME_CSV))
    manifest.add_output(GRAPH_CSV, SCHEME_CSV)
    return problem.graph.describe()


def evaluate_command(config: RunConfig, manifest: Optional[RunManifest]) -> JsonDict:
    """ Scores an estimate (a coefficients csv) against a truth csv.  Each truth cell takes the
    value of its nearest estimate row; with a domain block the domain metric decides nearness,
    otherwise the planar coordinates do. """
    truth = read_truth_csv(config["truth"])
    estimate = read_coefficients_csv(config["estimate"])
    domain = load_domain(config["domain"]) if config["domain"] else None
    report = evaluate_tables(truth, estimate, domain)
    if config.output_directory:
        write_json(report, join(config.output_directory, EVALUATION_JSON))
        manifest.add_output(EVALUATION_JSON)
    else:
        print(dumps_stable(report), end="")
    return report


def evaluate_tables(truth: TruthTable, estimate: CoefficientTable, domain: Optional[Domain] = None) -> JsonDict:
    if len(truth.locations) == 0 or len(estimate.locations) == 0:
        raise EvaluationInputError("both the truth and the estimate need at least one row")
    names = [name for name in estimate.names if name in truth.columns]
    if not names:
        raise EvaluationInputError(f"no coefficient column is shared, estimate has {estimate.names}")
    nearest = _nearest_rows(truth.locations, estimate.locations, domain)
    grid = Subdivision(
        truth.locations, truth.measures, lambda locations: np.arange(len(locations)), float(truth.measures.sum())
    )

    def score(truth_values: FloatArray, estimate_values: FloatArray) -> float:
        return mise(lambda _: truth_values, lambda _: estimate_values[nearest], None, grid)

    per_column = {name: score(truth.columns[name], estimate.columns[name]) for name in names}
    covariates = [name for name in names if name != "intercept"]
    report = {
        "mise": {name: clean_float(value) for name, value in per_column.items()},
        "mise_beta": clean_float(
            score(np.column_stack([truth.columns[n] for n in covariates]),
                  np.column_stack([estimate.columns[n] for n in covariates]))
        ) if covariates else None,
        "rand_index": {},
        "n_truth_cells": len(truth.locations),
        "n_estimate_rows": len(estimate.locations),
    }
    if "log_intensity" in truth.columns and "log_intensity" in estimate.columns:
        report["mise_log_intensity"] = clean_float(
            score(truth.columns["log_intensity"], estimate.columns["log_intensity"])
        )
    for name in names:
        label_column = f"label_{name}"
        if label_column in estimate.columns and len(truth.locations) > 1:
            true_labels = _value_labels(truth.columns[name])
            report["rand_index"][name] = clean_float(
                rand_index(true_labels, estimate.columns[label_column][nearest].astype(np.int64))
            )
    return report


def _nearest_rows(query: Locations, reference: Locations, domain: Optional[Domain]) -> IntArray:
    if domain is not None:
        _, indices = domain.nearest_neighbors(query, reference, 1)
        return indices[:, 0]
    _, indices = cKDTree(reference.coords).query(query.coords, k=1)
    return np.asarray(indices, dtype=np.int64)


def _value_labels(values: FloatArray) -> IntArray:
    """ Truth cells sharing a coefficient value share a label. """
    _, labels = np.unique(values, return_inverse=True)
    return labels.reshape(-1)


HANDLERS: Dict = {
    Command.simulate: simulate_command,
    Command.fit: fit_command,
    Command.path: path_command,
    Command.export_graph: export_graph_command,
    Command.evaluate: evaluate_command,
}
