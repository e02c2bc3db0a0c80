import csv
import json
from typing import Dict, List, Optional

import numpy as np

from constants.graph_constants import GRAPH_CSV_FIELDS
from constants.quadrature_constants import LikelihoodKind, SCHEME_CSV_FIELDS
from constants.solver_constants import TRACE_CSV_FIELDS
from libs.geometry.locations import Locations
from libs.internal_types import FloatArray, JsonDict
from libs.model.exceptions import EvaluationInputError
from libs.model.results import FitResult, PathResult
from libs.quadrature.scheme import QuadratureScheme
from libs.spatial_graph.graph import SpatialGraph


LOCATION_FIELDS = ("x", "y", "segment", "offset")


def clean_float(value) -> Optional[float]:
    """ JSON has no inf or nan, they become null. """
    if value is None:
        return None
    value = float(value)
    return value if np.isfinite(value) else None


def dumps_stable(payload: JsonDict) -> str:
    """ Sorted keys, fixed indentation and repr floats, so equal results are equal bytes. """
    return json.dumps(payload, sort_keys=True, indent=2, allow_nan=False) + "\n"


def write_json(payload: JsonDict, path: str):
    with open(path, "w") as f:
        f.write(dumps_stable(payload))


#
## fits and paths
#

def fit_to_dict(fit: FitResult, include_points: bool = True) -> JsonDict:
    quad = fit.problem.quad
    out = {
        "lambda": clean_float(fit.lam),
        "kind": fit.kind,
        "graph": fit.graph,
        "objective": clean_float(fit.objective),
        "negll": clean_float(fit.negll),
        "bic": clean_float(fit.bic),
        "df": fit.df,
        "names": fit.names,
        "cluster_counts": dict(zip(fit.names, fit.cluster_counts)),
        "diagnostics": {key: clean_float(value) if isinstance(value, float) else value
                        for key, value in fit.diagnostics().items()},
        "standardization": quad.field.metadata(),
        "quadrature": {"n": quad.n, "nd": quad.nd, "domain_measure": clean_float(quad.domain_measure)},
    }
    if include_points:
        raw = quad.field.back_transform(fit.beta)
        out["points"] = {
            "locations": _location_columns(quad.locations),
            "observed": [int(v) for v in quad.indicator],
            "coefficients": {name: [clean_float(v) for v in fit.beta[:, k]] for k, name in enumerate(fit.names)},
            "raw_coefficients": {name: [clean_float(v) for v in raw[:, k]] for k, name in enumerate(fit.names)},
            "labels": {name: [int(v) for v in fit.labels[:, k]] for k, name in enumerate(fit.names)},
        }
    return out


def path_to_dict(path: PathResult) -> JsonDict:
    return {
        "lambdas": [clean_float(v) for v in path.lambdas],
        "lambda_max": clean_float(path.lambda_max),
        "bics": [clean_float(v) for v in path.bics],
        "selected_index": path.selected_index,
        "selected_lambda": clean_float(path.selected.lam),
        "table": [_clean_row(row) for row in path.table()],
    }


def _clean_row(row: Dict) -> Dict:
    return {key: clean_float(value) if isinstance(value, float) else value for key, value in row.items()}


def _location_columns(locations: Locations) -> Dict[str, List]:
    out = {"x": [float(v) for v in locations.coords[:, 0]], "y": [float(v) for v in locations.coords[:, 1]]}
    if locations.on_network:
        out["segment"] = [int(v) for v in locations.segments]
        out["offset"] = [float(v) for v in locations.offsets]
    return out


def _location_cells(locations: Locations, i: int) -> List:
    row = [repr(float(locations.coords[i, 0])), repr(float(locations.coords[i, 1]))]
    if locations.on_network:
        return row + [int(locations.segments[i]), repr(float(locations.offsets[i]))]
    return row + ["", ""]


def _cell(value: float) -> str:
    return repr(float(value)) if np.isfinite(value) else ""


def write_coefficients_csv(fit: FitResult, path: str):
    """ One row per quadrature point: location, observed flag, then per coefficient its raw-scale
    value (column named after the coefficient), its standardized value (std_<name>) and its
    cluster label (label_<name>), then the fitted log intensity. """
    quad = fit.problem.quad
    raw = quad.field.back_transform(fit.beta)
    log_intensity = (quad.design * fit.beta).sum(axis=1)
    header = list(LOCATION_FIELDS) + ["observed"] + fit.names + [f"std_{name}" for name in fit.names] + \
        [f"label_{name}" for name in fit.names] + ["log_intensity"]
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(header)
        for i in range(quad.m):
            row = _location_cells(quad.locations, i) + [int(quad.indicator[i])]
            row += [_cell(v) for v in raw[i]] + [_cell(v) for v in fit.beta[i]]
            row += [int(v) for v in fit.labels[i]] + [_cell(log_intensity[i])]
            writer.writerow(row)


class CoefficientTable:
    """ A coefficients csv read back: locations and named numeric columns. """

    def __init__(self, locations: Locations, columns: Dict[str, FloatArray]):
        self.locations = locations
        self.columns = columns

    @property
    def names(self) -> List[str]:
        return [name for name in self.columns if not name.startswith(("std_", "label_"))
                and name not in ("observed", "log_intensity")]


def read_coefficients_csv(path: str) -> CoefficientTable:
    try:
        with open(path, newline="") as f:
            reader = csv.DictReader(f)
            header = reader.fieldnames or []
            rows = list(reader)
    except OSError as e:
        raise EvaluationInputError(f"could not read {path}: {e}")
    missing = [name for name in LOCATION_FIELDS if name not in header]
    if missing:
        raise EvaluationInputError(f"{path}: missing columns {missing}")

    def column(name: str) -> FloatArray:
        return np.array([float(row[name]) if row[name] != "" else np.nan for row in rows], dtype=float)

    coords = np.column_stack([column("x"), column("y")]) if rows else np.zeros((0, 2))
    if rows and rows[0]["segment"] != "":
        locations = Locations(coords, column("segment").astype(np.int64), column("offset"))
    else:
        locations = Locations(coords)
    return CoefficientTable(locations, {name: column(name) for name in header if name not in LOCATION_FIELDS})


def write_bic_table_csv(path_result: PathResult, path: str):
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["index", "lambda", "bic", "df", "negll", "objective", "converged", "selected"])
        for index, fit in enumerate(path_result.fits):
            writer.writerow([
                index, repr(fit.lam), _cell(fit.bic), fit.df, _cell(fit.negll), _cell(fit.objective),
                int(fit.converged), int(index == path_result.selected_index),
            ])


def write_trace_csv(fit: FitResult, path: str):
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(list(TRACE_CSV_FIELDS) + ["admm_iterations"])
        for row in fit.trace.rows:
            writer.writerow([row.iteration] + [_cell(getattr(row, name)) for name in TRACE_CSV_FIELDS[1:]] +
                            [row.admm_iterations])


#
## schemes and graphs
#

def write_scheme_csv(quad: QuadratureScheme, path: str):
    """ The quadrature points: location, observed flag, poisson weight and response or logistic
    baseline (the other columns are empty), then the standardized covariates. """
    names = quad.field.names
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(list(SCHEME_CSV_FIELDS) + names)
        responses = quad.responses
        for i in range(quad.m):
            row = _location_cells(quad.locations, i) + [int(quad.indicator[i])]
            if quad.kind == LikelihoodKind.poisson:
                row += [_cell(quad.weights[i]), _cell(responses[i]), ""]
            else:
                row += ["", _cell(responses[i]), _cell(quad.baseline[i])]
            row += [_cell(v) for v in quad.design[i, 1:]]
            writer.writerow(row)


def write_graph_csv(graph: SpatialGraph, path: str):
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(GRAPH_CSV_FIELDS)
        for (i, j), weight in zip(graph.edges, graph.weights):
            writer.writerow([int(i), int(j), repr(float(weight)), graph.method])
