from typing import Callable, List, Optional, Union

import numpy as np
from scipy.sparse import coo_matrix

from constants.solver_constants import DEFAULT_PREDICTION_K
from libs.geometry.domain import Domain
from libs.geometry.locations import Locations
from libs.geometry.subdivision import Subdivision
from libs.internal_types import FloatArray
from libs.model.exceptions import EvaluationInputError
from libs.model.prediction import log_intensity_at, predict_coefficients
from libs.model.results import FitResult


SurfaceFunction = Callable[[Locations], FloatArray]


def mise(
    true_fn: SurfaceFunction,
    est_fn: SurfaceFunction,
    domain: Domain,
    grid: Union[Subdivision, int],
) -> float:
    """ Mean integrated squared error between two surfaces, by a Riemann sum over the cells of a
    subdivision (an int asks the domain for a subdivision of about that many cells):

        1 / (p |D|) * sum_k sum_cells measure(cell) * (true_k - est_k)^2 at the cell center

    where p is the number of surface columns.  A 1-d surface counts as one column, which is how
    the log intensity is scored. """
    subdivision = domain.subdivide(int(grid)) if not isinstance(grid, Subdivision) else grid
    if subdivision.n_cells == 0:
        raise EvaluationInputError("the evaluation grid has no cells")
    truth = _columns(true_fn(subdivision.centers), subdivision.n_cells, "true")
    estimate = _columns(est_fn(subdivision.centers), subdivision.n_cells, "estimated")
    if truth.shape != estimate.shape:
        raise EvaluationInputError(f"true surfaces have shape {truth.shape}, estimates {estimate.shape}")
    squared = (truth - estimate) ** 2
    return float((subdivision.measures[:, None] * squared).sum() / (truth.shape[1] * subdivision.domain_measure))


def _columns(values, n_cells: int, which: str) -> FloatArray:
    values = np.asarray(values, dtype=float)
    if values.ndim == 1:
        values = values[:, None]
    if values.shape[0] != n_cells:
        raise EvaluationInputError(f"the {which} surface returned {values.shape[0]} values for {n_cells} cells")
    if not np.all(np.isfinite(values)):
        raise EvaluationInputError(f"the {which} surface is not finite on the whole evaluation grid")
    return values


def rand_index(labels_a, labels_b) -> float:
    """ The share of point pairs on which two partitions agree (both together or both apart). """
    labels_a = np.asarray(labels_a).reshape(-1)
    labels_b = np.asarray(labels_b).reshape(-1)
    if len(labels_a) != len(labels_b):
        raise EvaluationInputError(f"label vectors have lengths {len(labels_a)} and {len(labels_b)}")
    n = len(labels_a)
    if n < 2:
        raise EvaluationInputError("the rand index needs at least two labels")
    _, rows = np.unique(labels_a, return_inverse=True)
    _, cols = np.unique(labels_b, return_inverse=True)
    contingency = coo_matrix((np.ones(n), (rows, cols))).tocsr()

    def pairs(counts) -> float:
        counts = np.asarray(counts, dtype=float)
        return float((counts * (counts - 1.0) / 2.0).sum())

    together_both = pairs(contingency.data)
    together_a = pairs(np.asarray(contingency.sum(axis=1)).ravel())
    together_b = pairs(np.asarray(contingency.sum(axis=0)).ravel())
    total = n * (n - 1) / 2.0
    apart_both = total - together_a - together_b + together_both
    return (together_both + apart_both) / total


def coefficient_surface(fit: FitResult, k: int = DEFAULT_PREDICTION_K, raw_scale: bool = True,
                        columns: Optional[List[int]] = None) -> SurfaceFunction:
    """ The fitted coefficient surfaces as a function of location, optionally mapped back to the
    raw covariate scale and restricted to some columns (0 is the intercept). """
    field = fit.problem.quad.field

    def surface(locations: Locations) -> FloatArray:
        beta = predict_coefficients(fit, locations, k)
        if raw_scale:
            beta = field.back_transform(beta)
        return beta if columns is None else beta[:, columns]

    return surface


def log_intensity_surface(fit: FitResult, k: int = DEFAULT_PREDICTION_K) -> SurfaceFunction:
    return lambda locations: log_intensity_at(fit, locations, k)


def cluster_rand_indices(fit: FitResult, true_labels) -> List[float]:
    """ Rand index of the fused clusters of every coefficient column against true region labels
    at the quadrature points, one (M,) vector per column or a single vector shared by all. """
    true_labels = np.asarray(true_labels)
    if true_labels.ndim == 1:
        true_labels = np.repeat(true_labels[:, None], fit.labels.shape[1], axis=1)
    if true_labels.shape != fit.labels.shape:
        raise EvaluationInputError(f"true labels have shape {true_labels.shape}, fit labels {fit.labels.shape}")
    return [rand_index(true_labels[:, k], fit.labels[:, k]) for k in range(fit.labels.shape[1])]
