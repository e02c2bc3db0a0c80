from typing import Tuple, Union

import numpy as np

from constants.solver_constants import DEFAULT_PREDICTION_K
from libs.geometry.locations import DomainLocation, Locations
from libs.internal_types import FloatArray
from libs.model.exceptions import ModelInputError
from libs.model.results import FitResult


def _as_locations(where: Union[DomainLocation, Locations]) -> Locations:
    if isinstance(where, DomainLocation):
        return Locations.from_domain_locations([where], on_network=where.on_network)
    return where


def _problem(fit: FitResult):
    if fit.problem is None or fit.problem.domain is None:
        raise ModelInputError("prediction needs a fit that carries its quadrature scheme and domain")
    return fit.problem


def predict_coefficients(fit: FitResult, where: Union[DomainLocation, Locations], k: int = DEFAULT_PREDICTION_K) -> FloatArray:
    """ (N, p + 1) coefficients at new locations: the mean of the fitted coefficients over the k
    nearest quadrature points, in the domain metric.  Ties in distance go to the lower point index. """
    if int(k) < 1:
        raise ModelInputError(f"k must be at least 1, received {k}")
    problem = _problem(fit)
    locations = _as_locations(where)
    problem.domain.validate_locations(locations)
    if len(locations) == 0:
        return np.zeros((0, fit.beta.shape[1]))
    _, neighbors = problem.domain.nearest_neighbors(locations, problem.quad.locations, int(k))
    return fit.beta[neighbors].mean(axis=1)


def predict(
    fit: FitResult, where: Union[DomainLocation, Locations], k: int = DEFAULT_PREDICTION_K
) -> Tuple[FloatArray, FloatArray]:
    """ Coefficients and intensity at new locations.  The intensity is exp(z(u)' beta(u)) with the
    covariate field of the fit; it is NaN where a covariate has no data, the coefficients are
    still returned there.  A single DomainLocation returns a (p + 1,) vector and a scalar. """
    beta = predict_coefficients(fit, where, k)
    eta = _linear_predictor(fit, _as_locations(where), beta)
    intensity = np.exp(eta)
    if isinstance(where, DomainLocation):
        return beta[0], float(intensity[0])
    return beta, intensity


def log_intensity_at(fit: FitResult, where: Union[DomainLocation, Locations], k: int = DEFAULT_PREDICTION_K) -> FloatArray:
    """ z(u)' beta(u), NaN where a covariate is missing. """
    locations = _as_locations(where)
    return _linear_predictor(fit, locations, predict_coefficients(fit, locations, k))


def _linear_predictor(fit: FitResult, locations: Locations, beta: FloatArray) -> FloatArray:
    field = _problem(fit).quad.field
    covariates = field.covariates_at(locations, allow_missing=True)
    design = np.column_stack([np.ones(len(locations)), covariates])
    return (design * beta).sum(axis=1)
