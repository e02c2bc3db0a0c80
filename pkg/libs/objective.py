import numpy as np
from scipy.special import expit

from constants.quadrature_constants import LikelihoodKind
from constants.solver_constants import ETA_MAX, LIPSCHITZ_FLOOR
from libs.exceptions import DimensionMismatchError
from libs.internal_types import FloatArray
from libs.quadrature.exceptions import QuadratureKindError
from libs.quadrature.scheme import QuadratureScheme


"""
Scaled negative composite log-likelihoods of the per-point coefficient model.

Every quadrature point u_i carries its own coefficient row beta_i (intercept first) and linear
predictor eta_i = z_i . beta_i.  Both likelihoods are sums of per-point terms, so gradients are
row-separable and the Hessian is block diagonal with rank one blocks c_i z_i z_i'.

    poisson   -1/|D| sum_i [delta_i eta_i - v_i exp(eta_i)]
    logistic  -1/|D| sum_i [delta_i log s(eta_i - log d_i) + (1 - delta_i) log(1 - s(eta_i - log d_i))]
"""


class CoefficientState:
    """ beta as an (M, p + 1) matrix.  The flat form stacks the covariate blocks beta_0, beta_1, ..
    one after another (column major). """

    def __init__(self, beta: FloatArray):
        beta = np.asarray(beta, dtype=float)
        if beta.ndim != 2:
            raise DimensionMismatchError(f"coefficients must be an (M, p + 1) matrix, received shape {beta.shape}")
        if not np.all(np.isfinite(beta)):
            raise DimensionMismatchError("coefficients must be finite")
        self.beta = beta

    @property
    def m(self) -> int:
        return self.beta.shape[0]

    @property
    def n_blocks(self) -> int:
        return self.beta.shape[1]

    def flatten(self) -> FloatArray:
        return self.beta.ravel(order="F")

    @classmethod
    def from_flat(cls, flat: FloatArray, m: int, n_blocks: int) -> "CoefficientState":
        flat = np.asarray(flat, dtype=float)
        if flat.size != m * n_blocks:
            raise DimensionMismatchError(f"{flat.size} values cannot fill {m} x {n_blocks} coefficients")
        return cls(flat.reshape((m, n_blocks), order="F"))

    @classmethod
    def constant(cls, m: int, values: FloatArray) -> "CoefficientState":
        return cls(np.tile(np.asarray(values, dtype=float), (m, 1)))


def _check(quad: QuadratureScheme, beta: FloatArray, kind: str = None) -> FloatArray:
    beta = np.asarray(beta, dtype=float)
    if beta.shape != quad.design.shape:
        raise DimensionMismatchError(f"coefficients have shape {beta.shape}, the scheme needs {quad.design.shape}")
    if kind is not None and quad.kind != kind:
        raise QuadratureKindError(f"a {kind} likelihood needs a {kind} scheme, received {quad.kind}")
    return beta


def linear_predictor(quad: QuadratureScheme, beta: FloatArray, eta_max: float = ETA_MAX) -> FloatArray:
    beta = _check(quad, beta)
    return np.clip(np.einsum("ij,ij->i", quad.design, beta), -eta_max, eta_max)


def poisson_negll(quad: QuadratureScheme, beta: FloatArray, eta_max: float = ETA_MAX) -> float:
    _check(quad, beta, LikelihoodKind.poisson)
    eta = linear_predictor(quad, beta, eta_max)
    # v_i y_i log rho_i is exactly delta_i eta_i
    return -float(np.sum(quad.indicator * eta - quad.weights * np.exp(eta))) / quad.domain_measure


def logistic_negll(quad: QuadratureScheme, beta: FloatArray, eta_max: float = ETA_MAX) -> float:
    _check(quad, beta, LikelihoodKind.logistic)
    s = linear_predictor(quad, beta, eta_max) - quad.log_baseline
    terms = np.where(quad.indicator > 0, np.logaddexp(0.0, -s), np.logaddexp(0.0, s))
    return float(np.sum(terms)) / quad.domain_measure


def negll(quad: QuadratureScheme, beta: FloatArray, eta_max: float = ETA_MAX) -> float:
    if quad.kind == LikelihoodKind.poisson:
        return poisson_negll(quad, beta, eta_max)
    return logistic_negll(quad, beta, eta_max)


def _row_coefficients(quad: QuadratureScheme, beta: FloatArray, eta_max: float):
    """ Per-point first and second derivatives of the scaled loss with respect to eta. """
    eta = linear_predictor(quad, beta, eta_max)
    if quad.kind == LikelihoodKind.poisson:
        mass = quad.weights * np.exp(eta)
        return mass - quad.indicator, mass
    probability = expit(eta - quad.log_baseline)
    return probability - quad.indicator, probability * (1.0 - probability)


def gradient(quad: QuadratureScheme, beta: FloatArray, eta_max: float = ETA_MAX) -> FloatArray:
    """ (M, p + 1) gradient, row i = (dloss/deta_i) z_i / |D|. """
    first, _ = _row_coefficients(quad, beta, eta_max)
    return first[:, None] * quad.design / quad.domain_measure


def lipschitz(quad: QuadratureScheme, beta: FloatArray, eta_max: float = ETA_MAX) -> float:
    """ Largest Hessian eigenvalue at beta: max_i c_i ||z_i||^2 / |D|, floored. """
    _, second = _row_coefficients(quad, beta, eta_max)
    value = float(np.max(second * np.einsum("ij,ij->i", quad.design, quad.design))) / quad.domain_measure
    return max(value, LIPSCHITZ_FLOOR)
