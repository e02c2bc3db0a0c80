from typing import Optional

import numpy as np

from constants.quadrature_constants import LikelihoodKind
from libs.exceptions import DimensionMismatchError
from libs.geometry.locations import Locations
from libs.internal_types import FloatArray, IntArray
from libs.point_data.covariates import CovariateField
from libs.quadrature.exceptions import DegenerateQuadratureError, NonPositiveBaselineError, QuadratureKindError


class QuadratureScheme:
    """ Observed points followed by dummy points, with everything both composite likelihoods need.

    poisson:   weights v_i > 0 (sum to |D|), responses y_i = delta_i / v_i
    logistic:  baseline intensities delta(u_i) > 0 of the dummy process

    design is the (M, p + 1) covariate matrix with the intercept column first, evaluated with the
    (fitted) covariate field carried in `field`. """

    def __init__(
        self,
        kind: str,
        locations: Locations,
        n_observed: int,
        design: FloatArray,
        domain_measure: float,
        field: CovariateField,
        weights: Optional[FloatArray] = None,
        baseline: Optional[FloatArray] = None,
        cell_ids: Optional[IntArray] = None,
    ):
        if kind not in LikelihoodKind.values():
            raise QuadratureKindError(f"unknown likelihood kind '{kind}'")
        m = len(locations)
        if design.shape != (m, field.p + 1):
            raise DimensionMismatchError(f"design has shape {design.shape}, expected {(m, field.p + 1)}")
        if not 0 <= n_observed <= m:
            raise DegenerateQuadratureError(f"{n_observed} observed points out of {m}")

        indicator = np.zeros(m)
        indicator[:n_observed] = 1.0

        if kind == LikelihoodKind.poisson:
            if weights is None or len(weights) != m:
                raise DegenerateQuadratureError("a poisson scheme needs one weight per point")
            if np.any(weights <= 0):
                raise DegenerateQuadratureError("poisson quadrature weights must be positive")
        else:
            if baseline is None or len(baseline) != m:
                raise DegenerateQuadratureError("a logistic scheme needs one baseline value per point")
            if np.any(~(baseline > 0)):
                raise NonPositiveBaselineError("logistic baseline intensities must be positive")

        self.kind = kind
        self.locations = locations
        self.n = int(n_observed)
        self.indicator = indicator
        self.design = design
        self.domain_measure = float(domain_measure)
        self.field = field
        self.weights = None if weights is None else np.asarray(weights, dtype=float)
        self.baseline = None if baseline is None else np.asarray(baseline, dtype=float)
        self.cell_ids = cell_ids
        for array in (self.indicator, self.design, self.weights, self.baseline):
            if array is not None:
                array.setflags(write=False)

    @property
    def m(self) -> int:
        return len(self.locations)

    @property
    def nd(self) -> int:
        return self.m - self.n

    @property
    def p(self) -> int:
        return self.field.p

    @property
    def responses(self) -> FloatArray:
        """ y_i = delta_i / v_i on poisson schemes, the indicator itself on logistic ones. """
        if self.kind == LikelihoodKind.poisson:
            return self.indicator / self.weights
        return self.indicator.copy()

    @property
    def log_baseline(self) -> FloatArray:
        if self.baseline is None:
            raise QuadratureKindError("only logistic schemes carry a baseline")
        return np.log(self.baseline)

    def __repr__(self):
        return f"QuadratureScheme({self.kind}, n={self.n}, nd={self.nd}, p={self.p})"
