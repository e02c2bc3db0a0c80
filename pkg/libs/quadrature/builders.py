from typing import Optional

import numpy as np

from constants.quadrature_constants import (DEFAULT_BANDWIDTH_FRACTION, DeltaMode, LikelihoodKind,
    MIN_PILOT_CELLS, PILOT_INTENSITY_FLOOR_FRACTION)
from constants.domain_constants import DISTANCE_BLOCK_SIZE
from libs.geometry.domain import Domain
from libs.geometry.locations import Locations
from libs.geometry.subdivision import Subdivision
from libs.internal_types import FloatArray
from libs.point_data.covariates import CovariateField
from libs.point_data.point_pattern import PointPattern
from libs.quadrature.exceptions import BadBandwidthError, DegenerateQuadratureError, EmptyPatternError, QuadratureKindError
from libs.quadrature.scheme import QuadratureScheme
from libs.utils.general_utils import chunked, log


class PilotIntensity:
    """ A piecewise-constant intensity surface, one value per subdivision cell. """

    def __init__(self, subdivision: Subdivision, values: FloatArray):
        self.subdivision = subdivision
        self.values = values

    def at(self, locations: Locations) -> FloatArray:
        return self.values[self.subdivision.locate(locations)]

    def integral(self) -> float:
        return float(np.dot(self.values, self.subdivision.measures))


def berman_turner(
    pattern: PointPattern, nd_target: Optional[int] = None, field: Optional[CovariateField] = None
) -> QuadratureScheme:
    """ Poisson scheme: one dummy at the center of each of ~nd_target cells, v_i = a_i / n_i with n_i
    the number of observed plus dummy points sharing the cell of u_i.  nd_target defaults to n. """
    domain = pattern.domain
    field = field or CovariateField()
    nd_target = _resolve_nd_target(pattern, nd_target)

    subdivision = domain.subdivide(nd_target)
    locations = Locations.concatenate(pattern.locations, subdivision.centers)
    cells = np.concatenate([subdivision.locate(pattern.locations), subdivision.cell_ids])
    if np.any(cells < 0):
        raise DegenerateQuadratureError("an observed point does not fall in any quadrature cell")

    points_per_cell = np.bincount(cells, minlength=subdivision.n_cells)
    weights = subdivision.measures[cells] / points_per_cell[cells]

    field = field if field.is_fitted else field.fit_standardization(locations)
    return QuadratureScheme(
        LikelihoodKind.poisson,
        locations,
        pattern.n,
        field.design_matrix(locations),
        domain.measure(),
        field,
        weights=weights,
        cell_ids=cells,
    )


def logistic_dummies(
    pattern: PointPattern,
    rng: np.random.Generator,
    nd_target: Optional[int] = None,
    field: Optional[CovariateField] = None,
    delta_mode: str = DeltaMode.constant,
    bandwidth: Optional[float] = None,
) -> QuadratureScheme:
    """ Logistic scheme: dummies from a Poisson process with intensity delta(u) and expected count
    nd_target.  The constant mode uses delta = nd_target / |D|, the plugin mode a kernel pilot of
    the pattern rescaled so that its integral is nd_target. """
    domain = pattern.domain
    field = field or CovariateField()
    nd_target = _resolve_nd_target(pattern, nd_target)

    if delta_mode == DeltaMode.constant:
        constant = nd_target / domain.measure()

        def delta_at(locations: Locations) -> FloatArray:
            return np.full(len(locations), constant)

        delta_max = constant
    elif delta_mode == DeltaMode.plugin:
        pilot = pilot_intensity(pattern, bandwidth, domain.subdivide(max(nd_target, MIN_PILOT_CELLS)))
        values = np.maximum(pilot.values, PILOT_INTENSITY_FLOOR_FRACTION * pattern.n / domain.measure())
        values *= nd_target / np.dot(values, pilot.subdivision.measures)
        pilot = PilotIntensity(pilot.subdivision, values)
        delta_at = pilot.at
        delta_max = float(values.max())
    else:
        raise QuadratureKindError(f"unknown delta mode '{delta_mode}', expected one of {DeltaMode.values()}")

    dummies = _sample_dummies(domain, delta_at, delta_max, rng)
    if len(dummies) == 0:
        log.warning("no dummy points were realized, resampling once")
        dummies = _sample_dummies(domain, delta_at, delta_max, rng)
        if len(dummies) == 0:
            raise DegenerateQuadratureError(f"no dummy points realized twice with nd_target={nd_target}")

    locations = Locations.concatenate(pattern.locations, dummies)
    field = field if field.is_fitted else field.fit_standardization(locations)
    return QuadratureScheme(
        LikelihoodKind.logistic,
        locations,
        pattern.n,
        field.design_matrix(locations),
        domain.measure(),
        field,
        baseline=delta_at(locations),
    )


def _sample_dummies(domain: Domain, delta_at, delta_max: float, rng: np.random.Generator) -> Locations:
    # thinning of a homogeneous process at the maximum baseline, exact for piecewise constant delta.
    proposals = domain.sample_uniform(rng.poisson(delta_max * domain.measure()), rng)
    if len(proposals) == 0:
        return proposals
    accept = rng.random(len(proposals)) * delta_max <= delta_at(proposals)
    return proposals[np.flatnonzero(accept)]


def pilot_intensity(pattern: PointPattern, bandwidth: Optional[float], subdivision: Subdivision) -> PilotIntensity:
    """ Gaussian kernel intensity in the domain metric evaluated at the cell centers, without edge
    correction, normalized so that the integral over the cells equals n. """
    if pattern.n == 0:
        raise EmptyPatternError("a pilot intensity needs at least one observed point")
    domain = pattern.domain
    if bandwidth is None:
        bandwidth = DEFAULT_BANDWIDTH_FRACTION * domain.diagonal()
    if not bandwidth > 0:
        raise BadBandwidthError(f"the pilot bandwidth must be positive, received {bandwidth}")

    raw = np.zeros(subdivision.n_cells)
    for start, stop in chunked(pattern.n, DISTANCE_BLOCK_SIZE):
        distances = domain.pairwise_distances(pattern.locations[np.arange(start, stop)], subdivision.centers)
        raw += np.exp(-0.5 * (distances / bandwidth) ** 2).sum(axis=0)

    mass = np.dot(raw, subdivision.measures)
    if not mass > 0:
        # every cell is unreachable or too far for the kernel to register
        raw = np.ones(subdivision.n_cells)
        mass = subdivision.domain_measure
    return PilotIntensity(subdivision, raw * pattern.n / mass)


def build_scheme(
    pattern: PointPattern,
    kind: str,
    nd_target: Optional[int] = None,
    field: Optional[CovariateField] = None,
    rng: Optional[np.random.Generator] = None,
    delta_mode: str = DeltaMode.constant,
    bandwidth: Optional[float] = None,
) -> QuadratureScheme:
    if kind == LikelihoodKind.poisson:
        return berman_turner(pattern, nd_target, field)
    if kind == LikelihoodKind.logistic:
        if rng is None:
            raise QuadratureKindError("logistic schemes are random, an rng is required")
        return logistic_dummies(pattern, rng, nd_target, field, delta_mode, bandwidth)
    raise QuadratureKindError(f"unknown likelihood kind '{kind}', expected one of {LikelihoodKind.values()}")


def _resolve_nd_target(pattern: PointPattern, nd_target: Optional[int]) -> int:
    if nd_target is None:
        nd_target = max(pattern.n, 1)
    if int(nd_target) < 1:
        raise DegenerateQuadratureError(f"nd_target must be at least 1, received {nd_target}")
    return int(nd_target)
