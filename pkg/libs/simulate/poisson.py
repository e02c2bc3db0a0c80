from typing import Callable, Union

import numpy as np

from constants.common_constants import SeedComponent
from constants.domain_constants import DomainType
from constants.simulation_constants import (THINNING_BOUND_INFLATION, THINNING_CELLS, THINNING_MAX_ESCALATIONS,
    THINNING_PROBES_PER_CELL)
from libs.geometry.domain import Domain
from libs.geometry.locations import Locations
from libs.geometry.subdivision import Subdivision
from libs.internal_types import FloatArray
from libs.point_data.point_pattern import PointPattern
from libs.simulate.exceptions import UnboundedIntensityError
from libs.utils.general_utils import component_rng, log


IntensityFunction = Callable[[Locations], FloatArray]


def as_generator(seed_or_rng: Union[int, np.random.Generator], component: int) -> np.random.Generator:
    if isinstance(seed_or_rng, np.random.Generator):
        return seed_or_rng
    return component_rng(seed_or_rng, component)


def simulate_poisson(
    domain: Domain,
    intensity_fn: IntensityFunction,
    seed: Union[int, np.random.Generator],
    n_cells: int = THINNING_CELLS,
) -> PointPattern:
    """ An inhomogeneous Poisson pattern with intensity intensity_fn, simulated by thinning.

    Every cell of a subdivision gets a bound rho_max estimated from the cell center and random
    probes, inflated by THINNING_BOUND_INFLATION.  Candidates from a homogeneous process at the
    largest bound are first thinned down to a homogeneous process at their cell's bound, then
    accepted with probability rho(u) / rho_max(cell).  A candidate above its cell's bound raises
    that cell's bound and the draw starts over, at most THINNING_MAX_ESCALATIONS times.

    An int seed draws from the simulated-pattern stream of that seed. """
    rng = as_generator(seed, SeedComponent.simulated_pattern)
    subdivision = domain.subdivide(n_cells)
    bounds = _cell_bounds(domain, subdivision, intensity_fn, rng)

    for escalation in range(THINNING_MAX_ESCALATIONS + 1):
        top = float(bounds.max())
        if top <= 0:
            return PointPattern(Locations.empty(domain.kind == DomainType.network), domain)

        count = rng.poisson(top * domain.measure())
        candidates = domain.sample_uniform(count, rng)
        cells = subdivision.locate(candidates)
        keep = np.flatnonzero(rng.random(count) * top < bounds[cells])
        candidates, cells = candidates[keep], cells[keep]

        values = _evaluate(intensity_fn, candidates)
        over = values > bounds[cells]
        if not over.any():
            accept = np.flatnonzero(rng.random(len(values)) * bounds[cells] < values)
            return PointPattern(candidates[accept], domain)

        for cell in np.unique(cells[over]):
            bounds[cell] = THINNING_BOUND_INFLATION * max(bounds[cell], values[over & (cells == cell)].max())
        # the whole draw is discarded, the next one runs at the raised bounds and continues the same
        # random stream, so the seed still fixes the pattern
        log.warning(
            f"intensity exceeded its thinning bound in {len(np.unique(cells[over]))} cell(s), "
            f"raised the bounds and redrawing ({escalation + 1}/{THINNING_MAX_ESCALATIONS})"
        )

    raise UnboundedIntensityError(
        f"the intensity kept exceeding its thinning bounds after {THINNING_MAX_ESCALATIONS} escalations"
    )


def _cell_bounds(domain: Domain, subdivision: Subdivision, intensity_fn: IntensityFunction,
                 rng: np.random.Generator) -> FloatArray:
    probes = domain.sample_uniform(THINNING_PROBES_PER_CELL * subdivision.n_cells, rng)
    probes = Locations.concatenate(subdivision.centers, probes)
    values = _evaluate(intensity_fn, probes)
    cells = subdivision.locate(probes)

    bounds = np.full(subdivision.n_cells, -np.inf)
    np.maximum.at(bounds, cells, values)
    bounds[~np.isfinite(bounds)] = values.max()
    return THINNING_BOUND_INFLATION * bounds


def _evaluate(intensity_fn: IntensityFunction, locations: Locations) -> FloatArray:
    if len(locations) == 0:
        return np.zeros(0)
    values = np.asarray(intensity_fn(locations), dtype=float).reshape(-1)
    if len(values) != len(locations):
        raise UnboundedIntensityError(f"the intensity returned {len(values)} values for {len(locations)} locations")
    if not np.all(np.isfinite(values)):
        raise UnboundedIntensityError("the intensity is not finite everywhere on the domain")
    if np.any(values < 0):
        raise UnboundedIntensityError("the intensity is negative somewhere on the domain")
    return values
