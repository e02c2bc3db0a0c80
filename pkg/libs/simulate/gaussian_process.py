from typing import Optional, Union

import numpy as np
from scipy.linalg import LinAlgError, cholesky
from scipy.spatial.distance import pdist, squareform

from constants.common_constants import SeedComponent
from constants.simulation_constants import (DEFAULT_COVARIATE_RESOLUTION, DEFAULT_GP_VARIANCE, GP_JITTER,
    GP_JITTER_GROWTH, GP_JITTER_RETRIES, GP_MAX_LOCATIONS)
from libs.geometry.domain import Domain
from libs.geometry.locations import Locations
from libs.internal_types import FloatArray
from libs.point_data.covariates import RasterCovariate
from libs.simulate.exceptions import GaussianProcessError
from libs.simulate.poisson import as_generator
from libs.utils.general_utils import log


def exponential_covariance(coords: FloatArray, variance: float, range_: float) -> FloatArray:
    return variance * np.exp(-squareform(pdist(coords)) / range_)


def simulate_gp(
    locations: Union[Locations, FloatArray],
    variance: float = DEFAULT_GP_VARIANCE,
    range_: float = 1.0,
    seed: Union[int, np.random.Generator] = 0,
) -> FloatArray:
    """ One draw of a zero-mean Gaussian process with covariance variance * exp(-|u - v| / range_)
    at the given locations (Euclidean distance between planar coordinates, network locations use
    their embedding).  Dense Cholesky with GP_JITTER on the diagonal, grown by GP_JITTER_GROWTH on
    failure up to GP_JITTER_RETRIES times. """
    coords = locations.coords if isinstance(locations, Locations) else np.asarray(locations, dtype=float).reshape(-1, 2)
    if not variance > 0 or not range_ > 0:
        raise GaussianProcessError(f"variance and range must be positive, received {variance} and {range_}")
    n = len(coords)
    if n == 0:
        return np.zeros(0)
    if n > GP_MAX_LOCATIONS:
        raise GaussianProcessError(f"{n} locations is too many for a dense factorization (max {GP_MAX_LOCATIONS})")
    if n > 1 and pdist(coords).min() == 0:
        raise GaussianProcessError("gaussian process locations must be distinct")

    rng = as_generator(seed, SeedComponent.covariate_field)
    covariance = exponential_covariance(coords, variance, range_)
    jitter = GP_JITTER * variance
    for attempt in range(GP_JITTER_RETRIES + 1):
        try:
            factor = cholesky(covariance + jitter * np.eye(n), lower=True)
            break
        except LinAlgError:
            log.warning(f"gaussian process covariance is not positive definite with jitter {jitter:.1e}")
            jitter *= GP_JITTER_GROWTH
    else:
        raise GaussianProcessError(f"covariance factorization failed after {GP_JITTER_RETRIES} jitter escalations")
    return factor @ rng.standard_normal(n)


def gp_raster(
    name: str,
    domain: Domain,
    variance: float,
    range_: float,
    seed: Union[int, np.random.Generator],
    resolution: Optional[int] = None,
) -> RasterCovariate:
    """ A GP covariate simulated at the pixel centers of a resolution x resolution lattice over the
    domain's bounding box and read back as a raster (piecewise constant per pixel). """
    resolution = int(resolution or DEFAULT_COVARIATE_RESOLUTION)
    xmin, xmax, ymin, ymax = domain.bounding_box()
    xs = xmin + (np.arange(resolution) + 0.5) * (xmax - xmin) / resolution
    ys = ymin + (np.arange(resolution) + 0.5) * (ymax - ymin) / resolution
    grid_x, grid_y = np.meshgrid(xs, ys)
    values = simulate_gp(np.column_stack([grid_x.ravel(), grid_y.ravel()]), variance, range_, seed)
    return RasterCovariate(name, (xmin, xmax), (ymin, ymax), values.reshape(resolution, resolution))
