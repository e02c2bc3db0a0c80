from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.spatial import cKDTree

from libs.geometry.locations import DomainLocation, Locations
from libs.internal_types import FloatArray
from libs.point_data.exceptions import CovariateShapeError, MissingCovariateError
from libs.utils.general_utils import log


class Covariate:
    """ A named spatial covariate z_k(u).  Subclasses implement raw_values, which returns NaN where
    the covariate has no data. """

    name: str

    def raw_values(self, locations: Locations) -> FloatArray:
        raise NotImplementedError


class RasterCovariate(Covariate):
    """ Pixel values over a rectangle, values[row, column] with row 0 at the bottom.  Network
    locations read the pixel under their planar embedding.  NaN marks missing data. """

    def __init__(self, name: str, x_range: Tuple[float, float], y_range: Tuple[float, float], values: FloatArray):
        values = np.asarray(values, dtype=float)
        if values.ndim != 2 or values.size == 0:
            raise CovariateShapeError(f"raster '{name}' must be a non-empty 2d grid, received shape {values.shape}")
        if not (x_range[1] > x_range[0] and y_range[1] > y_range[0]):
            raise CovariateShapeError(f"raster '{name}' has an empty extent")
        self.name = name
        self.x_range = (float(x_range[0]), float(x_range[1]))
        self.y_range = (float(y_range[0]), float(y_range[1]))
        self.values = values
        self.ny, self.nx = values.shape

    def raw_values(self, locations: Locations) -> FloatArray:
        x, y = locations.coords[:, 0], locations.coords[:, 1]
        dx = (self.x_range[1] - self.x_range[0]) / self.nx
        dy = (self.y_range[1] - self.y_range[0]) / self.ny
        inside = (x >= self.x_range[0]) & (x <= self.x_range[1]) & (y >= self.y_range[0]) & (y <= self.y_range[1])
        ix = np.clip(np.floor((x - self.x_range[0]) / dx), 0, self.nx - 1).astype(np.int64)
        iy = np.clip(np.floor((y - self.y_range[0]) / dy), 0, self.ny - 1).astype(np.int64)
        return np.where(inside, self.values[iy, ix], np.nan)


class SegmentCovariate(Covariate):
    """ Piecewise-constant values along network segments.  Pieces are (segment, start, end, value)
    offset ranges, the first matching piece wins; segments without a piece use segment_values. """

    def __init__(
        self,
        name: str,
        segment_values: FloatArray,
        pieces: Sequence[Tuple[int, float, float, float]] = (),
    ):
        self.name = name
        self.segment_values = np.asarray(segment_values, dtype=float).reshape(-1)
        self.pieces = [(int(s), float(a), float(b), float(v)) for s, a, b, v in pieces]

    def raw_values(self, locations: Locations) -> FloatArray:
        if not locations.on_network:
            raise CovariateShapeError(f"segment covariate '{self.name}' needs network locations")
        segments, offsets = locations.segments, locations.offsets
        known = (segments >= 0) & (segments < len(self.segment_values))
        values = np.where(known, self.segment_values[np.clip(segments, 0, len(self.segment_values) - 1)], np.nan)
        assigned = np.zeros(len(locations), dtype=bool)
        for segment, start, end, value in self.pieces:
            hit = ~assigned & (segments == segment) & (offsets >= start) & (offsets <= end)
            values[hit] = value
            assigned |= hit
        return values


class PointColumnCovariate(Covariate):
    """ Values supplied at given locations, usually a column of the point file.  Any location reads
    the value of the nearest supplied location (Euclidean, on the planar embedding). """

    def __init__(self, name: str, locations: Locations, values: FloatArray):
        values = np.asarray(values, dtype=float).reshape(-1)
        if len(values) != len(locations):
            raise CovariateShapeError(f"column '{name}' has {len(values)} values for {len(locations)} locations")
        if len(values) == 0:
            raise CovariateShapeError(f"column '{name}' is empty")
        self.name = name
        self.values = values
        self._tree = cKDTree(locations.coords)

    def raw_values(self, locations: Locations) -> FloatArray:
        if len(locations) == 0:
            return np.zeros(0)
        _, nearest = self._tree.query(locations.coords, k=1)
        return self.values[nearest]


class CovariateField:
    """ The p covariates of a model plus their standardization.  With standardize on, means and
    standard deviations are estimated over the quadrature points (fit_standardization) and every
    evaluation returns (z - mean) / sd.  The intercept is not part of the field. """

    def __init__(
        self,
        covariates: Sequence[Covariate] = (),
        standardize: bool = True,
        means: Optional[FloatArray] = None,
        sds: Optional[FloatArray] = None,
    ):
        self.covariates: List[Covariate] = list(covariates)
        names = self.names
        if len(set(names)) != len(names):
            raise CovariateShapeError(f"covariate names must be unique, received {names}")
        self.standardize = standardize
        self.means = None if means is None else np.asarray(means, dtype=float).reshape(-1)
        self.sds = None if sds is None else np.asarray(sds, dtype=float).reshape(-1)
        if (self.means is None) != (self.sds is None):
            raise CovariateShapeError("means and sds must be provided together")
        if self.means is not None:
            if len(self.means) != self.p or len(self.sds) != self.p:
                raise CovariateShapeError(f"standardization needs {self.p} means and sds")
            if np.any(self.sds <= 0) or not np.all(np.isfinite(self.means)):
                raise CovariateShapeError("standardization sds must be positive and means finite")

    @property
    def p(self) -> int:
        return len(self.covariates)

    @property
    def names(self) -> List[str]:
        return [covariate.name for covariate in self.covariates]

    @property
    def is_fitted(self) -> bool:
        return not self.standardize or self.means is not None

    def raw_at(self, locations: Locations, allow_missing: bool = False) -> FloatArray:
        """ (N, p) raw covariate values.  Missing values raise MissingCovariateError unless
        allow_missing, in which case they are NaN. """
        out = np.empty((len(locations), self.p))
        for k, covariate in enumerate(self.covariates):
            out[:, k] = covariate.raw_values(locations)
            missing = ~np.isfinite(out[:, k])
            if missing.any() and not allow_missing:
                first = np.flatnonzero(missing)[0]
                raise MissingCovariateError(
                    f"covariate '{covariate.name}' has no data at {missing.sum()} location(s), "
                    f"first at ({locations.coords[first, 0]}, {locations.coords[first, 1]})"
                )
        return out

    def fit_standardization(self, locations: Locations) -> "CovariateField":
        """ A copy of the field standardized by the mean and population sd over locations.  A
        constant covariate keeps sd 1. """
        if not self.standardize or self.p == 0:
            return CovariateField(self.covariates, self.standardize, self.means, self.sds)
        raw = self.raw_at(locations)
        means = raw.mean(axis=0)
        sds = raw.std(axis=0)
        constant = sds <= 1e-12 * np.maximum(1.0, np.abs(means))
        for k in np.flatnonzero(constant):
            log.warning(f"covariate '{self.names[k]}' is constant over the quadrature points, it is centered only")
        sds[constant] = 1.0
        return CovariateField(self.covariates, True, means, sds)

    def covariates_at(self, locations: Locations, allow_missing: bool = False) -> FloatArray:
        """ (N, p) model covariates: raw values, standardized when the field standardizes. """
        raw = self.raw_at(locations, allow_missing)
        if not self.standardize or self.p == 0:
            return raw
        if self.means is None:
            raise CovariateShapeError("standardization has not been fitted, call fit_standardization first")
        return (raw - self.means) / self.sds

    def covariate_at(self, u: DomainLocation) -> FloatArray:
        return self.covariates_at(Locations.from_domain_locations([u], on_network=u.on_network))[0]

    def design_matrix(self, locations: Locations) -> FloatArray:
        """ (N, p + 1) with the intercept column of ones first. """
        return np.column_stack([np.ones(len(locations)), self.covariates_at(locations)])

    def back_transform(self, beta: FloatArray) -> FloatArray:
        """ Maps coefficients on the standardized scale (N, p + 1) to the raw covariate scale. """
        beta = np.asarray(beta, dtype=float)
        if beta.shape[-1] != self.p + 1:
            raise CovariateShapeError(f"expected {self.p + 1} coefficient columns, received {beta.shape[-1]}")
        if not self.standardize or self.p == 0:
            return beta.copy()
        raw = np.empty_like(beta)
        raw[..., 1:] = beta[..., 1:] / self.sds
        raw[..., 0] = beta[..., 0] - (beta[..., 1:] * self.means / self.sds).sum(axis=-1)
        return raw

    def metadata(self) -> dict:
        return {
            "names": self.names,
            "standardize": self.standardize,
            "means": None if self.means is None else [float(v) for v in self.means],
            "sds": None if self.sds is None else [float(v) for v in self.sds],
        }

    def __repr__(self):
        return f"CovariateField({self.names}, standardize={self.standardize})"
