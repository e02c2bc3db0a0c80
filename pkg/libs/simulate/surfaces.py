from typing import Dict, List, Optional, Sequence

import numpy as np
from matplotlib.path import Path

from constants.common_constants import OFFSET_TOLERANCE
from constants.simulation_constants import NETWORK_PRESET_GRID, NETWORK_REGION_SPLIT, PLANAR_BAND_EDGES, SurfacePreset
from libs.geometry.linear_network import LinearNetwork
from libs.geometry.locations import Locations
from libs.internal_types import BoolArray, FloatArray, IntArray, JsonDict
from libs.simulate.exceptions import ScenarioSpecError


class Region:
    """ One piece of a piecewise-constant surface: a geometry plus one value per coefficient.

    geometry keys (exactly one):
        "box":       [xmin, xmax, ymin, ymax], closed, on planar or embedded network coordinates
        "polygon":   [[x, y], ...] outer ring
        "segments":  [[segment], [segment, start, end], ...] offset ranges on a network
        "everywhere": true """

    GEOMETRIES = ("box", "polygon", "segments", "everywhere")

    def __init__(self, geometry: str, shape, values: Sequence[float]):
        if geometry not in self.GEOMETRIES:
            raise ScenarioSpecError(f"unknown region geometry '{geometry}', expected one of {self.GEOMETRIES}")
        self.geometry = geometry
        self.shape = shape
        self.values = np.asarray(values, dtype=float).reshape(-1)
        if not np.all(np.isfinite(self.values)):
            raise ScenarioSpecError("region values must be finite")
        if geometry == "polygon":
            self._path = Path(np.asarray(shape, dtype=float))
        if geometry == "box" and len(shape) != 4:
            raise ScenarioSpecError(f"a box region needs [xmin, xmax, ymin, ymax], received {shape}")

    @classmethod
    def from_dict(cls, spec: JsonDict) -> "Region":
        present = [key for key in cls.GEOMETRIES if key in spec]
        if len(present) != 1:
            raise ScenarioSpecError(f"a region needs exactly one of {cls.GEOMETRIES}, received {sorted(spec)}")
        if "values" not in spec:
            raise ScenarioSpecError("a region needs its coefficient values")
        return cls(present[0], spec[present[0]], spec["values"])

    def as_dict(self) -> JsonDict:
        return {self.geometry: self.shape, "values": [float(v) for v in self.values]}

    def contains(self, locations: Locations) -> BoolArray:
        x, y = locations.coords[:, 0], locations.coords[:, 1]
        if self.geometry == "everywhere":
            return np.ones(len(locations), dtype=bool)
        if self.geometry == "box":
            xmin, xmax, ymin, ymax = self.shape
            return (x >= xmin) & (x <= xmax) & (y >= ymin) & (y <= ymax)
        if self.geometry == "polygon":
            return self._path.contains_points(locations.coords)

        if not locations.on_network:
            raise ScenarioSpecError("segment regions only apply to network locations")
        inside = np.zeros(len(locations), dtype=bool)
        for piece in self.shape:
            hit = locations.segments == int(piece[0])
            if len(piece) == 3:
                hit &= (locations.offsets >= float(piece[1]) - OFFSET_TOLERANCE) & \
                       (locations.offsets <= float(piece[2]) + OFFSET_TOLERANCE)
            inside |= hit
        return inside


class PiecewiseSurface:
    """ Piecewise-constant coefficient surfaces: every location takes the values of the first
    region that contains it, so shared boundaries go to the lowest region id.  Column 0 is the
    intercept. """

    def __init__(self, names: Sequence[str], regions: Sequence[Region]):
        self.names = list(names)
        self.regions = list(regions)
        if not self.regions:
            raise ScenarioSpecError("a surface needs at least one region")
        for index, region in enumerate(self.regions):
            if len(region.values) != len(self.names):
                raise ScenarioSpecError(
                    f"region {index} has {len(region.values)} values for {len(self.names)} coefficients"
                )
        self.table = np.vstack([region.values for region in self.regions])

    @property
    def n_coefficients(self) -> int:
        return len(self.names)

    @classmethod
    def from_dict(cls, spec: JsonDict) -> "PiecewiseSurface":
        return cls(spec.get("names", []), [Region.from_dict(region) for region in spec.get("regions", [])])

    def as_dict(self) -> JsonDict:
        return {"names": self.names, "regions": [region.as_dict() for region in self.regions]}

    def region_ids(self, locations: Locations) -> IntArray:
        ids = np.full(len(locations), -1, dtype=np.int64)
        for index, region in enumerate(self.regions):
            unassigned = ids < 0
            if not unassigned.any():
                break
            ids[unassigned & region.contains(locations)] = index
        if np.any(ids < 0):
            first = np.flatnonzero(ids < 0)[0]
            raise ScenarioSpecError(
                f"{int((ids < 0).sum())} location(s) are in no region, first at {tuple(locations.coords[first])}"
            )
        return ids

    def values_at(self, locations: Locations) -> FloatArray:
        """ (N, n_coefficients) true coefficient values. """
        return self.table[self.region_ids(locations)]

    def labels_at(self, locations: Locations) -> IntArray:
        """ (N, n_coefficients) true cluster labels: per coefficient, locations sharing a value share
        a label. """
        ids = self.region_ids(locations)
        labels = np.empty((len(locations), self.n_coefficients), dtype=np.int64)
        for k in range(self.n_coefficients):
            _, per_region = np.unique(self.table[:, k], return_inverse=True)
            labels[:, k] = per_region.reshape(-1)[ids]
        return labels

    def shifted(self, intercept_shift: float) -> "PiecewiseSurface":
        regions = []
        for region in self.regions:
            values = region.values.copy()
            values[0] += intercept_shift
            regions.append(Region(region.geometry, region.shape, values))
        return PiecewiseSurface(self.names, regions)

    def __repr__(self):
        return f"PiecewiseSurface({self.names}, {len(self.regions)} regions)"


#
## presets
#

def three_band_planar(scale: float, names: Optional[List[str]] = None) -> PiecewiseSurface:
    """ Three vertical bands over [0, R]^2.  The intercept changes at both band edges, the first
    covariate only at the first edge and the second covariate only at the second edge. """
    names = names or ["intercept", "z1", "z2"]
    first, second = (edge * scale for edge in PLANAR_BAND_EDGES)
    values = [
        [0.0, 1.0, 0.5],
        [0.5, -1.0, 0.5],
        [1.0, -1.0, -0.5],
    ]
    boxes = [[0.0, first, 0.0, scale], [first, second, 0.0, scale], [second, scale, 0.0, scale]]
    return PiecewiseSurface(names, [Region("box", box, row[:len(names)]) for box, row in zip(boxes, values)])


def two_region_network(scale: float, with_covariates: bool = False) -> PiecewiseSurface:
    """ West and east halves of [0, R]^2, applied to the embedded network.  Without covariates the
    log intensity jumps by 1 across the split. """
    split = NETWORK_REGION_SPLIT * scale
    if with_covariates:
        names, west, east = ["intercept", "z1", "z2"], [0.0, 1.0, -0.5], [0.5, -1.0, 0.5]
    else:
        names, west, east = ["intercept"], [0.0], [1.0]
    return PiecewiseSurface(names, [
        Region("box", [0.0, split, 0.0, scale], west),
        Region("box", [split, scale, 0.0, scale], east),
    ])


def preset_surface(preset: str, scale: float, with_covariates: bool = True) -> PiecewiseSurface:
    if preset == SurfacePreset.three_band_planar:
        return three_band_planar(scale)
    if preset == SurfacePreset.two_region_network:
        return two_region_network(scale, with_covariates)
    raise ScenarioSpecError(f"unknown surface preset '{preset}', expected one of {SurfacePreset.values()}")


def street_grid_network(scale: float, per_side: int = NETWORK_PRESET_GRID) -> LinearNetwork:
    """ A square street grid with per_side vertices per side spanning [0, R]^2, with two blocks
    left out so that the network is not perfectly regular. """
    if per_side < 3:
        raise ScenarioSpecError(f"a street grid needs at least 3 vertices per side, received {per_side}")
    ticks = np.linspace(0.0, scale, per_side)
    grid_x, grid_y = np.meshgrid(ticks, ticks)
    vertices = np.column_stack([grid_x.ravel(), grid_y.ravel()])

    def vertex(row: int, col: int) -> int:
        return row * per_side + col

    segments = []
    for row in range(per_side):
        for col in range(per_side - 1):
            segments.append((vertex(row, col), vertex(row, col + 1)))
    for col in range(per_side):
        for row in range(per_side - 1):
            segments.append((vertex(row, col), vertex(row + 1, col)))
    # drop one interior horizontal and one interior vertical street piece
    middle = per_side // 2
    removed = {(vertex(middle, 1), vertex(middle, 2)), (vertex(1, middle), vertex(2, middle))}
    segments = [segment for segment in segments if segment not in removed]
    return LinearNetwork(vertices, np.array(segments, dtype=np.int64))
