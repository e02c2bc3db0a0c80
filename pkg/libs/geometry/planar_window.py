from typing import List, Optional, Sequence, Tuple

import numpy as np
from matplotlib.path import Path
from scipy.spatial import cKDTree
from scipy.spatial.distance import cdist

from constants.domain_constants import DomainType
from libs.geometry.domain import Domain
from libs.geometry.exceptions import DomainConstructionError
from libs.geometry.locations import Locations
from libs.geometry.subdivision import Subdivision
from libs.internal_types import BoolArray, FloatArray, IntArray


class PlanarWindow(Domain):
    """ A bounding rectangle covered by an nx by ny pixel grid.  The boolean mask (indexed
    [row iy, column ix], row 0 at the bottom) marks active pixels, which is how irregular boundaries
    and holes are represented. """

    kind = DomainType.planar

    def __init__(
        self,
        x_range: Tuple[float, float],
        y_range: Tuple[float, float],
        nx: int = 1,
        ny: int = 1,
        mask: Optional[np.ndarray] = None,
        units: str = "",
    ):
        x0, x1 = float(x_range[0]), float(x_range[1])
        y0, y1 = float(y_range[0]), float(y_range[1])
        if not (x1 > x0 and y1 > y0):
            raise DomainConstructionError(f"empty bounding rectangle {x_range} x {y_range}")
        if int(nx) < 1 or int(ny) < 1:
            raise DomainConstructionError(f"pixel grid must be at least 1x1, received {nx}x{ny}")
        nx, ny = int(nx), int(ny)
        if mask is None:
            mask = np.ones((ny, nx), dtype=bool)
        mask = np.asarray(mask, dtype=bool)
        if mask.shape != (ny, nx):
            raise DomainConstructionError(f"mask shape {mask.shape} does not match grid {(ny, nx)}")
        if not mask.any():
            raise DomainConstructionError("a planar window needs at least one active pixel")

        self.x_range = (x0, x1)
        self.y_range = (y0, y1)
        self.nx = nx
        self.ny = ny
        self.units = units
        self.mask = mask.copy()
        self.mask.setflags(write=False)
        self.dx = (x1 - x0) / nx
        self.dy = (y1 - y0) / ny

    @classmethod
    def from_polygon(
        cls,
        x_range: Tuple[float, float],
        y_range: Tuple[float, float],
        nx: int,
        ny: int,
        rings: Sequence[Sequence[Sequence[float]]],
        units: str = "",
    ) -> "PlanarWindow":
        """ Rasterizes a polygon given as rings (the first ring is the outer boundary, any further
        rings are holes).  A pixel is active when its center is inside the polygon. """
        if not rings:
            raise DomainConstructionError("a polygon needs at least an outer ring")
        xs = x_range[0] + (np.arange(nx) + 0.5) * (x_range[1] - x_range[0]) / nx
        ys = y_range[0] + (np.arange(ny) + 0.5) * (y_range[1] - y_range[0]) / ny
        grid_x, grid_y = np.meshgrid(xs, ys)
        centers = np.column_stack([grid_x.ravel(), grid_y.ravel()])

        inside = Path(np.asarray(rings[0], dtype=float)).contains_points(centers)
        for hole in rings[1:]:
            inside &= ~Path(np.asarray(hole, dtype=float)).contains_points(centers)
        return cls(x_range, y_range, nx, ny, inside.reshape(ny, nx), units)

    #
    ## Domain interface
    #

    @property
    def pixel_area(self) -> float:
        return self.dx * self.dy

    def measure(self) -> float:
        return float(self.mask.sum()) * self.pixel_area

    def bounding_box(self) -> Tuple[float, float, float, float]:
        return self.x_range[0], self.x_range[1], self.y_range[0], self.y_range[1]

    def pixel_index(self, coords: FloatArray) -> Tuple[IntArray, IntArray, BoolArray]:
        """ Column and row of the pixel containing each coordinate, and whether the coordinate is
        inside the bounding rectangle at all.  The upper and right edges belong to the last pixel. """
        coords = np.asarray(coords, dtype=float).reshape(-1, 2)
        x, y = coords[:, 0], coords[:, 1]
        in_box = (x >= self.x_range[0]) & (x <= self.x_range[1]) & \
                 (y >= self.y_range[0]) & (y <= self.y_range[1])
        ix = np.clip(np.floor((x - self.x_range[0]) / self.dx), 0, self.nx - 1).astype(np.int64)
        iy = np.clip(np.floor((y - self.y_range[0]) / self.dy), 0, self.ny - 1).astype(np.int64)
        return ix, iy, in_box

    def contains(self, locations: Locations) -> BoolArray:
        if locations.on_network:
            return np.zeros(len(locations), dtype=bool)
        ix, iy, in_box = self.pixel_index(locations.coords)
        return in_box & self.mask[iy, ix]

    def pairwise_distances(self, a: Locations, b: Locations) -> FloatArray:
        if len(a) == 0 or len(b) == 0:
            return np.zeros((len(a), len(b)))
        return cdist(a.coords, b.coords)

    def nearest_neighbors(self, query: Locations, reference: Locations, k: int, exclude_self: bool = False):
        n_ref = len(reference) - (1 if exclude_self else 0)
        k = min(k, n_ref)
        tree = cKDTree(reference.coords)
        extra = 1 if exclude_self else 0
        distances, indices = tree.query(query.coords, k=k + extra)
        distances = np.asarray(distances, dtype=float).reshape(len(query), k + extra)
        indices = np.asarray(indices, dtype=np.int64).reshape(len(query), k + extra)
        if exclude_self:
            # coincident points can come back before the query point itself, drop the self match
            # wherever it is and otherwise the farthest candidate.
            keep = np.ones_like(indices, dtype=bool)
            rows = np.arange(len(query))
            is_self = indices == rows[:, None]
            has_self = is_self.any(axis=1)
            keep[is_self] = False
            keep[~has_self, -1] = False
            distances = distances[keep].reshape(len(query), k)
            indices = indices[keep].reshape(len(query), k)
        return distances, indices

    def pairs_within(self, locations: Locations, radius: float):
        tree = cKDTree(locations.coords)
        pairs = tree.query_pairs(radius, output_type="ndarray").astype(np.int64)
        if len(pairs) == 0:
            return np.zeros((0, 2), dtype=np.int64), np.zeros(0)
        pairs = np.sort(pairs, axis=1)
        pairs = pairs[np.lexsort((pairs[:, 1], pairs[:, 0]))]
        weights = np.linalg.norm(locations.coords[pairs[:, 0]] - locations.coords[pairs[:, 1]], axis=1)
        return pairs, weights

    def sample_uniform(self, count: int, rng: np.random.Generator) -> Locations:
        # all active pixels have the same area, so a uniform pixel then a uniform offset is uniform.
        active_rows, active_cols = np.nonzero(self.mask)
        picks = rng.integers(0, len(active_rows), size=count)
        u = rng.random((count, 2))
        x = self.x_range[0] + (active_cols[picks] + u[:, 0]) * self.dx
        y = self.y_range[0] + (active_rows[picks] + u[:, 1]) * self.dy
        return Locations(np.column_stack([x, y]))

    def subdivide(self, target_cell_count: int) -> Subdivision:
        """ Equal rectangular cells over the bounding rectangle, restricted to the active mask.
        Cell measures are the exact active area inside each cell, so they add up to the measure. """
        target_cell_count = max(int(target_cell_count), 1)
        width = self.x_range[1] - self.x_range[0]
        height = self.y_range[1] - self.y_range[0]
        side = np.sqrt(self.measure() / target_cell_count)
        kx = max(1, int(round(width / side)))
        ky = max(1, int(round(height / side)))
        return self.subdivide_grid(kx, ky)

    def subdivide_grid(self, kx: int, ky: int) -> Subdivision:
        cell_x = np.linspace(self.x_range[0], self.x_range[1], kx + 1)
        cell_y = np.linspace(self.y_range[0], self.y_range[1], ky + 1)
        pixel_x = np.linspace(self.x_range[0], self.x_range[1], self.nx + 1)
        pixel_y = np.linspace(self.y_range[0], self.y_range[1], self.ny + 1)
        overlap_x = _interval_overlaps(cell_x, pixel_x)  # (kx, nx)
        overlap_y = _interval_overlaps(cell_y, pixel_y)  # (ky, ny)

        # active area of cell (j, i) = sum over pixels of overlap_y[j, b] * mask[b, a] * overlap_x[i, a]
        areas = overlap_y @ self.mask.astype(float) @ overlap_x.T  # (ky, kx)
        full_cell_area = (cell_x[1] - cell_x[0]) * (cell_y[1] - cell_y[0])
        active = areas > 1e-12 * full_cell_area

        cell_lookup = np.full((ky, kx), -1, dtype=np.int64)
        rows, cols = np.nonzero(active)
        cell_lookup[rows, cols] = np.arange(len(rows))

        centers = np.column_stack([
            0.5 * (cell_x[cols] + cell_x[cols + 1]),
            0.5 * (cell_y[rows] + cell_y[rows + 1]),
        ])
        # partially active cells may have their rectangle center on an inactive pixel, those get the
        # center of their largest active piece instead.
        center_inside = self.contains(Locations(centers))
        for cell in np.flatnonzero(~center_inside):
            centers[cell] = self._largest_piece_center(
                rows[cell], cols[cell], overlap_x, overlap_y, cell_x, cell_y, pixel_x, pixel_y
            )

        def locator(locations: Locations) -> IntArray:
            x, y = locations.coords[:, 0], locations.coords[:, 1]
            i = np.clip(np.searchsorted(cell_x, x, side="right") - 1, 0, kx - 1)
            j = np.clip(np.searchsorted(cell_y, y, side="right") - 1, 0, ky - 1)
            return cell_lookup[j, i]

        return Subdivision(Locations(centers), areas[rows, cols], locator, self.measure())

    def _largest_piece_center(self, row, col, overlap_x, overlap_y, cell_x, cell_y, pixel_x, pixel_y):
        pieces = np.outer(overlap_y[row], overlap_x[col]) * self.mask
        b, a = np.unravel_index(np.argmax(pieces), pieces.shape)
        x_lo, x_hi = max(cell_x[col], pixel_x[a]), min(cell_x[col + 1], pixel_x[a + 1])
        y_lo, y_hi = max(cell_y[row], pixel_y[b]), min(cell_y[row + 1], pixel_y[b + 1])
        return 0.5 * (x_lo + x_hi), 0.5 * (y_lo + y_hi)

    def pixel_centers(self) -> List[Tuple[float, float]]:
        rows, cols = np.nonzero(self.mask)
        return list(zip(self.x_range[0] + (cols + 0.5) * self.dx, self.y_range[0] + (rows + 0.5) * self.dy))

    def __repr__(self):
        return (f"PlanarWindow(x={self.x_range}, y={self.y_range}, grid={self.nx}x{self.ny}, "
                f"active={int(self.mask.sum())})")


def _interval_overlaps(edges_a: FloatArray, edges_b: FloatArray) -> FloatArray:
    """ Length of the overlap of every interval of partition a with every interval of partition b. """
    lo = np.maximum(edges_a[:-1, None], edges_b[None, :-1])
    hi = np.minimum(edges_a[1:, None], edges_b[None, 1:])
    return np.clip(hi - lo, 0.0, None)
