from threading import Lock
from typing import List, Optional, Tuple

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import dijkstra

from constants.common_constants import OFFSET_TOLERANCE
from constants.domain_constants import DISTANCE_BLOCK_SIZE, DomainType
from libs.geometry.domain import Domain
from libs.geometry.exceptions import DomainConstructionError
from libs.geometry.locations import Locations
from libs.geometry.subdivision import Subdivision
from libs.internal_types import BoolArray, FloatArray, IntArray
from libs.utils.general_utils import chunked


# the all-pairs vertex distance matrix is kept in memory up to this many vertices, larger networks
# run single-source searches per distance block instead.
FULL_VERTEX_MATRIX_LIMIT = 3000


class LinearNetwork(Domain):
    """ A finite union of straight line segments between planar vertices, measured by length and
    metrized by shortest paths along the segments.  A location on the network is a segment id plus
    the offset from the segment's first vertex. """

    kind = DomainType.network

    def __init__(self, vertices: FloatArray, segments: IntArray, units: str = ""):
        vertices = np.asarray(vertices, dtype=float).reshape(-1, 2)
        segments = np.asarray(segments, dtype=np.int64).reshape(-1, 2)
        if len(segments) == 0:
            raise DomainConstructionError("a linear network needs at least one segment")
        if segments.min() < 0 or segments.max() >= len(vertices):
            raise DomainConstructionError("segment endpoints must reference existing vertices")
        if not np.all(np.isfinite(vertices)):
            raise DomainConstructionError("vertex coordinates must be finite")

        lengths = np.linalg.norm(vertices[segments[:, 1]] - vertices[segments[:, 0]], axis=1)
        if np.any(lengths <= 0):
            bad = np.flatnonzero(lengths <= 0)[0]
            raise DomainConstructionError(f"segment {bad} has zero length")

        self.vertices = vertices
        self.segments = segments
        self.lengths = lengths
        self.units = units
        for array in (self.vertices, self.segments, self.lengths):
            array.setflags(write=False)

        # vertex -> incident segment ids
        self.incident_segments: List[List[int]] = [[] for _ in range(len(vertices))]
        for segment_id, (a, b) in enumerate(segments):
            self.incident_segments[a].append(segment_id)
            if b != a:
                self.incident_segments[b].append(segment_id)

        self._vertex_graph = self._build_vertex_graph()
        self._vertex_distance_lock = Lock()
        self._vertex_distance_matrix: Optional[FloatArray] = None

    def _build_vertex_graph(self) -> csr_matrix:
        # parallel segments between the same vertex pair only contribute their shortest length.
        a = np.minimum(self.segments[:, 0], self.segments[:, 1])
        b = np.maximum(self.segments[:, 0], self.segments[:, 1])
        order = np.lexsort((self.lengths, b, a))
        a, b, lengths = a[order], b[order], self.lengths[order]
        first = np.ones(len(a), dtype=bool)
        first[1:] = (a[1:] != a[:-1]) | (b[1:] != b[:-1])
        a, b, lengths = a[first], b[first], lengths[first]
        n = len(self.vertices)
        return csr_matrix((lengths, (a, b)), shape=(n, n))

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_segments(self) -> int:
        return len(self.segments)

    #
    ## shortest paths between vertices
    #

    def vertex_distance_rows(self, vertex_ids: IntArray) -> FloatArray:
        """ Shortest-path distances from each of vertex_ids to every vertex, +inf when unreachable. """
        vertex_ids = np.asarray(vertex_ids, dtype=np.int64)
        if self.n_vertices <= FULL_VERTEX_MATRIX_LIMIT:
            return self.vertex_distances()[vertex_ids]
        return np.atleast_2d(dijkstra(self._vertex_graph, directed=False, indices=vertex_ids))

    def vertex_distances(self) -> FloatArray:
        """ The all-pairs vertex distance matrix, computed once. """
        with self._vertex_distance_lock:
            if self._vertex_distance_matrix is None:
                matrix = dijkstra(self._vertex_graph, directed=False)
                matrix.setflags(write=False)
                self._vertex_distance_matrix = matrix
            return self._vertex_distance_matrix

    #
    ## Domain interface
    #

    def measure(self) -> float:
        return float(self.lengths.sum())

    def bounding_box(self) -> Tuple[float, float, float, float]:
        used = self.vertices[np.unique(self.segments)]
        return (float(used[:, 0].min()), float(used[:, 0].max()),
                float(used[:, 1].min()), float(used[:, 1].max()))

    def coordinates_at(self, segments: IntArray, offsets: FloatArray) -> FloatArray:
        """ Planar embedding of (segment, offset) pairs. """
        segments = np.asarray(segments, dtype=np.int64)
        fraction = np.asarray(offsets, dtype=float) / self.lengths[segments]
        start = self.vertices[self.segments[segments, 0]]
        end = self.vertices[self.segments[segments, 1]]
        return start + fraction[:, None] * (end - start)

    def locations_at(self, segments: IntArray, offsets: FloatArray) -> Locations:
        segments = np.asarray(segments, dtype=np.int64).reshape(-1)
        offsets = np.asarray(offsets, dtype=float).reshape(-1)
        if len(segments) == 0:
            return Locations.empty(on_network=True)
        return Locations(self.coordinates_at(segments, offsets), segments, offsets)

    def contains(self, locations: Locations) -> BoolArray:
        if not locations.on_network:
            return np.zeros(len(locations), dtype=bool)
        segments, offsets = locations.segments, locations.offsets
        valid_segment = (segments >= 0) & (segments < self.n_segments)
        lengths = np.where(valid_segment, self.lengths[np.clip(segments, 0, self.n_segments - 1)], 0.0)
        return valid_segment & (offsets >= -OFFSET_TOLERANCE) & (offsets <= lengths + OFFSET_TOLERANCE)

    def pairwise_distances(self, a: Locations, b: Locations) -> FloatArray:
        """ For points on segments sa and sb the shortest path leaves each segment through one of its
        endpoints, unless both are on the same segment where the direct distance competes. """
        if len(a) == 0 or len(b) == 0:
            return np.zeros((len(a), len(b)))
        out = np.empty((len(a), len(b)))
        for start, stop in chunked(len(a), DISTANCE_BLOCK_SIZE):
            out[start:stop] = self._distance_block(a[np.arange(start, stop)], b)
        return out

    def _distance_block(self, a: Locations, b: Locations) -> FloatArray:
        a_ends, a_legs = self._exits(a)
        b_ends, b_legs = self._exits(b)

        needed = np.unique(a_ends)
        rows = self.vertex_distance_rows(needed)
        best = np.full((len(a), len(b)), np.inf)
        for a_side in range(2):
            from_vertex = rows[np.searchsorted(needed, a_ends[:, a_side])]  # (na, V)
            for b_side in range(2):
                candidate = a_legs[:, a_side, None] + from_vertex[:, b_ends[:, b_side]] + b_legs[None, :, b_side]
                np.minimum(best, candidate, out=best)

        same_segment = a.segments[:, None] == b.segments[None, :]
        direct = np.abs(a.offsets[:, None] - b.offsets[None, :])
        return np.where(same_segment, np.minimum(best, direct), best)

    def _exits(self, locations: Locations) -> Tuple[IntArray, FloatArray]:
        """ The two endpoint vertices of each location's segment and the distances to them. """
        ends = self.segments[locations.segments]
        offsets = np.clip(locations.offsets, 0.0, self.lengths[locations.segments])
        legs = np.column_stack([offsets, self.lengths[locations.segments] - offsets])
        return ends, legs

    def sample_uniform(self, count: int, rng: np.random.Generator) -> Locations:
        segments = rng.choice(self.n_segments, size=count, p=self.lengths / self.lengths.sum())
        offsets = rng.random(count) * self.lengths[segments]
        return self.locations_at(segments, offsets)

    def subdivide(self, target_cell_count: int) -> Subdivision:
        """ Every segment is cut into ceil(length / h) equal pieces with h = measure / target, so
        each segment carries at least one cell and no cell crosses a vertex. """
        target_cell_count = max(int(target_cell_count), 1)
        h = self.measure() / target_cell_count
        # the small slack keeps exact multiples (length 10, h 2) from rounding up an extra piece.
        pieces = np.maximum(1, np.ceil(self.lengths / h - 1e-9)).astype(np.int64)
        return self.subdivide_segments(pieces)

    def subdivide_segments(self, pieces: IntArray) -> Subdivision:
        pieces = np.asarray(pieces, dtype=np.int64)
        first_cell = np.concatenate([[0], np.cumsum(pieces)[:-1]])
        piece_length = self.lengths / pieces

        cell_segments = np.repeat(np.arange(self.n_segments), pieces)
        within = np.arange(pieces.sum()) - np.repeat(first_cell, pieces)
        cell_offsets = (within + 0.5) * piece_length[cell_segments]
        measures = piece_length[cell_segments]

        def locator(locations: Locations) -> IntArray:
            segments = locations.segments
            index = np.floor(locations.offsets / piece_length[segments]).astype(np.int64)
            return first_cell[segments] + np.clip(index, 0, pieces[segments] - 1)

        return Subdivision(self.locations_at(cell_segments, cell_offsets), measures, locator, self.measure())

    #
    ## snapping planar coordinates onto the network
    #

    def project(self, coords: FloatArray) -> Tuple[IntArray, FloatArray, FloatArray]:
        """ Nearest point on the network of every planar coordinate: segment ids, offsets and the
        Euclidean distance to the network.  Ties go to the lowest segment id. """
        coords = np.asarray(coords, dtype=float).reshape(-1, 2)
        start = self.vertices[self.segments[:, 0]]
        direction = self.vertices[self.segments[:, 1]] - start
        squared_length = (direction ** 2).sum(axis=1)

        segments = np.empty(len(coords), dtype=np.int64)
        offsets = np.empty(len(coords))
        distances = np.empty(len(coords))
        for lo, hi in chunked(len(coords), DISTANCE_BLOCK_SIZE):
            relative = coords[lo:hi, None, :] - start[None, :, :]  # (B, S, 2)
            t = np.clip((relative * direction[None]).sum(axis=2) / squared_length[None], 0.0, 1.0)
            gap = relative - t[:, :, None] * direction[None]
            gap_length = np.sqrt((gap ** 2).sum(axis=2))
            nearest = np.argmin(gap_length, axis=1)
            rows = np.arange(hi - lo)
            segments[lo:hi] = nearest
            offsets[lo:hi] = t[rows, nearest] * self.lengths[nearest]
            distances[lo:hi] = gap_length[rows, nearest]
        return segments, offsets, distances

    def __repr__(self):
        return f"LinearNetwork({self.n_vertices} vertices, {self.n_segments} segments, length {self.measure()})"
