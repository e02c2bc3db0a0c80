from typing import Tuple

import numpy as np

from constants.domain_constants import DISTANCE_BLOCK_SIZE
from libs.geometry.exceptions import LocationOffDomainError
from libs.geometry.locations import DomainLocation, Locations
from libs.geometry.subdivision import Subdivision
from libs.internal_types import BoolArray, FloatArray, IntArray
from libs.utils.general_utils import chunked


class Domain:
    """ Common interface of the observation domains.  Domains are immutable after construction,
    every method is a pure function of its arguments and safe to call from several threads. """

    kind: str = None

    def measure(self) -> float:
        raise NotImplementedError

    def bounding_box(self) -> Tuple[float, float, float, float]:
        """ (xmin, xmax, ymin, ymax) """
        raise NotImplementedError

    def contains(self, locations: Locations) -> BoolArray:
        raise NotImplementedError

    def pairwise_distances(self, a: Locations, b: Locations) -> FloatArray:
        """ len(a) x len(b) matrix of domain distances, +inf where no path exists. """
        raise NotImplementedError

    def subdivide(self, target_cell_count: int) -> Subdivision:
        raise NotImplementedError

    def sample_uniform(self, count: int, rng: np.random.Generator) -> Locations:
        """ count independent uniform locations with respect to the domain measure. """
        raise NotImplementedError

    #
    ## derived functionality
    #

    def diagonal(self) -> float:
        xmin, xmax, ymin, ymax = self.bounding_box()
        return float(np.hypot(xmax - xmin, ymax - ymin))

    def validate_locations(self, locations: Locations):
        inside = self.contains(locations)
        if not np.all(inside):
            bad = np.flatnonzero(~inside)
            raise LocationOffDomainError(
                f"{len(bad)} location(s) are not on the {self.kind} domain, first offending index: {bad[0]}"
            )

    def distance(self, u: DomainLocation, v: DomainLocation) -> float:
        a = Locations.from_domain_locations([u], on_network=u.on_network)
        b = Locations.from_domain_locations([v], on_network=v.on_network)
        self.validate_locations(a)
        self.validate_locations(b)
        return float(self.pairwise_distances(a, b)[0, 0])

    def nearest_neighbors(
        self, query: Locations, reference: Locations, k: int, exclude_self: bool = False
    ) -> Tuple[FloatArray, IntArray]:
        """ Distances and indices of the k nearest reference locations of every query location,
        sorted by distance (ties by index).  With exclude_self the query and the reference must be
        the same set and every location skips itself. """
        n_ref = len(reference) - (1 if exclude_self else 0)
        k = min(k, n_ref)
        distances = np.empty((len(query), k))
        indices = np.empty((len(query), k), dtype=np.int64)
        for start, stop in chunked(len(query), DISTANCE_BLOCK_SIZE):
            block = self.pairwise_distances(query[np.arange(start, stop)], reference)
            if exclude_self:
                block[np.arange(stop - start), np.arange(start, stop)] = np.inf
            # stable sort keeps ties in index order, which keeps graphs deterministic.
            order = np.argsort(block, axis=1, kind="stable")[:, :k]
            indices[start:stop] = order
            distances[start:stop] = np.take_along_axis(block, order, axis=1)
        return distances, indices

    def pairs_within(self, locations: Locations, radius: float) -> Tuple[IntArray, FloatArray]:
        """ All pairs i < j with distance <= radius, as an (m, 2) array and their distances. """
        pairs, weights = [], []
        for start, stop in chunked(len(locations), DISTANCE_BLOCK_SIZE):
            block = self.pairwise_distances(locations[np.arange(start, stop)], locations)
            rows, cols = np.nonzero(block <= radius)
            rows = rows + start
            keep = rows < cols
            pairs.append(np.column_stack([rows[keep], cols[keep]]))
            weights.append(block[rows[keep] - start, cols[keep]])
        if not pairs:
            return np.zeros((0, 2), dtype=np.int64), np.zeros(0)
        return np.vstack(pairs).astype(np.int64), np.concatenate(weights)
