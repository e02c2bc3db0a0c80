from typing import Callable

import numpy as np

from constants.common_constants import MEASURE_RELATIVE_TOLERANCE
from libs.geometry.exceptions import SubdivisionError
from libs.geometry.locations import Locations
from libs.internal_types import FloatArray, IntArray


class Subdivision:
    """ A partition of a domain into disjoint cells.  Each cell has a center location (where the
    Berman-Turner dummy point goes) and a measure; locate() maps any on-domain location to the id of
    the cell containing it. Cell ids are 0..n_cells-1 in the order of centers. """

    def __init__(
        self,
        centers: Locations,
        measures: FloatArray,
        locator: Callable[[Locations], IntArray],
        domain_measure: float,
    ):
        measures = np.asarray(measures, dtype=float)
        if len(centers) != len(measures):
            raise SubdivisionError("one measure per cell center is required")
        if np.any(measures <= 0):
            raise SubdivisionError("cell measures must be positive")
        total = measures.sum()
        if abs(total - domain_measure) > MEASURE_RELATIVE_TOLERANCE * domain_measure:
            raise SubdivisionError(f"cell measures sum to {total}, the domain measure is {domain_measure}")
        self.centers = centers
        self.measures = measures
        self.domain_measure = float(domain_measure)
        self._locator = locator

    @property
    def n_cells(self) -> int:
        return len(self.measures)

    @property
    def cell_ids(self) -> IntArray:
        return np.arange(self.n_cells)

    def locate(self, locations: Locations) -> IntArray:
        """ The cell id of every location. """
        if len(locations) == 0:
            return np.zeros(0, dtype=np.int64)
        return np.asarray(self._locator(locations), dtype=np.int64)

    def __len__(self):
        return self.n_cells

    def __repr__(self):
        return f"Subdivision({self.n_cells} cells, measure {self.domain_measure})"
