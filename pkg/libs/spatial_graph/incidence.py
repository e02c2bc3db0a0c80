from threading import Lock
from typing import Dict

import numpy as np
from scipy.sparse import csc_matrix, csr_matrix, identity
from scipy.sparse.linalg import splu

from libs.internal_types import FloatArray
from libs.spatial_graph.exceptions import FactorizationError
from libs.spatial_graph.graph import SpatialGraph


class IncidenceStructure:
    """ The m x M signed incidence operator H of a graph (row l = +1 at i, -1 at j for edge l = (i, j)),
    the Laplacian H'H, and factorizations of I + gamma H'H cached per gamma.

    Factorizations are shared read-only between threads; the cache is guarded by a lock so two
    solvers asking for the same gamma build it once. """

    def __init__(self, graph: SpatialGraph):
        self.graph = graph
        m, n = graph.m, graph.n_vertices
        rows = np.repeat(np.arange(m), 2)
        cols = graph.edges.ravel()
        data = np.tile([1.0, -1.0], m)
        self.H: csr_matrix = csr_matrix((data, (rows, cols)), shape=(m, n))
        self.Ht: csr_matrix = self.H.T.tocsr()
        self.laplacian: csc_matrix = (self.Ht @ self.H).tocsc()
        self._factorizations: Dict[float, object] = {}
        self._lock = Lock()

    @property
    def m(self) -> int:
        return self.H.shape[0]

    @property
    def n_vertices(self) -> int:
        return self.H.shape[1]

    def apply(self, beta: FloatArray) -> FloatArray:
        """ H beta, for a vector or column-wise for a matrix. """
        return self.H @ beta

    def apply_transpose(self, theta: FloatArray) -> FloatArray:
        return self.Ht @ theta

    def factorization(self, gamma: float):
        gamma = float(gamma)
        with self._lock:
            factor = self._factorizations.get(gamma)
            if factor is None:
                system = (identity(self.n_vertices, format="csc") + gamma * self.laplacian).tocsc()
                try:
                    factor = splu(system)
                except RuntimeError as e:
                    raise FactorizationError(f"factorizing I + {gamma} L failed: {e}")
                self._factorizations[gamma] = factor
            return factor

    def solve(self, gamma: float, rhs: FloatArray) -> FloatArray:
        """ (I + gamma H'H)^-1 rhs """
        return self.factorization(gamma).solve(np.asarray(rhs, dtype=float))

    @property
    def cached_gammas(self):
        with self._lock:
            return sorted(self._factorizations)

    def __repr__(self):
        return f"IncidenceStructure({self.m} edges x {self.n_vertices} vertices)"
