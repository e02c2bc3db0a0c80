from typing import Dict, Optional, Tuple

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components as scipy_connected_components

from constants.graph_constants import MIN_EDGE_WEIGHT
from libs.internal_types import BoolArray, FloatArray, IntArray
from libs.spatial_graph.exceptions import GraphConstructionError


class SpatialGraph:
    """ An undirected graph over the M quadrature points.  Edges are canonical: i < j, no
    duplicates, sorted by (i, j), weights are domain distances floored at MIN_EDGE_WEIGHT. """

    def __init__(
        self,
        n_vertices: int,
        edges: IntArray,
        weights: FloatArray,
        method: str,
        params: Optional[Dict] = None,
        repair_edges: int = 0,
    ):
        edges, weights = canonical_edges(edges, weights)
        if len(edges) and (edges.min() < 0 or edges.max() >= n_vertices):
            raise GraphConstructionError(f"edge endpoints must be vertices 0..{n_vertices - 1}")
        self.n_vertices = int(n_vertices)
        self.edges = edges
        self.weights = weights
        self.method = method
        self.params = dict(params or {})
        self.repair_edges = int(repair_edges)
        self.edges.setflags(write=False)
        self.weights.setflags(write=False)

    @property
    def m(self) -> int:
        return len(self.edges)

    def degrees(self) -> IntArray:
        return np.bincount(self.edges.ravel(), minlength=self.n_vertices)

    def component_labels(self) -> IntArray:
        return connected_components(self.n_vertices, self.edges)

    def is_connected(self) -> bool:
        return self.n_vertices <= 1 or self.component_labels().max() == 0

    def describe(self) -> Dict:
        return {
            "method": self.method,
            "params": self.params,
            "n_vertices": self.n_vertices,
            "n_edges": self.m,
            "repair_edges": self.repair_edges,
        }

    def __repr__(self):
        return f"SpatialGraph({self.method}, {self.n_vertices} vertices, {self.m} edges)"


def canonical_edges(edges: IntArray, weights: FloatArray) -> Tuple[IntArray, FloatArray]:
    """ Orients every edge as i < j, drops self-loops and non-finite weights, keeps the smallest
    weight of duplicated edges and sorts by (i, j). """
    edges = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
    weights = np.asarray(weights, dtype=float).reshape(-1)
    if len(edges) != len(weights):
        raise GraphConstructionError("one weight per edge is required")
    keep = (edges[:, 0] != edges[:, 1]) & np.isfinite(weights)
    edges, weights = np.sort(edges[keep], axis=1), weights[keep]
    if len(edges) == 0:
        return np.zeros((0, 2), dtype=np.int64), np.zeros(0)
    order = np.lexsort((weights, edges[:, 1], edges[:, 0]))
    edges, weights = edges[order], weights[order]
    first = np.ones(len(edges), dtype=bool)
    first[1:] = np.any(edges[1:] != edges[:-1], axis=1)
    return edges[first].copy(), np.maximum(weights[first], MIN_EDGE_WEIGHT)


def connected_components(n_vertices: int, edges: IntArray, active: Optional[BoolArray] = None) -> IntArray:
    """ Component labels of the graph restricted to the active edges (all edges by default).
    Labels are canonical: components are numbered 0, 1, .. in order of their smallest vertex. """
    edges = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
    if active is not None:
        edges = edges[np.asarray(active, dtype=bool)]
    if n_vertices == 0:
        return np.zeros(0, dtype=np.int64)
    adjacency = coo_matrix(
        (np.ones(len(edges)), (edges[:, 0], edges[:, 1])), shape=(n_vertices, n_vertices)
    ).tocsr()
    _, raw_labels = scipy_connected_components(adjacency, directed=False)
    # np.unique's first-occurrence indices give each raw label the position of its smallest vertex
    unique_labels, first_vertex = np.unique(raw_labels, return_index=True)
    rank = np.empty(len(unique_labels), dtype=np.int64)
    rank[np.argsort(first_vertex)] = np.arange(len(unique_labels))
    relabel = np.empty(raw_labels.max() + 1, dtype=np.int64)
    relabel[unique_labels] = rank
    return relabel[raw_labels]
