from typing import Dict, List, Optional, Tuple

import numpy as np
from scipy.spatial import cKDTree, Delaunay

from constants.domain_constants import DISTANCE_BLOCK_SIZE
from constants.graph_constants import (DEFAULT_KNN_K, DELAUNAY_MAX_LEN_PERCENTILE, GraphMethod,
    JUNCTION_CLIQUE_LIMIT, MST_BASE_K)
from libs.geometry.domain import Domain
from libs.geometry.linear_network import LinearNetwork
from libs.geometry.locations import Locations
from libs.internal_types import FloatArray, IntArray
from libs.spatial_graph.exceptions import GraphConstructionError
from libs.spatial_graph.graph import SpatialGraph, canonical_edges, connected_components
from libs.spatial_graph.union_find import UnionFind, kruskal
from libs.utils.general_utils import chunked, log

try:
    from scipy.spatial import QhullError
except ImportError:  # scipy < 1.8
    from scipy.spatial.qhull import QhullError


class GraphSpec:
    """ Which graph to build over the quadrature points and with what parameter:
        knn            k       (neighbors per point, default 5)
        rnn            radius
        delaunay       max_len (default: 95th percentile of the triangulation's edge lengths)
        mst
        network_chain
    """

    def __init__(self, method: str = GraphMethod.knn, k: int = DEFAULT_KNN_K, radius: float = None,
                 max_len: float = None):
        if method not in GraphMethod.values():
            raise GraphConstructionError(f"unknown graph method '{method}', expected one of {GraphMethod.values()}")
        if method == GraphMethod.knn and int(k) < 1:
            raise GraphConstructionError(f"knn graphs need k >= 1, received {k}")
        if method == GraphMethod.rnn and not (radius is not None and radius > 0):
            raise GraphConstructionError(f"rnn graphs need a positive radius, received {radius}")
        if max_len is not None and not max_len > 0:
            raise GraphConstructionError(f"delaunay max_len must be positive, received {max_len}")
        self.method = method
        self.k = int(k)
        self.radius = radius
        self.max_len = max_len

    @classmethod
    def from_dict(cls, spec: Dict) -> "GraphSpec":
        return cls(
            method=spec.get("method", GraphMethod.knn),
            k=spec.get("k", DEFAULT_KNN_K),
            radius=spec.get("radius"),
            max_len=spec.get("max_len"),
        )

    def as_dict(self) -> Dict:
        out = {"method": self.method}
        if self.method == GraphMethod.knn:
            out["k"] = self.k
        elif self.method == GraphMethod.rnn:
            out["radius"] = self.radius
        elif self.method == GraphMethod.delaunay and self.max_len is not None:
            out["max_len"] = self.max_len
        return out

    def __repr__(self):
        return f"GraphSpec({self.as_dict()})"


def build_graph(locations: Locations, domain: Domain, spec: GraphSpec) -> SpatialGraph:
    """ Builds the requested graph under the domain metric and repairs it to be connected. """
    if len(locations) < 2:
        raise GraphConstructionError(f"a graph needs at least 2 points, received {len(locations)}")

    params = spec.as_dict()
    if spec.method == GraphMethod.knn:
        edges, weights = knn_edges(locations, domain, spec.k)
    elif spec.method == GraphMethod.rnn:
        edges, weights = domain.pairs_within(locations, spec.radius)
    elif spec.method == GraphMethod.delaunay:
        edges, weights, params = _delaunay_or_fallback(locations, domain, spec, params)
    elif spec.method == GraphMethod.mst:
        edges, weights, params["k"] = mst_edges(locations, domain)
    else:
        edges, weights = network_chain_edges(locations, domain)

    graph = SpatialGraph(len(locations), edges, weights, params["method"], params)
    return ensure_connected(graph, locations, domain)


def knn_edges(locations: Locations, domain: Domain, k: int) -> Tuple[IntArray, FloatArray]:
    """ Union of the directed k nearest neighbor relations, symmetrized by canonical_edges. """
    distances, neighbors = domain.nearest_neighbors(locations, locations, k, exclude_self=True)
    sources = np.repeat(np.arange(len(locations)), neighbors.shape[1])
    return np.column_stack([sources, neighbors.ravel()]), distances.ravel()


def delaunay_edges(locations: Locations, max_len: Optional[float] = None) -> Tuple[IntArray, FloatArray, float]:
    """ Edges of the planar Delaunay triangulation without those longer than max_len (default the
    95th percentile of the triangulation's edge lengths).  Returns the threshold used as well. """
    triangulation = Delaunay(locations.coords)
    simplices = triangulation.simplices
    edges = np.vstack([simplices[:, [0, 1]], simplices[:, [1, 2]], simplices[:, [0, 2]]])
    edges, _ = canonical_edges(edges, np.zeros(len(edges)))
    lengths = np.linalg.norm(locations.coords[edges[:, 0]] - locations.coords[edges[:, 1]], axis=1)
    if max_len is None:
        max_len = float(np.percentile(lengths, DELAUNAY_MAX_LEN_PERCENTILE))
    keep = lengths <= max_len
    return edges[keep], lengths[keep], max_len


def _delaunay_or_fallback(locations, domain, spec: GraphSpec, params: Dict):
    if isinstance(domain, LinearNetwork):
        raise GraphConstructionError("delaunay graphs are undefined on linear networks, use network_chain or knn")
    try:
        if len(locations) < 3:
            raise QhullError("fewer than 3 points")
        edges, weights, max_len = delaunay_edges(locations, spec.max_len)
        params["max_len"] = max_len
        return edges, weights, params
    except QhullError as e:
        log.warning(f"delaunay triangulation failed ({str(e).splitlines()[0]}), falling back to {DEFAULT_KNN_K}-nn")
        edges, weights = knn_edges(locations, domain, DEFAULT_KNN_K)
        return edges, weights, {"method": GraphMethod.knn, "k": DEFAULT_KNN_K, "fallback_from": GraphMethod.delaunay}


def mst_edges(locations: Locations, domain: Domain) -> Tuple[IntArray, FloatArray, int]:
    """ Minimum spanning tree of the symmetrized k-nn graph, k starting at 5 and doubling until that
    graph is connected (or complete).  Returns the k that was used. """
    n = len(locations)
    k = min(MST_BASE_K, n - 1)
    while True:
        edges, weights = canonical_edges(*knn_edges(locations, domain, k))
        if k >= n - 1 or connected_components(n, edges).max() == 0:
            break
        k = min(2 * k, n - 1)
    chosen = kruskal(n, edges, weights)
    return edges[chosen], weights[chosen], k


def network_chain_edges(locations: Locations, network: Domain) -> Tuple[IntArray, FloatArray]:
    """ Consecutive points along every segment are joined.  At every junction the end points of the
    segments meeting there are joined (pairwise up to JUNCTION_CLIQUE_LIMIT ends, else by their
    spanning tree); segments without points pass their junctions through to the far end. """
    if not isinstance(network, LinearNetwork) or not locations.on_network:
        raise GraphConstructionError("network_chain graphs need points on a linear network")

    order = np.lexsort((np.arange(len(locations)), locations.offsets, locations.segments))
    sorted_segments = locations.segments[order]
    same_segment = sorted_segments[1:] == sorted_segments[:-1]
    chain = np.column_stack([order[:-1][same_segment], order[1:][same_segment]])

    # vertices joined through empty segments act as one junction
    occupied = np.zeros(network.n_segments, dtype=bool)
    occupied[locations.segments] = True
    junctions = UnionFind(network.n_vertices)
    for segment in np.flatnonzero(~occupied):
        junctions.union(*(int(v) for v in network.segments[segment]))

    ends_at: Dict[int, List[int]] = {}
    starts = np.flatnonzero(np.r_[True, ~same_segment])
    stops = np.r_[starts[1:], len(order)]
    for start, stop in zip(starts, stops):
        segment = sorted_segments[start]
        first_vertex, last_vertex = network.segments[segment]
        ends_at.setdefault(junctions.find(int(first_vertex)), []).append(int(order[start]))
        ends_at.setdefault(junctions.find(int(last_vertex)), []).append(int(order[stop - 1]))

    junction_edges = [chain]
    for root in sorted(ends_at):
        ends = sorted(set(ends_at[root]))
        if len(ends) < 2:
            continue
        pairs = np.array([(a, b) for i, a in enumerate(ends) for b in ends[i + 1:]], dtype=np.int64)
        if len(ends) > JUNCTION_CLIQUE_LIMIT:
            pair_weights = _edge_distances(locations, network, pairs)
            local = {vertex: i for i, vertex in enumerate(ends)}
            local_pairs = np.array([(local[a], local[b]) for a, b in pairs], dtype=np.int64)
            pairs = pairs[kruskal(len(ends), local_pairs, pair_weights)]
        junction_edges.append(pairs)

    edges = np.vstack(junction_edges)
    return edges, _edge_distances(locations, network, edges)


def ensure_connected(graph: SpatialGraph, locations: Locations, domain: Domain) -> SpatialGraph:
    """ Joins the components of a disconnected graph by a minimum spanning tree over components.
    The candidate edge between two components is their closest pair of embedded coordinates, found
    with one k-d tree per component, so c components get exactly c - 1 new edges.  New edges are
    weighted by the domain distance, or the straight-line one where the domain metric cannot join
    the two points (disconnected networks). """
    labels = graph.component_labels()
    n_components = int(labels.max()) + 1 if len(labels) else 0
    if n_components <= 1:
        return graph

    coords = locations.coords
    candidates, lengths, component_pairs = [], [], []
    for a in range(n_components - 1):
        members = np.flatnonzero(labels == a)
        others = np.flatnonzero(labels > a)
        distances, nearest = cKDTree(coords[members]).query(coords[others])
        other_labels = labels[others]
        # the closest point of every later component, ties to the lowest index
        order = np.lexsort((distances, other_labels))
        first = order[np.r_[True, other_labels[order][1:] != other_labels[order][:-1]]]
        candidates.append(np.column_stack([members[nearest[first]], others[first]]))
        lengths.append(distances[first])
        component_pairs.append(np.column_stack([np.full(len(first), a), other_labels[first]]))

    candidates, lengths = np.vstack(candidates), np.concatenate(lengths)
    chosen = kruskal(n_components, np.vstack(component_pairs).astype(np.int64), lengths)
    new_edges = candidates[chosen].astype(np.int64)
    new_weights = _edge_distances(locations, domain, new_edges)
    new_weights = np.where(np.isfinite(new_weights), new_weights, lengths[chosen])
    log.warning(f"{graph.method} graph had {n_components} components, added {len(new_edges)} bridging edge(s)")

    return SpatialGraph(
        graph.n_vertices,
        np.vstack([graph.edges, new_edges]),
        np.concatenate([graph.weights, new_weights]),
        graph.method,
        graph.params,
        repair_edges=graph.repair_edges + len(new_edges),
    )


def _edge_distances(locations: Locations, domain: Domain, edges: IntArray) -> FloatArray:
    """ Domain distance along each edge, computed in blocks. """
    weights = np.empty(len(edges))
    for start, stop in chunked(len(edges), DISTANCE_BLOCK_SIZE):
        block = edges[start:stop]
        distances = domain.pairwise_distances(locations[block[:, 0]], locations[block[:, 1]])
        weights[start:stop] = np.diagonal(distances)
    return weights
