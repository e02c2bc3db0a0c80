from typing import List

import numpy as np

from libs.internal_types import FloatArray, IntArray


class UnionFind:
    """ Disjoint sets over 0..n-1 with path halving and union by size. """

    def __init__(self, n: int):
        self.parent = list(range(n))
        self.size = [1] * n
        self.n_sets = n

    def find(self, x: int) -> int:
        parent = self.parent
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    def union(self, a: int, b: int) -> bool:
        """ Joins the sets of a and b, returns False when they already were one set. """
        root_a, root_b = self.find(a), self.find(b)
        if root_a == root_b:
            return False
        if self.size[root_a] < self.size[root_b]:
            root_a, root_b = root_b, root_a
        self.parent[root_b] = root_a
        self.size[root_a] += self.size[root_b]
        self.n_sets -= 1
        return True


def kruskal(n_vertices: int, edges: IntArray, weights: FloatArray) -> IntArray:
    """ Indices into edges of a minimum spanning forest.  Ties are broken by edge order, so the
    result is deterministic for a canonical edge list. """
    order = np.argsort(weights, kind="stable")
    sets = UnionFind(n_vertices)
    chosen: List[int] = []
    for index in order:
        i, j = edges[index]
        if sets.union(int(i), int(j)):
            chosen.append(int(index))
            if sets.n_sets == 1:
                break
    return np.array(sorted(chosen), dtype=np.int64)
