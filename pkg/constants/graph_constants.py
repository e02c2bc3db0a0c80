class GraphMethod:
    knn = "knn"
    rnn = "rnn"
    delaunay = "delaunay"
    mst = "mst"
    network_chain = "network_chain"
    
    @classmethod
    def choices(cls):
        return [(choice, choice.replace("_", " ").title()) for choice in cls.values()]
    
    @classmethod
    def values(cls):
        return [cls.knn, cls.rnn, cls.delaunay, cls.mst, cls.network_chain]


DEFAULT_KNN_K = 5

# the minimum spanning tree is extracted from a symmetrized k-nn graph, starting with this k and
# doubling it until the base graph is connected.
MST_BASE_K = 5

# pruning threshold for delaunay edges is this percentile of delaunay edge lengths.
DELAUNAY_MAX_LEN_PERCENTILE = 95.0

# junction ends on networks are joined pairwise up to this many ends, above that by a spanning tree.
JUNCTION_CLIQUE_LIMIT = 6

# zero-length edges (coincident points) get this weight so that weights stay positive.
MIN_EDGE_WEIGHT = 1e-12

GRAPH_CSV_FIELDS = ("i", "j", "weight", "method")
