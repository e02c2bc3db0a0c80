class DomainType:
    planar = "planar"
    network = "network"
    
    @classmethod
    def choices(cls):
        return [(choice, choice.title()) for choice in cls.values()]
    
    @classmethod
    def values(cls):
        return [cls.planar, cls.network]


# network points farther than this fraction of the bounding-box diagonal from every segment are
# rejected at load time.
DEFAULT_SNAP_TOLERANCE_FRACTION = 0.01

# pairwise network distances are computed in row blocks of this many points to bound memory.
DISTANCE_BLOCK_SIZE = 512

# network csv headers
NODES_CSV_FIELDS = ("id", "x", "y")
EDGES_CSV_FIELDS = ("id", "from", "to")
