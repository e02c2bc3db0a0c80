class LikelihoodKind:
    """ The two composite likelihoods, each has its own quadrature scheme. """
    poisson = "poisson"
    logistic = "logistic"
    
    @classmethod
    def choices(cls):
        return [(choice, choice.title()) for choice in cls.values()]
    
    @classmethod
    def values(cls):
        return [cls.poisson, cls.logistic]


class DeltaMode:
    """ How the logistic baseline intensity of the dummy points is chosen. """
    constant = "constant"
    plugin = "plugin"
    
    @classmethod
    def values(cls):
        return [cls.constant, cls.plugin]


# the pilot intensity is floored at this fraction of its mean so that the baseline stays positive.
PILOT_INTENSITY_FLOOR_FRACTION = 1e-3

# default pilot bandwidth is this fraction of the domain bounding-box diagonal.
DEFAULT_BANDWIDTH_FRACTION = 0.1

# the plug-in baseline is evaluated on a subdivision with at least this many cells.
MIN_PILOT_CELLS = 100

# scheme csv export columns, the covariate columns follow these.
SCHEME_CSV_FIELDS = ("x", "y", "segment", "offset", "delta_flag", "weight", "response", "baseline")
