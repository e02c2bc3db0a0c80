class ScenarioId:
    planar_covariates = "1"
    network_piecewise = "2a"
    network_covariates = "2b"
    
    @classmethod
    def values(cls):
        return [cls.planar_covariates, cls.network_piecewise, cls.network_covariates]


class SurfacePreset:
    three_band_planar = "three-band planar"
    two_region_network = "two-region chicago-like network"
    
    @classmethod
    def values(cls):
        return [cls.three_band_planar, cls.two_region_network]


# unstated in the literature, unit variance gaussian process covariates.
DEFAULT_GP_VARIANCE = 1.0
# range parameter as a fraction of the domain scale R, the moderate correlation setting.
DEFAULT_GP_RANGE_FRACTION = 0.3
# covariates are simulated on a square lattice of this many points per side and rasterized.
DEFAULT_COVARIATE_RESOLUTION = 40

GP_JITTER = 1e-10
GP_JITTER_RETRIES = 3
GP_JITTER_GROWTH = 10.0
GP_MAX_LOCATIONS = 10000

# thinning bounds are estimated per cell on a probe lattice and inflated by this factor.
THINNING_BOUND_INFLATION = 1.5
THINNING_MAX_ESCALATIONS = 5
# cells used for per-cell thinning bounds and for the expected-count calibration.
THINNING_CELLS = 400
CALIBRATION_CELLS = 10000

# the street grid preset is a grid of streets with this many vertices per side.
NETWORK_PRESET_GRID = 6

TRUTH_CSV_FIELDS = ("x", "y", "segment", "offset", "measure")

# random probe points per thinning cell, on top of the cell centers.
THINNING_PROBES_PER_CELL = 8

# the two built-in surfaces split the domain at these fractions of R.
PLANAR_BAND_EDGES = (1.0 / 3.0, 2.0 / 3.0)
NETWORK_REGION_SPLIT = 0.5
