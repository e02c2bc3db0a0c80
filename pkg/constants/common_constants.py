from posixpath import abspath
from sys import argv as _argv


SVCI_PROJECT_ROOT = abspath(__file__.rsplit("/", 2)[0] + "/")

SVCI_VERSION = "1.0.0"

RUNNING_TEST_OR_IN_A_SHELL = any(
    key in _argv for key in ("unittest", "--ipython", "ipython", "test", "discover")
)

# Every random stream is derived from the single top-level seed of a run with
#   numpy.random.SeedSequence(seed, spawn_key=(component,))
# These are the component indices, do not renumber them, old manifests depend on them.
class SeedComponent:
    simulated_pattern = 1
    covariate_field = 2
    logistic_dummies = 3
    
    @classmethod
    def values(cls):
        return [cls.simulated_pattern, cls.covariate_field, cls.logistic_dummies]
    
    @classmethod
    def names(cls):
        return {
            cls.simulated_pattern: "simulated_pattern",
            cls.covariate_field: "covariate_field",
            cls.logistic_dummies: "logistic_dummies",
        }


# relative tolerance used when checking that cell measures add up to the domain measure.
MEASURE_RELATIVE_TOLERANCE = 1e-9

# absolute slack used when deciding if a network offset lies on its segment.
OFFSET_TOLERANCE = 1e-9
