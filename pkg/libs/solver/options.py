from typing import Dict

from config.settings import SVCI_THREADS
from constants.solver_constants import (ADMM_MAX_ITERATIONS, ADMM_TOLERANCE, ADMM_TOLERANCE_FLOOR, ETA_MAX,
    FIXED_POINT_TOLERANCE, GAMMA_INITIAL, MAX_BACKTRACKS, OUTER_MAX_ITERATIONS, OUTER_TOLERANCE)
from libs.solver.exceptions import SolverInputError


class SolverOptions:
    """ Knobs of the proximal gradient / ADMM solver.  Every field has a default from
    constants.solver_constants, threads defaults to SVCI_THREADS. """

    FIELDS = (
        "outer_max_iterations", "outer_tolerance", "admm_max_iterations", "admm_primal_tolerance",
        "admm_dual_tolerance", "gamma_initial", "adapt_gamma", "accelerate", "warm_start", "seed",
        "eta_max", "max_backtracks", "threads", "polish", "fixed_point_tolerance",
    )

    def __init__(
        self,
        outer_max_iterations: int = OUTER_MAX_ITERATIONS,
        outer_tolerance: float = OUTER_TOLERANCE,
        admm_max_iterations: int = ADMM_MAX_ITERATIONS,
        admm_primal_tolerance: float = ADMM_TOLERANCE,
        admm_dual_tolerance: float = ADMM_TOLERANCE,
        gamma_initial: float = GAMMA_INITIAL,
        adapt_gamma: bool = True,
        accelerate: bool = False,
        warm_start: bool = True,
        seed: int = 0,
        eta_max: float = ETA_MAX,
        max_backtracks: int = MAX_BACKTRACKS,
        threads: int = None,
        polish: bool = True,
        fixed_point_tolerance: float = FIXED_POINT_TOLERANCE,
    ):
        self.outer_max_iterations = outer_max_iterations
        self.outer_tolerance = outer_tolerance
        self.admm_max_iterations = admm_max_iterations
        self.admm_primal_tolerance = admm_primal_tolerance
        self.admm_dual_tolerance = admm_dual_tolerance
        self.gamma_initial = gamma_initial
        self.adapt_gamma = adapt_gamma
        self.accelerate = accelerate
        self.warm_start = warm_start
        self.seed = seed
        self.eta_max = eta_max
        self.max_backtracks = max_backtracks
        self.threads = SVCI_THREADS if threads is None else threads
        self.polish = polish
        self.fixed_point_tolerance = fixed_point_tolerance
        self.validate()

    def validate(self):
        errors = []
        for name in ("outer_tolerance", "admm_primal_tolerance", "admm_dual_tolerance", "gamma_initial", "eta_max",
                     "fixed_point_tolerance"):
            if not getattr(self, name) > 0:
                errors.append(f"{name} must be positive, received {getattr(self, name)}")
        for name in ("outer_max_iterations", "admm_max_iterations", "threads"):
            if int(getattr(self, name)) < 1:
                errors.append(f"{name} must be at least 1, received {getattr(self, name)}")
        if int(self.max_backtracks) < 0:
            errors.append(f"max_backtracks cannot be negative, received {self.max_backtracks}")
        if errors:
            raise SolverInputError("; ".join(errors))

    def replace(self, **changes) -> "SolverOptions":
        values = self.as_dict()
        values.update(changes)
        return SolverOptions(**values)

    def tightened(self, level: int) -> "SolverOptions":
        """ The inner ADMM settings after level tightening steps. """
        if level <= 0:
            return self
        return self.replace(
            admm_max_iterations=int(self.admm_max_iterations) * 2 ** level,
            admm_primal_tolerance=max(self.admm_primal_tolerance * 10.0 ** -level, ADMM_TOLERANCE_FLOOR),
            admm_dual_tolerance=max(self.admm_dual_tolerance * 10.0 ** -level, ADMM_TOLERANCE_FLOOR),
        )

    def as_dict(self) -> Dict:
        return {name: getattr(self, name) for name in self.FIELDS}

    @classmethod
    def from_dict(cls, values: Dict) -> "SolverOptions":
        unknown = set(values) - set(cls.FIELDS)
        if unknown:
            raise SolverInputError(f"unknown solver options {sorted(unknown)}")
        return cls(**values)

    def __repr__(self):
        return f"SolverOptions({self.as_dict()})"
