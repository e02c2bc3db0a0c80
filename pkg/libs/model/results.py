from typing import Dict, List, Optional

import numpy as np

from libs.internal_types import FloatArray, IntArray
from libs.solver.prox_gradient import FitTrace


class FitResult:
    """ One penalized fit: the coefficients at every quadrature point (intercept column first, on
    the standardized covariate scale), the fused clusters of every coefficient block and the
    solver diagnostics.  `problem` links back to the quadrature scheme and graph it was fit on. """

    def __init__(
        self,
        beta: FloatArray,
        lam: float,
        kind: str,
        graph: Dict,
        objective: float,
        negll: float,
        labels: IntArray,
        trace: FitTrace,
        names: List[str],
        problem=None,
        fixed_point_residual: Optional[float] = None,
    ):
        self.beta = beta
        self.lam = float(lam)
        self.kind = kind
        self.graph = graph
        self.objective = float(objective)
        self.negll = float(negll)
        self.labels = labels
        self.trace = trace
        self.names = names
        self.problem = problem
        self.fixed_point_residual = fixed_point_residual
        self.bic: Optional[float] = None

    @property
    def cluster_counts(self) -> List[int]:
        return [int(self.labels[:, k].max()) + 1 for k in range(self.labels.shape[1])]

    @property
    def df(self) -> int:
        return int(sum(self.cluster_counts))

    @property
    def converged(self) -> bool:
        return self.trace.converged

    def diagnostics(self) -> Dict:
        return {
            "converged": self.trace.converged,
            "stop_reason": self.trace.stop_reason,
            "iterations": self.trace.iterations,
            "admm_iterations": self.trace.admm_iterations,
            "fixed_point_residual": self.fixed_point_residual,
        }

    def summary(self) -> Dict:
        return {
            "lambda": self.lam,
            "objective": self.objective,
            "negll": self.negll,
            "bic": self.bic,
            "df": self.df,
            "cluster_counts": self.cluster_counts,
            "converged": self.converged,
        }

    def __repr__(self):
        return f"FitResult(lambda={self.lam:.6g}, {self.kind}, clusters={self.cluster_counts})"


class PathResult:
    """ Fits along a strictly decreasing lambda grid, their BIC values and the selected fit. """

    def __init__(self, lambdas: FloatArray, fits: List[FitResult], lambda_max: Optional[float] = None):
        self.lambdas = np.asarray(lambdas, dtype=float)
        self.fits = fits
        self.lambda_max = lambda_max
        self.bics = np.array([fit.bic for fit in fits], dtype=float)
        # np.argmin returns the first minimum, which is the largest lambda on a decreasing grid
        self.selected_index = int(np.argmin(self.bics))

    @property
    def selected(self) -> FitResult:
        return self.fits[self.selected_index]

    def table(self) -> List[Dict]:
        rows = []
        for index, fit in enumerate(self.fits):
            row = fit.summary()
            row["selected"] = index == self.selected_index
            rows.append(row)
        return rows

    def __repr__(self):
        return f"PathResult({len(self.lambdas)} lambdas, selected {self.selected.lam:.6g})"
