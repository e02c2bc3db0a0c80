from typing import List, Optional, Tuple

import numpy as np

from constants.solver_constants import ADMM_TIGHTENING_STEPS
from libs.internal_types import FloatArray
from libs.objective import gradient, lipschitz, negll
from libs.quadrature.scheme import QuadratureScheme
from libs.solver.exceptions import NonFiniteObjectiveError, SolverInputError
from libs.solver.options import SolverOptions
from libs.solver.prox import ProxWorkspace, fused_prox
from libs.spatial_graph.incidence import IncidenceStructure
from libs.utils.general_utils import log


class TraceRow:
    __slots__ = ("iteration", "objective", "lipschitz", "primal_residual", "dual_residual", "admm_iterations")

    def __init__(self, iteration, objective, lipschitz, primal_residual, dual_residual, admm_iterations):
        self.iteration = iteration
        self.objective = objective
        self.lipschitz = lipschitz
        self.primal_residual = primal_residual
        self.dual_residual = dual_residual
        self.admm_iterations = admm_iterations


class FitTrace:
    """ Per-iteration record of an outer solve.  Row 0 is the starting point. """

    def __init__(self):
        self.rows: List[TraceRow] = []
        self.converged = False
        self.stop_reason = ""
        self.fixed_point_residual = float("nan")

    def append(self, *values):
        self.rows.append(TraceRow(*values))

    @property
    def objectives(self) -> FloatArray:
        return np.array([row.objective for row in self.rows])

    @property
    def iterations(self) -> int:
        return len(self.rows) - 1

    @property
    def admm_iterations(self) -> int:
        return int(sum(row.admm_iterations for row in self.rows))

    def __repr__(self):
        return f"FitTrace({self.iterations} iterations, converged={self.converged}, {self.stop_reason})"


def penalty(inc: IncidenceStructure, beta: FloatArray) -> float:
    """ sum_k ||H beta_k||_1 over every coefficient block, intercept included. """
    return float(np.sum(np.abs(inc.apply(beta))))


def objective(quad: QuadratureScheme, inc: IncidenceStructure, beta: FloatArray, lam: float,
              eta_max: float = None) -> float:
    """ Q(beta) = negll(beta) + lambda sum_k ||H beta_k||_1 """
    smooth = negll(quad, beta) if eta_max is None else negll(quad, beta, eta_max)
    return smooth + lam * penalty(inc, beta)


def default_start(quad: QuadratureScheme) -> FloatArray:
    """ Constant intercept log(n / |D|), zero slopes. """
    beta = np.zeros(quad.design.shape)
    beta[:, 0] = np.log(max(quad.n, 1) / quad.domain_measure)
    return beta


def prox_gradient_fit(
    quad: QuadratureScheme,
    inc: IncidenceStructure,
    lam: float,
    beta_init: Optional[FloatArray] = None,
    opts: Optional[SolverOptions] = None,
    ws: Optional[ProxWorkspace] = None,
) -> Tuple[FloatArray, FitTrace]:
    """ Minimizes Q by proximal gradient steps  beta <- prox_{lambda/L}(beta - grad/L)  with the local
    Lipschitz constant L at the current point, doubled while the quadratic upper bound fails.  Steps
    that would raise Q are rejected, so the recorded objective never increases.  With
    opts.accelerate the steps are taken from a momentum point (monotone FISTA).

    The fit has converged when the fixed-point residual is below opts.fixed_point_tolerance.  The
    residual is checked whenever the outer loop stalls (a tiny objective change, a rejected step or a
    tiny step); a stall above the tolerance tightens the inner ADMM, up to ADMM_TIGHTENING_STEPS times. """
    opts = opts or SolverOptions()
    if not lam >= 0:
        raise SolverInputError(f"lambda must be non-negative, received {lam}")
    if inc.n_vertices != quad.m:
        raise SolverInputError(f"the graph has {inc.n_vertices} vertices, the scheme {quad.m} points")

    beta = default_start(quad) if beta_init is None else np.array(beta_init, dtype=float)
    if ws is None or ws.theta.shape != (inc.m, beta.shape[1]):
        ws = ProxWorkspace(inc.m, beta.shape[1], opts.gamma_initial)

    eta_max = opts.eta_max
    current = _checked(objective(quad, inc, beta, lam, eta_max), "the starting point")
    trace = FitTrace()
    trace.append(0, current, float("nan"), 0.0, 0.0, 0)

    level, inner = 0, opts
    momentum_point, momentum = beta, 1.0
    rejected_in_a_row = 0
    for iteration in range(1, int(opts.outer_max_iterations) + 1):
        point = momentum_point if opts.accelerate else beta
        smooth = negll(quad, point, eta_max)
        grad = gradient(quad, point, eta_max)
        L = lipschitz(quad, point, eta_max)

        admm_iterations = 0
        for _ in range(int(opts.max_backtracks) + 1):
            candidate = fused_prox(point - grad / L, inc, lam / L, ws, inner)
            admm_iterations += int(ws.iterations.sum())
            step = candidate - point
            candidate_smooth = negll(quad, candidate, eta_max)
            bound = smooth + float(np.sum(grad * step)) + 0.5 * L * float(np.sum(step ** 2))
            if candidate_smooth <= bound + 1e-12 * max(1.0, abs(smooth)):
                break
            L *= 2.0

        candidate_value = _checked(candidate_smooth + lam * penalty(inc, candidate), f"iteration {iteration}")
        change = abs(current - candidate_value) / max(1.0, abs(current))
        accepted = candidate_value <= current

        previous_beta = beta
        if accepted:
            beta, current = candidate, candidate_value
            rejected_in_a_row = 0
        else:
            rejected_in_a_row += 1

        trace.append(
            iteration, current, L, float(ws.primal_residual.max()), float(ws.dual_residual.max()), admm_iterations
        )
        log.debug(f"iteration {iteration}: Q={current:.12g} L={L:.6g} admm={admm_iterations} accepted={accepted}")

        no_descent = not accepted and (not opts.accelerate or rejected_in_a_row > 1)
        stalled = change <= opts.outer_tolerance or no_descent
        if stalled or float(np.linalg.norm(step)) <= opts.fixed_point_tolerance:
            trace.fixed_point_residual = fixed_point_residual(quad, inc, beta, lam, opts)
            if trace.fixed_point_residual <= opts.fixed_point_tolerance:
                trace.converged = True
                trace.stop_reason = "fixed-point residual below tolerance"
                break
            if stalled and level < ADMM_TIGHTENING_STEPS:
                level += 1
                inner = opts.tightened(level)
                rejected_in_a_row = 0
                log.debug(f"iteration {iteration}: residual {trace.fixed_point_residual:.3g}, inner ADMM tightened "
                          f"to level {level}")
            elif no_descent:
                trace.stop_reason = "no further descent above the fixed-point tolerance"
                log.warning(f"proximal gradient stalled with fixed-point residual "
                            f"{trace.fixed_point_residual:.3g}, lambda={lam}")
                break

        if opts.accelerate:
            if accepted:
                next_momentum = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * momentum ** 2))
                momentum_point = beta + ((momentum - 1.0) / next_momentum) * (beta - previous_beta)
                momentum = next_momentum
            else:
                # restart the momentum from the last accepted point
                momentum_point, momentum = beta, 1.0
    else:
        trace.stop_reason = "iteration cap reached"
        log.warning(f"proximal gradient stopped at the iteration cap ({opts.outer_max_iterations}), lambda={lam}")

    return beta, trace


def fixed_point_residual(
    quad: QuadratureScheme,
    inc: IncidenceStructure,
    beta: FloatArray,
    lam: float,
    opts: Optional[SolverOptions] = None,
) -> float:
    """ ||beta - prox_{lambda/L}(beta - grad/L)|| with L the local Lipschitz constant at beta, zero
    exactly at minimizers of Q.  The prox runs cold with the inner ADMM at its tightest settings, so
    the value depends only on beta, lambda and the solver settings, not on a warm start. """
    opts = (opts or SolverOptions()).tightened(ADMM_TIGHTENING_STEPS)
    L = lipschitz(quad, beta, opts.eta_max)
    step = beta - gradient(quad, beta, opts.eta_max) / L
    return float(np.linalg.norm(beta - fused_prox(step, inc, lam / L, opts=opts)))


def _checked(value: float, where: str) -> float:
    if not np.isfinite(value):
        raise NonFiniteObjectiveError(f"the objective is not finite at {where}")
    return value
