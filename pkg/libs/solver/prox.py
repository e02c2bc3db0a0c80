from multiprocessing.pool import ThreadPool
from typing import Optional

import numpy as np

from constants.solver_constants import GAMMA_BALANCE_RATIO, GAMMA_MAX_DOUBLINGS
from libs.exceptions import DimensionMismatchError
from libs.internal_types import FloatArray
from libs.solver.exceptions import SolverInputError
from libs.solver.options import SolverOptions
from libs.spatial_graph.graph import connected_components
from libs.spatial_graph.incidence import IncidenceStructure
from libs.utils.general_utils import log


def soft_threshold(z: FloatArray, t: float) -> FloatArray:
    """ sign(z) max(|z| - t, 0), elementwise. """
    if t < 0:
        raise SolverInputError(f"the soft threshold must be non-negative, received {t}")
    z = np.asarray(z, dtype=float)
    return np.sign(z) * np.maximum(np.abs(z) - t, 0.0)


class ProxWorkspace:
    """ ADMM state of the fused-lasso prox, one column per coefficient block: the split variable
    theta ~ H beta_k, the scaled dual u, the penalty gamma and the last residuals.  Kept between
    prox calls so that consecutive outer iterations warm start. """

    def __init__(self, n_edges: int, n_blocks: int, gamma: float):
        if not gamma > 0:
            raise SolverInputError(f"gamma must be positive, received {gamma}")
        self.theta = np.zeros((n_edges, n_blocks))
        self.u = np.zeros((n_edges, n_blocks))
        self.gamma = np.full(n_blocks, float(gamma))
        self.primal_residual = np.zeros(n_blocks)
        self.dual_residual = np.zeros(n_blocks)
        self.iterations = np.zeros(n_blocks, dtype=np.int64)
        self.capped = np.zeros(n_blocks, dtype=bool)
        self.total_iterations = 0

    @property
    def n_edges(self) -> int:
        return self.theta.shape[0]

    @property
    def n_blocks(self) -> int:
        return self.theta.shape[1]

    def reset(self, gamma: float):
        self.theta[:] = 0.0
        self.u[:] = 0.0
        self.gamma[:] = gamma


def fused_prox(
    r: FloatArray,
    inc: IncidenceStructure,
    t: float,
    ws: Optional[ProxWorkspace] = None,
    opts: Optional[SolverOptions] = None,
) -> FloatArray:
    """ argmin_beta 1/2 ||beta - r||^2 + t sum_k ||H beta_k||_1, column by column.  The columns are
    independent ADMM problems sharing the factorizations cached on inc; with more than one thread
    they run on a thread pool.  The result does not depend on the thread count. """
    opts = opts or SolverOptions()
    r = np.asarray(r, dtype=float)
    if r.ndim == 1:
        return fused_prox(r[:, None], inc, t, ws, opts)[:, 0]
    if t < 0:
        raise SolverInputError(f"the prox threshold must be non-negative, received {t}")
    if r.shape[0] != inc.n_vertices:
        raise DimensionMismatchError(f"{r.shape[0]} rows for a graph of {inc.n_vertices} vertices")
    if ws is None:
        ws = ProxWorkspace(inc.m, r.shape[1], opts.gamma_initial)
    if ws.theta.shape != (inc.m, r.shape[1]):
        raise DimensionMismatchError(f"workspace is {ws.theta.shape}, expected {(inc.m, r.shape[1])}")

    if t == 0 or inc.m == 0:
        ws.theta[:] = inc.apply(r)
        ws.u[:] = 0.0
        ws.primal_residual[:] = 0.0
        ws.dual_residual[:] = 0.0
        ws.iterations[:] = 0
        ws.capped[:] = False
        return r.copy()

    def solve(k: int) -> FloatArray:
        return _admm_block(k, r[:, k], inc, t, ws, opts)

    blocks = range(r.shape[1])
    threads = min(int(opts.threads), r.shape[1])
    if threads > 1:
        pool = ThreadPool(threads)
        try:
            columns = pool.map(solve, blocks, chunksize=1)
        finally:
            pool.close()
            pool.join()
    else:
        columns = [solve(k) for k in blocks]

    ws.total_iterations += int(ws.iterations.sum())
    if ws.capped.any():
        log.warning(
            f"ADMM reached {opts.admm_max_iterations} iterations without converging on block(s) "
            f"{np.flatnonzero(ws.capped).tolist()}, returning the best iterate"
        )
    return np.column_stack(columns)


def _admm_block(k: int, r: FloatArray, inc: IncidenceStructure, t: float, ws: ProxWorkspace,
                opts: SolverOptions) -> FloatArray:
    """ Scaled-form ADMM on  min 1/2 ||beta - r||^2 + t ||theta||_1  s.t.  H beta = theta.
    Only column k of the workspace is touched, so blocks can run concurrently. """
    theta, u, gamma = ws.theta[:, k].copy(), ws.u[:, k].copy(), float(ws.gamma[k])
    gamma_low = opts.gamma_initial * 2.0 ** -GAMMA_MAX_DOUBLINGS
    gamma_high = opts.gamma_initial * 2.0 ** GAMMA_MAX_DOUBLINGS
    scale = np.sqrt(inc.m)
    primal_tolerance = opts.admm_primal_tolerance * scale
    dual_tolerance = opts.admm_dual_tolerance * scale

    beta = r.copy()
    best_beta, best_value = beta, prox_objective(beta, r, inc, t)
    primal = dual = np.inf
    iteration = 0
    converged = False
    for iteration in range(1, int(opts.admm_max_iterations) + 1):
        beta = inc.solve(gamma, r + gamma * inc.apply_transpose(theta - u))
        h_beta = inc.apply(beta)
        theta_previous = theta
        theta = soft_threshold(h_beta + u, t / gamma)
        u = u + h_beta - theta

        value = 0.5 * float(np.sum((beta - r) ** 2)) + t * float(np.sum(np.abs(h_beta)))
        if value <= best_value:
            best_beta, best_value = beta, value

        primal = float(np.linalg.norm(h_beta - theta))
        dual = gamma * float(np.linalg.norm(inc.apply_transpose(theta - theta_previous)))
        if primal <= primal_tolerance and dual <= dual_tolerance:
            converged = True
            break

        if opts.adapt_gamma:
            # residual balancing, the scaled dual rescales with 1 / gamma
            if primal > GAMMA_BALANCE_RATIO * dual and gamma < gamma_high:
                gamma *= 2.0
                u /= 2.0
            elif dual > GAMMA_BALANCE_RATIO * primal and gamma > gamma_low:
                gamma /= 2.0
                u *= 2.0

    # the lowest prox objective seen, not the last iterate
    beta = best_beta
    if opts.polish:
        beta = _polish(beta, r, theta, inc, t)

    ws.theta[:, k] = theta
    ws.u[:, k] = u
    ws.gamma[k] = gamma
    ws.primal_residual[k] = primal
    ws.dual_residual[k] = dual
    ws.iterations[k] = iteration
    ws.capped[k] = not converged
    return beta


def prox_objective(beta: FloatArray, r: FloatArray, inc: IncidenceStructure, t: float) -> float:
    return 0.5 * float(np.sum((beta - r) ** 2)) + t * float(np.sum(np.abs(inc.apply(beta))))


def _polish(beta: FloatArray, r: FloatArray, theta: FloatArray, inc: IncidenceStructure, t: float) -> FloatArray:
    """ Exact solution for the fusion pattern ADMM found: vertices joined by edges with theta == 0
    share one value, and each cut edge contributes t sign(theta_l) to the optimality condition of
    its two groups.  Kept only when it does not raise the prox objective. """
    fused = theta == 0.0
    labels = connected_components(inc.n_vertices, inc.graph.edges, fused)
    n_groups = int(labels.max()) + 1
    sizes = np.bincount(labels, minlength=n_groups)
    pushes = inc.apply_transpose(np.where(fused, 0.0, np.sign(theta)))
    group_values = (np.bincount(labels, r, minlength=n_groups) - t * np.bincount(labels, pushes, minlength=n_groups))
    polished = (group_values / sizes)[labels]
    if prox_objective(polished, r, inc, t) <= prox_objective(beta, r, inc, t):
        return polished
    return beta
