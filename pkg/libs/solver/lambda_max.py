from typing import Optional, Tuple

import numpy as np
from scipy.optimize import minimize
from scipy.sparse.linalg import lsqr

from constants.solver_constants import FUSION_TOLERANCE, LAMBDA_GRID_RATIO, LAMBDA_MAX_RELATIVE_TOLERANCE
from libs.internal_types import FloatArray
from libs.objective import gradient, negll
from libs.quadrature.scheme import QuadratureScheme
from libs.solver.exceptions import SolverInputError
from libs.solver.options import SolverOptions
from libs.solver.prox_gradient import default_start, prox_gradient_fit
from libs.spatial_graph.incidence import IncidenceStructure
from libs.utils.general_utils import log


def constant_fit(quad: QuadratureScheme, eta_max: float = None) -> FloatArray:
    """ The composite-likelihood fit with one coefficient vector shared by every point (the fully
    fused model), returned as an (M, p + 1) matrix of identical rows. """
    m = quad.m
    kwargs = {} if eta_max is None else {"eta_max": eta_max}

    def value_and_gradient(row: FloatArray):
        beta = np.tile(row, (m, 1))
        return negll(quad, beta, **kwargs), gradient(quad, beta, **kwargs).sum(axis=0)

    result = minimize(
        value_and_gradient, default_start(quad)[0], jac=True, method="L-BFGS-B",
        options={"maxiter": 1000, "ftol": 1e-15, "gtol": 1e-10},
    )
    return np.tile(result.x, (m, 1))


def is_fully_fused(inc: IncidenceStructure, beta: FloatArray, tolerance: float = FUSION_TOLERANCE) -> bool:
    return inc.m == 0 or float(np.max(np.abs(inc.apply(beta)))) <= tolerance


def dual_certificate(quad: QuadratureScheme, inc: IncidenceStructure, beta_constant: FloatArray) -> float:
    """ A lambda at which the constant fit satisfies the optimality conditions: any w with
    H'w = -grad_k and |w| <= lambda is a subgradient certificate, and the least-squares solution of
    H'w = -grad_k gives one. """
    grad = gradient(quad, beta_constant)
    certificate = 0.0
    for k in range(grad.shape[1]):
        w = lsqr(inc.Ht, -grad[:, k], atol=1e-14, btol=1e-14, iter_lim=10 * (inc.m + inc.n_vertices))[0]
        certificate = max(certificate, float(np.max(np.abs(w))) if len(w) else 0.0)
    return certificate


def compute_lambda_max(
    quad: QuadratureScheme,
    inc: IncidenceStructure,
    opts: Optional[SolverOptions] = None,
    relative_tolerance: float = LAMBDA_MAX_RELATIVE_TOLERANCE,
    refine: bool = True,
) -> Tuple[float, FloatArray]:
    """ The smallest lambda whose fit is fully fused, to relative_tolerance, and the fully fused
    coefficients.  The dual certificate bounds it from above; geometric bisection below the
    certificate checks full fusion by actual fits warm started from the constant fit. """
    opts = opts or SolverOptions()
    beta_constant = constant_fit(quad, opts.eta_max)
    if inc.m == 0:
        return 0.0, beta_constant
    upper = dual_certificate(quad, inc, beta_constant)
    if not upper > 0:
        # the constant fit is already stationary for the unpenalized problem
        return 0.0, beta_constant
    if not refine:
        return upper, beta_constant

    def fused_at(lam: float):
        beta, _ = prox_gradient_fit(quad, inc, lam, beta_constant, opts)
        return is_fully_fused(inc, beta), beta

    fused, fused_beta = fused_at(upper)
    for _ in range(3):
        if fused:
            break
        log.warning(f"the fit at the certified lambda {upper:.6g} is not fully fused, doubling it")
        upper *= 2.0
        fused, fused_beta = fused_at(upper)
    if not fused:
        raise SolverInputError("could not reach full fusion, tighten the solver tolerances")

    lower = upper * LAMBDA_GRID_RATIO
    while upper / lower - 1.0 > relative_tolerance:
        middle = np.sqrt(upper * lower)
        fused, beta = fused_at(middle)
        if fused:
            upper, fused_beta = middle, beta
        else:
            lower = middle
    return float(upper), fused_beta
