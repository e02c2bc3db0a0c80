# Linear predictors are clamped to [-ETA_MAX, ETA_MAX] before exponentiation.
ETA_MAX = 50.0

# floor for the local lipschitz constant.
LIPSCHITZ_FLOOR = 1e-12

# outer proximal gradient loop
OUTER_MAX_ITERATIONS = 500
OUTER_TOLERANCE = 1e-7
# the local lipschitz constant is doubled at most this many times per step when the quadratic
# majorization check fails.
MAX_BACKTRACKS = 40

# inner ADMM loop, residual tolerances are absolute and scaled by sqrt(edge count).
ADMM_MAX_ITERATIONS = 200
ADMM_TOLERANCE = 1e-6
GAMMA_INITIAL = 1.0
# residual balancing: gamma doubles / halves when one residual exceeds the other by this ratio.
GAMMA_BALANCE_RATIO = 10.0
# gamma stays within GAMMA_INITIAL * 2**(+-GAMMA_MAX_DOUBLINGS), this bounds the factorization cache.
GAMMA_MAX_DOUBLINGS = 6

# lambda path
LAMBDA_GRID_RATIO = 1e-3
DEFAULT_N_LAMBDA = 20
LAMBDA_MAX_RELATIVE_TOLERANCE = 1e-2
# a coefficient block counts as fully fused when every edge difference is below this.
FUSION_TOLERANCE = 1e-8

# range-relative cluster threshold: eps = CLUSTER_EPSILON_SCALE * (max - min + 1)
CLUSTER_EPSILON_SCALE = 1e-6

# coefficient prediction at new locations averages this many nearest quadrature points.
DEFAULT_PREDICTION_K = 1

TRACE_CSV_FIELDS = ("iteration", "objective", "lipschitz", "primal_residual", "dual_residual")

# a fit has converged when ||beta - prox_{lambda/L}(beta - grad/L)|| falls below this.
FIXED_POINT_TOLERANCE = 1e-5
# when the outer loop stalls above the fixed-point tolerance the inner ADMM is tightened, at most
# this many times: tolerances / 10 and the iteration cap x 2 per step, tolerances floored below.
ADMM_TIGHTENING_STEPS = 4
ADMM_TOLERANCE_FLOOR = 1e-12
