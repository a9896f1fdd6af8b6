"""Numerical tolerances for the optimization stack, kept in one place."""

FEAS_TOL = 1e-7          # primal feasibility tolerance
PIVOT_TOL = 1e-9         # smallest pivot magnitude the simplex will accept
COST_TOL = 1e-9          # reduced-cost threshold for declaring optimality
INTEGER_TOL = 1e-6       # integrality acceptance in branch and bound
REL_GAP = 1e-4           # default relative MIP gap
ABS_GAP = 1e-9           # default absolute MIP gap
BLAND_THRESHOLD = 50     # consecutive degenerate pivots before Bland's rule
REFACTOR_INTERVAL = 100  # simplex iterations between basis refactorizations
DEFAULT_TIME_LIMIT = 300.0   # seconds, wall clock, per MIP solve
INTERCEPT_CLAMP = 20.0   # |w0| cap under complete separation
