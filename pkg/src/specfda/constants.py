"""Default tolerances and sizes used across the package."""

# numerics
SYMMETRY_TOL = 1e-10
NEG_EIG_REL_TOL = 1e-10  # relative to trace

# kernels / Mercer systems
NYSTROM_GRID = 512
MERCER_TRUNCATION = 200
KL_TRUNCATION = 100

# filters
FAMILY_SLACK = 1e-9

# covariance
PAIR_CAP = 6000

# rate lab
NORM_GRID_1D = 513
NORM_GRID_2D = 129
SLOPE_TOLERANCE = 0.15
COV_SLOPE_TOLERANCE = 0.20
REPLICATIONS = 50
