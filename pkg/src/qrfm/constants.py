"""Shared numerical tolerances and size limits.

Every module and test reads its thresholds from here so that a check in one
place means the same thing everywhere else.
"""

# Structural checks on inputs.
HERMITIAN_TOL = 1e-12
UNITARY_TOL = 1e-10

# Reconstruction residual allowed for eig/SVD (relative Frobenius).
RECONSTRUCTION_TOL = 1e-10

# Largest register for which a full unitary may be materialized.
TINY_TIER_MAX_QUBITS = 12
# Largest register that may be simulated column-by-column when extracting a block.
SIMULATION_MAX_QUBITS = 20

# Relative spectral cutoff shared by the classical least-squares solve and the
# emulated linear-system solve. Singular values below RCOND * sigma_max are dropped.
SOLVE_RCOND = 1e-10

# Condition numbers above this abort the linear-system solve.
KAPPA_CAP = 1e12

# Largest inversion-polynomial degree built explicitly; above it the solve
# applies the target function directly.
MAX_INVERSION_DEGREE = 20001

# Dense grid used for sup-norm checks of polynomials on [-1, 1].
SUP_GRID_POINTS = 10_000

# Bessel evaluation range.
BESSEL_MAX_ORDER = 200
BESSEL_MAX_ARG = 100.0
