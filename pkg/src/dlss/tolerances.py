"""Numerical tolerances shared across the package.

Every property test and certificate clause reads its slack from here so runs
are reproducible and the thresholds are auditable in one place.
"""

#: imaginary residue allowed in grid samples, relative to ``1 + |u|_0``
REALNESS_TOL = 1e-10

#: slack on |u|_inf <= |u|_0 and similar triangle-inequality checks
LINF_SLACK = 1e-10

#: absolute slack for algebra/interpolation/round-trip identities
IDENTITY_TOL = 1e-12

#: mean coefficient allowed by the mass clause
MASS_TOL = 1e-12

#: per-interval increase of |u|_0 tolerated by the Lyapunov clause
LYAPUNOV_SLACK = 1e-9

#: relative slack on the decay and analyticity bounds
BOUND_REL_SLACK = 1e-6

#: minimum of 1 + u on the grid before the rational form refuses to evaluate
POSITIVITY_FLOOR = 1e-6

#: Hermitian mismatch tolerated when reading checkpoints, relative to max |coeff|
HERMITIAN_TOL = 1e-12

#: largest exponent fed to exp() by the analytic-norm evaluation
EXP_ARG_MAX = 700.0

#: default grid refinement for L-infinity evaluation and the rational form
DEFAULT_OVERSAMPLE = 4

#: evaluation-grid points beyond which memory on a desk machine runs out
MAX_GRID_POINTS = 2**22
