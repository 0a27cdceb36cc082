//! Numeric policy for the whole crate.
//!
//! Every tolerance, cutoff and default grid size the solvers rely on lives
//! here. Tests pin these values; change them only together with the error
//! budgets in the test suite.

/// Integration starts at `h0 = BALL_START_REL * R` on balls; below that the
/// profile is evaluated from the series expansion at the origin.
pub const BALL_START_REL: f64 = 1e-6;

/// A trajectory counts as blown up once `|u| + |v|` exceeds this.
pub const BLOWUP_CAP: f64 = 1e8;

/// Outer radius cap for unit shoots whose target zero may sit far out.
pub const SHOOT_R_CAP: f64 = 500.0;

/// Maximum Newton iterations for the boundary-condition polish.
pub const NEWTON_MAX_ITER: usize = 40;

/// Smallest admissible Newton damping factor before the polish gives up.
pub const NEWTON_MIN_DAMPING: f64 = 1e-6;

/// Default adaptive-integration tolerance for solution finding.
pub const TOL_ODE: f64 = 1e-10;

/// Default boundary-condition tolerance, relative to the solution amplitude.
pub const TOL_BC: f64 = 1e-8;

/// Default cap on the discrete flux defect of an accepted solution.
pub const TOL_RESIDUAL: f64 = 1e-5;

/// Integration tolerance used when re-integrating for verification profiles.
pub const TOL_VERIFY: f64 = 1e-12;

/// Default number of stored output nodes per solution profile.
pub const SOLUTION_NODES: usize = 2048;

/// Default interval count of the uniform residual-verification grid.
pub const VERIFY_INTERVALS: usize = 8192;
/// Hard cap for the adaptive refinement of the verification grid.
pub const VERIFY_INTERVALS_CAP: usize = 1 << 19;

/// Default interval count of the uniform grid for the derivative-pair
/// conservation residual.
pub const IDENTITY_INTERVALS: usize = 16384;

/// Target for the derivative-pair residual; the check grid doubles until
/// the defect drops below this or the refinement cap is hit.
pub const TOL_IDENTITY: f64 = 1e-5;

/// Absolute slack for the derivative-truncation bound. The bound is an
/// equality for symmetric models, so the slack only absorbs the boundary
/// defects at the float-refined critical radii.
pub const TRUNC_SLACK: f64 = 1e-8;

/// Default node count for spectral grids (before two-grid refinement).
pub const SPECTRAL_NODES: usize = 2048;

/// Default node count for the coupled-pencil oracle grid.
pub const ORACLE_NODES: usize = 512;

/// Clustering ratio of the reference output grid near the inner endpoint.
pub const GRID_RATIO: f64 = 1.02;

/// Fraction of the parameter interval inside the clustered zone.
pub const GRID_CLUSTER_FRAC: f64 = 0.25;

/// Interval count the clustering ratio is quoted at. The grid map itself is
/// resolution independent, so halving/doubling node counts scales every
/// spacing uniformly.
pub const GRID_REF_INTERVALS: usize = 2047;

/// Root refinement tolerance for zeros and critical points, relative to the
/// outer radius.
pub const ROOT_TOL_REL: f64 = 1e-10;

/// Relative threshold of the grazing-zero degeneracy test: a zero of `u`
/// where `|u'|` is below this fraction of `max |u'|` is rejected.
pub const DEGENERACY_REL: f64 = 1e-8;

/// Angular cutoff ties: `lambda_j + eigenvalue` within this margin of zero is
/// reported as non-exact.
pub const TIE_TOL: f64 = 1e-9;

/// Margin below the Hardy threshold required before a singular eigenvalue is
/// accepted as meaningful.
pub const THRESHOLD_TOL: f64 = 1e-8;

/// Eigenvalues below this count as negative; values in `[-NEG_EIG_TOL, NEG_EIG_TOL]`
/// are kernel candidates.
pub const NEG_EIG_TOL: f64 = 1e-10;

/// Relative cutoff radius for singular problems on balls.
pub const SINGULAR_CUTOFF_REL: f64 = 1e-4;

/// Absolute bisection bracket width for eigenvalue extraction.
pub const EIG_BRACKET_ABS: f64 = 1e-12;

/// Sign-preserving clamp for tiny pivots in the factorization-based
/// eigenvalue counters.
pub const PIVOT_GUARD: f64 = 1e-300;

/// Default number of eigenvalues reported per spectrum.
pub const K_MAX: usize = 8;

/// Samples per axis for the convexity and strong-coupling scans over the
/// attained value box.
pub const SCAN_SAMPLES: usize = 64;

/// Max absolute gap allowed between the coupled-pencil spectrum and the
/// merged scalar spectra on the same grid.
pub const UNION_TOL: f64 = 1e-8;

/// Negative coupled eigenvectors must satisfy `|phi - psi| <= tol * |phi|`.
pub const DIAG_EIGVEC_TOL: f64 = 1e-6;

/// Max relative defect of the quadratic-form identities over the
/// test-function family.
pub const QUAD_IDENTITY_TOL: f64 = 1e-10;

/// Pointwise floor for the b-potential of a convex model (roundoff slack).
pub const B_POINTWISE_FLOOR: f64 = -1e-12;

/// Seed for every deterministic pseudo-random draw in the crate.
pub const RNG_SEED: u64 = 42;

/// Number of sine modes in a random test function.
pub const TEST_FN_MODES: usize = 10;

/// Number of random test functions used by identity checks.
pub const TEST_FN_COUNT: usize = 20;
