//! Numeric thresholds shared across the crate.
//!
//! All inputs are desk-scale rationals of order one, so fixed absolute
//! tolerances are adequate; no tolerance here is tuned per spec file.

/// Constraint-activity tolerance: a slack with |ℓ| at or below this is
/// treated as tight when classifying points against facets.
pub const ACTIVITY_TOL: f64 = 1e-9;

/// Simplex pivot threshold; entries smaller in magnitude are treated as
/// zero during pivoting and ratio tests.
pub const LP_PIVOT_TOL: f64 = 1e-10;

/// Phase-1 feasibility threshold: a residual artificial sum below this
/// counts as a feasible basis.
pub const LP_FEAS_TOL: f64 = 1e-9;

/// Values this close to a logarithmic singularity raise a domain error
/// instead of returning huge finite numbers or infinities.
pub const LOG_GUARD: f64 = 1e-12;

/// Relative gradient-residual target for the damped Newton solver.
pub const NEWTON_TOL: f64 = 1e-10;

/// Newton iteration cap.
pub const NEWTON_MAX_ITER: usize = 100;

/// Armijo sufficient-decrease constant for backtracking line search.
pub const ARMIJO_C: f64 = 1e-4;

/// Central-difference step for derivative verification.
pub const FD_STEP: f64 = 1e-5;
