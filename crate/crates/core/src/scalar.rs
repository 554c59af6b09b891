//! Scalar abstraction shared by every numeric routine in the crate.

use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::ops::{AddAssign, DivAssign, MulAssign, SubAssign};

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating point type the pipeline can run on (`f32` or `f64`).
///
/// The associated tolerances are expressed in `f64` and converted on use,
/// so each precision carries thresholds that make sense for its mantissa.
pub trait Scalar:
    Float
    + FromPrimitive
    + ToPrimitive
    + Sum
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
    + Default
    + Debug
    + Display
    + Send
    + Sync
    + 'static
{
    /// Smallest pivot magnitude accepted by the simplex tableau.
    const PIVOT_TOL: f64;
    /// Feasibility / reconstruction tolerance (row residuals, mixture marginals).
    const FEAS_TOL: f64;
    /// Slack used by comparisons between independently computed quantities.
    const CHECK_TOL: f64;
    /// Absorbs rounding noise at exact ties in the decision rule.
    const TIE_TOL: f64;

    /// Converts an `f64` literal; panics only if the value is not representable at all.
    #[inline]
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable in scalar type")
    }

    #[inline]
    fn from_usize_lossy(n: usize) -> Self {
        Self::of(n as f64)
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// `max(self, 0)`.
    #[inline]
    fn pos(self) -> Self {
        if self > Self::zero() {
            self
        } else {
            Self::zero()
        }
    }

    fn pivot_tol() -> Self {
        Self::of(Self::PIVOT_TOL)
    }

    fn feas_tol() -> Self {
        Self::of(Self::FEAS_TOL)
    }

    fn check_tol() -> Self {
        Self::of(Self::CHECK_TOL)
    }

    fn tie_tol() -> Self {
        Self::of(Self::TIE_TOL)
    }
}

impl Scalar for f64 {
    const PIVOT_TOL: f64 = 1e-10;
    const FEAS_TOL: f64 = 1e-9;
    const CHECK_TOL: f64 = 1e-6;
    const TIE_TOL: f64 = 1e-12;
}

impl Scalar for f32 {
    const PIVOT_TOL: f64 = 1e-5;
    const FEAS_TOL: f64 = 1e-4;
    const CHECK_TOL: f64 = 1e-3;
    const TIE_TOL: f64 = 1e-5;
}
