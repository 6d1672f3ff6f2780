//! Scalar abstraction for the analysis kernels.
//!
//! All numeric pipeline stages (difference matrices, PCA, contribution
//! measures, indexing, evaluation) are generic over [`Scalar`] so the same
//! code runs in single or double precision. The crate root exposes `f64`
//! aliases for the common case.

use core::fmt::Debug;
use core::iter::Sum;

use num_traits::{Float, FromPrimitive, NumCast};

/// Floating-point scalar: `f32` or `f64`.
pub trait Scalar: Float + FromPrimitive + NumCast + Sum<Self> + Debug + 'static {
    /// Largest magnitude fed to `exp` before the sigmoid saturates.
    fn exp_clamp() -> Self;

    /// Cast a finite `f64` literal into this scalar type.
    #[inline]
    fn lit(value: f64) -> Self {
        <Self as NumCast>::from(value).expect("finite literal")
    }
}

impl Scalar for f32 {
    #[inline]
    fn exp_clamp() -> Self {
        80.0
    }
}

impl Scalar for f64 {
    #[inline]
    fn exp_clamp() -> Self {
        700.0
    }
}
