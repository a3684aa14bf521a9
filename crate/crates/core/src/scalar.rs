//! Floating-point scalar abstraction for the filtering front end.

use num_traits::{Float, FromPrimitive};

/// Floating-point scalar the vesselness math is generic over.
///
/// `f32` trades precision for speed; `f64` is the reference instantiation
/// used by the command-line pipeline.
pub trait Scalar: Float + FromPrimitive + core::fmt::Debug + Send + Sync + 'static {
    /// Shorthand for converting an `f64` constant; panics only if the
    /// target type cannot represent finite doubles at all, which no
    /// implementor of this trait does.
    fn c(v: f64) -> Self {
        Self::from_f64(v).expect("finite f64 constant")
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}
