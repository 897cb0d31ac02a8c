use std::fmt;
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating-point scalar used for probabilities and log-likelihood ratios.
///
/// Implemented for `f32` and `f64`. The decoder and the feedback loops are
/// generic over this trait; `f64` is the default everywhere precision
/// matters (exact enumeration sums, tail bounds).
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + Sum + fmt::Debug + fmt::Display + Send + Sync + 'static
{
}

impl Scalar for f32 {}
impl Scalar for f64 {}
