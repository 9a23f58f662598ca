//! Scalar abstraction shared by every metric in the crate.
//!
//! Metrics, probabilities and scores are computed over any `Scalar`
//! (in practice `f32` or `f64`). Counting is always done in integers and
//! converted once at the end.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, ToPrimitive};
use serde::de::DeserializeOwned;
use serde::Serialize;

pub trait Scalar:
    Float
    + FromPrimitive
    + ToPrimitive
    + Sum
    + Default
    + Debug
    + Display
    + Send
    + Sync
    + Serialize
    + DeserializeOwned
    + 'static
{
    fn from_count(n: usize) -> Self {
        Self::from_usize(n).expect("count representable as float")
    }

    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal representable as float")
    }

    /// Ratio of two counts; `None` when the denominator is zero.
    fn ratio(num: usize, den: usize) -> Option<Self> {
        (den != 0).then(|| Self::from_count(num) / Self::from_count(den))
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Harmonic mean of precision and recall, zero when both are zero.
pub fn f1<T: Scalar>(precision: T, recall: T) -> T {
    let denom = precision + recall;
    if denom == T::zero() {
        T::zero()
    } else {
        T::lit(2.0) * precision * recall / denom
    }
}
