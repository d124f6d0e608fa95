//! Scalar abstraction for the scoring kernels.
//!
//! BM25, TF-IDF cosine and the re-ranker blend are written against
//! [`Scalar`] so they can run in `f32` for memory-bound deployments or in
//! `f64` (the default used everywhere through [`crate::Score`]).

use std::fmt::{Debug, Display};

use num_traits::{Float, FromPrimitive, ToPrimitive};

pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + Default + Debug + Display + Send + Sync + 'static
{
    fn of(v: f64) -> Self {
        Self::from_f64(v).expect("finite f64 is representable")
    }

    fn of_usize(v: usize) -> Self {
        Self::from_usize(v).expect("usize is representable")
    }

    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl<T> Scalar for T where
    T: Float + FromPrimitive + ToPrimitive + Default + Debug + Display + Send + Sync + 'static
{
}

/// Total order for scores: descending by value, NaN last.
pub fn cmp_desc<F: Scalar>(a: F, b: F) -> std::cmp::Ordering {
    b.partial_cmp(&a).unwrap_or_else(|| a.is_nan().cmp(&b.is_nan()))
}
