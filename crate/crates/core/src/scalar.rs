//! Numeric trait bounds shared by the solver, baselines and metrics.

use std::iter::Sum;

use ndarray::NdFloat;
use num_traits::{FromPrimitive, ToPrimitive};

/// Floating point scalar usable throughout the numerical core.
pub trait Scalar: NdFloat + FromPrimitive + ToPrimitive + Sum + Default {
    /// Lossy conversion from `f64`; every `Scalar` can represent any finite
    /// `f64` up to rounding.
    fn of(v: f64) -> Self {
        Self::from_f64(v).expect("f64 converts to every Scalar")
    }

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}
