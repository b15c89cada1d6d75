//! Scalar abstraction for the numeric pipeline.
//!
//! Everything downstream of the event parsers (feature matrices, statistics,
//! the SVM solver, clustering) is generic over [`Scalar`] so the same code
//! runs in `f32` or `f64`. The concrete aliases the CLI uses live at the
//! crate root.

use num_traits::{Float, FromPrimitive, ToPrimitive};
use std::fmt;

/// Floating-point scalar: `f32` or `f64`.
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + fmt::Debug + fmt::Display + Default + Send + Sync + 'static
{
    /// Converts an exact count into the scalar domain.
    fn from_count(n: usize) -> Self {
        Self::from_usize(n).expect("count representable")
    }

    /// Lossy conversion from `f64`; exact for `f64` itself.
    fn from_f64_lossy(v: f64) -> Self {
        Self::from_f64(v).expect("finite f64 convertible")
    }

    /// Widens to `f64` for serialization and reporting.
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().expect("scalar convertible to f64")
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Mean and sample standard deviation (divisor `n - 1`) of a slice.
///
/// Returns `(mean, 0)` for slices shorter than two elements.
pub fn mean_and_sample_std<F: Scalar>(values: &[F]) -> (F, F) {
    let n = values.len();
    if n == 0 {
        return (F::zero(), F::zero());
    }
    let count = F::from_count(n);
    let mean = values.iter().fold(F::zero(), |acc, &v| acc + v) / count;
    if n < 2 {
        return (mean, F::zero());
    }
    let ss = values.iter().fold(F::zero(), |acc, &v| {
        let d = v - mean;
        acc + d * d
    });
    let var = ss / F::from_count(n - 1);
    (mean, var.sqrt())
}
