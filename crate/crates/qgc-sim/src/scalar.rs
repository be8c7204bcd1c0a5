//! Floating-point scalar abstraction for the simulation core.
//!
//! The statevector engine, feature encodings, and ansatz are generic over the
//! underlying real type so they can run in `f32` (memory-lean sweeps) or
//! `f64` (the default shipped everywhere else). The [`Scalar`] trait is a
//! closed bundle of the `num-traits` capabilities those modules need; it is
//! implemented for `f32` and `f64` only.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign, ToPrimitive};
use serde::de::DeserializeOwned;
use serde::Serialize;

/// Real scalar type usable by the simulation core: `f32` or `f64`.
///
/// The bundle covers ordinary float arithmetic (`Float`), mathematical
/// constants (`FloatConst`), conversion to and from `f64` (tolerance
/// constants live in `f64`), compound assignment, summation, serde support
/// for checkpoints and weight documents, and the marker traits that let
/// states move across threads.
pub trait Scalar:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + Sum
    + Serialize
    + DeserializeOwned
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + 'static
{
    /// Convert from `f64`, used for tolerance constants and literals.
    ///
    /// Wraps `FromPrimitive::from_f64` with a panic on failure, which cannot
    /// occur for the two implementors.
    fn from_f64_lossy(v: f64) -> Self {
        Self::from_f64(v).expect("f64 literal representable in Scalar")
    }

    /// Convert from `usize` (dimension counts), saturating via `f64`.
    fn from_usize_lossy(v: usize) -> Self {
        Self::from_f64(v as f64).expect("usize count representable in Scalar")
    }

    /// Widen to `f64` for tolerance comparisons and reporting.
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().expect("Scalar representable as f64")
    }

    /// Tolerance for unit-norm / unit-trace / Hermiticity invariants.
    const INVARIANT_TOL: f64;
    /// Eigenvalue floor for positive-semidefiniteness checks.
    const PSD_FLOOR: f64;
}

impl Scalar for f32 {
    const INVARIANT_TOL: f64 = 1e-4;
    const PSD_FLOOR: f64 = -1e-3;
}

impl Scalar for f64 {
    const INVARIANT_TOL: f64 = 1e-10;
    const PSD_FLOOR: f64 = -1e-8;
}

#[cfg(test)]
mod tests {
    use super::*;

    fn uniform_amplitude<S: Scalar>(dim: usize) -> S {
        S::one() / S::from_usize_lossy(dim).sqrt()
    }

    #[test]
    fn literals_round_trip_in_both_widths() {
        assert_eq!(f64::from_f64_lossy(0.25), 0.25);
        assert_eq!(f32::from_f64_lossy(0.25), 0.25_f32);
        assert_eq!(f64::from_usize_lossy(1 << 20), 1_048_576.0);
    }

    #[test]
    fn generic_code_monomorphizes_for_both_widths() {
        let a32: f32 = uniform_amplitude(4);
        let a64: f64 = uniform_amplitude(4);
        assert!((a32 - 0.5).abs() < 1e-7);
        assert!((a64 - 0.5).abs() < 1e-15);
    }
}
