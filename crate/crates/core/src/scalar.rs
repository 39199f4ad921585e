//! Floating-point abstraction used by every numeric module.
//!
//! The whole simulation core is generic over [`Scalar`] so the same code runs
//! at `f32` or `f64`; the crate root exports `f64` aliases, which are what the
//! CLI and the experiment suite use.

use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::str::FromStr;

use num_traits::{Float, FloatConst, FromPrimitive, NumAssignOps};
use rand::distr::uniform::SampleUniform;
use rand::Rng;
use rand_distr::StandardNormal;

/// Scalar type the simulation runs on (`f32` or `f64`).
pub trait Scalar:
    Float
    + FloatConst
    + FromPrimitive
    + NumAssignOps
    + SampleUniform
    + Sum
    + Display
    + Debug
    + FromStr
    + Send
    + Sync
    + 'static
{
    /// One draw from the standard normal distribution.
    fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self;

    /// Conversion from `f64` for constants and configuration values.
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("finite f64 constant")
    }
}

impl Scalar for f32 {
    fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self {
        rng.sample(StandardNormal)
    }
}

impl Scalar for f64 {
    fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self {
        rng.sample(StandardNormal)
    }
}
