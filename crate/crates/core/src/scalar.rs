//! Scalar abstractions.
//!
//! Quadrature and the rational log bounds are generic over [`Real`]
//! (`f32`/`f64`); noncommutative polynomials carry any [`Coefficient`]
//! ring, which includes exact rationals and complex numbers. The moment
//! relaxation and the interior-point solver work in `f64` only.

use std::fmt::Debug;
use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;
use num_rational::Rational64;
use num_traits::{FromPrimitive, One, ToPrimitive, Zero};

/// Floating point scalar: `f32` or `f64`.
pub trait Real: num_traits::Float + FromPrimitive + Debug + Send + Sync + 'static {
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal representable")
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Coefficient ring of a noncommutative polynomial.
pub trait Coefficient:
    Clone
    + PartialEq
    + Debug
    + Zero
    + One
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Neg<Output = Self>
    + Send
    + Sync
{
    /// Complex conjugate (identity on real rings).
    fn conj(&self) -> Self;

    /// Real part as `f64`; the real moment relaxation only sees this.
    fn real_part(&self) -> f64;

    fn imag_part(&self) -> f64 {
        0.0
    }
}

impl Coefficient for f64 {
    fn conj(&self) -> Self {
        *self
    }
    fn real_part(&self) -> f64 {
        *self
    }
}

impl Coefficient for f32 {
    fn conj(&self) -> Self {
        *self
    }
    fn real_part(&self) -> f64 {
        f64::from(*self)
    }
}

impl Coefficient for Complex64 {
    fn conj(&self) -> Self {
        Complex64::conj(self)
    }
    fn real_part(&self) -> f64 {
        self.re
    }
    fn imag_part(&self) -> f64 {
        self.im
    }
}

impl Coefficient for Rational64 {
    fn conj(&self) -> Self {
        *self
    }
    fn real_part(&self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}
