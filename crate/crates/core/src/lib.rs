//! Device-independent lower bounds on conditional von Neumann entropy.
//!
//! The logarithm is replaced by a Gauss-Radau rational lower bound; each
//! quadrature node yields a noncommutative polynomial problem that is
//! relaxed to a semidefinite program and solved by the embedded
//! interior-point solver.

pub mod devices;
pub mod entropy;
pub mod error;
pub mod ncpoly;
pub mod quadrature;
pub mod relax;
pub mod scalar;
pub mod scenario;
pub mod sdp;
pub mod tradeoff;

pub use error::{Error, Result};
pub use scalar::{Coefficient, Real};

/// Polynomial with real coefficients, the type used by the relaxations.
pub type Polynomial = ncpoly::NcPolynomial<f64>;
/// Double-precision quadrature rule.
pub type Rule = quadrature::QuadratureRule<f64>;
