//! Words and polynomials in party-labelled noncommuting operators.
//!
//! Measurement letters are projectors (idempotent, orthogonal across the
//! outcomes of one input); letters of different parties commute; the free
//! `Z` letters carry no relation beyond commuting with every measurement.

mod algebra;
mod poly;
mod symbol;
mod word;

pub use algebra::Algebra;
pub use poly::{AlgebraTag, NcPolynomial};
pub use symbol::{Party, Symbol};
pub use word::{canonicalize, Word};
