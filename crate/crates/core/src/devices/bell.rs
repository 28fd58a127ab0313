use serde::{Deserialize, Serialize};

use super::distribution::Distribution;
use crate::error::{invalid, Result};
use crate::ncpoly::{Algebra, NcPolynomial, Party};

/// Bell expressions over binary observables `A_x = M_{0|x} − M_{1|x}`
/// (outcome 0 is the `+1` eigenvalue).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "expression")]
pub enum BellExpression {
    /// `⟨A0B0⟩ + ⟨A0B1⟩ + ⟨A1B0⟩ − ⟨A1B1⟩`.
    Chsh,
    /// `α(⟨A0B0⟩ + ⟨A0B1⟩) + ⟨A1B0⟩ − ⟨A1B1⟩`.
    AsymChsh { alpha: f64 },
    /// `⟨A1 B+ C+⟩ − ⟨A0 (B− + C−)⟩ − ⟨B− C−⟩` with `X± = (X0 ± X1)/2`.
    Holz,
}

/// `coeff · ⟨Π_p X_{p, input_p}⟩` over the listed (party, input) pairs.
#[derive(Clone, Debug, PartialEq)]
pub struct Correlator {
    pub coeff: f64,
    pub factors: Vec<(usize, usize)>,
}

fn corr(coeff: f64, factors: &[(usize, usize)]) -> Correlator {
    Correlator {
        coeff,
        factors: factors.to_vec(),
    }
}

impl BellExpression {
    pub fn parties(&self) -> usize {
        match self {
            BellExpression::Holz => 3,
            _ => 2,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            BellExpression::Chsh => "chsh",
            BellExpression::AsymChsh { .. } => "asym_chsh",
            BellExpression::Holz => "holz",
        }
    }

    pub fn correlators(&self) -> Vec<Correlator> {
        const A: usize = 0;
        const B: usize = 1;
        const C: usize = 2;
        match *self {
            BellExpression::Chsh => BellExpression::AsymChsh { alpha: 1.0 }.correlators(),
            BellExpression::AsymChsh { alpha } => vec![
                corr(alpha, &[(A, 0), (B, 0)]),
                corr(alpha, &[(A, 0), (B, 1)]),
                corr(1.0, &[(A, 1), (B, 0)]),
                corr(-1.0, &[(A, 1), (B, 1)]),
            ],
            BellExpression::Holz => {
                let mut out = Vec::new();
                for y in 0..2 {
                    for z in 0..2 {
                        out.push(corr(0.25, &[(A, 1), (B, y), (C, z)]));
                    }
                }
                for p in [B, C] {
                    out.push(corr(-0.5, &[(A, 0), (p, 0)]));
                    out.push(corr(0.5, &[(A, 0), (p, 1)]));
                }
                for (y, z, s) in [(0, 0, -1.0), (0, 1, 1.0), (1, 0, 1.0), (1, 1, -1.0)] {
                    out.push(corr(0.25 * s, &[(B, y), (C, z)]));
                }
                out
            }
        }
    }

    /// Largest value over local deterministic strategies.
    pub fn classical_bound(&self) -> f64 {
        match *self {
            BellExpression::Chsh => 2.0,
            BellExpression::AsymChsh { alpha } => 2.0f64.max(2.0 * alpha.abs()),
            BellExpression::Holz => 1.0,
        }
    }

    /// Largest quantum value.
    pub fn quantum_bound(&self) -> f64 {
        match *self {
            BellExpression::Chsh => 2.0 * std::f64::consts::SQRT_2,
            BellExpression::AsymChsh { alpha } => 2.0 * (1.0 + alpha * alpha).sqrt(),
            BellExpression::Holz => 1.5,
        }
    }

    fn check_arity(&self, outcomes: impl Fn(usize, usize) -> Option<usize>) -> Result<()> {
        for c in self.correlators() {
            for &(p, x) in &c.factors {
                if outcomes(p, x) != Some(2) {
                    return Err(invalid(format!(
                        "{} needs a binary input {} of party {}",
                        self.name(),
                        x,
                        Party::MEASURING[p].letter()
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn value(&self, p: &Distribution) -> Result<f64> {
        self.check_arity(|party, x| p.outcomes(party, x))?;
        let mut total = 0.0;
        for c in self.correlators() {
            total += c.coeff * p.correlator(&c.factors)?;
        }
        Ok(total)
    }

    /// The expression as a polynomial in the algebra's projectors.
    pub fn polynomial(&self, alg: &Algebra) -> Result<NcPolynomial<f64>> {
        self.check_arity(|party, x| alg.outcomes(Party::MEASURING[party], x))?;
        let mut out = NcPolynomial::zero();
        for c in self.correlators() {
            let mut term = alg.identity::<f64>().scale(c.coeff);
            for &(p, x) in &c.factors {
                let m = alg.projector::<f64>(Party::MEASURING[p], x, 0)?;
                let obs = &m.scale(2.0) - &alg.identity();
                term = term.multiply(&obs)?;
            }
            out = out.try_add(&term)?;
        }
        Ok(out)
    }
}

/// CHSH game winning probability from the expression value.
pub fn chsh_score(s: f64) -> f64 {
    (s + 4.0) / 8.0
}

/// Inverse of [`chsh_score`].
pub fn chsh_value(score: f64) -> f64 {
    8.0 * score - 4.0
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chsh_is_unit_weight_asymmetric() {
        assert_eq!(
            BellExpression::Chsh.correlators(),
            BellExpression::AsymChsh { alpha: 1.0 }.correlators()
        );
    }

    #[test]
    fn holz_deterministic_maximum_is_one() {
        let holz = BellExpression::Holz;
        let mut best = f64::NEG_INFINITY;
        for bits in 0u32..64 {
            let v = |p: usize, x: usize| {
                if bits >> (2 * p + x) & 1 == 0 {
                    1.0
                } else {
                    -1.0
                }
            };
            let s: f64 = holz
                .correlators()
                .iter()
                .map(|c| c.coeff * c.factors.iter().map(|&(p, x)| v(p, x)).product::<f64>())
                .sum();
            best = best.max(s);
        }
        assert!((best - 1.0).abs() < 1e-12);
    }

    #[test]
    fn chsh_polynomial_constant_term() {
        // With every projector at zero each observable is −I: S = 1 + 1 + 1 − 1.
        let alg = Algebra::new(vec![vec![2, 2], vec![2, 2]]).unwrap();
        let p = BellExpression::Chsh.polynomial(&alg).unwrap();
        assert_eq!(p.coefficient(&crate::ncpoly::Word::identity()), 2.0);
        assert!(BellExpression::Holz.polynomial(&alg).is_err());
    }
}
