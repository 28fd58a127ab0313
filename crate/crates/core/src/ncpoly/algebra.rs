use std::collections::hash_map::DefaultHasher;
use std::hash::{Hash, Hasher};

use super::poly::{AlgebraTag, NcPolynomial};
use super::symbol::{Party, Symbol};
use super::word::{canonicalize, Word};
use crate::error::{invalid, Result};
use crate::scalar::Coefficient;

/// Declared operator algebra: measurement arities per party plus the free
/// `Z` family of one quadrature node.
///
/// A `d`-outcome input is represented by the projectors of outcomes
/// `0..d-1`; the last one is substituted by `I - Σ others` whenever a
/// polynomial asks for it, so completeness holds identically.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Algebra {
    outcomes: Vec<Vec<usize>>,
    free_labels: usize,
    node: usize,
    hermitian: usize,
}

impl Algebra {
    /// `outcomes[party][input]` is the number of outcomes of that input.
    pub fn new(outcomes: Vec<Vec<usize>>) -> Result<Self> {
        if outcomes.len() > 3 {
            return Err(invalid("at most three measuring parties (A, B, C)"));
        }
        for (p, inputs) in outcomes.iter().enumerate() {
            if let Some(x) = inputs.iter().position(|&d| d == 0) {
                return Err(invalid(format!(
                    "party {} input {x} declares zero outcomes",
                    Party::MEASURING[p].letter()
                )));
            }
        }
        Ok(Algebra {
            outcomes,
            free_labels: 0,
            node: 0,
            hermitian: 0,
        })
    }

    /// Adds `labels` free operators `Z_0 .. Z_{labels-1}` for quadrature node `node`.
    pub fn with_free(mut self, labels: usize, node: usize) -> Self {
        self.free_labels = labels;
        self.node = node;
        self
    }

    /// Adds `count` free self-adjoint letters.
    pub fn with_hermitian(mut self, count: usize) -> Self {
        self.hermitian = count;
        self
    }

    pub fn tag(&self) -> AlgebraTag {
        let mut h = DefaultHasher::new();
        self.hash(&mut h);
        AlgebraTag(h.finish())
    }

    pub fn parties(&self) -> usize {
        self.outcomes.len()
    }

    pub fn inputs(&self, party: Party) -> usize {
        self.outcomes.get(party.index()).map_or(0, Vec::len)
    }

    pub fn outcomes(&self, party: Party, input: usize) -> Option<usize> {
        self.outcomes.get(party.index())?.get(input).copied()
    }

    pub fn free_labels(&self) -> usize {
        self.free_labels
    }

    pub fn node(&self) -> usize {
        self.node
    }

    pub fn validate(&self, s: &Symbol) -> Result<()> {
        match *s {
            Symbol::Projector {
                party,
                input,
                outcome,
            } => {
                let d = self.outcomes(party, input as usize).ok_or_else(|| {
                    invalid(format!(
                        "undeclared measurement {}|{}",
                        party.letter(),
                        input
                    ))
                })?;
                if outcome as usize + 1 >= d {
                    return Err(invalid(format!(
                        "{s}: only outcomes 0..{} are letters (last outcome is eliminated)",
                        d.saturating_sub(2)
                    )));
                }
                Ok(())
            }
            Symbol::Free { label, node, .. } => {
                if (label as usize) < self.free_labels && node as usize == self.node {
                    Ok(())
                } else {
                    Err(invalid(format!("undeclared free operator {s}")))
                }
            }
            Symbol::Hermitian { label } => {
                if (label as usize) < self.hermitian {
                    Ok(())
                } else {
                    Err(invalid(format!("undeclared hermitian operator {s}")))
                }
            }
        }
    }

    /// Validating canonicalization.
    pub fn canonicalize(&self, raw: &[Symbol]) -> Result<Word> {
        for s in raw {
            self.validate(s)?;
        }
        Ok(canonicalize(raw.iter().copied()))
    }

    /// Letters of one party in basis order (input-major for measurements;
    /// `Z_a, Z_a*` pairs for the free family, then hermitian letters).
    pub fn letters_of(&self, party: Party) -> Vec<Symbol> {
        match party {
            Party::Z => {
                let mut out = Vec::new();
                for a in 0..self.free_labels {
                    let z = Symbol::free(a, self.node);
                    out.push(z);
                    out.push(z.adjoint());
                }
                out.extend((0..self.hermitian).map(|l| Symbol::Hermitian { label: l as u16 }));
                out
            }
            p => {
                let mut out = Vec::new();
                for (x, &d) in self
                    .outcomes
                    .get(p.index())
                    .into_iter()
                    .flatten()
                    .enumerate()
                {
                    for a in 0..d.saturating_sub(1) {
                        out.push(Symbol::projector(p, x, a));
                    }
                }
                out
            }
        }
    }

    /// All letters, party blocks in canonical order.
    pub fn letters(&self) -> Vec<Symbol> {
        [Party::A, Party::B, Party::C, Party::Z]
            .into_iter()
            .flat_map(|p| self.letters_of(p))
            .collect()
    }

    pub fn identity<T: Coefficient>(&self) -> NcPolynomial<T> {
        NcPolynomial::constant(T::one()).tagged(self.tag())
    }

    pub fn word<T: Coefficient>(&self, raw: &[Symbol]) -> Result<NcPolynomial<T>> {
        Ok(NcPolynomial::monomial(self.canonicalize(raw)?, T::one()).tagged(self.tag()))
    }

    /// Projector `M_{outcome|input}` of `party`; the last outcome expands to
    /// `I - Σ_{a < d-1} M_{a|input}`.
    pub fn projector<T: Coefficient>(
        &self,
        party: Party,
        input: usize,
        outcome: usize,
    ) -> Result<NcPolynomial<T>> {
        let d = self
            .outcomes(party, input)
            .ok_or_else(|| invalid(format!("undeclared measurement {}|{input}", party.letter())))?;
        if outcome >= d {
            return Err(invalid(format!(
                "outcome {outcome} out of range for {}|{input} with {d} outcomes",
                party.letter()
            )));
        }
        if outcome + 1 < d {
            return self.word(&[Symbol::projector(party, input, outcome)]);
        }
        let mut p = self.identity::<T>();
        for a in 0..d - 1 {
            p = &p - &self.word(&[Symbol::projector(party, input, a)])?;
        }
        Ok(p)
    }

    /// Free operator `Z_label` of this algebra's node (or its adjoint).
    pub fn free<T: Coefficient>(&self, label: usize, star: bool) -> Result<NcPolynomial<T>> {
        let z = Symbol::free(label, self.node);
        self.word(&[if star { z.adjoint() } else { z }])
    }
}
