use std::cmp::Ordering;
use std::fmt;

use super::symbol::{Party, Symbol};

/// A canonical monomial.
///
/// Symbols are grouped into party blocks `A < B < C < Z` (the relative order
/// inside a block is kept), no projector repeats next to itself, and a
/// product of two different outcomes of the same input makes the word zero.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Word {
    symbols: Vec<Symbol>,
    zero: bool,
}

impl Word {
    pub fn identity() -> Word {
        Word {
            symbols: Vec::new(),
            zero: false,
        }
    }

    pub fn zero() -> Word {
        Word {
            symbols: Vec::new(),
            zero: true,
        }
    }

    /// Single-letter word.
    pub fn from_symbol(s: Symbol) -> Word {
        Word {
            symbols: vec![s],
            zero: false,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.zero
    }

    pub fn is_identity(&self) -> bool {
        !self.zero && self.symbols.is_empty()
    }

    pub fn symbols(&self) -> &[Symbol] {
        &self.symbols
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    /// Reverses the word, toggles stars and re-canonicalizes.
    pub fn adjoint(&self) -> Word {
        if self.zero {
            return Word::zero();
        }
        let raw = self.symbols.iter().rev().map(|s| s.adjoint());
        canonicalize(raw)
    }

    /// Canonical product `self * other`.
    pub fn mul(&self, other: &Word) -> Word {
        if self.zero || other.zero {
            return Word::zero();
        }
        canonicalize(self.symbols.iter().chain(other.symbols.iter()).copied())
    }

    /// Representative of the class `{w, adjoint(w)}`: the smaller of the two.
    pub fn real_class(&self) -> Word {
        let adj = self.adjoint();
        if adj < *self {
            adj
        } else {
            self.clone()
        }
    }

    pub fn contains_party(&self, party: Party) -> bool {
        self.symbols.iter().any(|s| s.party() == party)
    }
}

impl Ord for Word {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .zero
            .cmp(&self.zero)
            .then(self.symbols.len().cmp(&other.symbols.len()))
            .then_with(|| self.symbols.cmp(&other.symbols))
    }
}

impl PartialOrd for Word {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.zero {
            return f.write_str("0");
        }
        if self.symbols.is_empty() {
            return f.write_str("1");
        }
        for (i, s) in self.symbols.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{s}")?;
        }
        Ok(())
    }
}

/// Brings a raw product of symbols into canonical form.
///
/// Does not check the symbols against any declared algebra; see
/// [`super::Algebra::canonicalize`] for the validating entry point.
pub fn canonicalize(raw: impl IntoIterator<Item = Symbol>) -> Word {
    let mut symbols: Vec<Symbol> = raw.into_iter().collect();
    // Distinct parties commute; stable sort keeps in-block order.
    symbols.sort_by_key(|s| s.party());

    let mut out: Vec<Symbol> = Vec::with_capacity(symbols.len());
    for s in symbols {
        if let (
            Some(Symbol::Projector {
                party: p0,
                input: x0,
                outcome: a0,
            }),
            Symbol::Projector {
                party,
                input,
                outcome,
            },
        ) = (out.last().copied(), s)
        {
            if p0 == party && x0 == input {
                if a0 == outcome {
                    continue;
                }
                return Word::zero();
            }
        }
        out.push(s);
    }
    Word {
        symbols: out,
        zero: false,
    }
}
