use std::collections::btree_map::Entry;
use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use super::word::Word;
use crate::error::{invalid, Result};
use crate::scalar::Coefficient;

/// Fingerprint of the algebra a polynomial was built in.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct AlgebraTag(pub(crate) u64);

/// Linear combination of canonical words.
///
/// Zero coefficients and the zero word never appear as keys. Polynomials
/// built through an [`super::Algebra`] carry its tag; pure constants carry
/// none and combine with anything.
#[derive(Clone, Debug, PartialEq)]
pub struct NcPolynomial<T> {
    terms: BTreeMap<Word, T>,
    algebra: Option<AlgebraTag>,
}

impl<T: Coefficient> Default for NcPolynomial<T> {
    fn default() -> Self {
        Self::zero()
    }
}

impl<T: Coefficient> NcPolynomial<T> {
    pub fn zero() -> Self {
        NcPolynomial {
            terms: BTreeMap::new(),
            algebra: None,
        }
    }

    pub fn constant(c: T) -> Self {
        Self::monomial(Word::identity(), c)
    }

    pub fn monomial(word: Word, c: T) -> Self {
        let mut p = Self::zero();
        p.add_term(word, c);
        p
    }

    pub(crate) fn tagged(mut self, tag: AlgebraTag) -> Self {
        self.algebra = Some(tag);
        self
    }

    pub fn algebra(&self) -> Option<AlgebraTag> {
        self.algebra
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Word, &T)> {
        self.terms.iter()
    }

    pub fn words(&self) -> impl Iterator<Item = &Word> {
        self.terms.keys()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coefficient(&self, w: &Word) -> T {
        self.terms.get(w).cloned().unwrap_or_else(T::zero)
    }

    /// Largest word length.
    pub fn degree(&self) -> usize {
        self.terms.keys().map(Word::len).max().unwrap_or(0)
    }

    pub fn add_term(&mut self, word: Word, c: T) {
        if word.is_zero() || c.is_zero() {
            return;
        }
        match self.terms.entry(word) {
            Entry::Vacant(slot) => {
                slot.insert(c);
            }
            Entry::Occupied(mut slot) => {
                let sum = slot.get().clone() + c;
                if sum.is_zero() {
                    slot.remove();
                } else {
                    *slot.get_mut() = sum;
                }
            }
        }
    }

    fn join_tags(&self, other: &Self) -> Result<Option<AlgebraTag>> {
        match (self.algebra, other.algebra) {
            (Some(a), Some(b)) if a != b => {
                Err(invalid("polynomials belong to different operator algebras"))
            }
            (a, b) => Ok(a.or(b)),
        }
    }

    pub fn try_add(&self, other: &Self) -> Result<Self> {
        let tag = self.join_tags(other)?;
        let mut out = self.clone();
        out.algebra = tag;
        for (w, c) in other.terms() {
            out.add_term(w.clone(), c.clone());
        }
        Ok(out)
    }

    /// Distributes, canonicalizes every product word and merges terms.
    pub fn multiply(&self, other: &Self) -> Result<Self> {
        let tag = self.join_tags(other)?;
        let mut out = Self::zero();
        out.algebra = tag;
        for (w1, c1) in self.terms() {
            for (w2, c2) in other.terms() {
                out.add_term(w1.mul(w2), c1.clone() * c2.clone());
            }
        }
        Ok(out)
    }

    pub fn scale(&self, c: T) -> Self {
        let mut out = Self::zero();
        out.algebra = self.algebra;
        for (w, v) in self.terms() {
            out.add_term(w.clone(), v.clone() * c.clone());
        }
        out
    }

    /// Conjugates coefficients and takes the adjoint of every word.
    pub fn adjoint(&self) -> Self {
        let mut out = Self::zero();
        out.algebra = self.algebra;
        for (w, c) in self.terms() {
            out.add_term(w.adjoint(), c.conj());
        }
        out
    }

    pub fn is_hermitian(&self) -> bool {
        self.adjoint().terms == self.terms
    }
}

impl<T: Coefficient> Add for &NcPolynomial<T> {
    type Output = NcPolynomial<T>;

    /// Panics when the operands come from different algebras; use
    /// [`NcPolynomial::try_add`] to get an error instead.
    fn add(self, rhs: Self) -> NcPolynomial<T> {
        self.try_add(rhs).expect("mixed operator algebras")
    }
}

impl<T: Coefficient> Sub for &NcPolynomial<T> {
    type Output = NcPolynomial<T>;

    fn sub(self, rhs: Self) -> NcPolynomial<T> {
        self.try_add(&-rhs).expect("mixed operator algebras")
    }
}

impl<T: Coefficient> Mul for &NcPolynomial<T> {
    type Output = NcPolynomial<T>;

    /// Panics when the operands come from different algebras; use
    /// [`NcPolynomial::multiply`] to get an error instead.
    fn mul(self, rhs: Self) -> NcPolynomial<T> {
        self.multiply(rhs).expect("mixed operator algebras")
    }
}

impl<T: Coefficient> Neg for &NcPolynomial<T> {
    type Output = NcPolynomial<T>;

    fn neg(self) -> NcPolynomial<T> {
        self.scale(-T::one())
    }
}

impl<T: Coefficient + fmt::Display> fmt::Display for NcPolynomial<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        for (i, (w, c)) in self.terms.iter().enumerate() {
            if i > 0 {
                f.write_str(" + ")?;
            }
            write!(f, "({c})·{w}")?;
        }
        Ok(())
    }
}
