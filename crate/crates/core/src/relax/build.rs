use std::collections::HashMap;

use super::basis::MonomialBasis;
use super::instance::{BlockTemplate, ConstraintRole, LinearConstraint, SdpInstance, Sense};
use crate::error::{invalid, Error, Result};
use crate::ncpoly::{NcPolynomial, Symbol, Word};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StatKind {
    BellInequality,
    DistributionEntry,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Relation {
    AtLeast,
    Equal,
}

/// Scalar constraint `L(polynomial) (>= | =) bound` on observed statistics.
#[derive(Clone, Debug, PartialEq)]
pub struct StatConstraint {
    pub label: String,
    pub kind: StatKind,
    pub polynomial: NcPolynomial<f64>,
    pub bound: f64,
    pub relation: Relation,
}

/// `‖symbol‖ <= alpha`, imposed as localizing blocks for `α² − Z*Z` and `α² − ZZ*`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NormBound {
    pub symbol: Symbol,
    pub alpha: f64,
}

/// Localizing constraint `q ⪰ 0` over the moment sub-basis `words`.
#[derive(Clone, Debug, PartialEq)]
pub struct Localizer {
    pub label: String,
    pub polynomial: NcPolynomial<f64>,
    pub words: Vec<Word>,
}

/// Which optimum the relaxation bounds.
#[derive(Clone, Debug, PartialEq)]
pub struct Objective {
    pub polynomial: NcPolynomial<f64>,
    pub sense: Sense,
}

impl NormBound {
    /// The two localizers over words of length `<= level - 1`.
    pub fn localizers(&self, basis: &MonomialBasis) -> Vec<Localizer> {
        let z = Word::from_symbol(self.symbol);
        let zs = Word::from_symbol(self.symbol.adjoint());
        let words = basis.truncated(basis.level().saturating_sub(1));
        let a2 = NcPolynomial::constant(self.alpha * self.alpha);
        [(&zs, &z), (&z, &zs)]
            .into_iter()
            .map(|(l, r)| {
                let mut q = a2.clone();
                q.add_term(l.mul(r), -1.0);
                Localizer {
                    label: format!("norm {}{}", l, r),
                    polynomial: q,
                    words: words.clone(),
                }
            })
            .collect()
    }
}

/// Moment relaxation with optional operator-norm bounds.
pub fn build_relaxation(
    objective: &Objective,
    stats: &[StatConstraint],
    basis: &MonomialBasis,
    norm_bounds: &[NormBound],
) -> Result<SdpInstance> {
    let localizers: Vec<Localizer> = norm_bounds
        .iter()
        .flat_map(|nb| nb.localizers(basis))
        .collect();
    build_with_localizers(objective, stats, basis, &localizers)
}

/// Moment relaxation with arbitrary localizing constraints.
///
/// Variable 0 is `L(1)`, pinned by the normalization equality. Moment and
/// localizing entries reference the class of `adjoint(v) · q · w`, where a
/// word and its adjoint share one real variable.
pub fn build_with_localizers(
    objective: &Objective,
    stats: &[StatConstraint],
    basis: &MonomialBasis,
    localizers: &[Localizer],
) -> Result<SdpInstance> {
    let words = basis.words();
    if words.first().is_none_or(|w| !w.is_identity()) {
        return Err(invalid("moment basis must start with the identity word"));
    }
    let mut classes: Vec<Word> = vec![Word::identity()];
    let mut index: HashMap<Word, usize> = HashMap::from([(Word::identity(), 0)]);
    let mut class_of = |w: &Word| -> usize {
        let c = w.real_class();
        if let Some(&i) = index.get(&c) {
            return i;
        }
        index.insert(c.clone(), classes.len());
        classes.push(c);
        classes.len() - 1
    };

    let adjoints: Vec<Word> = words.iter().map(Word::adjoint).collect();
    let n = words.len();
    let mut moment = BlockTemplate::new("moment", n);
    for i in 0..n {
        for j in i..n {
            let w = adjoints[i].mul(&words[j]);
            if !w.is_zero() {
                moment.push(i, j, Some(class_of(&w)), 1.0);
            }
        }
    }

    let mut blocks = vec![moment];
    for loc in localizers {
        if !loc.polynomial.is_hermitian() {
            return Err(invalid(format!(
                "localizing polynomial `{}` is not hermitian",
                loc.label
            )));
        }
        let k = loc.words.len();
        let mut b = BlockTemplate::new(loc.label.clone(), k);
        for i in 0..k {
            let left = loc.words[i].adjoint();
            for j in i..k {
                let mut entry: Vec<(usize, f64)> = Vec::new();
                for (q, c) in loc.polynomial.terms() {
                    let w = left.mul(q).mul(&loc.words[j]);
                    if !w.is_zero() {
                        entry.push((class_of(&w), *c));
                    }
                }
                for (v, c) in merge(entry) {
                    b.push(i, j, Some(v), c);
                }
            }
        }
        blocks.push(b);
    }

    let row = |p: &NcPolynomial<f64>| -> Result<Vec<(usize, f64)>> {
        let mut terms = Vec::with_capacity(p.len());
        for (w, c) in p.terms() {
            let v = index
                .get(&w.real_class())
                .copied()
                .ok_or_else(|| Error::BasisTooSmall {
                    word: w.to_string(),
                })?;
            terms.push((v, *c));
        }
        Ok(merge(terms))
    };

    let mut inst = SdpInstance::with_words(classes.clone(), objective.sense);
    inst.objective = row(&objective.polynomial)?;
    inst.equalities.push(LinearConstraint {
        terms: vec![(0, 1.0)],
        rhs: 1.0,
        label: "normalization".into(),
        role: ConstraintRole::Normalization,
    });
    for s in stats {
        let con = LinearConstraint {
            terms: row(&s.polynomial)?,
            rhs: s.bound,
            label: s.label.clone(),
            role: ConstraintRole::Statistical,
        };
        match s.relation {
            Relation::Equal => inst.equalities.push(con),
            Relation::AtLeast => inst.inequalities.push(con),
        }
    }
    inst.blocks = blocks;
    Ok(inst)
}

/// Sums duplicate columns and drops zeros, keeping first-seen order.
fn merge(terms: Vec<(usize, f64)>) -> Vec<(usize, f64)> {
    let mut out: Vec<(usize, f64)> = Vec::with_capacity(terms.len());
    for (v, c) in terms {
        match out.iter_mut().find(|t| t.0 == v) {
            Some(t) => t.1 += c,
            None => out.push((v, c)),
        }
    }
    out.retain(|t| t.1 != 0.0);
    out
}
