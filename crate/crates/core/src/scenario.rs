//! Measurement scenarios and the statistics they constrain.

use crate::devices::{BellExpression, Distribution};
use crate::error::{invalid, Result};
use crate::ncpoly::{Algebra, Party};
use crate::relax::{Relation, StatConstraint, StatKind};

/// What the devices are known to satisfy.
#[derive(Clone, Debug, PartialEq)]
pub enum Constraint {
    /// `⟨expression⟩ = value` (or `>=` with [`Relation::AtLeast`]).
    Bell {
        expression: BellExpression,
        value: f64,
        relation: Relation,
    },
    /// Every Collins-Gisin entry of an observed distribution.
    Distribution(Distribution),
}

/// Arities of the measurements entering the relaxation plus the constraint
/// on them.
#[derive(Clone, Debug, PartialEq)]
pub struct Scenario {
    outcomes: Vec<Vec<usize>>,
    constraint: Constraint,
}

impl Scenario {
    /// Binary two-input devices constrained by a Bell value.
    pub fn bell(expression: BellExpression, value: f64) -> Result<Self> {
        if !value.is_finite() {
            return Err(invalid("Bell value must be finite"));
        }
        if value > expression.quantum_bound() + 1e-9 {
            return Err(invalid(format!(
                "{} value {value} exceeds the quantum bound {}",
                expression.name(),
                expression.quantum_bound()
            )));
        }
        Ok(Scenario {
            outcomes: vec![vec![2, 2]; expression.parties()],
            constraint: Constraint::Bell {
                expression,
                value,
                relation: Relation::Equal,
            },
        })
    }

    /// CHSH constraint in winning-probability form.
    pub fn chsh_score(omega: f64) -> Result<Self> {
        Self::bell(BellExpression::Chsh, crate::devices::chsh_value(omega))
    }

    pub fn with_relation(mut self, relation: Relation) -> Self {
        if let Constraint::Bell { relation: r, .. } = &mut self.constraint {
            *r = relation;
        }
        self
    }

    /// Constrains the full statistics of the first `inputs[p]` inputs of
    /// each party; later inputs (such as a key-generation input) stay out
    /// of the relaxation.
    pub fn full_distribution(p: &Distribution, inputs: &[usize]) -> Result<Self> {
        if inputs.len() != p.parties() {
            return Err(invalid("one input count per party required"));
        }
        let mut outcomes = Vec::new();
        for (party, &k) in inputs.iter().enumerate() {
            if k == 0 || k > p.inputs(party) {
                return Err(invalid(format!(
                    "party {party} has {} inputs, cannot keep {k}",
                    p.inputs(party)
                )));
            }
            outcomes.push(p.arities()[party][..k].to_vec());
        }
        let kept =
            Distribution::from_fn(outcomes.clone(), |x, a| p.prob(x, a).unwrap_or(f64::NAN))?;
        Ok(Scenario {
            outcomes,
            constraint: Constraint::Distribution(kept),
        })
    }

    pub fn outcomes(&self) -> &[Vec<usize>] {
        &self.outcomes
    }

    pub fn parties(&self) -> usize {
        self.outcomes.len()
    }

    pub fn constraint(&self) -> &Constraint {
        &self.constraint
    }

    /// Measurement algebra without free operators.
    pub fn algebra(&self) -> Result<Algebra> {
        Algebra::new(self.outcomes.clone())
    }

    /// Same scenario with the constrained statistics replaced by `values`
    /// (in [`Scenario::constraints`] order).
    pub fn with_values(&self, values: &[f64]) -> Result<Scenario> {
        let n = self.statistic_labels().len();
        if values.len() != n {
            return Err(invalid(format!(
                "expected {n} statistics, got {}",
                values.len()
            )));
        }
        let mut out = self.clone();
        match &mut out.constraint {
            Constraint::Bell { value, .. } => *value = values[0],
            Constraint::Distribution(_) => {
                out.constraint = Constraint::Distribution(self.distribution_from_entries(values)?);
            }
        }
        Ok(out)
    }

    /// Names of the constrained statistics.
    pub fn statistic_labels(&self) -> Vec<String> {
        match &self.constraint {
            Constraint::Bell { expression, .. } => vec![expression.name().to_string()],
            Constraint::Distribution(_) => self.entries().into_iter().map(|e| e.label).collect(),
        }
    }

    /// Values of the constrained statistics.
    pub fn statistic_values(&self) -> Result<Vec<f64>> {
        match &self.constraint {
            Constraint::Bell { value, .. } => Ok(vec![*value]),
            Constraint::Distribution(p) => self
                .entries()
                .iter()
                .map(|e| p.marginal(&e.factors))
                .collect(),
        }
    }

    /// Scalar constraints in the projectors of `alg`, which must contain
    /// this scenario's measurements.
    pub fn constraints(&self, alg: &Algebra) -> Result<Vec<StatConstraint>> {
        match &self.constraint {
            Constraint::Bell {
                expression,
                value,
                relation,
            } => Ok(vec![StatConstraint {
                label: expression.name().to_string(),
                kind: StatKind::BellInequality,
                polynomial: expression.polynomial(alg)?,
                bound: *value,
                relation: *relation,
            }]),
            Constraint::Distribution(p) => self
                .entries()
                .into_iter()
                .map(|e| {
                    let mut poly = alg.identity::<f64>();
                    for &(party, x, a) in &e.factors {
                        poly = poly.multiply(&alg.projector(Party::MEASURING[party], x, a)?)?;
                    }
                    Ok(StatConstraint {
                        bound: p.marginal(&e.factors)?,
                        label: e.label,
                        kind: StatKind::DistributionEntry,
                        polynomial: poly,
                        relation: Relation::Equal,
                    })
                })
                .collect(),
        }
    }

    /// Collins-Gisin entries: every nonempty party subset, every input
    /// tuple, every outcome tuple avoiding each input's last outcome.
    fn entries(&self) -> Vec<Entry> {
        let n = self.parties();
        let mut out = Vec::new();
        for mask in 1u32..(1 << n) {
            let members: Vec<usize> = (0..n).filter(|p| mask >> p & 1 == 1).collect();
            let mut stack: Vec<Vec<(usize, usize, usize)>> = vec![Vec::new()];
            for &p in &members {
                let mut next = Vec::new();
                for partial in &stack {
                    for (x, &d) in self.outcomes[p].iter().enumerate() {
                        for a in 0..d - 1 {
                            let mut f = partial.clone();
                            f.push((p, x, a));
                            next.push(f);
                        }
                    }
                }
                stack = next;
            }
            for factors in stack {
                let label = factors
                    .iter()
                    .map(|&(p, x, a)| format!("{}{a}|{x}", Party::MEASURING[p].letter()))
                    .collect::<Vec<_>>()
                    .join(" ");
                out.push(Entry {
                    label: format!("p({label})"),
                    factors,
                });
            }
        }
        out
    }

    /// Rebuilds a distribution from Collins-Gisin entries by inclusion-exclusion.
    fn distribution_from_entries(&self, values: &[f64]) -> Result<Distribution> {
        let entries = self.entries();
        let lookup = |factors: &[(usize, usize, usize)]| -> f64 {
            if factors.is_empty() {
                return 1.0;
            }
            entries
                .iter()
                .position(|e| e.factors == factors)
                .map_or(0.0, |k| values[k])
        };
        Distribution::from_fn(self.outcomes.clone(), |x, a| {
            // p(a|x) = Σ over parties sitting at their last outcome, where
            // M_last = I − Σ_{b<last} M_b is expanded.
            let n = x.len();
            let last: Vec<usize> = (0..n)
                .filter(|&p| a[p] + 1 == self.outcomes[p][x[p]])
                .collect();
            let fixed: Vec<(usize, usize, usize)> = (0..n)
                .filter(|p| !last.contains(p))
                .map(|p| (p, x[p], a[p]))
                .collect();
            let mut total = 0.0;
            // Each last-outcome party contributes either I or −M_b for some b.
            let mut choices: Vec<(f64, Vec<(usize, usize, usize)>)> = vec![(1.0, fixed)];
            for &p in &last {
                let mut next = Vec::new();
                for (sign, f) in &choices {
                    next.push((*sign, f.clone()));
                    for b in 0..a[p] {
                        let mut g = f.clone();
                        g.push((p, x[p], b));
                        next.push((-sign, g));
                    }
                }
                choices = next;
            }
            for (sign, mut f) in choices {
                f.sort_unstable();
                total += sign * lookup(&f);
            }
            total
        })
    }
}

struct Entry {
    label: String,
    factors: Vec<(usize, usize, usize)>,
}
