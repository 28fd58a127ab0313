use crate::error::{invalid, Result};

/// Conditional distribution `p(a_1..a_n | x_1..x_n)` of up to three parties.
///
/// Stored input-tuple major; inside one input tuple, outcome tuples run
/// lexicographically with the first party most significant.
#[derive(Clone, Debug, PartialEq)]
pub struct Distribution {
    outcomes: Vec<Vec<usize>>,
    inputs: Vec<Vec<usize>>,
    offsets: Vec<usize>,
    probs: Vec<f64>,
    pub(super) efficiency: Option<Box<EfficiencyRecord>>,
}

/// How a distribution was produced from an ideal one by the detection model,
/// kept so the no-click symbol can be introduced afterwards.
#[derive(Clone, Debug, PartialEq)]
pub(super) struct EfficiencyRecord {
    pub eta: f64,
    pub ideal: Distribution,
    pub marked: Vec<(usize, usize)>,
}

fn tuples(ranges: &[usize]) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    for &r in ranges {
        out = out
            .into_iter()
            .flat_map(|t| {
                (0..r).map(move |v| {
                    let mut u = t.clone();
                    u.push(v);
                    u
                })
            })
            .collect();
    }
    out
}

impl Distribution {
    /// Tabulates `f(inputs, outcomes)` over all tuples.
    pub fn from_fn(
        outcomes: Vec<Vec<usize>>,
        mut f: impl FnMut(&[usize], &[usize]) -> f64,
    ) -> Result<Self> {
        if outcomes.is_empty() || outcomes.len() > 3 {
            return Err(invalid("distributions have one to three parties"));
        }
        if outcomes.iter().any(|o| o.is_empty() || o.contains(&0)) {
            return Err(invalid(
                "every party needs inputs with at least one outcome",
            ));
        }
        let inputs = tuples(&outcomes.iter().map(Vec::len).collect::<Vec<_>>());
        let mut offsets = Vec::with_capacity(inputs.len() + 1);
        let mut probs = Vec::new();
        for x in &inputs {
            offsets.push(probs.len());
            let dims: Vec<usize> = x
                .iter()
                .enumerate()
                .map(|(p, &xi)| outcomes[p][xi])
                .collect();
            for a in tuples(&dims) {
                probs.push(f(x, &a));
            }
        }
        offsets.push(probs.len());
        Ok(Distribution {
            outcomes,
            inputs,
            offsets,
            probs,
            efficiency: None,
        })
    }

    pub fn parties(&self) -> usize {
        self.outcomes.len()
    }

    pub fn arities(&self) -> &[Vec<usize>] {
        &self.outcomes
    }

    pub fn inputs(&self, party: usize) -> usize {
        self.outcomes.get(party).map_or(0, Vec::len)
    }

    pub fn outcomes(&self, party: usize, input: usize) -> Option<usize> {
        self.outcomes.get(party)?.get(input).copied()
    }

    pub fn input_tuples(&self) -> &[Vec<usize>] {
        &self.inputs
    }

    pub fn outcome_tuples(&self, x: &[usize]) -> Vec<Vec<usize>> {
        let dims: Vec<usize> = x
            .iter()
            .enumerate()
            .map(|(p, &xi)| self.outcomes[p][xi])
            .collect();
        tuples(&dims)
    }

    fn input_index(&self, x: &[usize]) -> Result<usize> {
        if x.len() != self.parties() {
            return Err(invalid("input tuple length does not match the party count"));
        }
        let mut idx = 0;
        for (p, &xi) in x.iter().enumerate() {
            if xi >= self.inputs(p) {
                return Err(invalid(format!("input {xi} out of range for party {p}")));
            }
            idx = idx * self.inputs(p) + xi;
        }
        Ok(idx)
    }

    pub fn prob(&self, x: &[usize], a: &[usize]) -> Result<f64> {
        let base = self.offsets[self.input_index(x)?];
        if a.len() != x.len() {
            return Err(invalid(
                "outcome tuple length does not match the party count",
            ));
        }
        let mut idx = 0;
        for (p, (&xi, &ai)) in x.iter().zip(a).enumerate() {
            let d = self.outcomes[p][xi];
            if ai >= d {
                return Err(invalid(format!("outcome {ai} out of range for party {p}")));
            }
            idx = idx * d + ai;
        }
        Ok(self.probs[base + idx])
    }

    /// Marginal of the parties in `subset` (with their inputs and outcomes
    /// given in the same order); the others use input 0.
    pub fn marginal(&self, subset: &[(usize, usize, usize)]) -> Result<f64> {
        let mut x = vec![0; self.parties()];
        for &(p, xi, _) in subset {
            if p >= self.parties() {
                return Err(invalid(format!("party {p} out of range")));
            }
            x[p] = xi;
        }
        let mut total = 0.0;
        for a in self.outcome_tuples(&x) {
            if subset.iter().all(|&(p, _, ap)| a[p] == ap) {
                total += self.prob(&x, &a)?;
            }
        }
        Ok(total)
    }

    /// `⟨Π X_{p,x}⟩` for binary observables (outcome 0 ↦ +1).
    pub fn correlator(&self, factors: &[(usize, usize)]) -> Result<f64> {
        let mut x = vec![0; self.parties()];
        for &(p, xi) in factors {
            if self.outcomes(p, xi) != Some(2) {
                return Err(invalid(format!("party {p} input {xi} is not binary")));
            }
            x[p] = xi;
        }
        let mut total = 0.0;
        for a in self.outcome_tuples(&x) {
            let sign: i32 = factors
                .iter()
                .map(|&(p, _)| if a[p] == 0 { 1 } else { -1 })
                .product();
            total += f64::from(sign) * self.prob(&x, &a)?;
        }
        Ok(total)
    }

    /// Largest deviation from normalization and from no-signaling.
    pub fn consistency(&self) -> (f64, f64) {
        let mut norm: f64 = 0.0;
        for (k, _) in self.inputs.iter().enumerate() {
            let s: f64 = self.probs[self.offsets[k]..self.offsets[k + 1]]
                .iter()
                .sum();
            norm = norm.max((s - 1.0).abs());
        }
        let mut signal: f64 = 0.0;
        let n = self.parties();
        for x in &self.inputs {
            for a in self.outcome_tuples(x) {
                // Marginal of every single party and every pair against the
                // reference tuple where the other inputs are zero.
                for mask in 1u32..(1 << n) - 1 {
                    let members: Vec<usize> = (0..n).filter(|p| mask >> p & 1 == 1).collect();
                    let here = self.partial_sum(x, &members, &a);
                    let mut x0 = x.clone();
                    for p in 0..n {
                        if mask >> p & 1 == 0 {
                            x0[p] = 0;
                        }
                    }
                    let there = self.partial_sum(&x0, &members, &a);
                    signal = signal.max((here - there).abs());
                }
            }
        }
        (norm, signal)
    }

    pub(super) fn partial_sum(&self, x: &[usize], members: &[usize], a: &[usize]) -> f64 {
        self.outcome_tuples(x)
            .into_iter()
            .filter(|b| members.iter().all(|&p| b[p] == a[p]))
            .map(|b| self.prob(x, &b).unwrap_or(0.0))
            .sum()
    }

    /// Joint table `p(a, b | x, y)` of two parties of a bipartite distribution.
    pub fn joint(&self, x: usize, y: usize) -> Result<Vec<Vec<f64>>> {
        if self.parties() != 2 {
            return Err(invalid("joint table needs a bipartite distribution"));
        }
        let da = self
            .outcomes(0, x)
            .ok_or_else(|| invalid("input out of range"))?;
        let db = self
            .outcomes(1, y)
            .ok_or_else(|| invalid("input out of range"))?;
        (0..da)
            .map(|a| (0..db).map(|b| self.prob(&[x, y], &[a, b])).collect())
            .collect()
    }

    /// Convex combination `μ·self + (1−μ)·other`.
    pub fn mix(&self, other: &Distribution, mu: f64) -> Result<Distribution> {
        if self.outcomes != other.outcomes {
            return Err(invalid("mixing distributions of different arities"));
        }
        let mut out = self.clone();
        out.efficiency = None;
        for (p, q) in out.probs.iter_mut().zip(&other.probs) {
            *p = mu * *p + (1.0 - mu) * q;
        }
        Ok(out)
    }

    pub fn max_abs_diff(&self, other: &Distribution) -> Option<f64> {
        (self.outcomes == other.outcomes).then(|| {
            self.probs
                .iter()
                .zip(&other.probs)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max)
        })
    }
}
