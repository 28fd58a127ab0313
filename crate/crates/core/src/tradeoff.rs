//! Affine min-tradeoff functions read off relaxation duals.
//!
//! For `min c·x` subject to `A x = b` and the blocks, any dual-feasible
//! multipliers give `b·ν + r·z − Σ⟨F0, Z⟩ <= optimum` whatever the
//! right-hand sides are. Splitting the right-hand sides into the fixed
//! ones and the observed statistics `q` turns the dual objective into the
//! affine function `α + λ·q`, a lower bound for every `q`.

use serde::{Deserialize, Serialize};

use crate::entropy::RateResult;
use crate::error::{invalid, Result};
use crate::relax::{ConstraintRole, SdpInstance, Sense};
use crate::sdp::{SdpSolution, SolveStatus};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MinTradeoff {
    /// Labels of the statistics, in the order of `lambda`.
    pub alphabet: Vec<String>,
    pub alpha: f64,
    pub lambda: Vec<f64>,
    /// Statistics at which the duals were computed.
    pub anchor: Vec<f64>,
    pub anchor_value: f64,
    /// Sum of the solver's relative duality gaps behind this function.
    pub gap: f64,
}

impl MinTradeoff {
    /// `α + λ·q`.
    pub fn evaluate(&self, q: &[f64]) -> Result<f64> {
        if q.len() != self.lambda.len() {
            return Err(invalid(format!(
                "expected {} statistics, got {}",
                self.lambda.len(),
                q.len()
            )));
        }
        Ok(self
            .lambda
            .iter()
            .zip(q)
            .fold(self.alpha, |acc, (l, v)| acc + l * v))
    }
}

/// Reads the affine bound off one solved relaxation. Constraints with role
/// [`ConstraintRole::Statistical`] vary; everything else is fixed.
pub fn extract(solution: &SdpSolution, instance: &SdpInstance) -> Result<MinTradeoff> {
    if !matches!(
        solution.status,
        SolveStatus::Optimal | SolveStatus::NearOptimal
    ) {
        return Err(invalid(format!(
            "no certificate from a solve with status {:?}",
            solution.status
        )));
    }
    if solution.eq_duals.len() != instance.equalities.len()
        || solution.ineq_duals.len() != instance.inequalities.len()
        || solution.block_duals.len() != instance.blocks.len()
    {
        return Err(invalid("solution does not belong to this instance"));
    }
    let sign = match instance.sense {
        Sense::Minimize => 1.0,
        Sense::Maximize => -1.0,
    };
    let mut alpha = 0.0;
    let mut alphabet = Vec::new();
    let mut lambda = Vec::new();
    let mut anchor = Vec::new();
    let scalars = instance
        .equalities
        .iter()
        .zip(&solution.eq_duals)
        .chain(instance.inequalities.iter().zip(&solution.ineq_duals));
    for (con, &mult) in scalars {
        if con.role == ConstraintRole::Statistical {
            alphabet.push(con.label.clone());
            lambda.push(sign * mult);
            anchor.push(con.rhs);
        } else {
            alpha += mult * con.rhs;
        }
    }
    for (block, z) in instance.blocks.iter().zip(&solution.block_duals) {
        for e in block.entries.iter().filter(|e| e.var.is_none()) {
            let w = if e.row == e.col { 1.0 } else { 2.0 };
            alpha -= w * e.coeff * z[(e.row, e.col)];
        }
    }
    let mut f = MinTradeoff {
        alphabet,
        alpha: sign * alpha,
        lambda,
        anchor,
        anchor_value: 0.0,
        gap: solution.gap,
    };
    f.anchor_value = f.evaluate(&f.anchor)?;
    Ok(f)
}

/// `c0 + Σ c_i f_i` for nonnegative `c_i`; the parts must share one
/// alphabet and anchor.
pub fn combine(c0: f64, parts: &[(f64, MinTradeoff)]) -> Result<MinTradeoff> {
    let Some((_, first)) = parts.first() else {
        return Ok(MinTradeoff {
            alphabet: Vec::new(),
            alpha: c0,
            lambda: Vec::new(),
            anchor: Vec::new(),
            anchor_value: c0,
            gap: 0.0,
        });
    };
    let mut out = MinTradeoff {
        alphabet: first.alphabet.clone(),
        alpha: c0,
        lambda: vec![0.0; first.lambda.len()],
        anchor: first.anchor.clone(),
        anchor_value: 0.0,
        gap: 0.0,
    };
    for (c, f) in parts {
        if *c < 0.0 {
            return Err(invalid("combination weights must be nonnegative"));
        }
        if f.alphabet != out.alphabet {
            return Err(invalid("tradeoff functions over different statistics"));
        }
        out.alpha += c * f.alpha;
        for (l, v) in out.lambda.iter_mut().zip(&f.lambda) {
            *l += c * v;
        }
        out.gap += f.gap;
    }
    out.anchor_value = out.evaluate(&out.anchor)?;
    Ok(out)
}

/// Min-tradeoff function of a whole entropy bound: `c_m + Σ c_i g_i`.
pub fn from_rate(result: &RateResult) -> Result<MinTradeoff> {
    let parts = result
        .nodes
        .iter()
        .map(|n| Ok((n.coefficient, extract(&n.solution, &n.instance)?)))
        .collect::<Result<Vec<_>>>()?;
    combine(result.c_m, &parts)
}
