use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

use faer::{Mat, Side};
use serde::{Deserialize, Serialize};

use super::distribution::Distribution;
use crate::error::{invalid, Result};

/// Explicit qubit strategy: a real density matrix on `n` qubits and one
/// measurement angle per party and input. Input `x` of party `p` measures
/// `cos θ Z + sin θ X`; outcome `a` is the `(−1)^a` eigenprojector.
#[derive(Clone, Debug)]
pub struct QubitStrategy {
    state: Mat<f64>,
    angles: Vec<Vec<f64>>,
}

/// `(I + (−1)^a (cos θ Z + sin θ X)) / 2`.
pub fn projector(theta: f64, a: usize) -> Mat<f64> {
    let s = if a == 0 { 0.5 } else { -0.5 };
    let (c, n) = (theta.cos(), theta.sin());
    Mat::from_fn(2, 2, |i, j| match (i, j) {
        (0, 0) => 0.5 + s * c,
        (1, 1) => 0.5 - s * c,
        _ => s * n,
    })
}

pub fn kron(a: &Mat<f64>, b: &Mat<f64>) -> Mat<f64> {
    let (br, bc) = (b.nrows(), b.ncols());
    Mat::from_fn(a.nrows() * br, a.ncols() * bc, |i, j| {
        a[(i / br, j / bc)] * b[(i % br, j % bc)]
    })
}

fn outer(psi: &[f64]) -> Mat<f64> {
    let norm: f64 = psi.iter().map(|v| v * v).sum();
    Mat::from_fn(psi.len(), psi.len(), |i, j| psi[i] * psi[j] / norm)
}

impl QubitStrategy {
    /// Validates that `state` is a density matrix on `angles.len()` qubits.
    pub fn new(state: Mat<f64>, angles: Vec<Vec<f64>>) -> Result<Self> {
        let n = angles.len();
        if !(1..=3).contains(&n) {
            return Err(invalid("qubit strategies have one to three parties"));
        }
        if angles.iter().any(Vec::is_empty) {
            return Err(invalid("every party needs at least one measurement"));
        }
        let d = 1 << n;
        if state.nrows() != d || state.ncols() != d {
            return Err(invalid(format!("state must be {d}x{d} for {n} qubits")));
        }
        let mut asym: f64 = 0.0;
        for i in 0..d {
            for j in 0..d {
                asym = asym.max((state[(i, j)] - state[(j, i)]).abs());
            }
        }
        if asym > 1e-12 {
            return Err(invalid("state is not symmetric"));
        }
        let trace: f64 = (0..d).map(|i| state[(i, i)]).sum();
        if (trace - 1.0).abs() > 1e-10 {
            return Err(invalid(format!("state has trace {trace}, expected 1")));
        }
        let min = state
            .self_adjoint_eigenvalues(Side::Lower)
            .map_err(|_| invalid("eigendecomposition of the state failed"))?
            .into_iter()
            .fold(f64::INFINITY, f64::min);
        if min < -1e-10 {
            return Err(invalid(format!("state is not PSD (eigenvalue {min:e})")));
        }
        Ok(QubitStrategy { state, angles })
    }

    /// `cos θ |00⟩ + sin θ |11⟩`.
    pub fn partially_entangled(theta: f64, angles: Vec<Vec<f64>>) -> Result<Self> {
        Self::new(outer(&[theta.cos(), 0.0, 0.0, theta.sin()]), angles)
    }

    /// `(|00⟩ + |11⟩)/√2`; correlators are `⟨A(a) B(b)⟩ = cos(a − b)`.
    pub fn maximally_entangled(angles: Vec<Vec<f64>>) -> Result<Self> {
        Self::partially_entangled(FRAC_PI_4, angles)
    }

    /// `(|000⟩ + |111⟩)/√2`.
    pub fn ghz(angles: Vec<Vec<f64>>) -> Result<Self> {
        let mut psi = [0.0; 8];
        psi[0] = 1.0;
        psi[7] = 1.0;
        Self::new(outer(&psi), angles)
    }

    /// Tsirelson configuration reaching `S = 2√2`.
    pub fn chsh_optimal() -> Self {
        Self::asym_chsh_optimal(1.0)
    }

    /// Reaches `2√(1 + α²)` on the asymmetric CHSH expression.
    pub fn asym_chsh_optimal(alpha: f64) -> Self {
        let beta = (1.0f64).atan2(alpha);
        Self::maximally_entangled(vec![vec![0.0, FRAC_PI_2], vec![beta, -beta]])
            .expect("valid by construction")
    }

    /// GHZ settings reaching the Holz quantum bound 3/2.
    pub fn holz_optimal() -> Self {
        Self::ghz(vec![
            vec![0.0, 1.5 * PI],
            vec![4.0 * PI / 3.0, 5.0 * PI / 3.0],
            vec![2.0 * PI / 3.0, PI / 3.0],
        ])
        .expect("valid by construction")
    }

    /// Mixes the state with white noise: `v ρ + (1 − v) I/d`.
    pub fn with_visibility(mut self, v: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&v) {
            return Err(invalid(format!("visibility {v} outside [0, 1]")));
        }
        let d = self.state.nrows();
        self.state = Mat::from_fn(d, d, |i, j| {
            v * self.state[(i, j)] + if i == j { (1.0 - v) / d as f64 } else { 0.0 }
        });
        Ok(self)
    }

    /// Appends a measurement, e.g. Bob's key-generation input.
    pub fn with_input(mut self, party: usize, theta: f64) -> Result<Self> {
        self.angles
            .get_mut(party)
            .ok_or_else(|| invalid(format!("party {party} out of range")))?
            .push(theta);
        Ok(self)
    }

    pub fn parties(&self) -> usize {
        self.angles.len()
    }

    pub fn state(&self) -> &Mat<f64> {
        &self.state
    }

    pub fn angles(&self) -> &[Vec<f64>] {
        &self.angles
    }

    /// `⊗_p P_{a_p|x_p}` with identities for parties not listed.
    pub fn measurement(&self, x: &[Option<usize>], a: &[usize]) -> Mat<f64> {
        let mut op = Mat::<f64>::identity(1, 1);
        for p in 0..self.parties() {
            let factor = match x[p] {
                Some(xi) => projector(self.angles[p][xi], a[p]),
                None => Mat::identity(2, 2),
            };
            op = kron(&op, &factor);
        }
        op
    }
}

fn trace_product(a: &Mat<f64>, b: &Mat<f64>) -> f64 {
    let n = a.nrows();
    let mut t = 0.0;
    for i in 0..n {
        for j in 0..n {
            t += a[(i, j)] * b[(j, i)];
        }
    }
    t
}

/// Born-rule statistics of a strategy with binary outcomes everywhere.
pub fn strategy_distribution(s: &QubitStrategy) -> Result<Distribution> {
    let arities = s.angles.iter().map(|a| vec![2; a.len()]).collect();
    Distribution::from_fn(arities, |x, a| {
        let xs: Vec<Option<usize>> = x.iter().map(|&v| Some(v)).collect();
        trace_product(&s.state, &s.measurement(&xs, a))
    })
}

/// Config-facing description of a strategy.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StrategySpec {
    pub state: StateSpec,
    /// Measurement angles per party and input, in radians.
    pub angles: Vec<Vec<f64>>,
    #[serde(default = "one")]
    pub visibility: f64,
}

fn one() -> f64 {
    1.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", deny_unknown_fields)]
pub enum StateSpec {
    MaximallyEntangled,
    PartiallyEntangled { theta: f64 },
    Ghz,
}

impl StrategySpec {
    pub fn build(&self) -> Result<QubitStrategy> {
        let s = match self.state {
            StateSpec::MaximallyEntangled => {
                QubitStrategy::maximally_entangled(self.angles.clone())
            }
            StateSpec::PartiallyEntangled { theta } => {
                QubitStrategy::partially_entangled(theta, self.angles.clone())
            }
            StateSpec::Ghz => QubitStrategy::ghz(self.angles.clone()),
        }?;
        s.with_visibility(self.visibility)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::devices::bell::{chsh_score, BellExpression};

    #[test]
    fn projectors_are_complete_and_idempotent() {
        for theta in [0.0, 0.3, 2.1, -1.0] {
            let p0 = projector(theta, 0);
            let p1 = projector(theta, 1);
            let sum = &p0 + &p1;
            let sq = &p0 * &p0;
            for i in 0..2 {
                for j in 0..2 {
                    let id = if i == j { 1.0 } else { 0.0 };
                    assert!((sum[(i, j)] - id).abs() < 1e-15);
                    assert!((sq[(i, j)] - p0[(i, j)]).abs() < 1e-15);
                }
            }
        }
    }

    #[test]
    fn tsirelson_score() {
        let p = strategy_distribution(&QubitStrategy::chsh_optimal()).unwrap();
        let s = BellExpression::Chsh.value(&p).unwrap();
        assert!((chsh_score(s) - (2.0 + 2f64.sqrt()) / 4.0).abs() < 1e-12);
        let (n, sig) = p.consistency();
        assert!(n < 1e-12 && sig < 1e-12);
    }

    #[test]
    fn asym_chsh_reaches_quantum_bound() {
        for alpha in [0.3, 1.0, 1.7] {
            let e = BellExpression::AsymChsh { alpha };
            let p = strategy_distribution(&QubitStrategy::asym_chsh_optimal(alpha)).unwrap();
            assert!((e.value(&p).unwrap() - e.quantum_bound()).abs() < 1e-12);
        }
    }

    #[test]
    fn holz_on_ghz() {
        let p = strategy_distribution(&QubitStrategy::holz_optimal()).unwrap();
        assert!((BellExpression::Holz.value(&p).unwrap() - 1.5).abs() < 1e-9);
    }

    #[test]
    fn product_state_factorizes() {
        let s =
            QubitStrategy::partially_entangled(0.0, vec![vec![0.4, 1.3], vec![2.0, -0.7]]).unwrap();
        let p = strategy_distribution(&s).unwrap();
        for x in p.input_tuples() {
            for a in p.outcome_tuples(x) {
                let pa = p.marginal(&[(0, x[0], a[0])]).unwrap();
                let pb = p.marginal(&[(1, x[1], a[1])]).unwrap();
                assert!((p.prob(x, &a).unwrap() - pa * pb).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn rejects_invalid_states() {
        let bad = Mat::from_fn(4, 4, |i, j| {
            if i == j {
                [1.5, -0.5, 0.0, 0.0][i]
            } else {
                0.0
            }
        });
        assert!(QubitStrategy::new(bad, vec![vec![0.0], vec![0.0]]).is_err());
        let short = Mat::<f64>::identity(2, 2);
        assert!(QubitStrategy::new(short, vec![vec![0.0], vec![0.0]]).is_err());
    }
}
