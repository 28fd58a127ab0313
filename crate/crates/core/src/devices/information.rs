use faer::{Mat, Side};

use super::bell::chsh_value;
use super::distribution::Distribution;
use super::strategy::QubitStrategy;
use crate::error::{invalid, Error, Result};

fn xlog2x(p: f64) -> f64 {
    if p > 0.0 {
        p * p.log2()
    } else {
        0.0
    }
}

/// Binary entropy in bits.
pub fn binary_entropy(p: f64) -> f64 {
    -xlog2x(p) - xlog2x(1.0 - p)
}

/// Shannon entropy in bits of a (possibly unnormalized) weight vector.
pub fn shannon(p: &[f64]) -> f64 {
    -p.iter().copied().map(xlog2x).sum::<f64>()
}

/// `H(A|B)` of the joint `p(a, b | x*, y*)` after Alice flips her bit with
/// probability `q`.
pub fn conditional_entropy(p: &Distribution, x: usize, y: usize, q: f64) -> Result<f64> {
    if !(0.0..=0.5).contains(&q) {
        return Err(invalid(format!("flip probability {q} outside [0, 1/2]")));
    }
    let mut joint = p.joint(x, y)?;
    if q > 0.0 {
        if joint.len() != 2 {
            return Err(invalid("preprocessing needs a binary key outcome"));
        }
        let (r0, r1) = (joint[0].clone(), joint[1].clone());
        for (b, (u, v)) in r0.iter().zip(&r1).enumerate() {
            joint[0][b] = (1.0 - q) * u + q * v;
            joint[1][b] = q * u + (1.0 - q) * v;
        }
    }
    let flat: Vec<f64> = joint.iter().flatten().copied().collect();
    let pb: Vec<f64> = (0..joint[0].len())
        .map(|b| joint.iter().map(|r| r[b]).sum())
        .collect();
    Ok(shannon(&flat) - shannon(&pb))
}

/// Closed-form `H(A|X=0, E)` at CHSH winning probability `omega`:
/// `1 − h(1/2 + √((S/2)² − 1)/2)` with `S = 8ω − 4`.
pub fn analytic_chsh_rate(omega: f64) -> Result<f64> {
    let top = (2.0 + std::f64::consts::SQRT_2) / 4.0;
    if !(0.75 - 1e-12..=top + 1e-12).contains(&omega) {
        return Err(invalid(format!("CHSH score {omega} outside [0.75, {top}]")));
    }
    let s = chsh_value(omega);
    let root = ((s / 2.0).powi(2) - 1.0).clamp(0.0, 1.0).sqrt();
    Ok(1.0 - binary_entropy(0.5 + 0.5 * root))
}

fn eigen(m: &Mat<f64>) -> Result<(Vec<f64>, Mat<f64>)> {
    let e = m
        .self_adjoint_eigen(Side::Lower)
        .map_err(|_| Error::NumericalFailure("eigendecomposition failed".into()))?;
    let vals = e.S().column_vector().iter().copied().collect();
    Ok((vals, e.U().to_owned()))
}

fn von_neumann(m: &Mat<f64>) -> Result<f64> {
    let (vals, _) = eigen(m)?;
    Ok(-vals.into_iter().map(|v| xlog2x(v.max(0.0))).sum::<f64>())
}

/// Exact `H(A|E)` where `A` collects the outcomes of `measured` (party,
/// input) pairs and `E` holds a purification of the strategy's state.
/// With `q > 0` the first measured party's bit is flipped with probability
/// `q` before conditioning.
pub fn exact_entropy(s: &QubitStrategy, measured: &[(usize, usize)], q: f64) -> Result<f64> {
    if measured.is_empty() {
        return Err(invalid("no measured party"));
    }
    if !(0.0..=0.5).contains(&q) {
        return Err(invalid(format!("flip probability {q} outside [0, 1/2]")));
    }
    let n = s.parties();
    let mut x = vec![None; n];
    for &(p, xi) in measured {
        if p >= n || xi >= s.angles()[p].len() {
            return Err(invalid(format!("party {p} input {xi} not in the strategy")));
        }
        if x[p].is_some() {
            return Err(invalid(format!("party {p} listed twice")));
        }
        x[p] = Some(xi);
    }
    // Purification |ψ⟩ = Σ_k √λ_k |v_k⟩|k⟩: Eve's conditional operator for
    // outcome a is G^a_kl = √(λ_k λ_l) v_kᵀ P_a v_l.
    let (lambda, v) = eigen(s.state())?;
    let keep: Vec<usize> = (0..lambda.len()).filter(|&k| lambda[k] > 1e-14).collect();
    let r = keep.len();
    let outcome_tuples = 1usize << measured.len();
    let mut g = Vec::with_capacity(outcome_tuples);
    for bits in 0..outcome_tuples {
        let mut a = vec![0; n];
        for (j, &(p, _)) in measured.iter().enumerate() {
            a[p] = bits >> j & 1;
        }
        let pv = s.measurement(&x, &a) * &v;
        g.push(Mat::from_fn(r, r, |i, j| {
            let (k, l) = (keep[i], keep[j]);
            let mut dot = 0.0;
            for t in 0..v.nrows() {
                dot += v[(t, k)] * pv[(t, l)];
            }
            (lambda[k] * lambda[l]).sqrt() * dot
        }));
    }
    let mut total = 0.0;
    for bits in 0..outcome_tuples {
        let op = if q > 0.0 {
            &g[bits] * (1.0 - q) + &g[bits ^ 1] * q
        } else {
            g[bits].clone()
        };
        total += von_neumann(&op)?;
    }
    Ok(total - von_neumann(s.state())?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::devices::strategy::strategy_distribution;

    #[test]
    fn binary_entropy_values() {
        assert_eq!(binary_entropy(0.5), 1.0);
        assert_eq!(binary_entropy(0.0), 0.0);
        assert!((binary_entropy(0.1) - 0.4689955935892812).abs() < 1e-15);
    }

    #[test]
    fn classical_conditional_entropy() {
        let channel = |e: f64| {
            Distribution::from_fn(vec![vec![2], vec![2]], move |_, a| {
                0.5 * if a[0] == a[1] { 1.0 - e } else { e }
            })
            .unwrap()
        };
        assert!(conditional_entropy(&channel(0.0), 0, 0, 0.0).unwrap().abs() < 1e-15);
        assert!((conditional_entropy(&channel(0.5), 0, 0, 0.0).unwrap() - 1.0).abs() < 1e-15);
        let h = conditional_entropy(&channel(0.1), 0, 0, 0.0).unwrap();
        assert!((h - 0.4689955935892812).abs() < 1e-12);
        // Flipping composes channels: 0.1 then 0.2 gives crossover 0.26.
        let h = conditional_entropy(&channel(0.1), 0, 0, 0.2).unwrap();
        assert!((h - binary_entropy(0.26)).abs() < 1e-12);
    }

    #[test]
    fn analytic_rate_values() {
        assert!(analytic_chsh_rate(0.75).unwrap().abs() < 1e-15);
        let top = (2.0 + 2f64.sqrt()) / 4.0;
        assert!((analytic_chsh_rate(top).unwrap() - 1.0).abs() < 1e-7);
        assert!((analytic_chsh_rate(0.80).unwrap() - 0.3461124357945391).abs() < 1e-12);
        assert!(analytic_chsh_rate(0.9).is_err());
        assert!(analytic_chsh_rate(0.7).is_err());
    }

    #[test]
    fn exact_entropy_of_tsirelson_strategy() {
        let s = QubitStrategy::chsh_optimal();
        assert!((exact_entropy(&s, &[(0, 0)], 0.0).unwrap() - 1.0).abs() < 1e-12);
        // Global randomness of a maximally entangled pair measured in
        // bases π/4 apart: one bit from A plus h(cos²(π/8)) from B.
        let c2 = (std::f64::consts::PI / 8.0).cos().powi(2);
        let global = exact_entropy(&s, &[(0, 0), (1, 0)], 0.0).unwrap();
        assert!((global - 1.0 - binary_entropy(c2)).abs() < 1e-12);
    }

    #[test]
    fn exact_entropy_respects_analytic_curve_on_noisy_states() {
        for v in [0.75, 0.85, 0.95] {
            let s = QubitStrategy::chsh_optimal().with_visibility(v).unwrap();
            let p = strategy_distribution(&s).unwrap();
            let omega = crate::devices::bell::chsh_score(
                crate::devices::bell::BellExpression::Chsh
                    .value(&p)
                    .unwrap(),
            );
            let exact = exact_entropy(&s, &[(0, 0)], 0.0).unwrap();
            assert!(exact >= analytic_chsh_rate(omega).unwrap() - 1e-12);
        }
    }

    #[test]
    fn product_state_leaks_nothing_but_is_deterministic() {
        let s = QubitStrategy::partially_entangled(0.0, vec![vec![0.0], vec![0.0]]).unwrap();
        assert!(exact_entropy(&s, &[(0, 0)], 0.0).unwrap().abs() < 1e-12);
        let h = exact_entropy(&s, &[(0, 0)], 0.1).unwrap();
        assert!((h - binary_entropy(0.1)).abs() < 1e-12);
    }
}
