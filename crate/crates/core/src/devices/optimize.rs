use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

use super::bell::{chsh_score, BellExpression};
use super::distribution::Distribution;
use super::efficiency::apply_detection_efficiency;
use super::information::{analytic_chsh_rate, conditional_entropy};
use super::strategy::{strategy_distribution, QubitStrategy};
use crate::error::Result;

/// Downhill simplex minimization of `f` from `x0` with initial edge `step`.
pub fn nelder_mead(
    mut f: impl FnMut(&[f64]) -> f64,
    x0: &[f64],
    step: f64,
    max_iter: usize,
    tol: f64,
) -> (Vec<f64>, f64) {
    let n = x0.len();
    let mut simplex: Vec<(Vec<f64>, f64)> = (0..=n)
        .map(|k| {
            let mut x = x0.to_vec();
            if k > 0 {
                x[k - 1] += step;
            }
            let fx = f(&x);
            (x, fx)
        })
        .collect();
    let lerp = |a: &[f64], b: &[f64], t: f64| -> Vec<f64> {
        a.iter().zip(b).map(|(u, v)| u + t * (v - u)).collect()
    };
    for _ in 0..max_iter {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        if (simplex[n].1 - simplex[0].1).abs() <= tol * (1.0 + simplex[0].1.abs()) {
            break;
        }
        let centroid: Vec<f64> = (0..n)
            .map(|i| simplex[..n].iter().map(|(x, _)| x[i]).sum::<f64>() / n as f64)
            .collect();
        let worst = simplex[n].clone();
        let reflected = lerp(&centroid, &worst.0, -1.0);
        let fr = f(&reflected);
        if fr < simplex[0].1 {
            let expanded = lerp(&centroid, &worst.0, -2.0);
            let fe = f(&expanded);
            simplex[n] = if fe < fr {
                (expanded, fe)
            } else {
                (reflected, fr)
            };
        } else if fr < simplex[n - 1].1 {
            simplex[n] = (reflected, fr);
        } else {
            let contracted = lerp(&centroid, &worst.0, 0.5);
            let fc = f(&contracted);
            if fc < worst.1 {
                simplex[n] = (contracted, fc);
            } else {
                let best = simplex[0].0.clone();
                for entry in simplex.iter_mut().skip(1) {
                    let x = lerp(&best, &entry.0, 0.5);
                    let fx = f(&x);
                    *entry = (x, fx);
                }
            }
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    simplex.swap_remove(0)
}

/// Parameters `[θ, a0, a1, b0, b1, b2]`: state `cos θ|00⟩ + sin θ|11⟩`,
/// Alice's two angles, Bob's two test angles and his key angle.
pub fn qkd_strategy(params: &[f64]) -> Result<QubitStrategy> {
    QubitStrategy::partially_entangled(
        params[0],
        vec![params[1..3].to_vec(), params[3..6].to_vec()],
    )
}

/// Heuristic key rate used to pick strategies: the closed-form CHSH
/// entropy at the lossy distribution's score minus `H(A|B)` on the key
/// inputs (Alice 0, Bob 2).
pub fn qkd_proxy(p: &Distribution) -> Result<f64> {
    let sub = Distribution::from_fn(vec![vec![2, 2], vec![2, 2]], |x, a| {
        p.prob(x, a).unwrap_or(0.0)
    })?;
    let omega = chsh_score(BellExpression::Chsh.value(&sub)?);
    let top = (2.0 + std::f64::consts::SQRT_2) / 4.0;
    let h = if omega <= 0.75 {
        0.0
    } else {
        analytic_chsh_rate(omega.min(top))?
    };
    Ok(h - conditional_entropy(p, 0, 2, 0.0)?)
}

/// Grid over the state angle followed by simplex refinement of all six
/// parameters; returns the best parameters and their proxy rate.
pub fn optimize_qkd_strategy(eta: f64) -> Result<(Vec<f64>, f64)> {
    let score = |x: &[f64]| -> f64 {
        let run = || -> Result<f64> {
            let p = strategy_distribution(&qkd_strategy(x)?)?;
            qkd_proxy(&apply_detection_efficiency(&p, eta)?)
        };
        run().map(|v| -v).unwrap_or(f64::INFINITY)
    };
    let mut best: Option<(Vec<f64>, f64)> = None;
    for k in 0..8 {
        let theta = FRAC_PI_4 * (1.0 - k as f64 / 8.0);
        let x0 = [theta, 0.0, FRAC_PI_2, FRAC_PI_4, -FRAC_PI_4, 0.0];
        let (x, fx) = nelder_mead(score, &x0, 0.1, 2000, 1e-12);
        if best.as_ref().map_or(true, |b| fx < b.1) {
            best = Some((x, fx));
        }
    }
    let (mut x, fx) = best.expect("grid is nonempty");
    x[0] = x[0].rem_euclid(PI);
    Ok((x, -fx))
}
