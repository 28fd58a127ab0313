//! Random small SDPs with an independent brute-force optimum.
#![allow(dead_code)]

use dirate::relax::{BlockTemplate, ConstraintRole, LinearConstraint, SdpInstance, Sense};
use faer::{Mat, Side};
use rand::Rng;

/// Two-variable instance `F0 + x0 A0 + x1 A1 ⪰ 0` blockwise, with `F0`
/// positive diagonal (so `x = 0` is interior), box blocks keeping the
/// feasible set bounded, an optional scalar inequality and an optional
/// equality through the origin.
pub struct RandomSdp {
    pub instance: SdpInstance,
    /// Each constraint as (positive diagonal constant, coefficient matrices).
    lmis: Vec<(Vec<f64>, [Mat<f64>; 2])>,
    objective: [f64; 2],
    sense: Sense,
    /// Direction of the feasible line when there is an equality.
    line: Option<[f64; 2]>,
}

fn sym(rng: &mut impl Rng, n: usize) -> Mat<f64> {
    let mut a = Mat::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let v = rng.gen_range(-1.0..1.0);
            a[(i, j)] = v;
            a[(j, i)] = v;
        }
    }
    a
}

impl RandomSdp {
    pub fn generate(rng: &mut impl Rng) -> Self {
        let sense = if rng.gen_bool(0.5) {
            Sense::Minimize
        } else {
            Sense::Maximize
        };
        let objective = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
        let mut lmis = Vec::new();
        let blocks = rng.gen_range(1..=2);
        for _ in 0..blocks {
            let n = rng.gen_range(2..=4);
            let d: Vec<f64> = (0..n).map(|_| rng.gen_range(0.3..2.0)).collect();
            lmis.push((d, [sym(rng, n), sym(rng, n)]));
        }
        // |x_k| <= bound_k as [[b, x], [x, b]].
        for k in 0..2 {
            let b = rng.gen_range(1.0..3.0);
            let mut a = [Mat::zeros(2, 2), Mat::zeros(2, 2)];
            a[k][(0, 1)] = 1.0;
            a[k][(1, 0)] = 1.0;
            lmis.push((vec![b, b], a));
        }
        if rng.gen_bool(0.5) {
            let h = rng.gen_range(0.1..1.0);
            let mut a = [Mat::zeros(1, 1), Mat::zeros(1, 1)];
            a[0][(0, 0)] = rng.gen_range(-1.0..1.0);
            a[1][(0, 0)] = rng.gen_range(-1.0..1.0);
            lmis.push((vec![h], a));
        }
        let line = if rng.gen_bool(0.3) {
            let th: f64 = rng.gen_range(0.0..std::f64::consts::PI);
            Some([th.cos(), th.sin()])
        } else {
            None
        };

        let mut inst = SdpInstance::new(2, sense);
        inst.objective = vec![(0, objective[0]), (1, objective[1])];
        for (k, (d, a)) in lmis.iter().enumerate() {
            if d.len() == 1 {
                inst.inequalities.push(LinearConstraint {
                    terms: vec![(0, a[0][(0, 0)]), (1, a[1][(0, 0)])],
                    rhs: -d[0],
                    label: format!("ineq{k}"),
                    role: ConstraintRole::Other,
                });
                continue;
            }
            let mut b = BlockTemplate::new(format!("lmi{k}"), d.len());
            for i in 0..d.len() {
                b.push(i, i, None, d[i]);
                for j in i..d.len() {
                    for v in 0..2 {
                        if a[v][(i, j)] != 0.0 {
                            b.push(i, j, Some(v), a[v][(i, j)]);
                        }
                    }
                }
            }
            inst.blocks.push(b);
        }
        if let Some(u) = line {
            // Normal to the line through the origin.
            inst.equalities.push(LinearConstraint {
                terms: vec![(0, -u[1]), (1, u[0])],
                rhs: 0.0,
                label: "line".into(),
                role: ConstraintRole::Other,
            });
        }
        RandomSdp {
            instance: inst,
            lmis,
            objective,
            sense,
            line,
        }
    }

    /// Distance from the origin to the boundary along `u`.
    fn reach(&self, u: [f64; 2]) -> f64 {
        let mut r = f64::INFINITY;
        for (d, a) in &self.lmis {
            let n = d.len();
            let g = Mat::from_fn(n, n, |i, j| {
                -(u[0] * a[0][(i, j)] + u[1] * a[1][(i, j)]) / (d[i] * d[j]).sqrt()
            });
            let top = g
                .self_adjoint_eigenvalues(Side::Lower)
                .expect("small symmetric eigenproblem")
                .into_iter()
                .fold(f64::NEG_INFINITY, f64::max);
            if top > 0.0 {
                r = r.min(1.0 / top);
            }
        }
        r
    }

    /// Objective, in the instance's sense, at the boundary point along angle `th`.
    fn along(&self, th: f64) -> f64 {
        let u = [th.cos(), th.sin()];
        let r = self.reach(u);
        r * (self.objective[0] * u[0] + self.objective[1] * u[1])
    }

    /// Optimum by exhaustive search over boundary rays.
    pub fn brute_force(&self) -> f64 {
        let better = |a: f64, b: f64| match self.sense {
            Sense::Minimize => a < b,
            Sense::Maximize => a > b,
        };
        if let Some(u) = self.line {
            let th = u[1].atan2(u[0]);
            let (a, b) = (self.along(th), self.along(th + std::f64::consts::PI));
            return if better(a, b) { a } else { b };
        }
        let n = 2000;
        let step = std::f64::consts::TAU / n as f64;
        let mut best = (0.0, self.along(0.0));
        for k in 1..n {
            let th = k as f64 * step;
            let v = self.along(th);
            if better(v, best.1) {
                best = (th, v);
            }
        }
        // Golden-section refinement around the best ray.
        let phi = (5f64.sqrt() - 1.0) / 2.0;
        let (mut lo, mut hi) = (best.0 - step, best.0 + step);
        for _ in 0..80 {
            let c = hi - phi * (hi - lo);
            let d = lo + phi * (hi - lo);
            if better(self.along(c), self.along(d)) {
                hi = d;
            } else {
                lo = c;
            }
        }
        let v = self.along(0.5 * (lo + hi));
        if better(v, best.1) {
            v
        } else {
            best.1
        }
    }
}
