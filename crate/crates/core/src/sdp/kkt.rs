use faer::linalg::solvers::{Llt, Solve};
use faer::{Mat, Side};

use super::cone::Scaling;
use super::{a_mul, at_mul, Problem};

const REFINEMENT_STEPS: usize = 1;

/// Factored Newton system
///
/// ```text
/// A'Δy + G'Δz = bx,   A Δx = by,   G Δx − W'W Δz = bz
/// ```
///
/// reduced to `H Δx + A'Δy = bx + G'(M bz M)` with `H_ij = tr(F_i M F_j M)`.
/// The factorization uses `H + A'A`, which is positive definite whenever
/// the blocks and equalities together determine `x`.
pub(super) struct Kkt {
    ms: Vec<Mat<f64>>,
    /// `r rᵀ`, so that `W'W Z = (r rᵀ) Z (r rᵀ)`.
    wtw: Vec<Mat<f64>>,
    hreg: Llt<f64>,
    /// `(H + A'A)⁻¹ A'`.
    x_at: Mat<f64>,
    schur: Option<Llt<f64>>,
}

fn col(v: &[f64]) -> Mat<f64> {
    Mat::from_fn(v.len(), 1, |i, _| v[i])
}

fn to_vec(m: &Mat<f64>) -> Vec<f64> {
    (0..m.nrows()).map(|i| m[(i, 0)]).collect()
}

/// Cholesky with a growing diagonal shift when the matrix is numerically
/// semidefinite. The shift is relative to each diagonal entry so that
/// variables on very different scales are perturbed alike.
fn robust_llt(m: &Mat<f64>) -> Option<Llt<f64>> {
    if let Ok(f) = m.llt(Side::Lower) {
        return Some(f);
    }
    let n = m.nrows();
    let scale = (0..n)
        .map(|i| m[(i, i)].abs())
        .fold(0.0, f64::max)
        .max(1e-300);
    let mut delta = 1e-14;
    for _ in 0..10 {
        let shifted = Mat::from_fn(n, n, |i, j| {
            let v = m[(i, j)];
            if i == j {
                v + delta * v.abs().max(1e-14 * scale)
            } else {
                v
            }
        });
        if let Ok(f) = shifted.llt(Side::Lower) {
            return Some(f);
        }
        delta *= 10.0;
    }
    None
}

impl Kkt {
    pub fn factor(pb: &Problem, scalings: &[Scaling]) -> Option<Kkt> {
        let n = pb.n;
        let ms: Vec<Mat<f64>> = scalings.iter().map(Scaling::m).collect();
        // Lower triangle of H + A'A, column by column: terms are sorted by
        // variable, so a pair (e1, e2) with e1 first lands in column
        // var(e1), row var(e2) >= var(e1). The Cholesky reads only this half.
        let mut hreg_mat = Mat::<f64>::zeros(n, n);
        for (cone, m) in pb.cones.iter().zip(&ms) {
            let k = cone.n;
            let mv: Vec<f64> = (0..k * k).map(|i| m[(i / k, i % k)]).collect();
            let terms = &cone.terms;
            for (e1, t1) in terms.iter().enumerate() {
                let c1 = if t1.p == t1.q { 0.5 } else { 1.0 } * t1.coeff;
                let rp = &mv[t1.p * k..(t1.p + 1) * k];
                let rq = &mv[t1.q * k..(t1.q + 1) * k];
                let col = hreg_mat.col_as_slice_mut(t1.var);
                col[t1.var] += 2.0 * c1 * c1 * (rq[t1.p] * rp[t1.q] + rq[t1.q] * rp[t1.p]);
                for t2 in &terms[e1 + 1..] {
                    let c2 = if t2.p == t2.q { 0.5 } else { 1.0 } * t2.coeff;
                    let pair = if t2.var == t1.var { 4.0 } else { 2.0 };
                    col[t2.var] += pair * c1 * c2 * (rq[t2.p] * rp[t2.q] + rq[t2.q] * rp[t2.p]);
                }
            }
        }
        let p = pb.a.nrows();
        for r in 0..p {
            let row: Vec<f64> = (0..n).map(|j| pb.a[(r, j)]).collect();
            for (j, &c) in row.iter().enumerate() {
                if c != 0.0 {
                    let col = hreg_mat.col_as_slice_mut(j);
                    for i in j..n {
                        col[i] += c * row[i];
                    }
                }
            }
        }
        let hreg = robust_llt(&hreg_mat)?;
        let x_at = hreg.solve(pb.a.transpose());
        let schur = if p > 0 {
            Some(robust_llt(&(&pb.a * &x_at))?)
        } else {
            None
        };
        Some(Kkt {
            ms,
            wtw: scalings.iter().map(Scaling::rrt).collect(),
            hreg,
            x_at,
            schur,
        })
    }

    fn reduced(&self, pb: &Problem, rx: &[f64], ry: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let mut rhs = rx.to_vec();
        for (o, v) in rhs.iter_mut().zip(at_mul(&pb.a, ry)) {
            *o += v;
        }
        let t = self.hreg.solve(col(&rhs));
        match &self.schur {
            None => (to_vec(&t), Vec::new()),
            Some(schur) => {
                let at = &pb.a * &t;
                let rhs_y = Mat::from_fn(ry.len(), 1, |j, _| at[(j, 0)] - ry[j]);
                let dy = schur.solve(rhs_y);
                let dx = t - &self.x_at * &dy;
                (to_vec(&dx), to_vec(&dy))
            }
        }
    }

    fn solve_once(
        &self,
        pb: &Problem,
        bx: &[f64],
        by: &[f64],
        bz: &[Mat<f64>],
    ) -> (Vec<f64>, Vec<f64>, Vec<Mat<f64>>) {
        let mut rx = bx.to_vec();
        for (k, cone) in pb.cones.iter().enumerate() {
            let m = &self.ms[k];
            cone.adjoint_add(&(m * &bz[k] * m), -1.0, &mut rx);
        }
        let (dx, dy) = self.reduced(pb, &rx, by);
        let dz = pb
            .cones
            .iter()
            .enumerate()
            .map(|(k, cone)| {
                let m = &self.ms[k];
                let g = -(cone.linear(&dx) + &bz[k]);
                m * g * m
            })
            .collect();
        (dx, dy, dz)
    }

    /// Solves for `(Δx, Δy, ΔZ)`, refining once against the unreduced
    /// system.
    pub fn solve(
        &self,
        pb: &Problem,
        bx: &[f64],
        by: &[f64],
        bz: &[Mat<f64>],
    ) -> (Vec<f64>, Vec<f64>, Vec<Mat<f64>>) {
        let (mut dx, mut dy, mut dz) = self.solve_once(pb, bx, by, bz);
        for _ in 0..REFINEMENT_STEPS {
            let mut ex = bx.to_vec();
            for (o, v) in ex.iter_mut().zip(at_mul(&pb.a, &dy)) {
                *o -= v;
            }
            for (k, cone) in pb.cones.iter().enumerate() {
                cone.adjoint_add(&dz[k], 1.0, &mut ex);
            }
            let adx = a_mul(&pb.a, &dx);
            let ey: Vec<f64> = by.iter().zip(&adx).map(|(b, a)| b - a).collect();
            let ez: Vec<Mat<f64>> = pb
                .cones
                .iter()
                .enumerate()
                .map(|(k, cone)| {
                    let w = &self.wtw[k];
                    &bz[k] + cone.linear(&dx) + w * &dz[k] * w
                })
                .collect();
            let (cx, cy, cz) = self.solve_once(pb, &ex, &ey, &ez);
            for (d, c) in dx.iter_mut().zip(cx) {
                *d += c;
            }
            for (d, c) in dy.iter_mut().zip(cy) {
                *d += c;
            }
            for (d, c) in dz.iter_mut().zip(cz) {
                *d += c;
            }
        }
        (dx, dy, dz)
    }
}
