use faer::{Mat, Side};

use crate::relax::{BlockTemplate, LinearConstraint};

/// `(p, q, var, coeff)` with `p <= q`: `coeff · x_var · (E_pq + E_qp)`
/// off the diagonal, `coeff · x_var · E_pp` on it.
#[derive(Clone, Copy, Debug)]
pub(super) struct Term {
    pub p: usize,
    pub q: usize,
    pub var: usize,
    pub coeff: f64,
}

/// One PSD constraint `F0 + Σ x_i F_i ⪰ 0`.
pub(super) struct Cone {
    pub n: usize,
    pub f0: Mat<f64>,
    pub terms: Vec<Term>,
}

impl Cone {
    pub fn from_block(b: &BlockTemplate) -> Cone {
        let mut f0 = Mat::<f64>::zeros(b.size, b.size);
        let mut terms = Vec::new();
        for e in &b.entries {
            match e.var {
                Some(var) => terms.push(Term {
                    p: e.row,
                    q: e.col,
                    var,
                    coeff: e.coeff,
                }),
                None => {
                    f0[(e.row, e.col)] += e.coeff;
                    if e.row != e.col {
                        f0[(e.col, e.row)] += e.coeff;
                    }
                }
            }
        }
        // Sorted by variable so the Schur complement is filled row by row.
        terms.sort_by_key(|t| (t.var, t.p, t.q));
        Cone {
            n: b.size,
            f0,
            terms,
        }
    }

    /// `a·x >= rhs` as the 1×1 block `a·x − rhs`.
    pub fn from_inequality(c: &LinearConstraint) -> Cone {
        let mut terms: Vec<Term> = c
            .terms
            .iter()
            .map(|&(var, coeff)| Term {
                p: 0,
                q: 0,
                var,
                coeff,
            })
            .collect();
        terms.sort_by_key(|t| t.var);
        Cone {
            n: 1,
            f0: Mat::from_fn(1, 1, |_, _| -c.rhs),
            terms,
        }
    }

    /// `Σ x_i F_i`.
    pub fn linear(&self, x: &[f64]) -> Mat<f64> {
        let mut m = Mat::<f64>::zeros(self.n, self.n);
        for t in &self.terms {
            let v = t.coeff * x[t.var];
            m[(t.p, t.q)] += v;
            if t.p != t.q {
                m[(t.q, t.p)] += v;
            }
        }
        m
    }

    pub fn evaluate(&self, x: &[f64]) -> Mat<f64> {
        &self.f0 + self.linear(x)
    }

    /// `out_i += scale · ⟨F_i, u⟩` for symmetric `u`.
    pub fn adjoint_add(&self, u: &Mat<f64>, scale: f64, out: &mut [f64]) {
        for t in &self.terms {
            let v = if t.p == t.q {
                u[(t.p, t.p)]
            } else {
                u[(t.p, t.q)] + u[(t.q, t.p)]
            };
            out[t.var] += scale * t.coeff * v;
        }
    }
}

pub(super) fn min_eigenvalue(m: &Mat<f64>) -> f64 {
    if m.nrows() == 1 {
        return m[(0, 0)];
    }
    m.self_adjoint_eigenvalues(Side::Lower)
        .map(|ev| ev.into_iter().fold(f64::INFINITY, f64::min))
        .unwrap_or(f64::NAN)
}

fn symmetrize(m: &Mat<f64>) -> Mat<f64> {
    Mat::from_fn(m.nrows(), m.ncols(), |i, j| 0.5 * (m[(i, j)] + m[(j, i)]))
}

/// `(U, σ, V)` with `m = U diag(σ) Vᵀ`. faer's iteration occasionally fails
/// to converge on a well-conditioned matrix while converging on its transpose.
fn svd(m: &Mat<f64>) -> Option<(Mat<f64>, Vec<f64>, Mat<f64>)> {
    let parts = |d: faer::linalg::solvers::Svd<f64>| {
        let sigma = d.S().column_vector().iter().copied().collect();
        (d.U().to_owned(), sigma, d.V().to_owned())
    };
    match m.svd() {
        Ok(d) => Some(parts(d)),
        Err(_) => {
            let (u, sigma, v) = parts(m.transpose().svd().ok()?);
            Some((v, sigma, u))
        }
    }
}

/// Nesterov-Todd scaling of one block: `S = r Λ rᵀ`, `Z = r⁻ᵀ Λ r⁻¹`
/// with `Λ = diag(lambda)`.
#[derive(Clone)]
pub(super) struct Scaling {
    pub r: Mat<f64>,
    pub rinv: Mat<f64>,
    pub lambda: Vec<f64>,
}

impl Scaling {
    pub fn identity(n: usize) -> Scaling {
        Scaling {
            r: Mat::identity(n, n),
            rinv: Mat::identity(n, n),
            lambda: vec![1.0; n],
        }
    }

    pub fn nesterov_todd(s: &Mat<f64>, z: &Mat<f64>) -> Option<Scaling> {
        let n = s.nrows();
        let l1 = symmetrize(s).llt(Side::Lower).ok()?.L().to_owned();
        let l2 = symmetrize(z).llt(Side::Lower).ok()?.L().to_owned();
        let prod = l2.transpose() * &l1;
        let (u, lambda, v) = svd(&prod)?;
        if lambda.iter().any(|&l| !(l > 0.0) || !l.is_finite()) {
            return None;
        }
        let lv = &l1 * &v;
        let r = Mat::from_fn(n, n, |i, j| lv[(i, j)] / lambda[j].sqrt());
        let ul = u.transpose() * l2.transpose();
        let rinv = Mat::from_fn(n, n, |i, j| ul[(i, j)] / lambda[i].sqrt());
        Some(Scaling { r, rinv, lambda })
    }

    fn diag_lambda(&self) -> Mat<f64> {
        let n = self.lambda.len();
        Mat::from_fn(n, n, |i, j| if i == j { self.lambda[i] } else { 0.0 })
    }

    pub fn s(&self) -> Mat<f64> {
        symmetrize(&(&self.r * self.diag_lambda() * self.r.transpose()))
    }

    pub fn z(&self) -> Mat<f64> {
        symmetrize(&(self.rinv.transpose() * self.diag_lambda() * &self.rinv))
    }

    /// `M = r⁻ᵀ r⁻¹`, the inverse of the scaling's quadratic form.
    pub fn m(&self) -> Mat<f64> {
        symmetrize(&(self.rinv.transpose() * &self.rinv))
    }

    pub fn rrt(&self) -> Mat<f64> {
        symmetrize(&(&self.r * self.r.transpose()))
    }

    /// `rᵀ D r`.
    pub fn scale_z(&self, d: &Mat<f64>) -> Mat<f64> {
        symmetrize(&(self.r.transpose() * d * &self.r))
    }

    /// `r X rᵀ`.
    pub fn unscale_s(&self, x: &Mat<f64>) -> Mat<f64> {
        symmetrize(&(&self.r * x * self.r.transpose()))
    }

    /// Smallest eigenvalue of `Λ^{-1/2} Δ Λ^{-1/2}`.
    pub fn min_ratio(&self, d: &Mat<f64>) -> f64 {
        let n = self.lambda.len();
        let m = Mat::from_fn(n, n, |i, j| {
            d[(i, j)] / (self.lambda[i].sqrt() * self.lambda[j].sqrt())
        });
        min_eigenvalue(&symmetrize(&m))
    }

    /// Scaling at `(Λ + αΔs̃, Λ + αΔz̃)`, composed with the current one.
    pub fn advance(&self, alpha: f64, ds: &Mat<f64>, dz: &Mat<f64>) -> Option<Scaling> {
        let n = self.lambda.len();
        let step = |d: &Mat<f64>| {
            Mat::from_fn(n, n, |i, j| {
                alpha * 0.5 * (d[(i, j)] + d[(j, i)]) + if i == j { self.lambda[i] } else { 0.0 }
            })
        };
        let inner = Scaling::nesterov_todd(&step(ds), &step(dz))?;
        Some(Scaling {
            r: &self.r * &inner.r,
            rinv: &inner.rinv * &self.rinv,
            lambda: inner.lambda,
        })
    }
}
