//! Gauss-Radau quadrature on `[0, 1]` with the fixed node at `t = 1`, and the
//! rational lower bounds on `ln` obtained by applying it to
//! `ln(x) = ∫₀¹ (x-1)/(t(x-1)+1) dt`.
//!
//! Nodes and weights come from the Golub-Welsch eigenproblem of the Jacobi
//! matrix of the shifted Legendre polynomials, with the last diagonal entry
//! modified so that `1` is an eigenvalue.

use crate::error::{invalid, Error, Result};
use crate::scalar::Real;

/// Largest supported rule; the Jacobi eigenproblem degrades past this.
pub const MAX_NODES: usize = 64;

/// An `m`-point Gauss-Radau rule on `[0, 1]` whose last node is exactly `1`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule<T> {
    nodes: Vec<T>,
    weights: Vec<T>,
}

impl<T: Real> QuadratureRule<T> {
    pub fn m(&self) -> usize {
        self.nodes.len()
    }

    /// Strictly increasing, last entry exactly one.
    pub fn nodes(&self) -> &[T] {
        &self.nodes
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    /// `(t_i, w_i)` pairs in node order.
    pub fn iter(&self) -> impl Iterator<Item = (T, T)> + '_ {
        self.nodes.iter().copied().zip(self.weights.iter().copied())
    }

    /// Interior nodes `t_1 .. t_{m-1}` with their weights (everything but
    /// the endpoint at one).
    pub fn interior(&self) -> impl Iterator<Item = (usize, T, T)> + '_ {
        self.iter()
            .take(self.m() - 1)
            .enumerate()
            .map(|(i, (t, w))| (i, t, w))
    }

    /// `Σ w_i g(t_i)`.
    pub fn integrate(&self, g: impl Fn(T) -> T) -> T {
        self.iter().fold(T::zero(), |acc, (t, w)| acc + w * g(t))
    }
}

/// Computes the `m`-point Gauss-Radau rule on `[0, 1]` with endpoint `1`.
pub fn gauss_radau<T: Real>(m: usize) -> Result<QuadratureRule<T>> {
    if m == 0 {
        return Err(invalid("quadrature needs at least one node"));
    }
    if m > MAX_NODES {
        return Err(invalid(format!(
            "quadrature supports at most {MAX_NODES} nodes, got {m}"
        )));
    }
    let half = T::lit(0.5);
    // Monic shifted Legendre recurrence: p_{k+1} = (t - 1/2) p_k - beta_k p_{k-1}.
    let beta = |k: usize| {
        let k = T::from_usize(k).unwrap();
        let four = T::lit(4.0);
        k * k / (four * (four * k * k - T::one()))
    };

    let mut diag = vec![half; m];
    let mut off = (1..m).map(|k| beta(k).sqrt()).collect::<Vec<_>>();

    // Radau modification: a'_{m-1} = z - beta_{m-1} p_{m-2}(z) / p_{m-1}(z) at z = 1.
    let z = T::one();
    let (mut p_prev, mut p_cur) = (T::zero(), T::one());
    for k in 0..m.saturating_sub(1) {
        let b = if k == 0 { T::zero() } else { beta(k) };
        let next = (z - half) * p_cur - b * p_prev;
        p_prev = p_cur;
        p_cur = next;
    }
    diag[m - 1] = if m == 1 {
        z
    } else {
        z - beta(m - 1) * p_prev / p_cur
    };

    let (values, first_components) = tridiagonal_eigen(&mut diag, &mut off)?;
    let mut pairs = values
        .into_iter()
        .zip(first_components.into_iter().map(|v| v * v))
        .collect::<Vec<_>>();
    pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite nodes"));

    let (mut nodes, mut weights): (Vec<T>, Vec<T>) = pairs.into_iter().unzip();

    let snap_tol = (T::epsilon() * T::lit(1e4)).max(T::lit(1e-9));
    let last = m - 1;
    let endpoint_weight = T::one() / T::from_usize(m * m).unwrap();
    if (nodes[last] - T::one()).abs() > snap_tol {
        return Err(Error::NumericalFailure(format!(
            "Radau endpoint drifted: last node {:?}",
            nodes[last]
        )));
    }
    if (weights[last] - endpoint_weight).abs() > snap_tol {
        return Err(Error::NumericalFailure(format!(
            "Radau endpoint weight {:?} differs from 1/m^2",
            weights[last]
        )));
    }
    nodes[last] = T::one();
    weights[last] = endpoint_weight;

    if nodes.windows(2).any(|w| w[0] >= w[1]) || nodes[0] <= T::zero() {
        return Err(Error::NumericalFailure(
            "quadrature nodes not strictly increasing in (0, 1]".into(),
        ));
    }
    if weights.iter().any(|w| *w <= T::zero()) {
        return Err(Error::NumericalFailure(
            "nonpositive quadrature weight".into(),
        ));
    }
    Ok(QuadratureRule { nodes, weights })
}

/// Integrand of the logarithm: `f(t, x) = (x - 1) / (t (x - 1) + 1)`.
pub fn f_kernel<T: Real>(t: T, x: T) -> T {
    let d = x - T::one();
    d / (t * d + T::one())
}

/// `r_m(x) = Σ w_i f(t_i, x)`, a lower bound on `ln x` for every `x > 0`.
pub fn rational_log_lower<T: Real>(rule: &QuadratureRule<T>, x: T) -> Result<T> {
    if !(x > T::zero()) {
        return Err(invalid(format!("log bound needs x > 0, got {x:?}")));
    }
    Ok(rule.integrate(|t| f_kernel(t, x)))
}

/// Symmetric tridiagonal eigenproblem by implicit QL with Wilkinson shifts.
/// Returns eigenvalues and the first component of each normalized eigenvector.
fn tridiagonal_eigen<T: Real>(diag: &mut [T], off: &mut [T]) -> Result<(Vec<T>, Vec<T>)> {
    let n = diag.len();
    let mut e = vec![T::zero(); n];
    e[..n - 1].copy_from_slice(off);
    // Only the first row of the eigenvector matrix is needed for the weights.
    let mut first = vec![T::zero(); n];
    first[0] = T::one();

    let two = T::lit(2.0);
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut mm = l;
            while mm + 1 < n {
                let dd = diag[mm].abs() + diag[mm + 1].abs();
                if e[mm].abs() <= T::epsilon() * dd {
                    break;
                }
                mm += 1;
            }
            if mm == l {
                break;
            }
            iter += 1;
            if iter > 60 {
                return Err(Error::NumericalFailure(
                    "tridiagonal eigensolver did not converge".into(),
                ));
            }
            let mut g = (diag[l + 1] - diag[l]) / (two * e[l]);
            let mut r = g.hypot(T::one());
            g = diag[mm] - diag[l] + e[l] / (g + if g >= T::zero() { r.abs() } else { -r.abs() });
            let (mut s, mut c, mut p) = (T::one(), T::one(), T::zero());
            let mut i = mm;
            let mut underflow = false;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == T::zero() {
                    diag[i + 1] = diag[i + 1] - p;
                    e[mm] = T::zero();
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = diag[i + 1] - p;
                r = (diag[i] - g) * s + two * c * b;
                p = s * r;
                diag[i + 1] = g + p;
                g = c * r - b;
                let fz = first[i + 1];
                first[i + 1] = s * first[i] + c * fz;
                first[i] = c * first[i] - s * fz;
            }
            if underflow {
                continue;
            }
            diag[l] = diag[l] - p;
            e[l] = g;
            e[mm] = T::zero();
        }
    }
    Ok((diag.to_vec(), first))
}
