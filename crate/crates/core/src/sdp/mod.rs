//! Dense primal-dual interior-point solver for block-diagonal SDPs.
//!
//! Instances are read in the linear matrix inequality form
//!
//! ```text
//! minimize    c·x
//! subject to  A x = b
//!             F0_k + Σ_i x_i F_ik ⪰ 0   for every block k
//! ```
//!
//! with scalar inequalities carried as 1×1 blocks. The method is an
//! infeasible-start path-following scheme with Nesterov-Todd scaling and
//! Mehrotra predictor-corrector steps; the Newton system is reduced to the
//! Schur complement in `x` and factored densely.

mod cone;
mod kkt;
mod presolve;

use faer::{Mat, Par};

use crate::relax::{SdpInstance, Sense};
use cone::{Cone, Scaling};
use kkt::Kkt;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SolveStatus {
    Optimal,
    /// Stopped on stagnation or the iteration cap with residuals and gap
    /// below the looser near-optimal threshold.
    NearOptimal,
    /// Primal infeasible (a Farkas certificate was found) or dual
    /// infeasible (an improving ray was found).
    Infeasible,
    NumericalFailure,
}

#[derive(Clone, Debug)]
pub struct SolverOptions {
    pub tol: f64,
    pub max_iterations: usize,
    /// Residual level accepted as [`SolveStatus::NearOptimal`].
    pub near_tol: f64,
    /// Relative gap accepted as [`SolveStatus::NearOptimal`]. Problems
    /// without a strictly feasible moment matrix stall here; with small
    /// residuals the dual value is still a valid bound, only a looser one.
    pub near_gap: f64,
    /// Prints one line per iteration to stderr.
    pub verbose: bool,
}

impl SolverOptions {
    pub fn with_tol(tol: f64) -> Self {
        SolverOptions {
            tol,
            near_tol: (1e3 * tol).max(1e-5),
            near_gap: (1e4 * tol).max(1e-4),
            ..Self::default()
        }
    }
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            tol: 1e-8,
            max_iterations: 200,
            near_tol: 1e-5,
            near_gap: 1e-4,
            verbose: false,
        }
    }
}

/// Result of [`solve`].
///
/// Multipliers always refer to the minimization form (for a maximization
/// instance, to minimizing the negated objective) and certify
/// `c = Σ_j ν_j a_j + Σ_j z_j g_j + Σ_k ⟨F_ik, Z_k⟩` with `z >= 0`, `Z_k ⪰ 0`.
#[derive(Clone, Debug)]
pub struct SdpSolution {
    pub status: SolveStatus,
    /// Objective at `x`, in the instance's own sense.
    pub primal: f64,
    /// Dual objective, in the instance's own sense.
    pub dual: f64,
    pub x: Vec<f64>,
    pub eq_duals: Vec<f64>,
    pub ineq_duals: Vec<f64>,
    pub block_duals: Vec<Mat<f64>>,
    /// `|primal − dual| / (1 + |primal|)`.
    pub gap: f64,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub iterations: usize,
}

impl SdpSolution {
    pub fn is_usable(&self) -> bool {
        matches!(self.status, SolveStatus::Optimal | SolveStatus::NearOptimal)
    }
}

pub fn solve(instance: &SdpInstance, tol: f64) -> SdpSolution {
    solve_with(instance, &SolverOptions::with_tol(tol))
}

struct Problem {
    n: usize,
    c: Vec<f64>,
    a: Mat<f64>,
    b: Vec<f64>,
    cones: Vec<Cone>,
    blocks: usize,
    sign: f64,
}

impl Problem {
    fn new(inst: &SdpInstance) -> Problem {
        let n = inst.num_vars;
        let sign = match inst.sense {
            Sense::Minimize => 1.0,
            Sense::Maximize => -1.0,
        };
        let mut c = vec![0.0; n];
        for &(i, v) in &inst.objective {
            c[i] += sign * v;
        }
        let p = inst.equalities.len();
        let mut a = Mat::<f64>::zeros(p, n);
        for (j, con) in inst.equalities.iter().enumerate() {
            for &(i, v) in &con.terms {
                a[(j, i)] += v;
            }
        }
        let b = inst.equalities.iter().map(|e| e.rhs).collect();
        let mut cones: Vec<Cone> = inst.blocks.iter().map(Cone::from_block).collect();
        cones.extend(inst.inequalities.iter().map(Cone::from_inequality));
        Problem {
            n,
            c,
            a,
            b,
            cones,
            blocks: inst.blocks.len(),
            sign,
        }
    }

    fn degree(&self) -> usize {
        self.cones.iter().map(|k| k.n).sum()
    }
}

struct Iterate {
    x: Vec<f64>,
    y: Vec<f64>,
    s: Vec<Mat<f64>>,
    z: Vec<Mat<f64>>,
}

struct Residuals {
    rx: Vec<f64>,
    ry: Vec<f64>,
    rz: Vec<Mat<f64>>,
    pres: f64,
    dres: f64,
    pcost: f64,
    dcost: f64,
    gap: f64,
    relgap: f64,
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|t| t * t).sum::<f64>().sqrt()
}

fn mats_norm(ms: &[Mat<f64>]) -> f64 {
    ms.iter().map(|m| m.squared_norm_l2()).sum::<f64>().sqrt()
}

fn inner(a: &Mat<f64>, b: &Mat<f64>) -> f64 {
    let mut s = 0.0;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            s += a[(i, j)] * b[(i, j)];
        }
    }
    s
}

fn at_mul(a: &Mat<f64>, y: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.ncols()];
    for (j, &yj) in y.iter().enumerate() {
        if yj != 0.0 {
            for (i, o) in out.iter_mut().enumerate() {
                *o += a[(j, i)] * yj;
            }
        }
    }
    out
}

fn a_mul(a: &Mat<f64>, x: &[f64]) -> Vec<f64> {
    (0..a.nrows())
        .map(|j| (0..a.ncols()).map(|i| a[(j, i)] * x[i]).sum())
        .collect()
}

fn residuals(pb: &Problem, it: &Iterate, scale: &(f64, f64, f64)) -> Residuals {
    let (resx0, resy0, resz0) = *scale;
    let mut rx = pb.c.clone();
    for (o, v) in rx.iter_mut().zip(at_mul(&pb.a, &it.y)) {
        *o += v;
    }
    for (k, cone) in pb.cones.iter().enumerate() {
        cone.adjoint_add(&it.z[k], -1.0, &mut rx);
    }
    let ry: Vec<f64> = a_mul(&pb.a, &it.x)
        .into_iter()
        .zip(&pb.b)
        .map(|(ax, b)| ax - b)
        .collect();
    let rz: Vec<Mat<f64>> = pb
        .cones
        .iter()
        .zip(&it.s)
        .map(|(cone, s)| s - cone.evaluate(&it.x))
        .collect();
    let pcost: f64 = pb.c.iter().zip(&it.x).map(|(c, x)| c * x).sum();
    let dcost = -pb.b.iter().zip(&it.y).map(|(b, y)| b * y).sum::<f64>()
        - pb.cones
            .iter()
            .zip(&it.z)
            .map(|(cone, z)| inner(&cone.f0, z))
            .sum::<f64>();
    let gap: f64 = it.s.iter().zip(&it.z).map(|(s, z)| inner(s, z)).sum();
    let pres = (norm(&ry) / resy0).max(mats_norm(&rz) / resz0);
    let dres = norm(&rx) / resx0;
    let relgap = (pcost - dcost).abs().max(gap.abs()) / (1.0 + pcost.abs());
    Residuals {
        rx,
        ry,
        rz,
        pres,
        dres,
        pcost,
        dcost,
        gap,
        relgap,
    }
}

struct Best {
    merit: f64,
    near: bool,
    it: Iterate,
    res: (f64, f64, f64, f64),
    iteration: usize,
}

pub fn solve_with(instance: &SdpInstance, opts: &SolverOptions) -> SdpSolution {
    match presolve::reduce(instance) {
        Some(r) => {
            if opts.verbose {
                eprintln!(
                    "presolve: {} -> {} variables",
                    instance.num_vars, r.instance.num_vars
                );
            }
            r.restore(solve_reduced(&r.instance, opts), instance.num_vars)
        }
        None => solve_reduced(instance, opts),
    }
}

fn solve_reduced(instance: &SdpInstance, opts: &SolverOptions) -> SdpSolution {
    faer::set_global_parallelism(Par::Seq);
    let pb = Problem::new(instance);
    let deg = pb.degree() as f64;

    let scale = (
        norm(&pb.c).max(1.0),
        norm(&pb.b).max(1.0),
        pb.cones
            .iter()
            .map(|k| k.f0.squared_norm_l2())
            .sum::<f64>()
            .sqrt()
            .max(1.0),
    );

    let (mut it, mut scalings) = match initial_point(&pb) {
        Some(v) => v,
        None => return failure(&pb, instance),
    };

    let mut best: Option<Best> = None;
    let mut stalls = 0;
    // Iterations that improve the best merit by less than 10%; the endgame
    // loses accuracy rather than gaining it once this grows.
    let mut stagnant = 0;
    for iteration in 0..=opts.max_iterations {
        let res = residuals(&pb, &it, &scale);
        let merit = res.pres.max(res.dres).max(res.relgap);
        if opts.verbose {
            eprintln!(
                "{iteration:3} pcost {:+.10e} dcost {:+.10e} gap {:.2e} pres {:.2e} dres {:.2e}",
                res.pcost, res.dcost, res.relgap, res.pres, res.dres
            );
        }
        if best.as_ref().is_some_and(|b| merit >= 0.9 * b.merit) {
            stagnant += 1;
        } else {
            stagnant = 0;
        }
        let near =
            res.pres <= opts.near_tol && res.dres <= opts.near_tol && res.relgap <= opts.near_gap;
        // Acceptable iterates beat unacceptable ones whatever the merit.
        let improves = best
            .as_ref()
            .is_none_or(|b| (near, -merit) > (b.near, -b.merit));
        if improves && merit.is_finite() {
            best = Some(Best {
                merit,
                near,
                it: Iterate {
                    x: it.x.clone(),
                    y: it.y.clone(),
                    s: it.s.clone(),
                    z: it.z.clone(),
                },
                res: (res.pcost, res.dcost, res.pres, res.dres),
                iteration,
            });
        }
        if res.pres <= opts.tol && res.dres <= opts.tol && res.relgap <= opts.tol {
            return finish(&pb, &it, SolveStatus::Optimal, &res_tuple(&res), iteration);
        }
        if let Some(status) = infeasibility(&pb, &it, &res, opts.tol) {
            return finish(&pb, &it, status, &res_tuple(&res), iteration);
        }
        if iteration == opts.max_iterations
            || stalls >= 5
            || (stagnant >= 5 && best.as_ref().is_some_and(|b| b.near))
            || !merit.is_finite()
        {
            break;
        }

        let kkt = match Kkt::factor(&pb, &scalings) {
            Some(k) => k,
            None => break,
        };

        // Predictor.
        let bx: Vec<f64> = res.rx.iter().map(|v| -v).collect();
        let by: Vec<f64> = res.ry.iter().map(|v| -v).collect();
        let bz: Vec<Mat<f64>> = res.rz.iter().zip(&it.s).map(|(r, s)| s - r).collect();
        let (_, _, dz) = kkt.solve(&pb, &bx, &by, &bz);
        let dz_t: Vec<Mat<f64>> = scalings
            .iter()
            .zip(&dz)
            .map(|(w, d)| w.scale_z(d))
            .collect();
        let ds_t: Vec<Mat<f64>> = scalings
            .iter()
            .zip(&dz_t)
            .map(|(w, d)| {
                let mut m = -d;
                for i in 0..w.lambda.len() {
                    m[(i, i)] -= w.lambda[i];
                }
                m
            })
            .collect();
        let alpha_aff = max_step(&scalings, &ds_t, &dz_t).min(1.0);
        let sigma = (1.0 - alpha_aff).powi(3);
        let mu = res.gap / deg;

        // Corrector.
        let mut xs = Vec::with_capacity(scalings.len());
        let mut bz = Vec::with_capacity(scalings.len());
        for (k, w) in scalings.iter().enumerate() {
            let n = w.lambda.len();
            let cross = &ds_t[k] * &dz_t[k];
            let d = Mat::<f64>::from_fn(n, n, |i, j| {
                let mut v = -0.5 * (cross[(i, j)] + cross[(j, i)]);
                if i == j {
                    v += sigma * mu - w.lambda[i] * w.lambda[i];
                }
                v
            });
            let x = Mat::<f64>::from_fn(n, n, |i, j| 2.0 * d[(i, j)] / (w.lambda[i] + w.lambda[j]));
            bz.push(-(&res.rz[k] + w.unscale_s(&x)));
            xs.push(x);
        }
        let (dx, dy, dz) = kkt.solve(&pb, &bx, &by, &bz);
        let dz_t: Vec<Mat<f64>> = scalings
            .iter()
            .zip(&dz)
            .map(|(w, d)| w.scale_z(d))
            .collect();
        let ds_t: Vec<Mat<f64>> = xs.iter().zip(&dz_t).map(|(x, d)| x - d).collect();
        // G Δx + Δs = −r_z, taken literally so the primal residual contracts
        // exactly by (1 − α).
        let ds: Vec<Mat<f64>> = pb
            .cones
            .iter()
            .zip(&res.rz)
            .map(|(cone, r)| cone.linear(&dx) - r)
            .collect();
        let mut alpha = (0.99 * max_step(&scalings, &ds_t, &dz_t)).min(1.0);

        let mut updated = None;
        for _ in 0..30 {
            let next: Option<Vec<Scaling>> = scalings
                .iter()
                .enumerate()
                .map(|(k, w)| w.advance(alpha, &ds_t[k], &dz_t[k]))
                .collect();
            if let Some(next) = next {
                updated = Some(next);
                break;
            }
            alpha *= 0.8;
        }
        let Some(next) = updated else { break };
        scalings = next;
        for (x, d) in it.x.iter_mut().zip(&dx) {
            *x += alpha * d;
        }
        for (y, d) in it.y.iter_mut().zip(&dy) {
            *y += alpha * d;
        }
        for k in 0..it.s.len() {
            it.s[k] = &it.s[k] + alpha * &ds[k];
            it.z[k] = &it.z[k] + alpha * &dz[k];
        }
        stalls = if alpha < 1e-8 { stalls + 1 } else { 0 };
    }

    match best {
        Some(b) => {
            let (pcost, dcost, pres, dres) = b.res;
            let status = if b.near {
                SolveStatus::NearOptimal
            } else {
                SolveStatus::NumericalFailure
            };
            finish(&pb, &b.it, status, &(pcost, dcost, pres, dres), b.iteration)
        }
        None => failure(&pb, instance),
    }
}

fn res_tuple(r: &Residuals) -> (f64, f64, f64, f64) {
    (r.pcost, r.dcost, r.pres, r.dres)
}

fn infeasibility(pb: &Problem, it: &Iterate, res: &Residuals, tol: f64) -> Option<SolveStatus> {
    // Primal infeasibility: A'y + G'z ≈ 0 with -b'y - h'z > 0.
    let d = res.dcost;
    if d > 0.0 {
        let mut ray = at_mul(&pb.a, &it.y);
        for (k, cone) in pb.cones.iter().enumerate() {
            cone.adjoint_add(&it.z[k], -1.0, &mut ray);
        }
        let scale = norm(&it.y).max(mats_norm(&it.z));
        if norm(&ray) / d <= tol && scale > 1.0 / tol.sqrt() {
            return Some(SolveStatus::Infeasible);
        }
    }
    // Dual infeasibility: A x ≈ 0, G x + s ≈ 0 with c'x < 0.
    let p = -res.pcost;
    if p > 0.0 {
        let ax = norm(&a_mul(&pb.a, &it.x));
        let gs: f64 = pb
            .cones
            .iter()
            .zip(&it.s)
            .map(|(cone, s)| (s - cone.linear(&it.x)).squared_norm_l2())
            .sum::<f64>()
            .sqrt();
        if ax.max(gs) / p <= tol && norm(&it.x) > 1.0 / tol.sqrt() {
            return Some(SolveStatus::Infeasible);
        }
    }
    None
}

/// Largest `α` keeping `λ + αΔs̃` and `λ + αΔz̃` PSD (may exceed 1).
fn max_step(scalings: &[Scaling], ds: &[Mat<f64>], dz: &[Mat<f64>]) -> f64 {
    let mut t: f64 = 0.0;
    for (k, w) in scalings.iter().enumerate() {
        t = t.max(-w.min_ratio(&ds[k])).max(-w.min_ratio(&dz[k]));
    }
    if t <= 0.0 {
        f64::INFINITY
    } else {
        1.0 / t
    }
}

fn initial_point(pb: &Problem) -> Option<(Iterate, Vec<Scaling>)> {
    let ident: Vec<Scaling> = pb.cones.iter().map(|k| Scaling::identity(k.n)).collect();
    let kkt = Kkt::factor(pb, &ident)?;
    let zeros_z: Vec<Mat<f64>> = pb.cones.iter().map(|k| Mat::zeros(k.n, k.n)).collect();

    let f0: Vec<Mat<f64>> = pb.cones.iter().map(|k| -&k.f0).collect();
    let (x, _, _) = kkt.solve(pb, &vec![0.0; pb.n], &pb.b, &f0);
    let mut s: Vec<Mat<f64>> = pb.cones.iter().map(|k| k.evaluate(&x)).collect();

    let minus_c: Vec<f64> = pb.c.iter().map(|v| -v).collect();
    let (_, y, mut z) = kkt.solve(pb, &minus_c, &vec![0.0; pb.b.len()], &zeros_z);

    shift_into_cone(&mut s);
    shift_into_cone(&mut z);
    let scalings: Vec<Scaling> = s
        .iter()
        .zip(&z)
        .map(|(s, z)| Scaling::nesterov_todd(s, z))
        .collect::<Option<_>>()?;
    let it = Iterate {
        x,
        y,
        s: scalings.iter().map(Scaling::s).collect(),
        z: scalings.iter().map(Scaling::z).collect(),
    };
    Some((it, scalings))
}

fn shift_into_cone(v: &mut [Mat<f64>]) {
    let nrm = mats_norm(v).max(1.0);
    let t = v
        .iter()
        .map(cone::min_eigenvalue)
        .fold(f64::INFINITY, f64::min);
    let shift = -t;
    if shift >= -1e-8 * nrm {
        for m in v.iter_mut() {
            for i in 0..m.nrows() {
                m[(i, i)] += 1.0 + shift;
            }
        }
    }
}

fn finish(
    pb: &Problem,
    it: &Iterate,
    status: SolveStatus,
    res: &(f64, f64, f64, f64),
    iterations: usize,
) -> SdpSolution {
    let (pcost, dcost, pres, dres) = *res;
    SdpSolution {
        status,
        primal: pb.sign * pcost,
        dual: pb.sign * dcost,
        x: it.x.clone(),
        eq_duals: it.y.iter().map(|v| -v).collect(),
        ineq_duals: it.z[pb.blocks..].iter().map(|z| z[(0, 0)]).collect(),
        block_duals: it.z[..pb.blocks].to_vec(),
        gap: (pcost - dcost).abs() / (1.0 + pcost.abs()),
        primal_residual: pres,
        dual_residual: dres,
        iterations,
    }
}

fn failure(pb: &Problem, inst: &SdpInstance) -> SdpSolution {
    SdpSolution {
        status: SolveStatus::NumericalFailure,
        primal: f64::NAN,
        dual: f64::NAN,
        x: vec![f64::NAN; pb.n],
        eq_duals: vec![f64::NAN; inst.equalities.len()],
        ineq_duals: vec![f64::NAN; inst.inequalities.len()],
        block_duals: inst
            .blocks
            .iter()
            .map(|b| Mat::zeros(b.size, b.size))
            .collect(),
        gap: f64::NAN,
        primal_residual: f64::NAN,
        dual_residual: f64::NAN,
        iterations: 0,
    }
}
