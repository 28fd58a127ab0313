//! Entropy lower bounds assembled from per-node relaxations.

use std::f64::consts::LN_2;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::devices::{conditional_entropy, Distribution};
use crate::error::{invalid, Error, Result};
use crate::ncpoly::{Algebra, NcPolynomial, Party, Symbol};
use crate::quadrature::{gauss_radau, QuadratureRule};
use crate::relax::{build_relaxation, generate_basis, NormBound, Objective, SdpInstance, Sense};
use crate::scenario::Scenario;
use crate::sdp::{solve_with, SdpSolution, SolveStatus, SolverOptions};

/// Whose outcomes the entropy is about.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TargetKind {
    /// `H(A | X = x*, E)`.
    Local,
    /// `H(AB | X = x*, Y = y*, E)`.
    Global,
    /// `H(A | X, E)` with inputs drawn from `p(x)`.
    Averaged,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EntropyTarget {
    pub kind: TargetKind,
    pub x: usize,
    pub y: usize,
    pub px: Vec<f64>,
    /// Probability with which Alice flips her key bit before use.
    pub q: f64,
}

impl EntropyTarget {
    pub fn local(x: usize) -> Self {
        EntropyTarget {
            kind: TargetKind::Local,
            x,
            y: 0,
            px: Vec::new(),
            q: 0.0,
        }
    }

    pub fn global(x: usize, y: usize) -> Self {
        EntropyTarget {
            kind: TargetKind::Global,
            y,
            ..Self::local(x)
        }
    }

    pub fn averaged(px: Vec<f64>) -> Self {
        EntropyTarget {
            kind: TargetKind::Averaged,
            px,
            ..Self::local(0)
        }
    }

    pub fn with_preprocessing(mut self, q: f64) -> Self {
        self.q = q;
        self
    }

    fn validate(&self, alg: &Algebra) -> Result<()> {
        if !(0.0..=0.5).contains(&self.q) {
            return Err(invalid(format!(
                "flip probability {} outside [0, 1/2]",
                self.q
            )));
        }
        let key_outcomes = |party: Party, x: usize| {
            alg.outcomes(party, x).ok_or_else(|| {
                invalid(format!(
                    "key input {x} of party {} is not in the scenario",
                    party.letter()
                ))
            })
        };
        match self.kind {
            TargetKind::Local => {
                key_outcomes(Party::A, self.x)?;
            }
            TargetKind::Global => {
                key_outcomes(Party::A, self.x)?;
                key_outcomes(Party::B, self.y)?;
            }
            TargetKind::Averaged => {
                if self.px.len() != alg.inputs(Party::A) {
                    return Err(invalid(format!(
                        "p(x) has {} entries but Alice has {} inputs",
                        self.px.len(),
                        alg.inputs(Party::A)
                    )));
                }
                if self.px.iter().any(|&p| p < 0.0)
                    || (self.px.iter().sum::<f64>() - 1.0).abs() > 1e-12
                {
                    return Err(invalid("p(x) must be a probability vector"));
                }
            }
        }
        if self.q > 0.0 {
            let xs: Vec<usize> = match self.kind {
                TargetKind::Averaged => (0..alg.inputs(Party::A)).collect(),
                _ => vec![self.x],
            };
            if xs.iter().any(|&x| alg.outcomes(Party::A, x) != Some(2)) {
                return Err(invalid("preprocessing needs binary key outcomes"));
            }
        }
        Ok(())
    }
}

/// Relaxation level, extra monomial patterns and whether to impose the
/// operator-norm bounds on the `Z` operators.
#[derive(Clone, Debug, PartialEq)]
pub struct Relaxation {
    pub level: usize,
    pub extras: Vec<String>,
    pub norm_bounds: bool,
}

impl Relaxation {
    pub fn new(level: usize, extras: &[&str]) -> Self {
        Relaxation {
            level,
            extras: extras.iter().map(|s| s.to_string()).collect(),
            norm_bounds: false,
        }
    }

    /// Parses `"2+ABZ+AZZ"`.
    pub fn parse(spec: &str) -> Result<Self> {
        let (level, extras) = crate::relax::parse_level_spec(spec)?;
        Ok(Relaxation {
            level,
            extras,
            norm_bounds: false,
        })
    }
}

#[derive(Clone, Debug)]
pub struct BoundOptions {
    pub solver: SolverOptions,
    /// Threads for the node fan-out; 0 uses rayon's default.
    pub workers: usize,
}

impl Default for BoundOptions {
    fn default() -> Self {
        BoundOptions {
            solver: SolverOptions::default(),
            workers: 1,
        }
    }
}

/// One interior quadrature node's relaxation and its solution.
#[derive(Clone, Debug)]
pub struct NodeRecord {
    pub index: usize,
    pub t: f64,
    pub w: f64,
    /// `w / (t ln 2)`.
    pub coefficient: f64,
    /// Certified lower bound on the node infimum (the dual objective).
    pub value: f64,
    pub status: SolveStatus,
    pub gap: f64,
    pub seconds: f64,
    pub instance: SdpInstance,
    pub solution: SdpSolution,
}

#[derive(Clone, Debug)]
pub struct RateResult {
    /// `None` when some node did not solve.
    pub bound: Option<f64>,
    pub c_m: f64,
    pub nodes: Vec<NodeRecord>,
    pub seconds: f64,
}

impl RateResult {
    pub fn max_gap(&self) -> f64 {
        self.nodes.iter().map(|n| n.gap).fold(0.0, f64::max)
    }

    pub fn recombine(c_m: f64, coefficients: &[f64], values: &[f64]) -> f64 {
        coefficients
            .iter()
            .zip(values)
            .fold(c_m, |acc, (c, s)| acc + c * s)
    }
}

/// `−1/(m² ln 2) + Σ_i w_i/(t_i ln 2)`.
pub fn cm_constant(rule: &QuadratureRule<f64>) -> f64 {
    let m = rule.m() as f64;
    let sum: f64 = rule.iter().map(|(t, w)| w / t).sum();
    (sum - 1.0 / (m * m)) / LN_2
}

/// Node operators `Z` and the Alice (and Bob) projectors they pair with.
struct Layout {
    labels: usize,
    /// `(weight, Z label, projector factors)`.
    terms: Vec<(f64, usize, Vec<(Party, usize, usize)>)>,
}

fn layout(alg: &Algebra, target: &EntropyTarget) -> Result<Layout> {
    let d = |p: Party, x: usize| alg.outcomes(p, x).unwrap_or(0);
    let mut terms = Vec::new();
    match target.kind {
        TargetKind::Local => {
            for a in 0..d(Party::A, target.x) {
                terms.push((1.0, a, vec![(Party::A, target.x, a)]));
            }
        }
        TargetKind::Global => {
            let db = d(Party::B, target.y);
            for a in 0..d(Party::A, target.x) {
                for b in 0..db {
                    terms.push((
                        1.0,
                        a * db + b,
                        vec![(Party::A, target.x, a), (Party::B, target.y, b)],
                    ));
                }
            }
        }
        TargetKind::Averaged => {
            let mut label = 0;
            for (x, &px) in target.px.iter().enumerate() {
                for a in 0..d(Party::A, x) {
                    if px > 0.0 {
                        terms.push((px, label, vec![(Party::A, x, a)]));
                    }
                    label += 1;
                }
            }
        }
    }
    let labels = terms.iter().map(|t| t.1 + 1).max().unwrap_or(0);
    Ok(Layout { labels, terms })
}

/// Alice's key projector after the flip: `(1−q) M_a + q M_{1−a}`.
fn key_projector(
    alg: &Algebra,
    party: Party,
    x: usize,
    a: usize,
    q: f64,
) -> Result<NcPolynomial<f64>> {
    let m = alg.projector::<f64>(party, x, a)?;
    if q == 0.0 || party != Party::A {
        return Ok(m);
    }
    let other = alg.projector::<f64>(party, x, 1 - a)?;
    m.scale(1.0 - q).try_add(&other.scale(q))
}

/// Node algebra and the polynomial
/// `Σ_a [ M_a (Z_a + Z_a* + (1−t) Z_a* Z_a) + t Z_a Z_a* ]`
/// (with `M_a N_b` and `Z_ab` for the global target, and `p(x)`-weighted
/// `Z_ax` for the averaged one).
pub fn node_objective(
    scenario: &Scenario,
    target: &EntropyTarget,
    rule: &QuadratureRule<f64>,
    node: usize,
) -> Result<(Algebra, NcPolynomial<f64>)> {
    if node + 1 >= rule.m() {
        return Err(invalid(format!(
            "node {node} is not interior for an {}-point rule",
            rule.m()
        )));
    }
    let t = rule.nodes()[node];
    let base = scenario.algebra()?;
    target.validate(&base)?;
    let lay = layout(&base, target)?;
    let alg = base.with_free(lay.labels, node);
    let mut out = NcPolynomial::zero();
    for (weight, label, factors) in &lay.terms {
        let mut m = alg.identity::<f64>();
        for &(p, x, a) in factors {
            m = m.multiply(&key_projector(&alg, p, x, a, target.q)?)?;
        }
        let z = alg.free::<f64>(*label, false)?;
        let zs = alg.free::<f64>(*label, true)?;
        let inner = z.try_add(&zs)?.try_add(&zs.multiply(&z)?.scale(1.0 - t))?;
        let term = m.multiply(&inner)?.try_add(&z.multiply(&zs)?.scale(t))?;
        out = out.try_add(&term.scale(*weight))?;
    }
    Ok((alg, out))
}

/// Relaxation of one node's minimization.
pub fn node_instance(
    scenario: &Scenario,
    target: &EntropyTarget,
    rule: &QuadratureRule<f64>,
    node: usize,
    relaxation: &Relaxation,
) -> Result<SdpInstance> {
    let (alg, poly) = node_objective(scenario, target, rule, node)?;
    let stats = scenario.constraints(&alg)?;
    let basis = generate_basis(&alg, relaxation.level, &relaxation.extras)?;
    let mut bounds = Vec::new();
    if relaxation.norm_bounds {
        let t = rule.nodes()[node];
        let alpha = 1.5 * (1.0 / t).max(1.0 / (1.0 - t));
        for label in 0..alg.free_labels() {
            bounds.push(NormBound {
                symbol: Symbol::free(label, node),
                alpha,
            });
        }
    }
    build_relaxation(
        &Objective {
            polynomial: poly,
            sense: Sense::Minimize,
        },
        &stats,
        &basis,
        &bounds,
    )
}

fn run_pool<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    if workers == 1 {
        return Ok(f());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| invalid(format!("cannot start worker pool: {e}")))?;
    Ok(pool.install(f))
}

/// Lower bound on the targeted entropy in bits:
/// `c_m + Σ_i w_i/(t_i ln 2) · s_i` over the interior nodes.
pub fn entropy_bound(
    scenario: &Scenario,
    target: &EntropyTarget,
    m: usize,
    relaxation: &Relaxation,
    options: &BoundOptions,
) -> Result<RateResult> {
    let start = Instant::now();
    let rule = gauss_radau::<f64>(m)?;
    let c_m = cm_constant(&rule);
    target.validate(&scenario.algebra()?)?;
    let interior: Vec<(usize, f64, f64)> = rule.interior().collect();
    let solve_node = |&(i, t, w): &(usize, f64, f64)| -> Result<NodeRecord> {
        let tic = Instant::now();
        let instance = node_instance(scenario, target, &rule, i, relaxation)?;
        let solution = solve_with(&instance, &options.solver);
        Ok(NodeRecord {
            index: i,
            t,
            w,
            coefficient: w / (t * LN_2),
            value: solution.dual,
            status: solution.status,
            gap: solution.gap,
            seconds: tic.elapsed().as_secs_f64(),
            instance,
            solution,
        })
    };
    let nodes: Vec<NodeRecord> = run_pool(options.workers, || {
        interior
            .par_iter()
            .map(solve_node)
            .collect::<Result<Vec<_>>>()
    })??;
    if let Some(n) = nodes.iter().find(|n| n.status == SolveStatus::Infeasible) {
        return Err(Error::Infeasible(format!(
            "relaxation of node {} (t = {:.6}) has no feasible point",
            n.index, n.t
        )));
    }
    let usable = nodes.iter().all(|n| n.solution.is_usable());
    let bound = usable.then(|| {
        let c: Vec<f64> = nodes.iter().map(|n| n.coefficient).collect();
        let s: Vec<f64> = nodes.iter().map(|n| n.value).collect();
        RateResult::recombine(c_m, &c, &s)
    });
    Ok(RateResult {
        bound,
        c_m,
        nodes,
        seconds: start.elapsed().as_secs_f64(),
    })
}

/// Entropy bound, error correction cost and their difference.
#[derive(Clone, Debug)]
pub struct KeyRate {
    pub entropy: RateResult,
    pub h_ab: f64,
    pub q: f64,
    pub rate: Option<f64>,
}

/// `H(A|X=x*, E) − H(A|B, X=x*, Y=y*)` with the second term read from the
/// key-round statistics `key` (which may include Bob's no-click outcome).
pub fn devetak_winter_rate(
    scenario: &Scenario,
    target: &EntropyTarget,
    key: &Distribution,
    y_key: usize,
    m: usize,
    relaxation: &Relaxation,
    options: &BoundOptions,
) -> Result<KeyRate> {
    if target.kind != TargetKind::Local {
        return Err(invalid("key rates use the local entropy target"));
    }
    let entropy = entropy_bound(scenario, target, m, relaxation, options)?;
    let h_ab = conditional_entropy(key, target.x, y_key, target.q)?;
    Ok(KeyRate {
        rate: entropy.bound.map(|b| b - h_ab),
        entropy,
        h_ab,
        q: target.q,
    })
}

/// Golden-section search for the flip probability in `[0, 0.45]` that
/// maximizes the key rate, to resolution `1e-3`.
pub fn optimize_preprocessing(
    scenario: &Scenario,
    target: &EntropyTarget,
    key: &Distribution,
    y_key: usize,
    m: usize,
    relaxation: &Relaxation,
    options: &BoundOptions,
) -> Result<KeyRate> {
    let eval = |q: f64| {
        devetak_winter_rate(
            scenario,
            &target.clone().with_preprocessing(q),
            key,
            y_key,
            m,
            relaxation,
            options,
        )
    };
    let score = |r: &KeyRate| r.rate.unwrap_or(f64::NEG_INFINITY);
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut lo, mut hi) = (0.0, 0.45);
    let mut c = eval(hi - phi * (hi - lo))?;
    let mut d = eval(lo + phi * (hi - lo))?;
    while hi - lo > 1e-3 {
        if score(&c) >= score(&d) {
            hi = d.q;
            d = c;
            c = eval(hi - phi * (hi - lo))?;
        } else {
            lo = c.q;
            c = d;
            d = eval(lo + phi * (hi - lo))?;
        }
    }
    let best = if score(&c) >= score(&d) { c } else { d };
    let zero = eval(0.0)?;
    Ok(if score(&zero) >= score(&best) {
        zero
    } else {
        best
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ncpoly::Word;

    fn rule(m: usize) -> QuadratureRule<f64> {
        gauss_radau(m).unwrap()
    }

    #[test]
    fn cm_values() {
        assert!(cm_constant(&rule(1)).abs() < 1e-15);
        assert!((cm_constant(&rule(2)) - 2.25 / LN_2).abs() < 1e-12);
        for m in 1..=64 {
            assert!(cm_constant(&rule(m)) >= -1e-12);
        }
    }

    #[test]
    fn local_objective_word_families() {
        let s = Scenario::chsh_score(0.8).unwrap();
        let (_, p) = node_objective(&s, &EntropyTarget::local(0), &rule(2), 0).unwrap();
        // A0|0 is the explicit projector, A1|0 = I − A0|0 expands, so the
        // Z_a Z_a* and Z_a* Z_a appear also without a projector.
        let words: Vec<String> = p.words().map(Word::to_string).collect();
        for w in [
            "A0|0 Z0",
            "A0|0 Z0*",
            "A0|0 Z0* Z0",
            "Z0 Z0*",
            "Z1 Z1*",
            "Z1",
            "Z1*",
            "Z1* Z1",
        ] {
            assert!(words.iter().any(|x| x == w), "missing {w} in {words:?}");
        }
        assert!(p.is_hermitian());
    }

    #[test]
    fn preprocessing_zero_is_identity_and_endpoint_rejected() {
        let s = Scenario::chsh_score(0.8).unwrap();
        let t = EntropyTarget::local(0);
        let a = node_objective(&s, &t, &rule(3), 1).unwrap().1;
        let b = node_objective(&s, &t.clone().with_preprocessing(0.0), &rule(3), 1)
            .unwrap()
            .1;
        assert_eq!(a, b);
        assert!(node_objective(&s, &t, &rule(3), 2).is_err());
        assert!(node_objective(&s, &t.with_preprocessing(0.6), &rule(3), 0).is_err());
    }

    #[test]
    fn single_node_rule_gives_zero() {
        let s = Scenario::chsh_score(0.8).unwrap();
        let r = entropy_bound(
            &s,
            &EntropyTarget::local(0),
            1,
            &Relaxation::new(1, &[]),
            &BoundOptions::default(),
        )
        .unwrap();
        assert_eq!(r.bound, Some(0.0));
        assert!(r.nodes.is_empty());
    }
}
