//! Sweeps described by an [`ExperimentConfig`], rendered as CSV.

use std::fmt::Write as _;
use std::time::Instant;

use dirate::devices::{
    apply_detection_efficiency, chsh_value, mark_no_click, optimize_qkd_strategy, qkd_strategy,
    strategy_distribution, Distribution,
};
use dirate::entropy::{
    devetak_winter_rate, entropy_bound, node_instance, optimize_preprocessing, BoundOptions,
    EntropyTarget, RateResult, Relaxation, TargetKind,
};
use dirate::quadrature::gauss_radau;
use dirate::scenario::Scenario;
use dirate::sdp::{SolveStatus, SolverOptions};
use dirate::tradeoff::{from_rate, MinTradeoff};
use dirate::{Error, Result};
use rayon::prelude::*;

use crate::config::{
    ConstraintBlock, ExperimentConfig, Preprocessing, StrategyChoice, SweepVariable,
};

/// Scenario of one sweep point plus what the rate needs besides it.
pub struct Point {
    pub scenario: Scenario,
    /// Key-round statistics with Bob's no-click outcome kept apart.
    pub key: Option<Distribution>,
    /// Parameters chosen by the strategy search.
    pub params: Option<Vec<f64>>,
}

pub fn point(cfg: &ExperimentConfig, value: Option<f64>) -> Result<Point> {
    let variable = cfg.sweep.as_ref().map(|s| s.variable);
    match &cfg.constraint {
        ConstraintBlock::Bell {
            bound, relation, ..
        } => {
            let expr = cfg.bell_expression().expect("bell constraint");
            let v = match (variable, value) {
                (Some(SweepVariable::ChshScore), Some(w)) => chsh_value(w),
                (Some(SweepVariable::BellValue), Some(v)) => v,
                _ => *bound,
            };
            let scenario = Scenario::bell(expr, v)?.with_relation((*relation).into());
            Ok(Point {
                scenario,
                key: None,
                params: None,
            })
        }
        ConstraintBlock::FullDistribution { strategy, eta } => {
            let eta = match (variable, value) {
                (Some(SweepVariable::Eta), Some(e)) => e,
                _ => *eta,
            };
            let (strategy, params) = match strategy {
                StrategyChoice::Explicit(spec) => (spec.build()?, None),
                StrategyChoice::Optimize(_) => {
                    let (params, _) = optimize_qkd_strategy(eta)?;
                    (qkd_strategy(&params)?, Some(params))
                }
            };
            let p = apply_detection_efficiency(&strategy_distribution(&strategy)?, eta)?;
            let kept: Vec<usize> = cfg.scenario.outcomes.iter().map(Vec::len).collect();
            let scenario = Scenario::full_distribution(&p, &kept)?;
            let key = match cfg.target.key_input {
                Some(y) => Some(mark_no_click(&p, 1, y)?),
                None => None,
            };
            Ok(Point {
                scenario,
                key,
                params,
            })
        }
    }
}

pub fn target(cfg: &ExperimentConfig) -> EntropyTarget {
    let t = &cfg.target;
    let base = match t.kind {
        TargetKind::Local => EntropyTarget::local(t.x),
        TargetKind::Global => EntropyTarget::global(t.x, t.y),
        TargetKind::Averaged => EntropyTarget::averaged(t.px.clone()),
    };
    match t.preprocessing {
        Preprocessing::Fixed(q) => base.with_preprocessing(q),
        Preprocessing::Optimize(_) => base,
    }
}

pub fn relaxation(cfg: &ExperimentConfig) -> Relaxation {
    let r = &cfg.relaxation;
    let extras: Vec<&str> = r.extras.iter().map(String::as_str).collect();
    let mut out = Relaxation::new(r.level, &extras);
    out.norm_bounds = r.norm_bounds;
    out
}

pub fn options(cfg: &ExperimentConfig, node_workers: usize, verbose: bool) -> BoundOptions {
    let mut solver = SolverOptions::with_tol(cfg.solver.tol);
    solver.max_iterations = cfg.solver.max_iterations;
    solver.verbose = verbose;
    BoundOptions {
        solver,
        workers: node_workers,
    }
}

/// Builds one node relaxation so that a basis too small for the objective
/// or constraints is reported as a config problem before any solve.
pub fn preflight(cfg: &ExperimentConfig) -> Result<()> {
    let m = cfg.quadrature.m.values().into_iter().max().unwrap_or(1);
    if m < 2 {
        return Ok(());
    }
    let p = point(cfg, cfg.points()[0])?;
    let rule = gauss_radau::<f64>(m)?;
    match node_instance(&p.scenario, &target(cfg), &rule, 0, &relaxation(cfg)) {
        Err(Error::BasisTooSmall { word }) => Err(Error::Config {
            path: "relaxation".into(),
            message: format!(
                "the moment basis cannot represent `{word}`; raise the level or add extras"
            ),
        }),
        other => other.map(|_| ()),
    }
}

/// Outcome of one sweep point at one quadrature size.
pub struct Row {
    pub value: Option<f64>,
    pub result: Result<Computed>,
    pub seconds: f64,
}

pub struct Computed {
    pub entropy: RateResult,
    pub q: f64,
    /// `H(A|B)` and the key rate, when the config asks for one.
    pub key: Option<(f64, Option<f64>)>,
    pub params: Option<Vec<f64>>,
}

impl Row {
    pub fn ok(&self) -> bool {
        matches!(&self.result, Ok(c) if c.entropy.bound.is_some())
    }
}

fn compute(
    cfg: &ExperimentConfig,
    value: Option<f64>,
    m: usize,
    opts: &BoundOptions,
) -> Result<Computed> {
    let p = point(cfg, value)?;
    let target = target(cfg);
    let rel = relaxation(cfg);
    match (&p.key, cfg.target.key_input) {
        (Some(key), Some(y)) => {
            let r = match cfg.target.preprocessing {
                Preprocessing::Optimize(_) => {
                    optimize_preprocessing(&p.scenario, &target, key, y, m, &rel, opts)?
                }
                Preprocessing::Fixed(_) => {
                    devetak_winter_rate(&p.scenario, &target, key, y, m, &rel, opts)?
                }
            };
            Ok(Computed {
                q: r.q,
                key: Some((r.h_ab, r.rate)),
                entropy: r.entropy,
                params: p.params,
            })
        }
        _ => Ok(Computed {
            entropy: entropy_bound(&p.scenario, &target, m, &rel, opts)?,
            q: target.q,
            key: None,
            params: p.params,
        }),
    }
}

/// Runs every sweep point at quadrature size `m`, `workers` points at a
/// time; rows come back in sweep order.
pub fn sweep(cfg: &ExperimentConfig, m: usize, workers: usize, verbose: bool) -> Result<Vec<Row>> {
    let points = cfg.points();
    let (point_workers, node_workers) = if points.len() > 1 {
        (workers, 1)
    } else {
        (1, workers)
    };
    let opts = options(cfg, node_workers, false);
    let run = |value: &Option<f64>| {
        let start = Instant::now();
        let result = compute(cfg, *value, m, &opts);
        let seconds = start.elapsed().as_secs_f64();
        if verbose {
            let what = match &result {
                Ok(c) => format!(
                    "bound {}",
                    c.entropy.bound.map_or("none".into(), |b| format!("{b:.6}"))
                ),
                Err(e) => e.to_string(),
            };
            eprintln!(
                "m={m} point {}: {what} ({seconds:.1}s)",
                value.map_or("-".into(), |v| v.to_string())
            );
        }
        Row {
            value: *value,
            result,
            seconds,
        }
    };
    if point_workers == 1 {
        return Ok(points.iter().map(run).collect());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(point_workers)
        .build()
        .map_err(|e| Error::InvalidArgument(format!("worker pool: {e}")))?;
    Ok(pool.install(|| points.par_iter().map(run).collect()))
}

fn num(x: f64) -> String {
    if x.is_finite() {
        x.to_string()
    } else {
        String::new()
    }
}

pub fn status_name(s: SolveStatus) -> &'static str {
    match s {
        SolveStatus::Optimal => "optimal",
        SolveStatus::NearOptimal => "near_optimal",
        SolveStatus::Infeasible => "infeasible",
        SolveStatus::NumericalFailure => "numerical_failure",
    }
}

fn error_name(e: &Error) -> &'static str {
    match e {
        Error::Infeasible(_) => "infeasible",
        Error::NumericalFailure(_) => "numerical_failure",
        _ => "error",
    }
}

/// CSV with a provenance header and a single timing line; every other
/// line depends only on the config.
pub fn render_csv(cfg: &ExperimentConfig, hash: &str, m: usize, rows: &[Row]) -> String {
    let nodes = m.saturating_sub(1);
    let variable = cfg.sweep.as_ref().map_or("point", |s| s.variable.name());
    let mut out = String::new();
    let _ = writeln!(
        out,
        "# dirate rate config_sha256={hash} m={m} level={}",
        cfg.relaxation.describe()
    );
    let total: f64 = rows.iter().map(|r| r.seconds).sum();
    let times: Vec<String> = rows.iter().map(|r| format!("{:.3}", r.seconds)).collect();
    let _ = writeln!(
        out,
        "# timing total_seconds={total:.3} row_seconds={}",
        times.join(";")
    );
    let mut header = vec![variable.to_string(), "bound".into(), "c_m".into()];
    header.extend((1..=nodes).map(|i| format!("s_{i}")));
    header.extend((1..=nodes).map(|i| format!("status_{i}")));
    header.extend(["max_gap", "q", "h_ab", "key_rate", "strategy"].map(String::from));
    let _ = writeln!(out, "{}", header.join(","));
    for row in rows {
        let mut cells = vec![row.value.map_or(String::new(), num)];
        match &row.result {
            Ok(c) => {
                let e = &c.entropy;
                cells.push(e.bound.map_or(String::new(), num));
                cells.push(num(e.c_m));
                cells.extend(e.nodes.iter().map(|n| num(n.value)));
                cells.extend(e.nodes.iter().map(|n| status_name(n.status).to_string()));
                cells.push(num(e.max_gap()));
                cells.push(num(c.q));
                match c.key {
                    Some((h, rate)) => {
                        cells.push(num(h));
                        cells.push(rate.map_or(String::new(), num));
                    }
                    None => cells.extend([String::new(), String::new()]),
                }
                cells.push(c.params.as_ref().map_or(String::new(), |p| {
                    p.iter()
                        .map(|v| v.to_string())
                        .collect::<Vec<_>>()
                        .join(";")
                }));
            }
            Err(err) => {
                cells.extend([String::new(), String::new()]);
                cells.extend((0..nodes).map(|_| String::new()));
                cells.extend((0..nodes).map(|_| error_name(err).to_string()));
                cells.extend((0..5).map(|_| String::new()));
            }
        }
        let _ = writeln!(out, "{}", cells.join(","));
    }
    out
}

/// Min-tradeoff function of the config's entropy bound at `anchor`
/// (statistics in the scenario's order; the configured point if `None`).
pub fn tradeoff(
    cfg: &ExperimentConfig,
    anchor: Option<&[f64]>,
    workers: usize,
) -> Result<MinTradeoff> {
    let ms = cfg.quadrature.m.values();
    if ms.len() != 1 {
        return Err(Error::Config {
            path: "quadrature.m".into(),
            message: "a tradeoff function needs a single quadrature size".into(),
        });
    }
    let base = point(cfg, None)?.scenario;
    let scenario = match anchor {
        Some(values) => base.with_values(values).map_err(|e| Error::Config {
            path: "--anchor".into(),
            message: e.to_string(),
        })?,
        None => base,
    };
    let r = entropy_bound(
        &scenario,
        &target(cfg),
        ms[0],
        &relaxation(cfg),
        &options(cfg, workers, false),
    )?;
    from_rate(&r)
}
