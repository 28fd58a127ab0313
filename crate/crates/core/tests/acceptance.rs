//! Acceptance suite: one line per criterion, nonzero exit if any fails.
//!
//! Runs without the libtest harness so that the lines come out in order and
//! unbuffered. Expect a few minutes in total; the relaxations at the
//! reference levels dominate.

mod common;

use std::f64::consts::SQRT_2;
use std::time::Instant;

use dirate::devices::{
    analytic_chsh_rate, apply_detection_efficiency, mark_no_click, optimize_qkd_strategy,
    qkd_strategy, strategy_distribution, BellExpression, QubitStrategy,
};
use dirate::entropy::{
    devetak_winter_rate, entropy_bound, optimize_preprocessing, BoundOptions, EntropyTarget,
    RateResult, Relaxation,
};
use dirate::quadrature::{gauss_radau, rational_log_lower};
use dirate::relax::Sense;
use dirate::scenario::Scenario;
use dirate::sdp::{solve, SolveStatus};
use dirate::tradeoff::from_rate;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

const TOL: f64 = 1e-8;
const TOP: f64 = (2.0 + SQRT_2) / 4.0;

fn bound(
    sc: &Scenario,
    target: &EntropyTarget,
    m: usize,
    spec: &str,
) -> Result<RateResult, String> {
    let rel = Relaxation::parse(spec).map_err(|e| e.to_string())?;
    entropy_bound(sc, target, m, &rel, &BoundOptions::default()).map_err(|e| e.to_string())
}

fn value(r: &RateResult) -> Result<f64, String> {
    r.bound
        .ok_or_else(|| "a node relaxation did not solve".to_string())
}

fn within_time(detail: String, seconds: f64, limit: f64) -> Outcome {
    if seconds <= limit {
        Ok(detail)
    } else {
        Err(format!(
            "{detail}; runtime {seconds:.1} s over the {limit} s limit"
        ))
    }
}

fn quadrature_exactness() -> Outcome {
    let start = Instant::now();
    let (mut moment, mut endpoint) = (0f64, 0f64);
    for m in 1..=12 {
        let rule = gauss_radau::<f64>(m).map_err(|e| e.to_string())?;
        for k in 0..=(2 * m - 2) {
            let got = rule.integrate(|t| t.powi(k as i32));
            moment = moment.max((got - 1.0 / (k as f64 + 1.0)).abs());
        }
        endpoint = endpoint.max((rule.weights()[m - 1] - 1.0 / (m * m) as f64).abs());
    }
    let detail = format!("max moment error {moment:.1e}, endpoint weight error {endpoint:.1e}");
    if moment > 1e-10 || endpoint > 1e-12 {
        return Err(detail);
    }
    within_time(detail, start.elapsed().as_secs_f64(), 1.0)
}

fn rational_bounds() -> Outcome {
    let start = Instant::now();
    let rules: Vec<_> = (1..=12).map(|m| gauss_radau::<f64>(m).unwrap()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut violations = 0;
    for _ in 0..1000 {
        let x: f64 = rng.gen_range(-9.0f64..9.0).exp();
        let r: Vec<f64> = rules
            .iter()
            .map(|q| rational_log_lower(q, x).unwrap())
            .collect();
        let slack = 1e-12 * (1.0 + x.ln().abs());
        for m in 0..r.len() - 1 {
            if r[0] > r[m] + slack || r[m] > r[m + 1] + slack || r[m + 1] > x.ln() + slack {
                violations += 1;
            }
        }
    }
    let detail = format!("{violations} violations over 1000 samples, m = 1..12");
    if violations > 0 {
        return Err(detail);
    }
    within_time(detail, start.elapsed().as_secs_f64(), 1.0)
}

/// Local bounds on the CHSH grid at m = 2, 4, 8 with the reference level,
/// and the same at level 3 for the monotonicity check.
struct ChshSweep {
    grid: Vec<f64>,
    bounds: [Vec<f64>; 3],
    tight: [Vec<f64>; 3],
    seconds_m8: Vec<f64>,
}

fn chsh_sweep() -> Result<ChshSweep, String> {
    let grid: Vec<f64> = (0..9)
        .map(|k| 0.76 + (0.853 - 0.76) * k as f64 / 8.0)
        .collect();
    let mut bounds = [Vec::new(), Vec::new(), Vec::new()];
    let mut tight = [Vec::new(), Vec::new(), Vec::new()];
    let mut seconds_m8 = Vec::new();
    for &w in &grid {
        let sc = Scenario::chsh_score(w).map_err(|e| e.to_string())?;
        for (k, m) in [2, 4, 8].into_iter().enumerate() {
            let start = Instant::now();
            let r = bound(&sc, &EntropyTarget::local(0), m, "2+ABZ+AZZ")?;
            bounds[k].push(value(&r)?);
            if m == 8 {
                seconds_m8.push(start.elapsed().as_secs_f64());
            }
            tight[k].push(value(&bound(&sc, &EntropyTarget::local(0), m, "3")?)?);
        }
    }
    Ok(ChshSweep {
        grid,
        bounds,
        tight,
        seconds_m8,
    })
}

fn chsh_local_recovery(s: &ChshSweep) -> Outcome {
    let (mut below, mut above) = (0f64, f64::NEG_INFINITY);
    for (&w, &b) in s.grid.iter().zip(&s.bounds[2]) {
        let analytic = analytic_chsh_rate(w).map_err(|e| e.to_string())?;
        below = below.max(analytic - b);
        above = above.max(b - analytic);
    }
    let worst = s.seconds_m8.iter().cloned().fold(0.0, f64::max);
    let detail = format!("max shortfall {below:.2e} bits, max excess {above:.2e}");
    if below > 0.02 || above > 1e-4 {
        return Err(detail);
    }
    within_time(format!("{detail}; slowest point {worst:.1} s"), worst, 10.0)
}

fn largest_decrease(bounds: &[Vec<f64>; 3]) -> f64 {
    (0..bounds[0].len())
        .map(|k| (bounds[0][k] - bounds[1][k]).max(bounds[1][k] - bounds[2][k]))
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Monotonicity in m holds for the exact node problems. At 2+ABZ+AZZ the
/// relaxation gap varies with the node and can reverse it by about 1e-4, so
/// the check runs at level 3 and the reference level is only reported.
fn quadrature_monotonicity(s: &ChshSweep) -> Outcome {
    let worst = largest_decrease(&s.tight);
    let detail = format!(
        "largest decrease with m {worst:.2e} at level 3 over {} points \
         ({:.2e} at 2+ABZ+AZZ)",
        s.grid.len(),
        largest_decrease(&s.bounds)
    );
    if worst <= 2.0 * TOL {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn global_dominates() -> Outcome {
    let mut worst = f64::INFINITY;
    let mut peak = 0.0;
    for w in [0.76, 0.78, 0.80, 0.82, TOP] {
        let sc = Scenario::chsh_score(w).map_err(|e| e.to_string())?;
        let b = value(&bound(&sc, &EntropyTarget::global(0, 0), 8, "2+ABZ+AZZ")?)?;
        worst = worst.min(b - analytic_chsh_rate(w).map_err(|e| e.to_string())?);
        if w == TOP {
            peak = b;
        }
    }
    let detail = format!(
        "min margin over the local rate {worst:.2e}, global bound at the maximum {peak:.4}"
    );
    if worst >= -1e-3 && peak >= 1.1 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn detection_model() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let (mut identity, mut delta, mut consistency) = (0f64, 0f64, 0f64);
    for _ in 0..100 {
        let angles = (0..2)
            .map(|_| (0..2).map(|_| rng.gen_range(-3.2..3.2)).collect())
            .collect();
        let s = QubitStrategy::partially_entangled(rng.gen_range(0.0..1.6), angles)
            .and_then(|s| s.with_visibility(rng.gen_range(0.5..=1.0)))
            .map_err(|e| e.to_string())?;
        let p = strategy_distribution(&s).map_err(|e| e.to_string())?;
        let one = apply_detection_efficiency(&p, 1.0).map_err(|e| e.to_string())?;
        identity = identity.max(one.max_abs_diff(&p).unwrap_or(f64::INFINITY));
        let zero = apply_detection_efficiency(&p, 0.0).map_err(|e| e.to_string())?;
        for x in p.input_tuples() {
            for a in p.outcome_tuples(x) {
                let want = if a.iter().all(|&v| v == 0) { 1.0 } else { 0.0 };
                delta = delta.max((zero.prob(x, &a).unwrap() - want).abs());
            }
        }
        let lossy =
            apply_detection_efficiency(&p, rng.gen_range(0.0..=1.0)).map_err(|e| e.to_string())?;
        let (norm, signal) = lossy.consistency();
        consistency = consistency.max(norm).max(signal);
    }
    let detail = format!(
        "eta = 1 deviation {identity:.1e}, eta = 0 deviation {delta:.1e}, \
         normalization/no-signaling {consistency:.1e} over 100 draws"
    );
    if identity != 0.0 || delta != 0.0 || consistency > 1e-12 {
        return Err(detail);
    }
    within_time(detail, start.elapsed().as_secs_f64(), 1.0)
}

fn qkd_endpoint() -> Outcome {
    let start = Instant::now();
    let s = QubitStrategy::chsh_optimal()
        .with_input(1, 0.0)
        .map_err(|e| e.to_string())?;
    let p = strategy_distribution(&s).map_err(|e| e.to_string())?;
    let p = apply_detection_efficiency(&p, 1.0).map_err(|e| e.to_string())?;
    let key = mark_no_click(&p, 1, 2).map_err(|e| e.to_string())?;
    let sc = Scenario::full_distribution(&p, &[2, 2]).map_err(|e| e.to_string())?;
    let rel = Relaxation::parse("2+ABZ+AZZ").unwrap();
    let r = devetak_winter_rate(
        &sc,
        &EntropyTarget::local(0),
        &key,
        2,
        8,
        &rel,
        &BoundOptions::default(),
    )
    .map_err(|e| e.to_string())?;
    let rate = r.rate.ok_or("a node relaxation did not solve")?;
    let detail = format!("rate {rate:.5} bits (H(A|B) = {:.1e})", r.h_ab);
    if rate < 0.95 {
        return Err(detail);
    }
    within_time(detail, start.elapsed().as_secs_f64(), 60.0)
}

fn holz_endpoints() -> Outcome {
    let start = Instant::now();
    let at = |v: f64| -> Result<f64, String> {
        let sc = Scenario::bell(BellExpression::Holz, v).map_err(|e| e.to_string())?;
        value(&bound(&sc, &EntropyTarget::local(0), 8, "2+ABC")?)
    };
    let (classical, quantum) = (at(1.0)?, at(1.5)?);
    let detail = format!("bound {classical:.2e} at 1.0, {quantum:.5} at 1.5");
    if classical > 0.01 || quantum < 0.95 {
        return Err(detail);
    }
    within_time(detail, start.elapsed().as_secs_f64(), 120.0)
}

fn tradeoff_certificate() -> Outcome {
    let start = Instant::now();
    let spec = "2+ABZ+AZZ";
    let anchor = bound(
        &Scenario::chsh_score(0.85).unwrap(),
        &EntropyTarget::local(0),
        8,
        spec,
    )?;
    let f = from_rate(&anchor).map_err(|e| e.to_string())?;
    let tangency = (f.anchor_value - value(&anchor)?).abs();
    let mut worst = f64::NEG_INFINITY;
    for k in 0..10 {
        let w = 0.76 + (TOP - 0.76) * k as f64 / 9.0;
        let sc = Scenario::chsh_score(w).unwrap();
        let g = f
            .evaluate(&sc.statistic_values().unwrap())
            .map_err(|e| e.to_string())?;
        worst = worst.max(g - value(&bound(&sc, &EntropyTarget::local(0), 8, spec)?)?);
    }
    let detail = format!(
        "max excess over the bound {worst:.2e} on 10 points, anchor mismatch {tangency:.1e} \
         (reported gap {:.1e}); level {spec}",
        f.gap
    );
    if worst > 1e-6 || tangency > f.gap.max(1e-12) {
        return Err(detail);
    }
    within_time(detail, start.elapsed().as_secs_f64(), 60.0)
}

fn solver_oracle() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let (mut err, mut duality) = (0f64, f64::NEG_INFINITY);
    for _ in 0..100 {
        let case = common::RandomSdp::generate(&mut rng);
        let want = case.brute_force();
        let sol = solve(&case.instance, TOL);
        if sol.status != SolveStatus::Optimal {
            return Err(format!("solver returned {:?}", sol.status));
        }
        err = err.max((sol.primal - want).abs());
        duality = duality.max(match case.instance.sense {
            Sense::Minimize => sol.dual - want,
            Sense::Maximize => want - sol.dual,
        });
    }
    let detail =
        format!("max error {err:.1e} against brute force, max weak-duality excess {duality:.1e}");
    if err > 1e-5 || duality > 1e-8 {
        return Err(detail);
    }
    within_time(detail, start.elapsed().as_secs_f64(), 30.0)
}

fn lossy_key_rate() -> Outcome {
    let (params, _) = optimize_qkd_strategy(0.95).map_err(|e| e.to_string())?;
    let s = qkd_strategy(&params).map_err(|e| e.to_string())?;
    let p = apply_detection_efficiency(&strategy_distribution(&s).unwrap(), 0.95)
        .map_err(|e| e.to_string())?;
    let key = mark_no_click(&p, 1, 2).map_err(|e| e.to_string())?;
    let sc = Scenario::full_distribution(&p, &[2, 2]).map_err(|e| e.to_string())?;
    let rel = Relaxation::parse("2+ABZ").unwrap();
    let r = optimize_preprocessing(
        &sc,
        &EntropyTarget::local(0),
        &key,
        2,
        8,
        &rel,
        &BoundOptions::default(),
    )
    .map_err(|e| e.to_string())?;
    let rate = r.rate.ok_or("a node relaxation did not solve")?;
    let detail = format!(
        "rate {rate:.5} bits at eta = 0.95 with flip probability {:.3}",
        r.q
    );
    if rate > 0.0 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn main() {
    let mut failed = 0;
    let mut report = |id: &str, name: &str, run: &mut dyn FnMut() -> Outcome| {
        let start = Instant::now();
        let outcome = run();
        let secs = start.elapsed().as_secs_f64();
        let (tag, detail) = match outcome {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failed += 1;
                ("FAIL", d)
            }
        };
        println!("[{tag}] {id:>2} {name}: {detail} [{secs:.1} s]");
    };

    report("1", "quadrature exactness", &mut quadrature_exactness);
    report("2", "rational log bounds", &mut rational_bounds);
    let start = Instant::now();
    let sweep = chsh_sweep();
    let sweep_secs = start.elapsed().as_secs_f64();
    match &sweep {
        Ok(s) => {
            report("3", "CHSH local recovery at m = 8", &mut || {
                chsh_local_recovery(s)
            });
            report("4", "monotone in quadrature size", &mut || {
                quadrature_monotonicity(s)
            });
        }
        Err(e) => {
            report("3", "CHSH local recovery at m = 8", &mut || Err(e.clone()));
            report("4", "monotone in quadrature size", &mut || Err(e.clone()));
        }
    }
    println!("     (CHSH sweep at m = 2, 4, 8 took {sweep_secs:.1} s)");
    report("5", "global target dominates", &mut global_dominates);
    report("6", "detection-efficiency model", &mut detection_model);
    report("7", "QKD endpoint", &mut qkd_endpoint);
    report("8", "Holz endpoints", &mut holz_endpoints);
    report("9", "min-tradeoff certificate", &mut tradeoff_certificate);
    report("10", "solver against brute force", &mut solver_oracle);
    report("11", "lossy key rate smoke test", &mut lossy_key_rate);

    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
    println!("all criteria passed");
}
