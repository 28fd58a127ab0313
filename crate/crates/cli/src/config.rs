//! Experiment configuration files (JSON, `"schema": 1`).

use std::path::{Path, PathBuf};

use dirate::devices::{BellExpression, StrategySpec};
use dirate::entropy::TargetKind;
use dirate::relax::Relation;
use dirate::{Error, Result};
use serde::Deserialize;
use sha2::{Digest, Sha256};

pub const SCHEMA: u32 = 1;

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema: u32,
    pub scenario: ScenarioBlock,
    pub constraint: ConstraintBlock,
    pub target: TargetBlock,
    pub quadrature: QuadratureBlock,
    pub relaxation: RelaxationBlock,
    #[serde(default)]
    pub solver: SolverBlock,
    #[serde(default)]
    pub sweep: Option<SweepBlock>,
    /// Output path; `--out` takes precedence.
    #[serde(default)]
    pub output: Option<PathBuf>,
}

/// Measurement arities, `outcomes[party][input]`, of the inputs the
/// relaxation constrains.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioBlock {
    pub parties: usize,
    pub outcomes: Vec<Vec<usize>>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ConstraintBlock {
    Bell {
        expression: ExpressionName,
        #[serde(default)]
        alpha: Option<f64>,
        /// Value of the Bell expression the devices achieve.
        bound: f64,
        #[serde(default)]
        relation: RelationName,
    },
    FullDistribution {
        strategy: StrategyChoice,
        #[serde(default = "one")]
        eta: f64,
    },
}

fn one() -> f64 {
    1.0
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExpressionName {
    Chsh,
    AsymChsh,
    Holz,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RelationName {
    #[default]
    Equal,
    AtLeast,
}

impl From<RelationName> for Relation {
    fn from(r: RelationName) -> Relation {
        match r {
            RelationName::Equal => Relation::Equal,
            RelationName::AtLeast => Relation::AtLeast,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Keyword {
    Optimize,
}

/// An explicit qubit strategy, or `"optimize"` for the QKD angle search.
#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
pub enum StrategyChoice {
    Optimize(Keyword),
    Explicit(StrategySpec),
}

/// Flip probability, or `"optimize"` to search it.
#[derive(Clone, Copy, Debug, Deserialize)]
#[serde(untagged)]
pub enum Preprocessing {
    Fixed(f64),
    Optimize(Keyword),
}

impl Default for Preprocessing {
    fn default() -> Self {
        Preprocessing::Fixed(0.0)
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetBlock {
    pub kind: TargetKind,
    #[serde(default)]
    pub x: usize,
    #[serde(default)]
    pub y: usize,
    /// Input distribution of the averaged target.
    #[serde(default)]
    pub px: Vec<f64>,
    #[serde(default)]
    pub preprocessing: Preprocessing,
    /// Bob's key input; when set the rows carry the Devetak-Winter rate.
    #[serde(default)]
    pub key_input: Option<usize>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadratureBlock {
    pub m: OneOrMany,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
pub enum OneOrMany {
    One(usize),
    Many(Vec<usize>),
}

impl OneOrMany {
    pub fn values(&self) -> Vec<usize> {
        match self {
            OneOrMany::One(m) => vec![*m],
            OneOrMany::Many(v) => v.clone(),
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RelaxationBlock {
    pub level: usize,
    #[serde(default)]
    pub extras: Vec<String>,
    #[serde(default)]
    pub norm_bounds: bool,
}

impl RelaxationBlock {
    /// `"2+ABZ+AZZ"` form.
    pub fn describe(&self) -> String {
        std::iter::once(self.level.to_string())
            .chain(self.extras.iter().cloned())
            .collect::<Vec<_>>()
            .join("+")
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverBlock {
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_iterations")]
    pub max_iterations: usize,
    #[serde(default = "default_workers")]
    pub workers: usize,
}

fn default_tol() -> f64 {
    1e-8
}

fn default_iterations() -> usize {
    200
}

fn default_workers() -> usize {
    1
}

impl Default for SolverBlock {
    fn default() -> Self {
        SolverBlock {
            tol: default_tol(),
            max_iterations: default_iterations(),
            workers: default_workers(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepVariable {
    /// CHSH winning probability; sets the Bell value to `8ω − 4`.
    ChshScore,
    BellValue,
    Eta,
}

impl SweepVariable {
    pub fn name(self) -> &'static str {
        match self {
            SweepVariable::ChshScore => "chsh_score",
            SweepVariable::BellValue => "bell_value",
            SweepVariable::Eta => "eta",
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepBlock {
    pub variable: SweepVariable,
    #[serde(default)]
    pub grid: Vec<f64>,
    /// `[start, stop, points]`, endpoints included.
    #[serde(default)]
    pub linspace: Option<(f64, f64, usize)>,
}

impl SweepBlock {
    pub fn values(&self) -> Vec<f64> {
        match self.linspace {
            Some((a, b, n)) if n > 1 => (0..n)
                .map(|k| a + (b - a) * k as f64 / (n - 1) as f64)
                .collect(),
            Some((a, _, _)) => vec![a],
            None => self.grid.clone(),
        }
    }
}

fn fail(path: &str, message: impl Into<String>) -> Error {
    Error::Config {
        path: path.into(),
        message: message.into(),
    }
}

/// Parses and validates a config; returns it with the SHA-256 of its bytes.
pub fn parse(text: &str) -> Result<(ExperimentConfig, String)> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let cfg: ExperimentConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        fail(
            if path.is_empty() { "." } else { &path },
            e.into_inner().to_string(),
        )
    })?;
    cfg.validate()?;
    let hash = Sha256::digest(text.as_bytes())
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect();
    Ok((cfg, hash))
}

pub fn load(path: &Path) -> Result<(ExperimentConfig, String)> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| fail(".", format!("cannot read {}: {e}", path.display())))?;
    parse(&text)
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.schema != SCHEMA {
            return Err(fail(
                "schema",
                format!("unsupported schema {}, expected {SCHEMA}", self.schema),
            ));
        }
        let sc = &self.scenario;
        if sc.parties == 0 || sc.parties > 3 {
            return Err(fail(
                "scenario.parties",
                "between 1 and 3 parties supported",
            ));
        }
        if sc.outcomes.len() != sc.parties {
            return Err(fail(
                "scenario.outcomes",
                format!(
                    "{} parties but {} outcome lists",
                    sc.parties,
                    sc.outcomes.len()
                ),
            ));
        }
        for (p, list) in sc.outcomes.iter().enumerate() {
            if list.is_empty() || list.iter().any(|&d| d < 2) {
                return Err(fail(
                    &format!("scenario.outcomes[{p}]"),
                    "every party needs at least one input with two or more outcomes",
                ));
            }
        }
        self.validate_constraint()?;
        self.validate_target()?;
        let ms = self.quadrature.m.values();
        if ms.is_empty() || ms.iter().any(|&m| m < 1 || m > 64) {
            return Err(fail("quadrature.m", "node counts must lie in 1..=64"));
        }
        if self.relaxation.level == 0 {
            return Err(fail("relaxation.level", "level must be at least 1"));
        }
        for (k, e) in self.relaxation.extras.iter().enumerate() {
            if e.is_empty() || !e.chars().all(|c| matches!(c, 'A' | 'B' | 'C' | 'Z')) {
                return Err(fail(
                    &format!("relaxation.extras[{k}]"),
                    format!("pattern `{e}` must use only the letters A, B, C, Z"),
                ));
            }
        }
        let s = &self.solver;
        if !(s.tol > 0.0 && s.tol < 1.0) {
            return Err(fail("solver.tol", "tolerance must lie in (0, 1)"));
        }
        if s.max_iterations == 0 {
            return Err(fail("solver.max_iterations", "need at least one iteration"));
        }
        if let Some(sw) = &self.sweep {
            self.validate_sweep(sw)?;
        }
        Ok(())
    }

    fn validate_constraint(&self) -> Result<()> {
        let sc = &self.scenario;
        match &self.constraint {
            ConstraintBlock::Bell {
                expression,
                alpha,
                bound,
                ..
            } => {
                let expr = self.bell_expression().expect("bell constraint");
                if alpha.is_some() != (*expression == ExpressionName::AsymChsh) {
                    return Err(fail(
                        "constraint.alpha",
                        "alpha is required for asym_chsh and only there",
                    ));
                }
                if let Some(a) = alpha {
                    if !a.is_finite() || *a <= 0.0 {
                        return Err(fail("constraint.alpha", "alpha must be positive"));
                    }
                }
                if sc.parties != expr.parties() || sc.outcomes.iter().any(|l| l != &[2, 2]) {
                    return Err(fail(
                        "scenario.outcomes",
                        format!(
                            "{} needs {} parties with two binary inputs each",
                            expr.name(),
                            expr.parties()
                        ),
                    ));
                }
                if !bound.is_finite() || *bound > expr.quantum_bound() + 1e-9 {
                    return Err(fail(
                        "constraint.bound",
                        format!("{bound} exceeds the quantum bound {}", expr.quantum_bound()),
                    ));
                }
            }
            ConstraintBlock::FullDistribution { strategy, eta } => {
                if !(0.0..=1.0).contains(eta) {
                    return Err(fail(
                        "constraint.eta",
                        "detection efficiency must lie in [0, 1]",
                    ));
                }
                match strategy {
                    StrategyChoice::Optimize(_) => {
                        if sc.parties != 2 || sc.outcomes != [vec![2, 2], vec![2, 2]] {
                            return Err(fail(
                                "scenario.outcomes",
                                "the strategy search constrains two binary inputs per party",
                            ));
                        }
                    }
                    StrategyChoice::Explicit(spec) => {
                        if spec.angles.len() != sc.parties {
                            return Err(fail(
                                "constraint.strategy.angles",
                                "one angle list per party",
                            ));
                        }
                        for (p, (angles, arities)) in
                            spec.angles.iter().zip(&sc.outcomes).enumerate()
                        {
                            if arities.len() > angles.len() {
                                return Err(fail(
                                    &format!("scenario.outcomes[{p}]"),
                                    format!("party {p} has only {} measurements", angles.len()),
                                ));
                            }
                            if arities.iter().any(|&d| d != 2) {
                                return Err(fail(
                                    &format!("scenario.outcomes[{p}]"),
                                    "qubit projective measurements have two outcomes",
                                ));
                            }
                        }
                        spec.build()
                            .map_err(|e| fail("constraint.strategy", e.to_string()))?;
                    }
                }
            }
        }
        Ok(())
    }

    fn validate_target(&self) -> Result<()> {
        let t = &self.target;
        let sc = &self.scenario;
        match t.kind {
            TargetKind::Local => {
                if t.x >= sc.outcomes[0].len() {
                    return Err(fail("target.x", "Alice has no such constrained input"));
                }
            }
            TargetKind::Global => {
                if sc.parties < 2 {
                    return Err(fail("target.kind", "the global target needs two parties"));
                }
                if t.x >= sc.outcomes[0].len() {
                    return Err(fail("target.x", "Alice has no such constrained input"));
                }
                if t.y >= sc.outcomes[1].len() {
                    return Err(fail("target.y", "Bob has no such constrained input"));
                }
            }
            TargetKind::Averaged => {
                if t.px.len() != sc.outcomes[0].len() {
                    return Err(fail(
                        "target.px",
                        "one probability per constrained input of Alice",
                    ));
                }
                let sum: f64 = t.px.iter().sum();
                if t.px.iter().any(|&p| !(0.0..=1.0).contains(&p)) || (sum - 1.0).abs() > 1e-9 {
                    return Err(fail("target.px", "must be a probability distribution"));
                }
            }
        }
        match t.preprocessing {
            Preprocessing::Fixed(q) if !(0.0..0.5).contains(&q) => {
                return Err(fail(
                    "target.preprocessing",
                    "flip probability must lie in [0, 1/2)",
                ));
            }
            Preprocessing::Optimize(_) if t.key_input.is_none() => {
                return Err(fail(
                    "target.preprocessing",
                    "optimizing the flip needs a key rate (set target.key_input)",
                ));
            }
            _ => {}
        }
        if let Some(y) = t.key_input {
            if t.kind != TargetKind::Local {
                return Err(fail("target.key_input", "key rates use the local target"));
            }
            let inputs =
                match &self.constraint {
                    ConstraintBlock::FullDistribution {
                        strategy: StrategyChoice::Explicit(spec),
                        ..
                    } => spec.angles.get(1).map_or(0, Vec::len),
                    ConstraintBlock::FullDistribution { .. } => 3,
                    ConstraintBlock::Bell { .. } => return Err(fail(
                        "target.key_input",
                        "key rates need the key-round statistics of a full_distribution constraint",
                    )),
                };
            if sc.parties != 2 || y >= inputs {
                return Err(fail("target.key_input", "Bob has no such input"));
            }
        }
        Ok(())
    }

    fn validate_sweep(&self, sw: &SweepBlock) -> Result<()> {
        if sw.linspace.is_some() == !sw.grid.is_empty() {
            return Err(fail("sweep", "give exactly one of `grid` and `linspace`"));
        }
        if let Some((_, _, n)) = sw.linspace {
            if n == 0 {
                return Err(fail("sweep.linspace", "need at least one point"));
            }
        }
        let values = sw.values();
        if values.iter().any(|v| !v.is_finite()) {
            return Err(fail("sweep", "sweep values must be finite"));
        }
        match (sw.variable, &self.constraint) {
            (SweepVariable::ChshScore, ConstraintBlock::Bell { expression, .. }) => {
                if *expression != ExpressionName::Chsh {
                    return Err(fail(
                        "sweep.variable",
                        "chsh_score sweeps need the chsh expression",
                    ));
                }
                let top = (2.0 + std::f64::consts::SQRT_2) / 4.0;
                if values.iter().any(|&w| w > top + 1e-9) {
                    return Err(fail(
                        "sweep",
                        format!("CHSH scores above {top} are not quantum"),
                    ));
                }
            }
            (SweepVariable::BellValue, ConstraintBlock::Bell { .. }) => {
                let top = self
                    .bell_expression()
                    .expect("bell constraint")
                    .quantum_bound();
                if values.iter().any(|&v| v > top + 1e-9) {
                    return Err(fail(
                        "sweep",
                        format!("Bell values above {top} are not quantum"),
                    ));
                }
            }
            (SweepVariable::Eta, ConstraintBlock::FullDistribution { .. }) => {
                if values.iter().any(|v| !(0.0..=1.0).contains(v)) {
                    return Err(fail("sweep", "detection efficiencies must lie in [0, 1]"));
                }
            }
            (v, _) => {
                return Err(fail(
                    "sweep.variable",
                    format!("`{}` does not apply to this constraint type", v.name()),
                ))
            }
        }
        Ok(())
    }

    pub fn bell_expression(&self) -> Option<BellExpression> {
        match &self.constraint {
            ConstraintBlock::Bell {
                expression, alpha, ..
            } => Some(match expression {
                ExpressionName::Chsh => BellExpression::Chsh,
                ExpressionName::AsymChsh => BellExpression::AsymChsh {
                    alpha: alpha.unwrap_or(1.0),
                },
                ExpressionName::Holz => BellExpression::Holz,
            }),
            ConstraintBlock::FullDistribution { .. } => None,
        }
    }

    /// Values of the sweep, or the single configured point.
    pub fn points(&self) -> Vec<Option<f64>> {
        match &self.sweep {
            Some(sw) => sw.values().into_iter().map(Some).collect(),
            None => vec![None],
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const CHSH: &str = r#"{
        "schema": 1,
        "scenario": {"parties": 2, "outcomes": [[2, 2], [2, 2]]},
        "constraint": {"type": "bell", "expression": "chsh", "bound": 2.4},
        "target": {"kind": "local", "x": 0},
        "quadrature": {"m": [2, 4]},
        "relaxation": {"level": 2, "extras": ["ABZ"]},
        "sweep": {"variable": "chsh_score", "linspace": [0.76, 0.85, 4]}
    }"#;

    fn path_of(text: &str) -> String {
        match parse(text) {
            Err(Error::Config { path, .. }) => path,
            other => panic!("expected a config error, got {other:?}"),
        }
    }

    #[test]
    fn accepts_a_chsh_sweep() {
        let (cfg, hash) = parse(CHSH).unwrap();
        assert_eq!(cfg.quadrature.m.values(), vec![2, 4]);
        assert_eq!(cfg.relaxation.describe(), "2+ABZ");
        assert_eq!(cfg.points().len(), 4);
        assert_eq!(hash.len(), 64);
        assert_eq!(cfg.solver.tol, 1e-8);
    }

    #[test]
    fn errors_name_the_offending_key() {
        assert_eq!(
            path_of(&CHSH.replace("\"level\": 2", "\"level\": 0")),
            "relaxation.level"
        );
        assert_eq!(
            path_of(&CHSH.replace("\"extras\"", "\"norm\": true, \"extras\"")),
            "relaxation.norm"
        );
        assert_eq!(
            path_of(&CHSH.replace("\"schema\": 1", "\"schema\": 2")),
            "schema"
        );
        assert_eq!(
            path_of(&CHSH.replace("[0.76, 0.85, 4]", "[0.76, 0.9, 4]")),
            "sweep"
        );
        assert_eq!(path_of(&CHSH.replace("\"x\": 0", "\"x\": 2")), "target.x");
        assert_eq!(
            path_of(&CHSH.replace("\"level\": 2", "\"level\": \"two\"")),
            "relaxation.level"
        );
    }

    #[test]
    fn key_rates_need_distribution_constraints() {
        let text = CHSH.replace("\"x\": 0", "\"x\": 0, \"key_input\": 2");
        assert_eq!(path_of(&text), "target.key_input");
    }

    #[test]
    fn full_distribution_with_optimized_strategy() {
        let text = r#"{
            "schema": 1,
            "scenario": {"parties": 2, "outcomes": [[2, 2], [2, 2]]},
            "constraint": {"type": "full_distribution", "strategy": "optimize"},
            "target": {"kind": "local", "key_input": 2, "preprocessing": "optimize"},
            "quadrature": {"m": 8},
            "relaxation": {"level": 1, "extras": ["AZ", "BZ", "ABZ"]},
            "sweep": {"variable": "eta", "grid": [0.95, 1.0]}
        }"#;
        let (cfg, _) = parse(text).unwrap();
        assert!(matches!(
            cfg.constraint,
            ConstraintBlock::FullDistribution {
                strategy: StrategyChoice::Optimize(_),
                ..
            }
        ));
        assert_eq!(
            path_of(&text.replace("\"eta\", \"grid\"", "\"chsh_score\", \"grid\"")),
            "sweep.variable"
        );
    }
}
