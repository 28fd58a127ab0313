use std::collections::HashMap;
use std::fmt::Write as _;

use faer::Mat;

use crate::error::{Error, Result};
use crate::ncpoly::Word;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sense {
    Minimize,
    Maximize,
}

/// One nonzero of a block template, stored for `row <= col` only.
/// `var == None` is the constant part.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BlockEntry {
    pub row: usize,
    pub col: usize,
    pub var: Option<usize>,
    pub coeff: f64,
}

/// Symmetric matrix `F0 + Σ_i x_i F_i` required to be PSD.
#[derive(Clone, Debug, PartialEq)]
pub struct BlockTemplate {
    pub label: String,
    pub size: usize,
    pub entries: Vec<BlockEntry>,
}

impl BlockTemplate {
    pub fn new(label: impl Into<String>, size: usize) -> Self {
        BlockTemplate {
            label: label.into(),
            size,
            entries: Vec::new(),
        }
    }

    /// Adds `coeff * x_var` (or a constant) at `(row, col)` and its mirror.
    pub fn push(&mut self, row: usize, col: usize, var: Option<usize>, coeff: f64) {
        let (row, col) = if row <= col { (row, col) } else { (col, row) };
        if coeff != 0.0 {
            self.entries.push(BlockEntry {
                row,
                col,
                var,
                coeff,
            });
        }
    }

    /// Dense matrix at the point `x`.
    pub fn evaluate(&self, x: &[f64]) -> Mat<f64> {
        let mut m = Mat::<f64>::zeros(self.size, self.size);
        for e in &self.entries {
            let v = e.coeff * e.var.map_or(1.0, |i| x[i]);
            m[(e.row, e.col)] += v;
            if e.row != e.col {
                m[(e.col, e.row)] += v;
            }
        }
        m
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ConstraintRole {
    /// `L(1) = 1`.
    Normalization,
    /// Observed statistics; their multipliers form the min-tradeoff function.
    Statistical,
    Other,
}

impl ConstraintRole {
    fn name(self) -> &'static str {
        match self {
            ConstraintRole::Normalization => "norm",
            ConstraintRole::Statistical => "stat",
            ConstraintRole::Other => "other",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        match s {
            "norm" => Some(ConstraintRole::Normalization),
            "stat" => Some(ConstraintRole::Statistical),
            "other" => Some(ConstraintRole::Other),
            _ => None,
        }
    }
}

/// Sparse row `Σ terms · x` compared with `rhs`.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearConstraint {
    pub terms: Vec<(usize, f64)>,
    pub rhs: f64,
    pub label: String,
    pub role: ConstraintRole,
}

impl LinearConstraint {
    pub fn value(&self, x: &[f64]) -> f64 {
        self.terms.iter().map(|&(i, c)| c * x[i]).sum()
    }
}

/// Real linear SDP over moment variables:
/// optimize `objective · x` subject to `equalities` (`row·x = rhs`),
/// `inequalities` (`row·x >= rhs`) and every block PSD.
#[derive(Clone, Debug, PartialEq)]
pub struct SdpInstance {
    /// Representative word of each variable class; empty when the instance
    /// did not come from a relaxation.
    pub variables: Vec<Word>,
    pub num_vars: usize,
    pub blocks: Vec<BlockTemplate>,
    pub equalities: Vec<LinearConstraint>,
    pub inequalities: Vec<LinearConstraint>,
    pub objective: Vec<(usize, f64)>,
    pub sense: Sense,
    index: HashMap<Word, usize>,
}

impl SdpInstance {
    /// Empty instance with `num_vars` anonymous variables.
    pub fn new(num_vars: usize, sense: Sense) -> Self {
        SdpInstance {
            variables: Vec::new(),
            num_vars,
            blocks: Vec::new(),
            equalities: Vec::new(),
            inequalities: Vec::new(),
            objective: Vec::new(),
            sense,
            index: HashMap::new(),
        }
    }

    pub(crate) fn with_words(variables: Vec<Word>, sense: Sense) -> Self {
        let index = variables
            .iter()
            .enumerate()
            .map(|(i, w)| (w.clone(), i))
            .collect();
        SdpInstance {
            num_vars: variables.len(),
            variables,
            index,
            ..SdpInstance::new(0, sense)
        }
    }

    /// Column of the class containing `w` (or its adjoint).
    pub fn variable_index(&self, w: &Word) -> Option<usize> {
        self.index.get(&w.real_class()).copied()
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.objective.iter().map(|&(i, c)| c * x[i]).sum()
    }

    /// Returns a copy with the objective multiplied by `gamma`.
    pub fn scaled_objective(&self, gamma: f64) -> SdpInstance {
        let mut out = self.clone();
        for t in &mut out.objective {
            t.1 *= gamma;
        }
        out
    }

    /// Largest violation of the scalar constraints at `x` and the smallest
    /// eigenvalue over all blocks.
    pub fn feasibility(&self, x: &[f64]) -> (f64, f64) {
        let eq = self
            .equalities
            .iter()
            .map(|c| (c.value(x) - c.rhs).abs())
            .fold(0.0, f64::max);
        let ineq = self
            .inequalities
            .iter()
            .map(|c| (c.rhs - c.value(x)).max(0.0))
            .fold(0.0, f64::max);
        let min_eig = self
            .blocks
            .iter()
            .map(|b| {
                let m = b.evaluate(x);
                m.self_adjoint_eigenvalues(faer::Side::Lower)
                    .map(|ev| ev.into_iter().fold(f64::INFINITY, f64::min))
                    .unwrap_or(f64::NAN)
            })
            .fold(f64::INFINITY, f64::min);
        (eq.max(ineq), min_eig)
    }

    /// Plain sparse text dump. Block rows and columns are offsets into the
    /// block-diagonal matrix; `var = -1` marks a constant.
    pub fn dump(&self) -> String {
        let mut s = String::new();
        let sizes: Vec<String> = self.blocks.iter().map(|b| b.size.to_string()).collect();
        let _ = writeln!(s, "vars {}", self.num_vars);
        let _ = writeln!(s, "blocks {}", sizes.join(" "));
        let _ = writeln!(
            s,
            "sense {}",
            match self.sense {
                Sense::Minimize => "min",
                Sense::Maximize => "max",
            }
        );
        for (i, w) in self.variables.iter().enumerate() {
            let _ = writeln!(s, "#var,{i},{w}");
        }
        for &(i, c) in &self.objective {
            let _ = writeln!(s, "obj,{i},{c:e}");
        }
        for (kind, list) in [("eq", &self.equalities), ("ge", &self.inequalities)] {
            for (k, con) in list.iter().enumerate() {
                let _ = writeln!(
                    s,
                    "{kind}rhs,{k},{:e},{},{}",
                    con.rhs,
                    con.role.name(),
                    con.label
                );
                for &(i, c) in &con.terms {
                    let _ = writeln!(s, "{kind},{k},{i},{c:e}");
                }
            }
        }
        let mut offset = 0;
        for b in &self.blocks {
            for e in &b.entries {
                let var = e.var.map_or(-1, |v| v as i64);
                let _ = writeln!(
                    s,
                    "block,{},{},{var},{:e}",
                    offset + e.row,
                    offset + e.col,
                    e.coeff
                );
            }
            offset += b.size;
        }
        s
    }

    /// Inverse of [`SdpInstance::dump`]; variable words are not restored.
    pub fn parse(text: &str) -> Result<SdpInstance> {
        let mut num_vars = None;
        let mut sizes: Option<Vec<usize>> = None;
        let mut sense = Sense::Minimize;
        let mut objective = Vec::new();
        let mut eqs: Vec<LinearConstraint> = Vec::new();
        let mut ges: Vec<LinearConstraint> = Vec::new();
        let mut entries = Vec::new();

        for (n, raw) in text.lines().enumerate() {
            let line = n + 1;
            let err = |message: String| Error::Parse { line, message };
            let l = raw.trim();
            if l.is_empty() || l.starts_with('#') {
                continue;
            }
            if let Some(rest) = l.strip_prefix("vars ") {
                num_vars = Some(
                    rest.trim()
                        .parse::<usize>()
                        .map_err(|e| err(e.to_string()))?,
                );
                continue;
            }
            if let Some(rest) = l.strip_prefix("blocks") {
                sizes = Some(
                    rest.split_whitespace()
                        .map(|t| t.parse::<usize>().map_err(|e| err(e.to_string())))
                        .collect::<Result<_>>()?,
                );
                continue;
            }
            if let Some(rest) = l.strip_prefix("sense ") {
                sense = match rest.trim() {
                    "min" => Sense::Minimize,
                    "max" => Sense::Maximize,
                    other => return Err(err(format!("unknown sense `{other}`"))),
                };
                continue;
            }
            let fields: Vec<&str> = l.splitn(5, ',').collect();
            let int = |i: usize| -> Result<i64> {
                fields
                    .get(i)
                    .ok_or_else(|| err("missing field".into()))?
                    .trim()
                    .parse::<i64>()
                    .map_err(|e| err(e.to_string()))
            };
            let idx = |i: usize| -> Result<usize> {
                usize::try_from(int(i)?).map_err(|_| err("negative index".into()))
            };
            let real = |i: usize| -> Result<f64> {
                fields
                    .get(i)
                    .ok_or_else(|| err("missing field".into()))?
                    .trim()
                    .parse::<f64>()
                    .map_err(|e| err(e.to_string()))
            };
            match fields[0] {
                "obj" => objective.push((idx(1)?, real(2)?)),
                kind @ ("eqrhs" | "gerhs") => {
                    let list = if kind == "eqrhs" { &mut eqs } else { &mut ges };
                    let k = idx(1)?;
                    if k != list.len() {
                        return Err(err(format!("constraint {k} out of order")));
                    }
                    let role = fields
                        .get(3)
                        .and_then(|r| ConstraintRole::parse(r.trim()))
                        .unwrap_or(ConstraintRole::Other);
                    list.push(LinearConstraint {
                        terms: Vec::new(),
                        rhs: real(2)?,
                        label: fields.get(4).map_or(String::new(), |s| s.to_string()),
                        role,
                    });
                }
                kind @ ("eq" | "ge") => {
                    let list = if kind == "eq" { &mut eqs } else { &mut ges };
                    let k = idx(1)?;
                    let con = list
                        .get_mut(k)
                        .ok_or_else(|| err(format!("row for undeclared constraint {k}")))?;
                    con.terms.push((idx(2)?, real(3)?));
                }
                "block" => {
                    let var = int(3)?;
                    let var = if var < 0 { None } else { Some(var as usize) };
                    entries.push((line, idx(1)?, idx(2)?, var, real(4)?));
                }
                other => return Err(err(format!("unknown record `{other}`"))),
            }
        }

        let num_vars = num_vars.ok_or(Error::Parse {
            line: 0,
            message: "missing `vars` header".into(),
        })?;
        let sizes = sizes.ok_or(Error::Parse {
            line: 0,
            message: "missing `blocks` header".into(),
        })?;
        let mut inst = SdpInstance::new(num_vars, sense);
        let mut offsets = Vec::with_capacity(sizes.len());
        let mut off = 0;
        for (k, &n) in sizes.iter().enumerate() {
            offsets.push(off);
            off += n;
            inst.blocks.push(BlockTemplate::new(format!("block{k}"), n));
        }
        for (line, r, c, var, coeff) in entries {
            let err = |message: String| Error::Parse { line, message };
            let (r, c) = (r.min(c), r.max(c));
            let k = offsets.partition_point(|&o| o <= r) - 1;
            if c >= offsets[k] + sizes[k] {
                return Err(err(format!("entry ({r},{c}) crosses a block boundary")));
            }
            if var.is_some_and(|v| v >= num_vars) {
                return Err(err("variable index out of range".into()));
            }
            inst.blocks[k].push(r - offsets[k], c - offsets[k], var, coeff);
        }
        let check = |terms: &[(usize, f64)]| terms.iter().all(|&(i, _)| i < num_vars);
        if !check(&objective)
            || !eqs.iter().all(|c| check(&c.terms))
            || !ges.iter().all(|c| check(&c.terms))
        {
            return Err(Error::Parse {
                line: 0,
                message: "variable index out of range".into(),
            });
        }
        inst.objective = objective;
        inst.equalities = eqs;
        inst.inequalities = ges;
        Ok(inst)
    }
}
