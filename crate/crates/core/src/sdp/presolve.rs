//! Removal of block rows that cannot bind.
//!
//! If the diagonal entry of a block row is `c·x_v` (plus a constant) with
//! `c > 0` and `x_v` occurs nowhere else, `x_v` can always be raised until
//! the block is PSD again, so the row constrains nothing. Every dual
//! solution has a zero row there, which leaves the dual without strictly
//! feasible points and the primal optimal set unbounded; interior-point
//! iterates then lose accuracy. Moment matrices of relaxations with
//! extra words have such rows for their longest words.

use faer::linalg::solvers::Solve;
use faer::{Mat, Side};

use super::SdpSolution;
use crate::relax::{BlockTemplate, SdpInstance};

/// Rows removed from one block in one pass, with their diagonal variables.
struct Pass {
    block: usize,
    /// Rows of the block as it was before this pass.
    rows: Vec<(usize, usize, f64)>,
    /// Size of the block before this pass.
    size: usize,
}

pub(super) struct Reduction {
    pub instance: SdpInstance,
    /// Original index of each reduced variable.
    kept_vars: Vec<usize>,
    /// Original blocks and their passes, applied in order.
    original: Vec<BlockTemplate>,
    passes: Vec<Pass>,
}

fn occurrences(inst: &SdpInstance, blocks: &[BlockTemplate]) -> (Vec<usize>, Vec<bool>) {
    let mut count = vec![0usize; inst.num_vars];
    let mut pinned = vec![false; inst.num_vars];
    for b in blocks {
        for e in &b.entries {
            if let Some(v) = e.var {
                count[v] += 1;
            }
        }
    }
    for c in inst.equalities.iter().chain(&inst.inequalities) {
        for &(v, _) in &c.terms {
            pinned[v] = true;
        }
    }
    for &(v, _) in &inst.objective {
        pinned[v] = true;
    }
    (count, pinned)
}

fn drop_rows(b: &BlockTemplate, rows: &[usize]) -> BlockTemplate {
    let mut map = vec![usize::MAX; b.size];
    let mut next = 0;
    for (i, slot) in map.iter_mut().enumerate() {
        if !rows.contains(&i) {
            *slot = next;
            next += 1;
        }
    }
    let mut out = BlockTemplate::new(b.label.clone(), next);
    for e in &b.entries {
        let (r, c) = (map[e.row], map[e.col]);
        if r != usize::MAX && c != usize::MAX {
            out.push(r, c, e.var, e.coeff);
        }
    }
    out
}

/// `None` when nothing can be removed.
pub(super) fn reduce(inst: &SdpInstance) -> Option<Reduction> {
    let mut blocks = inst.blocks.clone();
    let mut passes = Vec::new();
    loop {
        let (count, pinned) = occurrences(inst, &blocks);
        let mut changed = false;
        for (k, b) in blocks.iter_mut().enumerate() {
            let mut rows = Vec::new();
            for i in 0..b.size {
                let diag: Vec<_> = b
                    .entries
                    .iter()
                    .filter(|e| e.row == i && e.col == i && e.var.is_some())
                    .collect();
                if let [e] = diag[..] {
                    let v = e.var.expect("filtered");
                    if e.coeff > 0.0 && count[v] == 1 && !pinned[v] {
                        rows.push((i, v, e.coeff));
                    }
                }
            }
            // Keep at least one row so that blocks never vanish.
            if rows.is_empty() || rows.len() == b.size {
                continue;
            }
            let idx: Vec<usize> = rows.iter().map(|r| r.0).collect();
            passes.push(Pass {
                block: k,
                rows,
                size: b.size,
            });
            *b = drop_rows(b, &idx);
            changed = true;
        }
        if !changed {
            break;
        }
    }
    if passes.is_empty() {
        return None;
    }

    let (count, pinned) = occurrences(inst, &blocks);
    let kept_vars: Vec<usize> = (0..inst.num_vars)
        .filter(|&v| count[v] > 0 || pinned[v])
        .collect();
    let mut new_index = vec![usize::MAX; inst.num_vars];
    for (j, &v) in kept_vars.iter().enumerate() {
        new_index[v] = j;
    }
    let mut reduced = SdpInstance::new(kept_vars.len(), inst.sense);
    reduced.objective = inst
        .objective
        .iter()
        .map(|&(v, c)| (new_index[v], c))
        .collect();
    let remap = |c: &crate::relax::LinearConstraint| {
        let mut c = c.clone();
        for t in &mut c.terms {
            t.0 = new_index[t.0];
        }
        c
    };
    reduced.equalities = inst.equalities.iter().map(remap).collect();
    reduced.inequalities = inst.inequalities.iter().map(remap).collect();
    reduced.blocks = blocks
        .iter()
        .map(|b| {
            let mut b = b.clone();
            for e in &mut b.entries {
                e.var = e.var.map(|v| new_index[v]);
            }
            b
        })
        .collect();
    Some(Reduction {
        instance: reduced,
        kept_vars,
        original: inst.blocks.clone(),
        passes,
    })
}

/// Inserts zero rows and columns at `rows` (indices in the larger matrix).
fn pad(z: &Mat<f64>, rows: &[usize], size: usize) -> Mat<f64> {
    let map: Vec<Option<usize>> = {
        let mut next = 0;
        (0..size)
            .map(|i| {
                if rows.contains(&i) {
                    None
                } else {
                    next += 1;
                    Some(next - 1)
                }
            })
            .collect()
    };
    Mat::from_fn(size, size, |i, j| match (map[i], map[j]) {
        (Some(a), Some(b)) => z[(a, b)],
        _ => 0.0,
    })
}

impl Reduction {
    /// Solution of the original instance. Duals gain zero rows; each removed
    /// diagonal moment is set just large enough (with a diagonally dominant
    /// margin) to keep its block PSD, and vanished moments are zero.
    pub fn restore(&self, sol: SdpSolution, num_vars: usize) -> SdpSolution {
        let mut x = vec![0.0; num_vars];
        for (j, &v) in self.kept_vars.iter().enumerate() {
            x[v] = sol.x[j];
        }
        let mut block_duals = sol.block_duals.clone();
        // Templates of every block as it was before each pass, rebuilt by
        // replaying the passes.
        let mut stages: Vec<BlockTemplate> = Vec::new();
        let mut current = self.original.clone();
        for p in &self.passes {
            stages.push(current[p.block].clone());
            let idx: Vec<usize> = p.rows.iter().map(|r| r.0).collect();
            current[p.block] = drop_rows(&current[p.block], &idx);
        }
        let finite = x.iter().all(|v| v.is_finite());
        for (p, before) in self.passes.iter().zip(stages).rev() {
            let idx: Vec<usize> = p.rows.iter().map(|r| r.0).collect();
            block_duals[p.block] = pad(&block_duals[p.block], &idx, p.size);
            if finite {
                fill_diagonal(&before, &p.rows, &mut x);
            }
        }
        SdpSolution {
            x,
            block_duals,
            ..sol
        }
    }
}

/// Chooses the diagonal variables of `rows` so that `block` is PSD at `x`,
/// given that the block without those rows is (numerically) PSD.
fn fill_diagonal(block: &BlockTemplate, rows: &[(usize, usize, f64)], x: &mut [f64]) {
    for &(_, v, _) in rows {
        x[v] = 0.0;
    }
    let m = block.evaluate(x);
    let removed: Vec<usize> = rows.iter().map(|r| r.0).collect();
    let kept: Vec<usize> = (0..block.size).filter(|i| !removed.contains(i)).collect();
    let mkk = Mat::from_fn(kept.len(), kept.len(), |a, b| m[(kept[a], kept[b])]);
    let scale = (0..kept.len())
        .map(|i| mkk[(i, i)].abs())
        .fold(1.0, f64::max);
    let shifted = Mat::from_fn(kept.len(), kept.len(), |a, b| {
        mkk[(a, b)] + if a == b { 1e-10 * scale } else { 0.0 }
    });
    let bmat = Mat::from_fn(kept.len(), removed.len(), |a, r| m[(kept[a], removed[r])]);
    let s = match shifted.llt(Side::Lower) {
        Ok(f) => bmat.transpose() * f.solve(&bmat),
        Err(_) => return,
    };
    for (r, &(i, v, coeff)) in rows.iter().enumerate() {
        let off: f64 = (0..removed.len())
            .filter(|&q| q != r)
            .map(|q| (m[(i, removed[q])] - s[(r, q)]).abs())
            .sum();
        let target = s[(r, r)] + off + 1e-9 * scale;
        x[v] = (target - m[(i, i)]) / coeff;
    }
}
