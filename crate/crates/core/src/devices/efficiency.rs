use super::distribution::{Distribution, EfficiencyRecord};
use crate::error::{invalid, Result};

/// Each party's detector clicks independently with probability `eta`; on a
/// failure the device outputs 0, or the extra symbol ⊥ (index `d`) for the
/// (party, input) pairs in `marked`.
fn lossy(ideal: &Distribution, eta: f64, marked: &[(usize, usize)]) -> Result<Distribution> {
    let n = ideal.parties();
    let arities: Vec<Vec<usize>> = ideal
        .arities()
        .iter()
        .enumerate()
        .map(|(p, ds)| {
            ds.iter()
                .enumerate()
                .map(|(x, &d)| d + usize::from(marked.contains(&(p, x))))
                .collect()
        })
        .collect();
    let fail = |p: usize, x: usize| {
        if marked.contains(&(p, x)) {
            ideal.arities()[p][x]
        } else {
            0
        }
    };
    let mut out = Distribution::from_fn(arities, |x, a| {
        let mut total = 0.0;
        for mask in 0u32..(1 << n) {
            let clicked: Vec<usize> = (0..n).filter(|p| mask >> p & 1 == 1).collect();
            let ok = (0..n).all(|p| {
                if mask >> p & 1 == 1 {
                    a[p] < ideal.arities()[p][x[p]]
                } else {
                    a[p] == fail(p, x[p])
                }
            });
            if !ok {
                continue;
            }
            let k = clicked.len() as i32;
            let weight = eta.powi(k) * (1.0 - eta).powi(n as i32 - k);
            if weight == 0.0 {
                continue;
            }
            let marginal = if clicked.is_empty() {
                1.0
            } else {
                // Ideal outcomes only; `a` is in range for the clicking parties.
                let mut b = a.to_vec();
                for p in 0..n {
                    if mask >> p & 1 == 0 {
                        b[p] = 0;
                    }
                }
                ideal.partial_sum(x, &clicked, &b)
            };
            total += weight * marginal;
        }
        total
    })?;
    out.efficiency = Some(Box::new(EfficiencyRecord {
        eta,
        ideal: ideal.clone(),
        marked: marked.to_vec(),
    }));
    Ok(out)
}

/// Inefficient-detection model: with probability `1 − eta` a party's
/// device fails and deterministically outputs 0.
pub fn apply_detection_efficiency(q: &Distribution, eta: f64) -> Result<Distribution> {
    if !(0.0..=1.0).contains(&eta) {
        return Err(invalid(format!(
            "detection efficiency {eta} outside [0, 1]"
        )));
    }
    let mut ideal = q.clone();
    ideal.efficiency = None;
    lossy(&ideal, eta, &[])
}

/// Records the no-click events of `party` on `input` as a separate outcome
/// ⊥ (the last index) instead of folding them into outcome 0.
pub fn mark_no_click(q: &Distribution, party: usize, input: usize) -> Result<Distribution> {
    let rec = q
        .efficiency
        .as_ref()
        .ok_or_else(|| invalid("no detection-efficiency model to mark"))?;
    if q.outcomes(party, input).is_none() {
        return Err(invalid(format!("party {party} has no input {input}")));
    }
    if rec.marked.contains(&(party, input)) {
        return Err(invalid(format!(
            "no-click outcome already marked for party {party} input {input}"
        )));
    }
    let mut marked = rec.marked.clone();
    marked.push((party, input));
    lossy(&rec.ideal, rec.eta, &marked)
}

/// Merges ⊥ back into outcome 0.
pub fn fold_no_click(q: &Distribution, party: usize, input: usize) -> Result<Distribution> {
    let rec = q
        .efficiency
        .as_ref()
        .ok_or_else(|| invalid("no detection-efficiency model"))?;
    if !rec.marked.contains(&(party, input)) {
        return Err(invalid(format!(
            "party {party} input {input} has no ⊥ outcome"
        )));
    }
    let bottom = rec.ideal.arities()[party][input];
    let mut arities = q.arities().to_vec();
    arities[party][input] = bottom;
    let mut out = Distribution::from_fn(arities, |x, a| {
        let p = q.prob(x, a).unwrap_or(0.0);
        if x[party] == input && a[party] == 0 {
            let mut b = a.to_vec();
            b[party] = bottom;
            p + q.prob(x, &b).unwrap_or(0.0)
        } else {
            p
        }
    })?;
    let mut rec = (**rec).clone();
    rec.marked.retain(|&m| m != (party, input));
    out.efficiency = Some(Box::new(rec));
    Ok(out)
}
