use alloc::format;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use super::functions::{negated, EmbeddedFn, ScaledFn, SharedFn};
use super::{compiled::svec_position, MatrixFnConstraint, NlpSdpData};
use crate::error::{Error, Result};

const STRUCTURE_TOL: f64 = 1e-12;

fn probe_point(len: usize, seed: u64) -> Vec<f64> {
    // cheap deterministic spread in [-0.5, 0.5)
    (0..len as u64)
        .map(|i| {
            let h = (i.wrapping_mul(6364136223846793005).wrapping_add(seed.wrapping_mul(1442695040888963407))) >> 33;
            (h % 1000) as f64 / 1000.0 - 0.5
        })
        .collect()
}

fn touches(f: &SharedFn, points: &[Vec<f64>], range: core::ops::Range<usize>) -> bool {
    points.iter().any(|z| f.gradient(z)[range.clone()].iter().any(|g| g.abs() > STRUCTURE_TOL))
}

/// Eliminates matrix variables flagged as slacks.
///
/// A slack `S` must enter the problem only through one equality per svec
/// entry, each of the form `q(x) + σ·S_t = 0` with a constant `σ ≠ 0`. The
/// pattern is verified at two probe points. The equalities are dropped and the
/// bounds of `S` are imposed directly on `−q(x)/σ`.
pub fn remove_slacks(p: &NlpSdpData) -> Result<NlpSdpData> {
    p.validate()?;
    let arity = p.arity();
    let points = [probe_point(arity, 1), probe_point(arity, 2)];
    let slack_ids: Vec<usize> = (0..p.matrix_vars.len()).filter(|&i| p.matrix_vars[i].is_slack).collect();
    if slack_ids.is_empty() {
        return Ok(p.clone());
    }
    let mut removed = vec![false; arity];
    let mut eq_used = vec![false; p.equalities.len()];
    let mut new_constraints = Vec::new();
    // (slack index, per-entry (equality index, sigma))
    let mut definitions: Vec<(usize, Vec<(usize, f64)>)> = Vec::new();

    for &vi in &slack_ids {
        let var = p.matrix_vars[vi];
        let off = p.var_offset(vi);
        let range = off..off + var.svec_len();
        let reject = |what: &str| Err(Error::InvalidProblem(format!("slack variable {vi}: {what}")));
        if touches(&p.objective, &points, range.clone()) {
            return reject("appears in the objective");
        }
        if p.inequalities.iter().any(|g| touches(g, &points, range.clone())) {
            return reject("appears in an inequality");
        }
        if p.matrix_constraints.iter().any(|c| c.entries.iter().any(|(_, _, f)| touches(f, &points, range.clone()))) {
            return reject("appears in a matrix constraint");
        }
        let mut defs = vec![None; var.svec_len()];
        for (r, h) in p.equalities.iter().enumerate() {
            let grads: Vec<Vec<f64>> = points.iter().map(|z| h.gradient(z)).collect();
            let hit: Vec<usize> = range.clone().filter(|&t| grads[0][t].abs() > STRUCTURE_TOL).collect();
            if hit.is_empty() {
                continue;
            }
            if hit.len() != 1 {
                return reject("an equality couples several slack entries");
            }
            let t = hit[0];
            let sigma = grads[0][t];
            if (grads[1][t] - sigma).abs() > STRUCTURE_TOL * (1.0 + sigma.abs()) {
                return reject("slack enters an equality nonlinearly");
            }
            if grads[1].iter().enumerate().any(|(k, g)| k != t && range.contains(&k) && g.abs() > STRUCTURE_TOL) {
                return reject("an equality couples several slack entries");
            }
            for z in &points {
                if let Some(hess) = h.hessian(z) {
                    if (0..arity).any(|k| hess[(t, k)].abs() > STRUCTURE_TOL) {
                        return reject("slack enters an equality nonlinearly");
                    }
                }
            }
            if defs[t - off].is_some() {
                return reject("an entry is defined by more than one equality");
            }
            if eq_used[r] {
                return reject("an equality defines entries of two slacks");
            }
            eq_used[r] = true;
            defs[t - off] = Some((r, sigma));
        }
        let defs: Vec<(usize, f64)> = match defs.into_iter().collect::<Option<Vec<_>>>() {
            Some(d) => d,
            None => return reject("some entry has no defining equality"),
        };
        removed[range].iter_mut().for_each(|r| *r = true);
        definitions.push((vi, defs));
    }

    let positions: Vec<usize> = (0..arity).filter(|&k| !removed[k]).collect();
    let template = vec![0.0; arity];
    let embed = |f: &SharedFn| -> SharedFn {
        Arc::new(EmbeddedFn { inner: f.clone(), positions: positions.clone(), template: template.clone() })
    };

    for (vi, defs) in &definitions {
        let var = p.matrix_vars[*vi];
        let entries: Vec<(usize, usize, SharedFn)> = defs
            .iter()
            .enumerate()
            .map(|(t, &(r, sigma))| {
                let (i, j) = svec_position(t);
                let f: SharedFn = Arc::new(ScaledFn { inner: embed(&p.equalities[r]), scale: -1.0 / sigma });
                (i, j, f)
            })
            .collect();
        if var.upper.is_finite() {
            new_constraints.push(MatrixFnConstraint {
                dim: var.dim,
                entries: entries.clone(),
                scale: 1.0,
                shift: -var.upper,
                strict: var.is_strict,
            });
        }
        if var.lower.is_finite() {
            new_constraints.push(MatrixFnConstraint {
                dim: var.dim,
                entries,
                scale: -1.0,
                shift: var.lower,
                strict: var.is_strict,
            });
        }
    }

    let mut constraints: Vec<MatrixFnConstraint> = p
        .matrix_constraints
        .iter()
        .map(|c| MatrixFnConstraint {
            entries: c.entries.iter().map(|(i, j, f)| (*i, *j, embed(f))).collect(),
            ..c.clone()
        })
        .collect();
    constraints.extend(new_constraints);

    Ok(NlpSdpData {
        n: p.n,
        matrix_vars: p.matrix_vars.iter().copied().filter(|v| !v.is_slack).collect(),
        objective: embed(&p.objective),
        inequalities: p.inequalities.iter().map(&embed).collect(),
        equalities: p
            .equalities
            .iter()
            .enumerate()
            .filter(|(r, _)| !eq_used[*r])
            .map(|(_, h)| embed(h))
            .collect(),
        matrix_constraints: constraints,
        initial: p.initial.as_ref().map(|z| positions.iter().map(|&k| z[k]).collect()),
    })
}

/// Rewrites each equality `h(z) = 0` as the pair `h(z) ≤ 0`, `−h(z) ≤ 0`.
pub fn split_equalities(p: &NlpSdpData) -> NlpSdpData {
    let mut out = p.clone();
    for h in core::mem::take(&mut out.equalities) {
        out.inequalities.push(h.clone());
        out.inequalities.push(Arc::new(negated(h)));
    }
    out
}
