use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)] // shadowed by std's inherent methods when std is linked
use num_traits::Float;

use super::{InnerStatus, NewtonStats};
use crate::config::SolverConfig;
use crate::error::{Error, Result};
use crate::linalg::{dot, factorize, factorize_shifted, norm2, Ldlt, SymMatrix};
use crate::model::Model;
use crate::penalty::AugLag;

const MAX_DOUBLINGS: u32 = 30;
const DELTA_C: f64 = 1e-8;

/// Result of one step on the equality KKT system.
#[derive(Debug, Clone, PartialEq)]
pub struct KktOutcome {
    pub x: Vec<f64>,
    pub v: Vec<f64>,
    pub step: f64,
    /// Regularization of the `(1,1)` block that gave the right inertia.
    pub delta: f64,
    /// `‖∇ₓL‖` and `‖h‖` at the input point.
    pub grad_norm: f64,
    pub eq_norm: f64,
}

/// One damped Newton step on `∇F̄(x) + ∇h(x)v = 0`, `h(x) = 0`, where `F̄` is
/// the augmented Lagrangian without the equality term.
///
/// The KKT matrix `[[H + δI, Jᵀ], [J, −δ_c I]]` is factorized by LDLᵀ; `δ`
/// starts at zero, then tries `100ε(1 + ‖H‖_∞)`, then doubles from
/// `1e-8(1 + ‖H‖_∞)` until the inertia is `(n, m, 0)`. When `H + δI` admits a
/// Cholesky factor the system is solved through the Schur complement instead.
/// A zero pivot switches on `δ_c = 1e-8`. The step length comes from an
/// Armijo search on `F̄ + ‖h‖²/(2p)`.
#[allow(clippy::too_many_arguments)]
pub fn kkt_step(
    model: &Model,
    u: &[SymMatrix],
    p: f64,
    s: f64,
    x: &[f64],
    v: &[f64],
    cfg: &SolverConfig,
    stats: &mut NewtonStats,
) -> Result<KktOutcome> {
    let n = model.n();
    let m = model.equalities().len();
    let al = AugLag { model, u, v, p, s };
    let bare = AugLag { model, u, v: &[], p, s };
    let blocks = al.eval_blocks(x)?;
    let data = al.deriv_data(x, &blocks);
    let grad_l = al.gradient_from(x, &data);
    let hess = al.hessian_from(x, &data);
    let h = model.equality_values(x);
    let jac: Vec<Vec<f64>> = model.equalities().iter().map(|e| e.gradient(x)).collect();
    // ∇F̄ = ∇L − Jᵀv
    let mut grad_bar = grad_l.clone();
    for (row, &vr) in jac.iter().zip(v) {
        grad_bar.iter_mut().zip(row).for_each(|(gi, ji)| *gi -= vr * ji);
    }
    let grad_norm = norm2(&grad_l);
    let eq_norm = norm2(&h);

    let merit = |y: &[f64]| -> Option<f64> {
        let f = bare.value(y).ok()?;
        let hy = model.equality_values(y);
        Some(f + dot(&hy, &hy) / (2.0 * p))
    };
    let m0 = merit(x).ok_or(Error::NonFinite("merit at the current point"))?;

    let scale = 1.0 + hess.norm_inf();
    // a PSD Hessian can show negative pivots at round-off level; try to absorb those first
    let round_off = 100.0 * f64::EPSILON * scale;
    let delta0 = 1e-8 * scale;
    let mut delta = 0.0;
    let mut delta_c = 0.0;
    let mut doublings = 0;
    let mut rhs: Vec<f64> = grad_bar.iter().map(|g| -g).collect();
    rhs.extend(h.iter().map(|hi| -hi));
    loop {
        let shifted_h = if delta > 0.0 { shifted(&hess, delta) } else { hess.clone() };
        let mut retry;
        let sol = if let Some(sol) = schur_solve(&shifted_h, &jac, &rhs, stats) {
            retry = false;
            sol
        } else {
            let kkt = SymMatrix::from_fn(n + m, |i, j| {
                if i < n {
                    shifted_h[(i, j)]
                } else if j < n {
                    jac[i - n][j]
                } else if i == j {
                    -delta_c
                } else {
                    0.0
                }
            });
            let ldl = Ldlt::factor(&kkt);
            stats.factorizations += 1;
            let inertia = ldl.inertia();
            retry = inertia.positive != n || inertia.negative != m || inertia.zero != 0;
            if retry && inertia.zero > 0 && delta_c == 0.0 && m > 0 && inertia.positive == n {
                delta_c = DELTA_C;
                continue;
            }
            if retry { Vec::new() } else { ldl.solve(&rhs) }
        };
        let mut slope = 0.0;
        if !retry {
            let dx = &sol[..n];
            let jdx: Vec<f64> = jac.iter().map(|row| dot(row, dx)).collect();
            slope = dot(&grad_bar, dx) + dot(&h, &jdx) / p;
            retry = !(slope < 0.0) && norm2(dx) > 0.0;
        }
        if retry {
            if doublings >= MAX_DOUBLINGS {
                return Err(Error::InertiaCorrection(MAX_DOUBLINGS));
            }
            delta = if delta == 0.0 {
                round_off
            } else if delta == round_off {
                delta0
            } else {
                2.0 * delta
            };
            doublings += 1;
            continue;
        }
        if delta > 0.0 {
            stats.shifts_applied.push(delta);
        }
        stats.newton_steps += 1;
        let dx = &sol[..n];
        let v_plus = &sol[n..];
        if norm2(dx) == 0.0 {
            return Ok(KktOutcome { x: x.to_vec(), v: v_plus.to_vec(), step: 1.0, delta, grad_norm, eq_norm });
        }
        let mut step = 1.0;
        let mut trial = x.to_vec();
        while step >= cfg.min_step {
            trial.iter_mut().zip(x.iter().zip(dx)).for_each(|(t, (xi, di))| *t = xi + step * di);
            if let Some(mt) = merit(&trial) {
                if mt.is_finite() && mt <= m0 + cfg.armijo_c1 * step * slope + 4.0 * f64::EPSILON * m0.abs() {
                    let v_new = v.iter().zip(v_plus).map(|(a, b)| a + step * (b - a)).collect();
                    return Ok(KktOutcome { x: trial, v: v_new, step, delta, grad_norm, eq_norm });
                }
            }
            step *= 0.5;
        }
        return Ok(KktOutcome { x: x.to_vec(), v: v.to_vec(), step: 0.0, delta, grad_norm, eq_norm });
    }
}

fn shifted(h: &SymMatrix, delta: f64) -> SymMatrix {
    let mut out = h.clone();
    out.add_identity(delta);
    out
}

/// Solves the KKT system by the Schur complement `J H⁻¹ Jᵀ` when `H` has a
/// Cholesky factor; a positive definite `H` already gives the right inertia.
/// Rank-deficient `J` gets a small shift on the Schur complement.
fn schur_solve(h: &SymMatrix, jac: &[Vec<f64>], rhs: &[f64], stats: &mut NewtonStats) -> Option<Vec<f64>> {
    let n = h.dim();
    let fac = factorize(h).ok()?;
    stats.factorizations += 1;
    let (rg, rh) = rhs.split_at(n);
    let hinv_g = fac.solve(rg).ok()?;
    let hinv_jt: Vec<Vec<f64>> = jac.iter().map(|row| fac.solve(row)).collect::<Result<_>>().ok()?;
    let m = jac.len();
    let mut v = Vec::new();
    if m > 0 {
        let s = SymMatrix::from_fn(m, |i, j| dot(&jac[i], &hinv_jt[j]));
        let (sfac, refine) = match factorize(&s) {
            Ok(f) => (f, 0),
            Err(_) => (factorize_shifted(&s, DELTA_C * (1.0 + s.norm_inf())).ok()?, 5),
        };
        stats.factorizations += 1;
        // with rhs = (g, r): S v = J H⁻¹ g − r
        let sv: Vec<f64> = rh.iter().zip(jac).map(|(r, row)| dot(row, &hinv_g) - r).collect();
        v = sfac.solve(&sv).ok()?;
        // the shift biases a consistent singular system; refine against S itself
        for _ in 0..refine {
            let res: Vec<f64> = (0..m).map(|i| sv[i] - (0..m).map(|j| s[(i, j)] * v[j]).sum::<f64>()).collect();
            let dv = sfac.solve(&res).ok()?;
            v.iter_mut().zip(dv).for_each(|(a, b)| *a += b);
        }
    }
    let mut out: Vec<f64> = hinv_g;
    for (vi, col) in v.iter().zip(&hinv_jt) {
        out.iter_mut().zip(col).for_each(|(o, c)| *o -= vi * c);
    }
    if !out.iter().chain(&v).all(|t| t.is_finite()) {
        return None;
    }
    out.extend(v);
    Some(out)
}

/// Repeats [`kkt_step`] until `‖∇ₓL‖ ≤ tol` and `‖h‖ ≤ tol`.
#[allow(clippy::too_many_arguments)]
pub fn kkt_minimize(
    model: &Model,
    u: &[SymMatrix],
    p: f64,
    s: f64,
    x0: &[f64],
    v0: &[f64],
    tol: f64,
    max_steps: usize,
    cfg: &SolverConfig,
    stats: &mut NewtonStats,
) -> Result<(Vec<f64>, Vec<f64>, InnerStatus)> {
    let mut x = x0.to_vec();
    let mut v = if v0.len() == model.equalities().len() { v0.to_vec() } else { vec![0.0; model.equalities().len()] };
    let mut taken = 0;
    loop {
        let out = kkt_step_or_check(model, u, p, s, &x, &v, tol, taken >= max_steps, cfg, stats)?;
        match out {
            Check::Done(gn) => {
                stats.last_gradient_norm = gn;
                return Ok((x, v, InnerStatus::Converged));
            }
            Check::Budget(gn) => {
                stats.last_gradient_norm = gn;
                return Ok((x, v, InnerStatus::MaxIterations));
            }
            Check::Step(o) => {
                taken += 1;
                stats.last_gradient_norm = o.grad_norm;
                if o.step == 0.0 {
                    return Ok((x, v, InnerStatus::LinesearchFailure));
                }
                x = o.x;
                v = o.v;
            }
        }
    }
}

enum Check {
    Done(f64),
    Budget(f64),
    Step(KktOutcome),
}

#[allow(clippy::too_many_arguments)]
fn kkt_step_or_check(
    model: &Model,
    u: &[SymMatrix],
    p: f64,
    s: f64,
    x: &[f64],
    v: &[f64],
    tol: f64,
    exhausted: bool,
    cfg: &SolverConfig,
    stats: &mut NewtonStats,
) -> Result<Check> {
    let al = AugLag { model, u, v, p, s };
    let gn = norm2(&al.gradient(x)?);
    let hn = norm2(&model.equality_values(x));
    if gn <= tol && hn <= tol {
        return Ok(Check::Done(gn));
    }
    if exhausted {
        return Ok(Check::Budget(gn));
    }
    Ok(Check::Step(kkt_step(model, u, p, s, x, v, cfg, stats)?))
}
