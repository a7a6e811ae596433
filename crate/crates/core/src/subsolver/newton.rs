use alloc::vec::Vec;

use super::{LinearSolver, NewtonStats, SmoothFn};
use crate::config::SolverConfig;
use crate::error::Result;
use crate::linalg::{dot, factorize_shifted, lambda_min_bisection, norm2};

/// Steps shorter than this after a shifted factorization trigger the
/// eigenvalue-based shift.
const SHORT_STEP: f64 = 1e-4;
const ROUNDING_SLACK: f64 = 4.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LineSearch {
    Accepted { step: f64, value: f64 },
    /// `gᵀd ≥ 0`.
    NotDescent,
    /// Backtracked below the minimum step.
    TooShort,
}

/// Backtracking `s = 1, ½, ¼, …` until `F(x + sd) ≤ F(x) + c₁ s gᵀd`.
/// Points outside the domain count as `F = +∞`. The test allows a few ulps of
/// `|F(x)|` so that steps below the rounding level of `F` are not rejected.
pub fn armijo_linesearch(
    f: &dyn SmoothFn,
    x: &[f64],
    fx: f64,
    d: &[f64],
    gtd: f64,
    c1: f64,
    min_step: f64,
) -> LineSearch {
    if !(gtd < 0.0) {
        return LineSearch::NotDescent;
    }
    let slack = ROUNDING_SLACK * f64::EPSILON * fx.abs();
    let mut step = 1.0;
    let mut trial: Vec<f64> = x.to_vec();
    while step >= min_step {
        trial.iter_mut().zip(x.iter().zip(d)).for_each(|(t, (xi, di))| *t = xi + step * di);
        if let Some(v) = f.value(&trial) {
            if v.is_finite() && v <= fx + c1 * step * gtd + slack {
                return LineSearch::Accepted { step, value: v };
            }
        }
        step *= 0.5;
    }
    LineSearch::TooShort
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum InnerStatus {
    Converged,
    MaxIterations,
    LinesearchFailure,
}

#[derive(Debug, Clone)]
pub struct NewtonResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub grad_norm: f64,
    pub status: InnerStatus,
    pub stats: NewtonStats,
}

/// Modified Newton method: minimizes `f` from `x0` until `‖∇f‖ ≤ tol` or
/// `max_steps` Newton steps have been taken.
///
/// Indefinite Hessians are shifted by the factorization search of
/// [`crate::linalg::modified_factorize`]. If the line search then only
/// accepts a step below `1e-4`, the shift is recomputed as `−1.5·λ_min(H)`
/// with `λ_min` bracketed by bisection.
pub fn newton_minimize(
    f: &mut dyn SmoothFn,
    x0: &[f64],
    tol: f64,
    max_steps: usize,
    solver: &mut LinearSolver,
    cfg: &SolverConfig,
) -> Result<NewtonResult> {
    let mut stats = NewtonStats::default();
    let mut x = x0.to_vec();
    let mut fx = f.value(&x).unwrap_or(f64::INFINITY);
    loop {
        let g = f.set_point(&x)?;
        let gn = norm2(&g);
        stats.last_gradient_norm = gn;
        if gn <= tol {
            return Ok(NewtonResult { x, value: fx, grad_norm: gn, status: InnerStatus::Converged, stats });
        }
        if stats.newton_steps >= max_steps {
            return Ok(NewtonResult { x, value: fx, grad_norm: gn, status: InnerStatus::MaxIterations, stats });
        }
        let dir = solver.direction(f, &g, &mut stats)?;
        stats.newton_steps += 1;
        let mut ls = armijo_linesearch(f, &x, fx, &dir.d, dot(&g, &dir.d), cfg.armijo_c1, cfg.min_step);
        let mut d = dir.d;
        let short = match ls {
            LineSearch::Accepted { step, .. } => step < SHORT_STEP,
            _ => true,
        };
        if short && dir.shift > 0.0 {
            if let Some(h) = &dir.hessian {
                let lmin = lambda_min_bisection(h, dir.shift, 1e-2);
                let beta = -1.5 * lmin;
                if beta > 0.0 {
                    if let Ok(fac) = factorize_shifted(h, beta) {
                        stats.factorizations += 1;
                        stats.shifts_applied.push(beta);
                        let mut d2 = fac.solve(&g)?;
                        d2.iter_mut().for_each(|v| *v = -*v);
                        let ls2 = armijo_linesearch(f, &x, fx, &d2, dot(&g, &d2), cfg.armijo_c1, cfg.min_step);
                        let better = match (ls, ls2) {
                            (_, LineSearch::Accepted { .. }) if !matches!(ls, LineSearch::Accepted { .. }) => true,
                            (LineSearch::Accepted { value: v1, .. }, LineSearch::Accepted { value: v2, .. }) => v2 < v1,
                            _ => false,
                        };
                        if better {
                            ls = ls2;
                            d = d2;
                        }
                    }
                }
            }
        }
        match ls {
            LineSearch::Accepted { step, value } => {
                x.iter_mut().zip(&d).for_each(|(xi, di)| *xi += step * di);
                fx = value;
            }
            _ => {
                return Ok(NewtonResult {
                    x,
                    value: fx,
                    grad_norm: gn,
                    status: InnerStatus::LinesearchFailure,
                    stats,
                })
            }
        }
    }
}
