//! Outer augmented-Lagrangian loop: inner solves, multiplier and penalty
//! updates, stopping tests, restarts and the iteration trace.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)] // shadowed by std's inherent methods when std is linked
use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::config::{EqualityMode, SolverConfig, StopRule};
use crate::error::{Error, Result};
use crate::linalg::{eig_extremes, inner_unchecked, norm2, SymMatrix};
use crate::model::{BlockKind, LinearSdpData, Model, ProblemSpec};
use crate::penalty::{update_multipliers, update_penalty, IterateState};
use crate::subsolver::{kkt_minimize, newton_minimize, InnerStatus, LinearSolver, NewtonStats, PenaltyObjective};

/// Number of stalled outer iterations before `p_eps` is lowered.
const STALL_ITERATIONS: usize = 5;
const STALL_TOL: f64 = 1e-12;
const MAX_P_EPS_CUTS: usize = 2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "detail", rename_all = "snake_case")]
pub enum SolveStatus {
    Optimal,
    /// A feasibility problem ended with a negative bound variable.
    Feasible,
    MaxIterations,
    /// The restart budget ran out; carries the number of restarts made.
    Restarted(usize),
    Failed(String),
}

/// DIMACS error measures of a linear SDP; the second and third are zero by
/// construction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DimacsErrors {
    pub err1: f64,
    pub err2: f64,
    pub err3: f64,
    pub err4: f64,
    pub err5: f64,
    pub err6: f64,
}

impl DimacsErrors {
    pub fn max(&self) -> f64 {
        [self.err1, self.err4, self.err5, self.err6].into_iter().fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeasibilityVerdict {
    StrictlyFeasible,
    MarginallyFeasible,
    /// The solver only finds critical points, so a positive bound does not prove infeasibility.
    PossiblyInfeasible,
}

/// One row of the iteration table: `it | obj | opt | Nwt | CG`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub iteration: usize,
    pub objective: f64,
    pub grad_norm: f64,
    pub newton: usize,
    pub cg: usize,
}

impl core::fmt::Display for TraceRow {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        write!(f, "{:>4} {:>16.8e} {:>10.2e} {:>6} {:>7}", self.iteration, self.objective, self.grad_norm, self.newton, self.cg)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub status: SolveStatus,
    pub objective: f64,
    pub x: Vec<f64>,
    /// Multiplier estimate `p²ZUZ` at the final point, one matrix per block.
    pub u: Vec<SymMatrix>,
    pub v: Vec<f64>,
    pub outer_iterations: usize,
    pub restarts: usize,
    pub penalty: f64,
    /// Largest eigenvalue over the penalized blocks at `x`.
    pub max_violation: f64,
    pub equality_residual: f64,
    pub stats: NewtonStats,
    pub dimacs: Option<DimacsErrors>,
    pub verdict: Option<FeasibilityVerdict>,
    pub trace: Vec<TraceRow>,
    /// Outer iterates, present when `record_iterates` is set.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub iterates: Vec<Vec<f64>>,
}

/// Inputs of the main stopping test at one outer iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StopInputs {
    /// Objective `f(x^{k+1})`.
    pub f: f64,
    /// Augmented Lagrangian `F(x^{k+1}, U^k, p^k)`.
    pub big_f: f64,
    /// Objective of the previous outer iterate.
    pub f_prev: Option<f64>,
    pub grad_norm: f64,
    pub lmax: f64,
    /// `⟨A(x), U⟩` summed over blocks.
    pub complementarity: f64,
    pub dimacs: Option<DimacsErrors>,
}

/// Main stopping test. The objective rule needs a previous objective.
pub fn stop_main(inp: &StopInputs, cfg: &SolverConfig) -> bool {
    let base = match cfg.stop_rule {
        StopRule::Objective => {
            let Some(prev) = inp.f_prev else { return false };
            let gap = (inp.f - inp.big_f).abs() / (1.0 + inp.f.abs());
            let change = (inp.f - prev).abs() / (1.0 + inp.f.abs());
            gap < cfg.eps1 && change < cfg.eps1 && inp.grad_norm <= cfg.eps2
        }
        StopRule::Kkt => inp.lmax.min(inp.complementarity.abs()).min(inp.grad_norm) <= cfg.eps2,
    };
    base && (!cfg.dimacs || inp.dimacs.is_some_and(|d| d.max() <= cfg.delta_dimacs))
}

/// Inner tolerance for the next subproblem. `triggered` records whether the
/// relative gap `|f − F|/(1 + |f|)` has dropped below `10√ε₁` at some point.
pub fn stop_subproblem_tolerance(alpha: f64, triggered: bool, cfg: &SolverConfig) -> f64 {
    if triggered {
        let next = alpha * cfg.alpha_shrink;
        // snap to the floor instead of stopping one rounding error above it
        if next <= cfg.alpha_final * (1.0 + 1e-9) {
            cfg.alpha_final
        } else {
            next
        }
    } else {
        alpha
    }
}

pub fn feasibility_verdict(lambda: f64, tol: f64) -> FeasibilityVerdict {
    if lambda < -tol {
        FeasibilityVerdict::StrictlyFeasible
    } else if lambda <= tol {
        FeasibilityVerdict::MarginallyFeasible
    } else {
        FeasibilityVerdict::PossiblyInfeasible
    }
}

/// DIMACS errors of `(x, U)` for `min fᵀx` subject to `Σ x_k A_k − A₀ ⪯ 0`.
///
/// The dual of this form is `max −⟨A₀, U⟩` subject to `⟨A_k, U⟩ + f_k = 0`,
/// `U ⪰ 0`, so the measures read
/// `err₁ = ‖(⟨A_k,U⟩ + f_k)_k‖/(1+‖f‖)`,
/// `err₄ = max(0, λ_max(Σ x_k A_k − A₀))/(1+‖A₀‖)`,
/// `err₅ = |fᵀx + ⟨A₀,U⟩|/(1+|⟨A₀,U⟩|+|fᵀx|)` and
/// `err₆ = |⟨Σ x_k A_k − A₀, U⟩|/(1+|⟨A₀,U⟩|+|fᵀx|)`.
pub fn dimacs_errors(p: &LinearSdpData, x: &[f64], u: &[SymMatrix]) -> Result<DimacsErrors> {
    p.validate()?;
    if x.len() != p.n {
        return Err(Error::DimensionMismatch { expected: p.n, found: x.len() });
    }
    if u.len() != p.blocks.len() {
        return Err(Error::DimensionMismatch { expected: p.blocks.len(), found: u.len() });
    }
    let mut dual_res = p.cost.clone();
    let mut a0_u = 0.0;
    let mut a0_norm2 = 0.0;
    let mut lmax = f64::NEG_INFINITY;
    let mut slack_u = 0.0;
    for (b, ub) in p.blocks.iter().zip(u) {
        if ub.dim() != b.dim {
            return Err(Error::DimensionMismatch { expected: b.dim, found: ub.dim() });
        }
        for (k, a) in &b.coeffs {
            dual_res[*k] += a.inner_sym(ub);
        }
        a0_u += b.a0.inner_sym(ub);
        let a0 = b.a0.to_sym();
        a0_norm2 += inner_unchecked(&a0, &a0);
        let mut s = a0.scaled(-1.0);
        for (k, a) in &b.coeffs {
            a.add_to(&mut s, x[*k]);
        }
        lmax = lmax.max(eig_extremes(&s).1);
        slack_u += inner_unchecked(&s, ub);
    }
    let fx: f64 = p.cost.iter().zip(x).map(|(c, xi)| c * xi).sum();
    let denom = 1.0 + a0_u.abs() + fx.abs();
    Ok(DimacsErrors {
        err1: norm2(&dual_res) / (1.0 + norm2(&p.cost)),
        err2: 0.0,
        err3: 0.0,
        err4: lmax.max(0.0) / (1.0 + a0_norm2.sqrt()),
        err5: (fx + a0_u).abs() / denom,
        err6: slack_u.abs() / denom,
    })
}

/// Solves a problem from its stored initial point (or zero).
pub fn solve(spec: &ProblemSpec, cfg: &SolverConfig) -> SolveReport {
    solve_from(spec, cfg, None)
}

/// Solves from an explicit initial point.
pub fn solve_from(spec: &ProblemSpec, cfg: &SolverConfig, x0: Option<&[f64]>) -> SolveReport {
    if let Err(field) = cfg.check() {
        return failed(format!("invalid configuration: {field}"));
    }
    let model = match Model::new(spec) {
        Ok(m) => m,
        Err(e) => return failed(e.to_string()),
    };
    let model = match cfg.equality_mode {
        EqualityMode::Split => model.split_equalities(),
        EqualityMode::Direct => model,
    };
    let linear = match spec {
        ProblemSpec::Linear(d) => Some(d),
        _ => None,
    };
    let x1: Vec<f64> = match x0.or(model.initial()) {
        Some(x) => x.to_vec(),
        None => model.zero_point(),
    };
    if let Err(e) = model.check_point(&x1) {
        return failed(e.to_string());
    }
    let mut restarts = 0;
    loop {
        let scale = 10f64.powi(restarts as i32);
        match run(&model, linear, cfg, &x1, scale) {
            Ok(mut r) => {
                r.restarts = restarts;
                return r;
            }
            Err(Aborted::Restart(mut last)) => {
                if restarts >= cfg.max_restarts {
                    last.status = SolveStatus::Restarted(restarts);
                    last.restarts = restarts;
                    return last;
                }
                restarts += 1;
            }
            Err(Aborted::Fault(msg)) => return failed(msg),
        }
    }
}

fn failed(msg: String) -> SolveReport {
    SolveReport {
        status: SolveStatus::Failed(msg),
        objective: f64::NAN,
        x: Vec::new(),
        u: Vec::new(),
        v: Vec::new(),
        outer_iterations: 0,
        restarts: 0,
        penalty: f64::NAN,
        max_violation: f64::NAN,
        equality_residual: f64::NAN,
        stats: NewtonStats::default(),
        dimacs: None,
        verdict: None,
        trace: vec![TraceRow { iteration: 0, objective: f64::NAN, grad_norm: f64::NAN, newton: 0, cg: 0 }],
        iterates: Vec::new(),
    }
}

enum Aborted {
    Restart(SolveReport),
    Fault(String),
}

impl From<Error> for Aborted {
    fn from(e: Error) -> Self {
        Aborted::Fault(e.to_string())
    }
}

struct Outer<'a> {
    model: &'a Model,
    linear: Option<&'a LinearSdpData>,
    cfg: &'a SolverConfig,
    st: IterateState,
    stats: NewtonStats,
    trace: Vec<TraceRow>,
    iterates: Vec<Vec<f64>>,
}

impl Outer<'_> {
    fn push_row(&mut self, iteration: usize, x: &[f64], grad_norm: f64) {
        self.trace.push(TraceRow {
            iteration,
            objective: self.model.objective().value(x),
            grad_norm,
            newton: self.stats.newton_steps,
            cg: self.stats.cg_steps,
        });
        if self.cfg.record_iterates {
            self.iterates.push(x.to_vec());
        }
    }

    /// Undamped multipliers `p²ZUZ` at `x` for the current `U` and `p`.
    fn candidates(&self, x: &[f64]) -> Result<Vec<SymMatrix>> {
        self.st.lagrangian(self.model).multiplier_candidates(x)
    }

    fn complementarity(&self, x: &[f64], u: &[SymMatrix]) -> f64 {
        self.model
            .blocks()
            .iter()
            .zip(u)
            .filter(|(b, _)| b.kind == BlockKind::Penalty)
            .map(|(b, ub)| inner_unchecked(&b.value(x), ub))
            .sum()
    }

    fn report(&self, status: SolveStatus, x: Vec<f64>, u: Vec<SymMatrix>, outer: usize) -> SolveReport {
        let dimacs = self.linear.and_then(|d| dimacs_errors(d, &x, &u).ok());
        let mut status = status;
        let verdict = self.model.feasibility_var().map(|k| {
            // a slightly violated A(x) ⪯ λI still certifies λ + violation
            let lam = x[k] + self.model.max_violation(&x).max(0.0);
            let v = feasibility_verdict(lam, self.cfg.feasibility_tol);
            if v == FeasibilityVerdict::StrictlyFeasible
                && matches!(status, SolveStatus::Optimal | SolveStatus::MaxIterations)
            {
                status = SolveStatus::Feasible;
            }
            v
        });
        SolveReport {
            status,
            objective: self.model.objective().value(&x),
            max_violation: self.model.max_violation(&x),
            equality_residual: norm2(&self.model.equality_values(&x)),
            x,
            u,
            v: self.st.v.clone(),
            outer_iterations: outer,
            restarts: 0,
            penalty: self.st.p,
            stats: self.stats.clone(),
            dimacs,
            verdict,
            trace: self.trace.clone(),
            iterates: self.iterates.clone(),
        }
    }
}

fn run(
    model: &Model,
    linear: Option<&LinearSdpData>,
    cfg: &SolverConfig,
    x1: &[f64],
    mu_scale: f64,
) -> core::result::Result<SolveReport, Aborted> {
    let mut st = IterateState::new(model, x1.to_vec(), cfg);
    st.u.iter_mut().for_each(|u| u.scale(mu_scale));
    if model.blocks().iter().any(|b| b.kind == BlockKind::Barrier) {
        // barrier blocks must be strictly feasible from the start
        st.lagrangian(model).eval_blocks(x1)?;
    }
    let g0 = norm2(&st.lagrangian(model).gradient(x1)?);
    let mut o = Outer { model, linear, cfg, st, stats: NewtonStats::default(), trace: Vec::new(), iterates: Vec::new() };
    o.push_row(0, x1, g0);

    let mut solver = LinearSolver::new(cfg);
    let direct_eq = cfg.equality_mode == EqualityMode::Direct && !model.equalities().is_empty();
    let single_pass = model.blocks().is_empty();
    let mut f_prev = Some(model.objective().value(x1));
    let mut triggered = false;
    let mut p_eps = cfg.p_eps;
    let mut stall = 0;
    let mut cuts = 0;

    for k in 1..=cfg.max_outer {
        let budget = cfg.max_inner.min(cfg.max_newton.saturating_sub(o.stats.newton_steps));
        if budget == 0 {
            let u = o.candidates(&o.st.x)?;
            let x = o.st.x.clone();
            return Ok(o.report(SolveStatus::MaxIterations, x, u, k - 1));
        }
        let tol = if single_pass { cfg.eps2 } else { o.st.alpha };
        let (x_new, grad_norm, inner_status) = if direct_eq {
            let mut inner = NewtonStats::default();
            let (x, v, status) =
                kkt_minimize(model, &o.st.u, o.st.p, o.st.s, &o.st.x, &o.st.v, tol, budget, cfg, &mut inner)?;
            o.stats.absorb(&inner);
            o.st.v = v;
            (x, inner.last_gradient_norm, status)
        } else {
            let mut obj = PenaltyObjective::new(o.st.lagrangian(model), cfg.hess_vec, cfg.fd_eps);
            let r = newton_minimize(&mut obj, &o.st.x, tol, budget, &mut solver, cfg)?;
            o.stats.absorb(&r.stats);
            (r.x, r.grad_norm, r.status)
        };
        let al = o.st.lagrangian(model);
        let big_f = al.value(&x_new)?;
        let f = model.objective().value(&x_new);
        let lmax = model.max_violation(&x_new);
        if lmax < 0.0 && lmax < o.st.feas_lmax {
            o.st.x_feas = Some(x_new.clone());
            o.st.feas_lmax = lmax;
        }
        o.push_row(k, &x_new, grad_norm);

        let u_hat = o.candidates(&x_new)?;
        if single_pass {
            let status = if inner_status == InnerStatus::Converged {
                SolveStatus::Optimal
            } else {
                SolveStatus::MaxIterations
            };
            o.st.x = x_new.clone();
            return Ok(o.report(status, x_new, u_hat, k));
        }
        let inputs = StopInputs {
            f,
            big_f,
            f_prev,
            grad_norm,
            lmax,
            complementarity: o.complementarity(&x_new, &u_hat),
            dimacs: linear.and_then(|d| dimacs_errors(d, &x_new, &u_hat).ok()),
        };
        if stop_main(&inputs, cfg) {
            o.st.x = x_new.clone();
            return Ok(o.report(SolveStatus::Optimal, x_new, u_hat, k));
        }

        let u_new = update_multipliers(model, &o.st, &x_new, cfg.mu_a)?;
        let pcfg = SolverConfig { p_eps, ..cfg.clone() };
        let step = match update_penalty(model, &o.st, &x_new, &pcfg) {
            Ok(s) => s,
            Err(Error::RestartRequired) => {
                let r = o.report(SolveStatus::MaxIterations, x_new, u_hat, k);
                return Err(Aborted::Restart(r));
            }
            Err(e) => return Err(e.into()),
        };
        o.st.u = u_new;
        o.st.x = step.x;
        o.st.p = step.p;
        o.st.l = step.l;
        o.st.s *= cfg.barrier_shrink;

        if (f - big_f).abs() / (1.0 + f.abs()) < 10.0 * cfg.eps1.sqrt() {
            triggered = true;
        }
        o.st.alpha = stop_subproblem_tolerance(o.st.alpha, triggered, cfg);

        match f_prev {
            Some(prev) if (f - prev).abs() <= STALL_TOL * (1.0 + f.abs()) => stall += 1,
            _ => stall = 0,
        }
        if stall >= STALL_ITERATIONS && cuts < MAX_P_EPS_CUTS {
            p_eps /= 10.0;
            cuts += 1;
            stall = 0;
        }
        f_prev = Some(f);
    }
    let u = o.candidates(&o.st.x)?;
    let x = o.st.x.clone();
    Ok(o.report(SolveStatus::MaxIterations, x, u, cfg.max_outer))
}
