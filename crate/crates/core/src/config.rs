use serde::{Deserialize, Serialize};

/// How Newton systems are solved.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolverKind {
    /// Cholesky factorization of the assembled Hessian.
    Direct,
    /// Preconditioned conjugate gradients on Hessian-vector products.
    Cg,
    /// CG first, falling back to a factorization when the iteration cap is hit.
    Hybrid,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PrecondKind {
    None,
    Diagonal,
    Lbfgs,
}

/// Source of Hessian-vector products in the iterative solvers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HessVecKind {
    /// Implicit operator formula for affine problems, the assembled Hessian otherwise.
    Auto,
    Explicit,
    FiniteDifference,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EqualityMode {
    /// Newton steps on the KKT system of the subproblem.
    Direct,
    /// Each equality becomes two inequalities.
    Split,
}

/// Which pairs the L-BFGS preconditioner keeps from a CG run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PairSelection {
    Last,
    Equidistant,
}

/// Outer stopping rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StopRule {
    /// Relative gap `|f − F|` and objective change below `eps1`, and `‖∇F‖ ≤ eps2`.
    Objective,
    /// `min{λ_max(A(x)), |⟨A(x), U⟩|, ‖∇F‖} ≤ eps2`.
    Kkt,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    /// Penalty reduction factor.
    pub pi: f64,
    /// Penalty floor below which `p` is frozen.
    pub p_eps: f64,
    /// Multiplier damping.
    pub mu_a: f64,
    pub alpha_init: f64,
    pub alpha_final: f64,
    /// Per-iteration factor applied to `alpha` once the objective gap is small.
    pub alpha_shrink: f64,
    pub eps1: f64,
    pub eps2: f64,
    pub stop_rule: StopRule,
    /// Additionally require the DIMACS errors (linear problems only).
    pub dimacs: bool,
    pub delta_dimacs: f64,
    pub solver: SolverKind,
    pub precond: PrecondKind,
    pub hess_vec: HessVecKind,
    pub cg_tol: f64,
    pub cg_cap: usize,
    pub lbfgs_pairs: usize,
    pub pair_selection: PairSelection,
    /// Consecutive CG cap hits after which hybrid mode stays direct.
    pub hybrid_switch: usize,
    /// Relative initial shift for the modified factorization.
    pub beta0_rel: f64,
    pub barrier_init: f64,
    pub barrier_shrink: f64,
    pub equality_mode: EqualityMode,
    pub max_outer: usize,
    /// Newton steps per subproblem.
    pub max_inner: usize,
    /// Newton steps over the whole solve.
    pub max_newton: usize,
    pub max_restarts: usize,
    pub armijo_c1: f64,
    pub min_step: f64,
    /// Relative step for finite-difference Hessian-vector products.
    pub fd_eps: f64,
    /// Verdict tolerance for feasibility problems.
    pub feasibility_tol: f64,
    /// Keep every outer iterate in the report.
    pub record_iterates: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            pi: 0.5,
            p_eps: 1e-6,
            mu_a: 0.5,
            alpha_init: 1e-2,
            alpha_final: 1e-7,
            alpha_shrink: 0.316_227_766_016_837_94,
            eps1: 1e-7,
            eps2: 1e-7,
            stop_rule: StopRule::Objective,
            dimacs: false,
            delta_dimacs: 1e-7,
            solver: SolverKind::Direct,
            precond: PrecondKind::Diagonal,
            hess_vec: HessVecKind::Auto,
            cg_tol: 5e-2,
            cg_cap: 100,
            lbfgs_pairs: 16,
            pair_selection: PairSelection::Equidistant,
            hybrid_switch: 3,
            beta0_rel: 1e-3,
            barrier_init: 1.0,
            barrier_shrink: 0.1,
            equality_mode: EqualityMode::Direct,
            max_outer: 100,
            max_inner: 200,
            max_newton: 5000,
            max_restarts: 3,
            armijo_c1: 1e-4,
            min_step: 1e-12,
            fd_eps: 1e-6,
            feasibility_tol: 1e-8,
            record_iterates: false,
        }
    }
}

impl SolverConfig {
    /// Checks ranges; returns a description of the first offending field.
    pub fn check(&self) -> Result<(), &'static str> {
        let positive = [
            (self.p_eps, "p_eps"),
            (self.alpha_init, "alpha_init"),
            (self.alpha_final, "alpha_final"),
            (self.eps1, "eps1"),
            (self.eps2, "eps2"),
            (self.delta_dimacs, "delta_dimacs"),
            (self.cg_tol, "cg_tol"),
            (self.beta0_rel, "beta0_rel"),
            (self.barrier_init, "barrier_init"),
            (self.armijo_c1, "armijo_c1"),
            (self.min_step, "min_step"),
            (self.fd_eps, "fd_eps"),
        ];
        for (v, name) in positive {
            if !(v > 0.0) {
                return Err(name);
            }
        }
        if !(self.pi > 0.0 && self.pi < 1.0) {
            return Err("pi");
        }
        if !(self.mu_a > 0.0 && self.mu_a <= 1.0) {
            return Err("mu_a");
        }
        if !(self.alpha_shrink > 0.0 && self.alpha_shrink < 1.0) {
            return Err("alpha_shrink");
        }
        if !(self.barrier_shrink > 0.0 && self.barrier_shrink < 1.0) {
            return Err("barrier_shrink");
        }
        if self.lbfgs_pairs == 0 || self.cg_cap == 0 || self.max_outer == 0 || self.max_inner == 0 {
            return Err("iteration limits");
        }
        Ok(())
    }
}
