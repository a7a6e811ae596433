//! Inner solvers: modified Newton with an Armijo line search, the linear-system
//! strategies behind it and Newton steps on the equality KKT system.

mod kkt;
mod linear;
mod newton;
mod objective;

pub use kkt::{kkt_minimize, kkt_step, KktOutcome};
pub use linear::{precond_diagonal, solve_direct, solve_pcg, CgResult, Direction, LbfgsStore, LinearSolver, Precond};
pub use newton::{armijo_linesearch, newton_minimize, InnerStatus, LineSearch, NewtonResult};
pub use objective::PenaltyObjective;

use alloc::vec::Vec;

use crate::error::Result;
use crate::linalg::SymMatrix;

/// Smooth function with a settable evaluation point for derivatives.
pub trait SmoothFn {
    fn dim(&self) -> usize;
    /// `None` outside the domain.
    fn value(&self, x: &[f64]) -> Option<f64>;
    /// Moves the derivative point to `x` and returns the gradient there.
    fn set_point(&mut self, x: &[f64]) -> Result<Vec<f64>>;
    /// Hessian at the current point.
    fn hessian(&mut self) -> Result<SymMatrix>;
    /// Hessian-vector product at the current point.
    fn hess_vec(&mut self, w: &[f64]) -> Result<Vec<f64>> {
        Ok(self.hessian()?.mul_vec(w))
    }
    fn hess_diag(&mut self) -> Result<Vec<f64>> {
        Ok(self.hessian()?.diagonal())
    }
}

/// Work counters of the inner solver.
#[derive(Debug, Clone, Default, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct NewtonStats {
    pub newton_steps: usize,
    pub cg_steps: usize,
    pub factorizations: usize,
    pub last_gradient_norm: f64,
    /// Shifts `β` of every modified factorization.
    pub shifts_applied: Vec<f64>,
}

impl NewtonStats {
    pub fn absorb(&mut self, other: &NewtonStats) {
        self.newton_steps += other.newton_steps;
        self.cg_steps += other.cg_steps;
        self.factorizations += other.factorizations;
        self.last_gradient_norm = other.last_gradient_norm;
        self.shifts_applied.extend_from_slice(&other.shifts_applied);
    }
}
