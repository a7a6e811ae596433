//! Augmented-Lagrangian solver for linear, bilinear and nonlinear semidefinite
//! programs.
//!
//! Constraints of the form `A(x) ⪯ 0` are handled through a smooth matrix
//! penalty whose domain is controlled by a penalty parameter `p`; the resulting
//! unconstrained subproblems are minimized by a modified Newton method.
//!
//! The crate is `no_std` and only needs `alloc`.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod config;
pub mod driver;
pub mod error;
pub mod gallery;
pub mod linalg;
pub mod model;
pub mod penalty;
pub mod subsolver;

pub use config::SolverConfig;
pub use driver::{solve, solve_from, SolveReport, SolveStatus};
pub use error::{Error, Result};
