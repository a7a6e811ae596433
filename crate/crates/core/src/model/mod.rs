//! Problem classes and the uniform operator contract the solver works on.
//!
//! All three classes compile into a [`Model`]: an objective, a list of
//! matrix-constraint blocks `A_j(x) ⪯ 0` (penalized or barrier-treated) and an
//! optional list of equalities `h(x) = 0`.

mod compiled;
mod functions;
mod preprocess;

pub use compiled::{Block, BlockBody, BlockKind, Model};
pub use functions::{
    negated, ClosureFn, EmbeddedFn, LinearFn, QuadraticFn, ScalarFn, ScaledFn, SharedFn,
};
pub use preprocess::{remove_slacks, split_equalities};

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{BlockDiagMatrix, SparseSym, SymMatrix};

/// One block of a linear SDP: `Σ x_k A_k − A_0 ⪯ 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearBlock {
    pub dim: usize,
    /// Only diagonal entries are allowed (a set of scalar constraints).
    pub diagonal: bool,
    pub a0: SparseSym,
    /// `(variable, A_k)` pairs, at most one per variable; absent means zero.
    pub coeffs: Vec<(usize, SparseSym)>,
}

impl LinearBlock {
    pub fn new(dim: usize) -> Self {
        Self { dim, diagonal: false, a0: SparseSym::new(dim), coeffs: Vec::new() }
    }

    /// `A_k`, or `None` if the block does not involve variable `k`.
    pub fn coeff(&self, k: usize) -> Option<&SparseSym> {
        self.coeffs.iter().find(|(v, _)| *v == k).map(|(_, a)| a)
    }
}

/// `min fᵀx` subject to `Σ x_k A_k − A_0 ⪯ 0` in every block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearSdpData {
    pub n: usize,
    pub cost: Vec<f64>,
    pub blocks: Vec<LinearBlock>,
}

impl LinearSdpData {
    pub fn validate(&self) -> Result<()> {
        if self.cost.len() != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, found: self.cost.len() });
        }
        for (b, block) in self.blocks.iter().enumerate() {
            if block.dim == 0 {
                return Err(Error::InvalidProblem(format!("block {b} has dimension 0")));
            }
            check_sparse(&block.a0, block.dim, block.diagonal, b)?;
            let mut seen = vec![false; self.n];
            for (k, a) in &block.coeffs {
                if *k >= self.n {
                    return Err(Error::IndexOutOfRange { index: *k, limit: self.n });
                }
                if core::mem::replace(&mut seen[*k], true) {
                    return Err(Error::InvalidProblem(format!("block {b} lists variable {k} twice")));
                }
                check_sparse(a, block.dim, block.diagonal, b)?;
            }
        }
        if !self.cost.iter().all(|c| c.is_finite()) {
            return Err(Error::NonFinite("cost vector"));
        }
        Ok(())
    }
}

fn check_sparse(s: &SparseSym, dim: usize, diagonal: bool, block: usize) -> Result<()> {
    if s.dim() != dim {
        return Err(Error::DimensionMismatch { expected: dim, found: s.dim() });
    }
    let mut prev: Option<(usize, usize)> = None;
    for &(i, j, v) in s.entries() {
        if i > j || j >= dim {
            return Err(Error::InvalidProblem(format!("block {block}: entry ({i},{j}) outside upper triangle")));
        }
        if diagonal && i != j {
            return Err(Error::InvalidProblem(format!("block {block}: off-diagonal entry in diagonal block")));
        }
        if !v.is_finite() {
            return Err(Error::NonFinite("matrix entry"));
        }
        if prev == Some((i, j)) {
            return Err(Error::InvalidProblem(format!("block {block}: duplicate entry ({i},{j})")));
        }
        prev = Some((i, j));
    }
    Ok(())
}

/// Scalar inequality `Σ b_k x_k ≤ c`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearRow {
    pub b: Vec<(usize, f64)>,
    pub c: f64,
}

/// `A_0 + Σ x_k A_k + Σ_{k≤l} x_k x_l K_kl ⪯ 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BmiConstraint {
    pub dim: usize,
    pub a0: SparseSym,
    pub linear: Vec<(usize, SparseSym)>,
    /// `(k, l, K_kl)` with `k ≤ l`.
    pub quadratic: Vec<(usize, usize, SparseSym)>,
}

impl BmiConstraint {
    /// Recovers the coefficients of a matrix map that is quadratic in `x` from
    /// its values at `0`, `±e_k` and `e_k + e_l`.
    pub fn from_quadratic_map(dim: usize, n: usize, map: impl Fn(&[f64]) -> SymMatrix) -> Self {
        let mut x = vec![0.0; n];
        let f0 = map(&x);
        let scale = 1.0 + f0.max_abs();
        let mut linear = Vec::new();
        let mut diag_k: Vec<SymMatrix> = Vec::with_capacity(n);
        let mut lin_k: Vec<SymMatrix> = Vec::with_capacity(n);
        for k in 0..n {
            x[k] = 1.0;
            let fp = map(&x);
            x[k] = -1.0;
            let fm = map(&x);
            x[k] = 0.0;
            let mut a = fp.sub(&fm);
            a.scale(0.5);
            let mut kk = fp.clone();
            kk.axpy(1.0, &fm);
            kk.scale(0.5);
            kk.axpy(-1.0, &f0);
            lin_k.push(a);
            diag_k.push(kk);
        }
        let mut quadratic = Vec::new();
        for k in 0..n {
            let a = cleaned(&lin_k[k], scale);
            if !a.is_empty() {
                linear.push((k, a));
            }
            let kk = cleaned(&diag_k[k], scale);
            if !kk.is_empty() {
                quadratic.push((k, k, kk));
            }
            for l in k + 1..n {
                x[k] = 1.0;
                x[l] = 1.0;
                let mut m = map(&x);
                x[k] = 0.0;
                x[l] = 0.0;
                m.axpy(-1.0, &f0);
                for t in [&lin_k[k], &lin_k[l], &diag_k[k], &diag_k[l]] {
                    m.axpy(-1.0, t);
                }
                let kl = cleaned(&m, scale);
                if !kl.is_empty() {
                    quadratic.push((k, l, kl));
                }
            }
        }
        quadratic.sort_by_key(|&(k, l, _)| (k, l));
        Self { dim, a0: cleaned(&f0, scale), linear, quadratic }
    }
}

fn cleaned(m: &SymMatrix, scale: f64) -> SparseSym {
    let tol = 64.0 * f64::EPSILON * scale;
    let mut s = SparseSym::from_sym(m);
    let kept: Vec<_> = s.entries().iter().copied().filter(|e| e.2.abs() > tol).collect();
    s = SparseSym::from_entries(m.dim(), kept);
    s
}

/// `min ½xᵀQx + fᵀx` subject to linear rows and bilinear matrix inequalities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BmiData {
    pub n: usize,
    pub q: SymMatrix,
    pub f: Vec<f64>,
    pub linear_rows: Vec<LinearRow>,
    pub constraints: Vec<BmiConstraint>,
    #[serde(default)]
    pub initial: Option<Vec<f64>>,
    /// Index of the bound variable `λ` when the instance is a feasibility test.
    #[serde(default)]
    pub feasibility_var: Option<usize>,
}

impl BmiData {
    pub fn new(n: usize) -> Self {
        Self {
            n,
            q: SymMatrix::zeros(n),
            f: vec![0.0; n],
            linear_rows: Vec::new(),
            constraints: Vec::new(),
            initial: None,
            feasibility_var: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.q.dim() != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, found: self.q.dim() });
        }
        if self.f.len() != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, found: self.f.len() });
        }
        for row in &self.linear_rows {
            if let Some(&(k, _)) = row.b.iter().find(|(k, _)| *k >= self.n) {
                return Err(Error::IndexOutOfRange { index: k, limit: self.n });
            }
        }
        for (b, c) in self.constraints.iter().enumerate() {
            check_sparse(&c.a0, c.dim, false, b)?;
            for (k, a) in &c.linear {
                if *k >= self.n {
                    return Err(Error::IndexOutOfRange { index: *k, limit: self.n });
                }
                check_sparse(a, c.dim, false, b)?;
            }
            for (k, l, m) in &c.quadratic {
                if *l >= self.n || k > l {
                    return Err(Error::InvalidProblem(format!("block {b}: bad quadratic index ({k},{l})")));
                }
                check_sparse(m, c.dim, false, b)?;
            }
        }
        if let Some(x0) = &self.initial {
            if x0.len() != self.n {
                return Err(Error::DimensionMismatch { expected: self.n, found: x0.len() });
            }
        }
        Ok(())
    }
}

/// Symmetric matrix variable with eigenvalue bounds `lower·I ⪯ Y ⪯ upper·I`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MatrixVar {
    pub dim: usize,
    pub lower: f64,
    pub upper: f64,
    /// Variable only serves as a slack `S` in equalities `A(x) = S`.
    pub is_slack: bool,
    /// Bounds must hold strictly at every iterate (barrier treatment).
    pub is_strict: bool,
}

impl MatrixVar {
    pub fn psd(dim: usize) -> Self {
        Self { dim, lower: 0.0, upper: f64::INFINITY, is_slack: false, is_strict: false }
    }

    pub fn bounded(dim: usize, lower: f64, upper: f64) -> Self {
        Self { dim, lower, upper, is_slack: false, is_strict: false }
    }

    pub fn svec_len(&self) -> usize {
        self.dim * (self.dim + 1) / 2
    }
}

/// `scale·F(x) + shift·I ⪯ 0` where every entry of `F` is a scalar function.
#[derive(Debug, Clone)]
pub struct MatrixFnConstraint {
    pub dim: usize,
    /// `(i, j, F_ij)` with `i ≤ j`; absent entries are zero.
    pub entries: Vec<(usize, usize, SharedFn)>,
    pub scale: f64,
    pub shift: f64,
    pub strict: bool,
}

/// Nonlinear program with matrix variables. The argument of every function is
/// `(x, svec(Y_1), …, svec(Y_k))`.
#[derive(Debug, Clone)]
pub struct NlpSdpData {
    pub n: usize,
    pub matrix_vars: Vec<MatrixVar>,
    pub objective: SharedFn,
    /// `g_i(z) ≤ 0`
    pub inequalities: Vec<SharedFn>,
    /// `h_i(z) = 0`
    pub equalities: Vec<SharedFn>,
    pub matrix_constraints: Vec<MatrixFnConstraint>,
    pub initial: Option<Vec<f64>>,
}

impl NlpSdpData {
    /// Length of the full argument vector.
    pub fn arity(&self) -> usize {
        self.n + self.matrix_vars.iter().map(MatrixVar::svec_len).sum::<usize>()
    }

    /// Offset of `svec(Y_i)` inside the argument vector.
    pub fn var_offset(&self, i: usize) -> usize {
        self.n + self.matrix_vars[..i].iter().map(MatrixVar::svec_len).sum::<usize>()
    }

    /// Matrix value of `Y_i` in a full argument vector.
    pub fn matrix_value(&self, z: &[f64], i: usize) -> SymMatrix {
        let off = self.var_offset(i);
        let len = self.matrix_vars[i].svec_len();
        SymMatrix::from_packed(self.matrix_vars[i].dim, z[off..off + len].to_vec())
            .expect("length matches by construction")
    }

    pub fn validate(&self) -> Result<()> {
        let arity = self.arity();
        let check = |f: &SharedFn| {
            if f.arity() == arity {
                Ok(())
            } else {
                Err(Error::DimensionMismatch { expected: arity, found: f.arity() })
            }
        };
        check(&self.objective)?;
        self.inequalities.iter().try_for_each(check)?;
        self.equalities.iter().try_for_each(check)?;
        for c in &self.matrix_constraints {
            for (i, j, f) in &c.entries {
                if i > j || *j >= c.dim {
                    return Err(Error::InvalidProblem(format!("matrix constraint entry ({i},{j})")));
                }
                check(f)?;
            }
        }
        for (i, v) in self.matrix_vars.iter().enumerate() {
            if v.dim == 0 || !(v.lower <= v.upper) {
                return Err(Error::InvalidProblem(format!("matrix variable {i} has invalid bounds")));
            }
        }
        if let Some(z) = &self.initial {
            if z.len() != arity {
                return Err(Error::DimensionMismatch { expected: arity, found: z.len() });
            }
        }
        Ok(())
    }
}

/// Any of the three supported problem classes.
#[derive(Debug, Clone)]
pub enum ProblemSpec {
    Linear(LinearSdpData),
    Bmi(BmiData),
    Nlp(NlpSdpData),
}

impl ProblemSpec {
    /// Number of scalar unknowns seen by the solver.
    pub fn num_vars(&self) -> usize {
        match self {
            ProblemSpec::Linear(d) => d.n,
            ProblemSpec::Bmi(d) => d.n,
            ProblemSpec::Nlp(d) => d.arity(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            ProblemSpec::Linear(d) => d.validate(),
            ProblemSpec::Bmi(d) => d.validate(),
            ProblemSpec::Nlp(d) => d.validate(),
        }
    }
}

/// Value of every constraint block at `x`: LSDP blocks `Σ x_k A_k − A_0`, BMI
/// blocks, scalar inequalities as `1×1` blocks and the eigenvalue-bound blocks
/// `Y − upper·I`, `lower·I − Y` of matrix variables.
pub fn eval_operator(p: &ProblemSpec, x: &[f64]) -> Result<BlockDiagMatrix> {
    let model = Model::new(p)?;
    model.check_point(x)?;
    Ok(BlockDiagMatrix::new(model.blocks().iter().map(|b| b.value(x)).collect()))
}

/// `∂A/∂x_i` for every block (zero blocks where `x_i` does not enter).
pub fn operator_deriv(p: &ProblemSpec, x: &[f64], i: usize) -> Result<BlockDiagMatrix> {
    let model = Model::new(p)?;
    model.check_point(x)?;
    if i >= model.n() {
        return Err(Error::IndexOutOfRange { index: i, limit: model.n() });
    }
    Ok(BlockDiagMatrix::new(
        model
            .blocks()
            .iter()
            .map(|b| {
                b.derivs(x)
                    .into_iter()
                    .find(|(k, _)| *k == i)
                    .map(|(_, s)| s.to_sym())
                    .unwrap_or_else(|| SymMatrix::zeros(b.dim))
            })
            .collect(),
    ))
}

/// `∂²A/∂x_i∂x_j` for every block.
pub fn operator_deriv2(p: &ProblemSpec, x: &[f64], i: usize, j: usize) -> Result<BlockDiagMatrix> {
    let model = Model::new(p)?;
    model.check_point(x)?;
    let n = model.n();
    if i >= n || j >= n {
        return Err(Error::IndexOutOfRange { index: i.max(j), limit: n });
    }
    let (a, b) = if i <= j { (i, j) } else { (j, i) };
    Ok(BlockDiagMatrix::new(
        model
            .blocks()
            .iter()
            .map(|blk| {
                blk.derivs2(x)
                    .into_iter()
                    .find(|(k, l, _)| *k == a && *l == b)
                    .map(|(_, _, s)| s.to_sym())
                    .unwrap_or_else(|| SymMatrix::zeros(blk.dim))
            })
            .collect(),
    ))
}
