use alloc::collections::BTreeMap;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use super::functions::{LinearFn, QuadraticFn, SharedFn};
use super::{preprocess, MatrixFnConstraint, ProblemSpec};
use crate::error::{Error, Result};
use crate::linalg::{SparseSym, SymMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BlockKind {
    /// Handled by the matrix penalty with a multiplier.
    Penalty,
    /// Kept strictly feasible by a log-det barrier.
    Barrier,
}

#[derive(Debug, Clone)]
pub enum BlockBody {
    /// `C + Σ x_k A_k + Σ_{k≤l} x_k x_l K_kl`
    Polynomial {
        constant: SparseSym,
        linear: Vec<(usize, SparseSym)>,
        quadratic: Vec<(usize, usize, SparseSym)>,
    },
    /// `g(x)` as a `1×1` block.
    Scalar(SharedFn),
    /// Matrix of scalar functions.
    Function(MatrixFnConstraint),
}

/// One constraint `A_j(x) ⪯ 0`.
#[derive(Debug, Clone)]
pub struct Block {
    pub dim: usize,
    pub kind: BlockKind,
    pub body: BlockBody,
    incidence: Vec<usize>,
}

impl Block {
    pub fn polynomial(
        dim: usize,
        constant: SparseSym,
        linear: Vec<(usize, SparseSym)>,
        quadratic: Vec<(usize, usize, SparseSym)>,
    ) -> Self {
        let linear = merge_linear(dim, linear);
        let quadratic = merge_quadratic(dim, quadratic);
        let mut inc: Vec<usize> = linear.iter().map(|(k, _)| *k).collect();
        for (k, l, _) in &quadratic {
            inc.push(*k);
            inc.push(*l);
        }
        inc.sort_unstable();
        inc.dedup();
        Self {
            dim,
            kind: BlockKind::Penalty,
            body: BlockBody::Polynomial { constant, linear, quadratic },
            incidence: inc,
        }
    }

    fn scalar(f: SharedFn) -> Self {
        let inc = f.support().unwrap_or_else(|| (0..f.arity()).collect());
        Self { dim: 1, kind: BlockKind::Penalty, body: BlockBody::Scalar(f), incidence: inc }
    }

    fn function(c: MatrixFnConstraint) -> Self {
        let mut inc = Vec::new();
        for (_, _, f) in &c.entries {
            match f.support() {
                Some(s) => inc.extend(s),
                None => inc.extend(0..f.arity()),
            }
        }
        inc.sort_unstable();
        inc.dedup();
        let kind = if c.strict { BlockKind::Barrier } else { BlockKind::Penalty };
        Self { dim: c.dim, kind, body: BlockBody::Function(c), incidence: inc }
    }

    /// Variables that may enter the block.
    pub fn incidence(&self) -> &[usize] {
        &self.incidence
    }

    /// True when the block is affine in `x` (constant first derivatives).
    pub fn is_affine(&self) -> bool {
        matches!(&self.body, BlockBody::Polynomial { quadratic, .. } if quadratic.is_empty())
    }

    pub fn value(&self, x: &[f64]) -> SymMatrix {
        match &self.body {
            BlockBody::Polynomial { constant, linear, quadratic } => {
                let mut m = constant.to_sym();
                for (k, a) in linear {
                    if x[*k] != 0.0 {
                        a.add_to(&mut m, x[*k]);
                    }
                }
                for (k, l, kk) in quadratic {
                    let w = x[*k] * x[*l];
                    if w != 0.0 {
                        kk.add_to(&mut m, w);
                    }
                }
                m
            }
            BlockBody::Scalar(f) => SymMatrix::from_diag(&[f.value(x)]),
            BlockBody::Function(c) => {
                let mut m = SymMatrix::scaled_identity(c.dim, c.shift);
                for (i, j, f) in &c.entries {
                    m[(*i, *j)] += c.scale * f.value(x);
                }
                m
            }
        }
    }

    /// Nonzero first derivatives `(i, ∂A/∂x_i)`, sorted by `i`.
    pub fn derivs(&self, x: &[f64]) -> Vec<(usize, SparseSym)> {
        match &self.body {
            BlockBody::Polynomial { linear, quadratic, .. } => {
                if quadratic.is_empty() {
                    return linear.clone();
                }
                let mut acc: BTreeMap<usize, Vec<(usize, usize, f64)>> = BTreeMap::new();
                for (k, a) in linear {
                    acc.entry(*k).or_default().extend_from_slice(a.entries());
                }
                for (k, l, kk) in quadratic {
                    for (var, w) in [(*k, x[*l]), (*l, x[*k])] {
                        if w != 0.0 {
                            acc.entry(var).or_default().extend(kk.entries().iter().map(|&(i, j, v)| (i, j, w * v)));
                        }
                    }
                }
                collect_sparse(self.dim, acc)
            }
            BlockBody::Scalar(f) => {
                let g = f.gradient(x);
                g.iter()
                    .enumerate()
                    .filter(|(_, v)| **v != 0.0)
                    .map(|(i, &v)| (i, SparseSym::from_entries(1, [(0, 0, v)])))
                    .collect()
            }
            BlockBody::Function(c) => {
                let mut acc: BTreeMap<usize, Vec<(usize, usize, f64)>> = BTreeMap::new();
                for (i, j, f) in &c.entries {
                    for (var, g) in f.gradient(x).into_iter().enumerate() {
                        if g != 0.0 {
                            acc.entry(var).or_default().push((*i, *j, c.scale * g));
                        }
                    }
                }
                collect_sparse(self.dim, acc)
            }
        }
    }

    /// Nonzero second derivatives `(i, k, ∂²A/∂x_i∂x_k)` with `i ≤ k`.
    pub fn derivs2(&self, x: &[f64]) -> Vec<(usize, usize, SparseSym)> {
        match &self.body {
            BlockBody::Polynomial { quadratic, .. } => quadratic
                .iter()
                .map(|(k, l, kk)| (*k, *l, if k == l { kk.scaled(2.0) } else { kk.clone() }))
                .collect(),
            BlockBody::Scalar(f) => match f.hessian(x) {
                None => Vec::new(),
                Some(h) => {
                    let mut out = Vec::new();
                    for k in 0..h.dim() {
                        for i in 0..=k {
                            let v = h[(i, k)];
                            if v != 0.0 {
                                out.push((i, k, SparseSym::from_entries(1, [(0, 0, v)])));
                            }
                        }
                    }
                    out
                }
            },
            BlockBody::Function(c) => {
                let mut acc: BTreeMap<(usize, usize), Vec<(usize, usize, f64)>> = BTreeMap::new();
                for (i, j, f) in &c.entries {
                    if let Some(h) = f.hessian(x) {
                        for k in 0..h.dim() {
                            for l in 0..=k {
                                let v = h[(l, k)];
                                if v != 0.0 {
                                    acc.entry((l, k)).or_default().push((*i, *j, c.scale * v));
                                }
                            }
                        }
                    }
                }
                acc.into_iter()
                    .map(|((l, k), e)| (l, k, SparseSym::from_entries(self.dim, e)))
                    .filter(|(_, _, s)| !s.is_empty())
                    .collect()
            }
        }
    }
}

fn merge_linear(dim: usize, terms: Vec<(usize, SparseSym)>) -> Vec<(usize, SparseSym)> {
    let mut acc: BTreeMap<usize, Vec<(usize, usize, f64)>> = BTreeMap::new();
    for (k, s) in terms {
        acc.entry(k).or_default().extend_from_slice(s.entries());
    }
    collect_sparse(dim, acc)
}

fn merge_quadratic(dim: usize, terms: Vec<(usize, usize, SparseSym)>) -> Vec<(usize, usize, SparseSym)> {
    let mut acc: BTreeMap<(usize, usize), Vec<(usize, usize, f64)>> = BTreeMap::new();
    for (k, l, s) in terms {
        let key = if k <= l { (k, l) } else { (l, k) };
        acc.entry(key).or_default().extend_from_slice(s.entries());
    }
    acc.into_iter()
        .map(|((k, l), e)| (k, l, SparseSym::from_entries(dim, e)))
        .filter(|(_, _, s)| !s.is_empty())
        .collect()
}

fn collect_sparse(dim: usize, acc: BTreeMap<usize, Vec<(usize, usize, f64)>>) -> Vec<(usize, SparseSym)> {
    acc.into_iter()
        .map(|(k, e)| (k, SparseSym::from_entries(dim, e)))
        .filter(|(_, s)| !s.is_empty())
        .collect()
}

/// Compiled problem: objective, constraint blocks and equalities over a flat
/// vector of `n` unknowns.
#[derive(Debug, Clone)]
pub struct Model {
    n: usize,
    objective: SharedFn,
    blocks: Vec<Block>,
    equalities: Vec<SharedFn>,
    initial: Option<Vec<f64>>,
    feasibility_var: Option<usize>,
}

impl Model {
    /// Compiles a problem. Slack variables of nonlinear problems are removed
    /// first; equalities are kept for direct handling.
    pub fn new(spec: &ProblemSpec) -> Result<Self> {
        spec.validate()?;
        match spec {
            ProblemSpec::Linear(d) => {
                let blocks = d
                    .blocks
                    .iter()
                    .map(|b| Block::polynomial(b.dim, b.a0.scaled(-1.0), b.coeffs.clone(), Vec::new()))
                    .collect();
                Ok(Self {
                    n: d.n,
                    objective: Arc::new(LinearFn::new(d.cost.clone(), 0.0)),
                    blocks,
                    equalities: Vec::new(),
                    initial: None,
                    feasibility_var: None,
                })
            }
            ProblemSpec::Bmi(d) => {
                let mut blocks = Vec::new();
                for row in &d.linear_rows {
                    let lin = row.b.iter().map(|&(k, v)| (k, SparseSym::from_entries(1, [(0, 0, v)]))).collect();
                    blocks.push(Block::polynomial(1, SparseSym::from_entries(1, [(0, 0, -row.c)]), lin, Vec::new()));
                }
                for c in &d.constraints {
                    blocks.push(Block::polynomial(c.dim, c.a0.clone(), c.linear.clone(), c.quadratic.clone()));
                }
                Ok(Self {
                    n: d.n,
                    objective: Arc::new(QuadraticFn { q: d.q.clone(), linear: d.f.clone(), constant: 0.0 }),
                    blocks,
                    equalities: Vec::new(),
                    initial: d.initial.clone(),
                    feasibility_var: d.feasibility_var,
                })
            }
            ProblemSpec::Nlp(raw) => {
                let d = if raw.matrix_vars.iter().any(|v| v.is_slack) {
                    preprocess::remove_slacks(raw)?
                } else {
                    raw.clone()
                };
                let mut blocks: Vec<Block> = d.inequalities.iter().cloned().map(Block::scalar).collect();
                for (vi, var) in d.matrix_vars.iter().enumerate() {
                    let off = d.var_offset(vi);
                    let kind = if var.is_strict { BlockKind::Barrier } else { BlockKind::Penalty };
                    let unit: Vec<(usize, SparseSym)> = (0..var.svec_len())
                        .map(|t| {
                            let (i, j) = svec_position(t);
                            (off + t, SparseSym::from_entries(var.dim, [(i, j, 1.0)]))
                        })
                        .collect();
                    if var.upper.is_finite() {
                        // Y − upper·I ⪯ 0
                        let mut b = Block::polynomial(
                            var.dim,
                            SparseSym::from_sym(&SymMatrix::scaled_identity(var.dim, -var.upper)),
                            unit.clone(),
                            Vec::new(),
                        );
                        b.kind = kind;
                        blocks.push(b);
                    }
                    if var.lower.is_finite() {
                        // lower·I − Y ⪯ 0
                        let neg = unit.iter().map(|(k, s)| (*k, s.scaled(-1.0))).collect();
                        let mut b = Block::polynomial(
                            var.dim,
                            SparseSym::from_sym(&SymMatrix::scaled_identity(var.dim, var.lower)),
                            neg,
                            Vec::new(),
                        );
                        b.kind = kind;
                        blocks.push(b);
                    }
                }
                blocks.extend(d.matrix_constraints.iter().cloned().map(Block::function));
                Ok(Self {
                    n: d.arity(),
                    objective: d.objective.clone(),
                    blocks,
                    equalities: d.equalities.clone(),
                    initial: d.initial.clone(),
                    feasibility_var: None,
                })
            }
        }
    }

    /// Assembles a model directly from parts.
    pub fn from_parts(n: usize, objective: SharedFn, blocks: Vec<Block>, equalities: Vec<SharedFn>) -> Result<Self> {
        if objective.arity() != n {
            return Err(Error::DimensionMismatch { expected: n, found: objective.arity() });
        }
        Ok(Self { n, objective, blocks, equalities, initial: None, feasibility_var: None })
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn objective(&self) -> &SharedFn {
        &self.objective
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn equalities(&self) -> &[SharedFn] {
        &self.equalities
    }

    pub fn initial(&self) -> Option<&[f64]> {
        self.initial.as_deref()
    }

    pub fn feasibility_var(&self) -> Option<usize> {
        self.feasibility_var
    }

    /// Replaces the equalities by pairs of inequalities `h ≤ 0`, `−h ≤ 0`.
    pub fn split_equalities(mut self) -> Self {
        for h in core::mem::take(&mut self.equalities) {
            self.blocks.push(Block::scalar(h.clone()));
            self.blocks.push(Block::scalar(Arc::new(super::functions::negated(h))));
        }
        self
    }

    pub fn has_penalty_blocks(&self) -> bool {
        self.blocks.iter().any(|b| b.kind == BlockKind::Penalty)
    }

    /// Every block is affine and there are no equalities.
    pub fn is_affine(&self) -> bool {
        self.blocks.iter().all(Block::is_affine) && self.equalities.is_empty()
    }

    pub fn check_point(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, found: x.len() });
        }
        if !x.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite("iterate"));
        }
        Ok(())
    }

    pub fn equality_values(&self, x: &[f64]) -> Vec<f64> {
        self.equalities.iter().map(|h| h.value(x)).collect()
    }

    /// Largest eigenvalue over the penalized blocks (`-∞` without blocks).
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        self.blocks
            .iter()
            .filter(|b| b.kind == BlockKind::Penalty)
            .map(|b| crate::linalg::lambda_max(&b.value(x)))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn zero_point(&self) -> Vec<f64> {
        vec![0.0; self.n]
    }
}

/// `(row, col)` of svec position `t` (column-wise upper triangle).
pub(crate) fn svec_position(t: usize) -> (usize, usize) {
    let mut j = 0;
    while (j + 1) * (j + 2) / 2 <= t {
        j += 1;
    }
    (t - j * (j + 1) / 2, j)
}
