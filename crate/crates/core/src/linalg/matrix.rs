use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)] // shadowed by std's inherent methods when std is linked
use num_traits::Float;
use core::ops::{Index, IndexMut};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[inline]
pub(crate) fn packed_index(i: usize, j: usize) -> usize {
    let (r, c) = if i >= j { (i, j) } else { (j, i) };
    r * (r + 1) / 2 + c
}

/// Dense symmetric matrix stored as its packed lower triangle, row by row.
///
/// Row-major lower packing coincides with the column-major upper packing used
/// by [`svec`](super::svec), so the packed slice *is* the symmetric vectorization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymMatrix {
    dim: usize,
    data: Vec<f64>,
}

impl SymMatrix {
    pub fn zeros(dim: usize) -> Self {
        Self { dim, data: vec![0.0; dim * (dim + 1) / 2] }
    }

    pub fn identity(dim: usize) -> Self {
        Self::scaled_identity(dim, 1.0)
    }

    pub fn scaled_identity(dim: usize, value: f64) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m[(i, i)] = value;
        }
        m
    }

    pub fn from_diag(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = d;
        }
        m
    }

    pub fn from_packed(dim: usize, data: Vec<f64>) -> Result<Self> {
        let expected = dim * (dim + 1) / 2;
        if data.len() != expected {
            return Err(Error::DimensionMismatch { expected, found: data.len() });
        }
        Ok(Self { dim, data })
    }

    /// Builds the matrix from a function evaluated on the lower triangle (`i >= j`).
    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(dim * (dim + 1) / 2);
        for i in 0..dim {
            for j in 0..=i {
                data.push(f(i, j));
            }
        }
        Self { dim, data }
    }

    /// Takes the lower triangle of a row-major square array.
    pub fn from_rows_lower(dim: usize, rows: &[f64]) -> Result<Self> {
        if rows.len() != dim * dim {
            return Err(Error::DimensionMismatch { expected: dim * dim, found: rows.len() });
        }
        Ok(Self::from_fn(dim, |i, j| rows[i * dim + j]))
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn packed(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn packed_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_packed(self) -> Vec<f64> {
        self.data
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim).map(|i| self[(i, i)]).collect()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn scale(&mut self, alpha: f64) {
        self.data.iter_mut().for_each(|v| *v *= alpha);
    }

    pub fn scaled(&self, alpha: f64) -> Self {
        let mut m = self.clone();
        m.scale(alpha);
        m
    }

    /// `self += alpha * other`
    pub fn axpy(&mut self, alpha: f64, other: &SymMatrix) {
        debug_assert_eq!(self.dim, other.dim);
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += alpha * b;
        }
    }

    pub fn add_identity(&mut self, alpha: f64) {
        for i in 0..self.dim {
            self[(i, i)] += alpha;
        }
    }

    pub fn sub(&self, other: &SymMatrix) -> SymMatrix {
        let mut m = self.clone();
        m.axpy(-1.0, other);
        m
    }

    pub fn norm_fro(&self) -> f64 {
        let mut s = 0.0;
        for i in 0..self.dim {
            for j in 0..=i {
                let v = self[(i, j)];
                s += if i == j { v * v } else { 2.0 * v * v };
            }
        }
        s.sqrt()
    }

    /// Maximum absolute row sum.
    pub fn norm_inf(&self) -> f64 {
        (0..self.dim)
            .map(|i| (0..self.dim).map(|j| self[(i, j)].abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|i| self[(i, i)]).sum()
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let n = self.dim;
        let mut y = vec![0.0; n];
        for i in 0..n {
            let row = i * (i + 1) / 2;
            for j in 0..i {
                let a = self.data[row + j];
                y[i] += a * x[j];
                y[j] += a * x[i];
            }
            y[i] += self.data[row + i] * x[i];
        }
        y
    }

    pub fn to_dense(&self) -> Dense {
        let n = self.dim;
        let mut d = Dense::zeros(n);
        for i in 0..n {
            for j in 0..=i {
                let v = self[(i, j)];
                d[(i, j)] = v;
                d[(j, i)] = v;
            }
        }
        d
    }
}

impl Index<(usize, usize)> for SymMatrix {
    type Output = f64;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[packed_index(i, j)]
    }
}

impl IndexMut<(usize, usize)> for SymMatrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[packed_index(i, j)]
    }
}

/// Square dense matrix in row-major order, used as workspace for products.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    n: usize,
    data: Vec<f64>,
}

impl Dense {
    pub fn zeros(n: usize) -> Self {
        Self { n, data: vec![0.0; n * n] }
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn mul(&self, other: &Dense) -> Dense {
        let n = self.n;
        debug_assert_eq!(n, other.n);
        let mut out = Dense::zeros(n);
        for i in 0..n {
            let out_row = &mut out.data[i * n..(i + 1) * n];
            for k in 0..n {
                let a = self.data[i * n + k];
                if a == 0.0 {
                    continue;
                }
                let b_row = &other.data[k * n..(k + 1) * n];
                for (o, b) in out_row.iter_mut().zip(b_row) {
                    *o += a * b;
                }
            }
        }
        out
    }

    /// Symmetric part `(M + Mᵀ)/2` in packed form.
    pub fn sym_part(&self) -> SymMatrix {
        SymMatrix::from_fn(self.n, |i, j| 0.5 * (self[(i, j)] + self[(j, i)]))
    }

    /// `trace(self · S)` for symmetric sparse `S`.
    pub fn trace_with_sparse(&self, s: &SparseSym) -> f64 {
        s.entries()
            .iter()
            .map(|&(i, j, v)| {
                if i == j {
                    v * self[(i, i)]
                } else {
                    v * (self[(i, j)] + self[(j, i)])
                }
            })
            .sum()
    }
}

impl Index<(usize, usize)> for Dense {
    type Output = f64;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.n + j]
    }
}

impl IndexMut<(usize, usize)> for Dense {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.n + j]
    }
}

/// Sparse symmetric matrix given by its upper-triangle entries `(i, j, v)` with `i <= j`.
///
/// An off-diagonal entry stands for both `(i, j)` and `(j, i)`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SparseSym {
    dim: usize,
    entries: Vec<(usize, usize, f64)>,
}

impl SparseSym {
    pub fn new(dim: usize) -> Self {
        Self { dim, entries: Vec::new() }
    }

    /// Builds a canonical sparse matrix (sorted, merged, zeros dropped).
    pub fn from_entries(dim: usize, entries: impl IntoIterator<Item = (usize, usize, f64)>) -> Self {
        let mut s = Self::new(dim);
        for (i, j, v) in entries {
            s.push(i, j, v);
        }
        s.canonicalize();
        s
    }

    pub fn from_sym(m: &SymMatrix) -> Self {
        let mut s = Self::new(m.dim());
        for j in 0..m.dim() {
            for i in 0..=j {
                let v = m[(i, j)];
                if v != 0.0 {
                    s.entries.push((i, j, v));
                }
            }
        }
        s
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn entries(&self) -> &[(usize, usize, f64)] {
        &self.entries
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    /// Appends an entry without merging; the pair is reordered so that `i <= j`.
    pub fn push(&mut self, i: usize, j: usize, v: f64) {
        let (a, b) = if i <= j { (i, j) } else { (j, i) };
        debug_assert!(b < self.dim);
        self.entries.push((a, b, v));
    }

    /// Sorts by (column, row), sums duplicates and removes exact zeros.
    pub fn canonicalize(&mut self) {
        self.entries.sort_by_key(|e| (e.1, e.0));
        let mut merged: Vec<(usize, usize, f64)> = Vec::with_capacity(self.entries.len());
        for &(i, j, v) in &self.entries {
            match merged.last_mut() {
                Some(last) if last.0 == i && last.1 == j => last.2 += v,
                _ => merged.push((i, j, v)),
            }
        }
        merged.retain(|e| e.2 != 0.0);
        self.entries = merged;
    }

    pub fn scaled(&self, alpha: f64) -> Self {
        Self {
            dim: self.dim,
            entries: self.entries.iter().map(|&(i, j, v)| (i, j, alpha * v)).collect(),
        }
    }

    /// `target += alpha * self`
    pub fn add_to(&self, target: &mut SymMatrix, alpha: f64) {
        for &(i, j, v) in &self.entries {
            target[(i, j)] += alpha * v;
        }
    }

    pub fn to_sym(&self) -> SymMatrix {
        let mut m = SymMatrix::zeros(self.dim);
        self.add_to(&mut m, 1.0);
        m
    }

    /// Trace inner product with a dense symmetric matrix.
    pub fn inner_sym(&self, m: &SymMatrix) -> f64 {
        self.entries
            .iter()
            .map(|&(i, j, v)| if i == j { v * m[(i, i)] } else { 2.0 * v * m[(i, j)] })
            .sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.entries.iter().fold(0.0, |m, e| m.max(e.2.abs()))
    }

    /// `w · self · z` for dense symmetric `w` and `z`, touching only the columns
    /// of `self` that carry entries.
    pub fn sandwich(&self, w: &Dense, z: &Dense) -> Dense {
        let n = self.dim;
        // columns of w·S, keyed by column index
        let mut cols: Vec<(usize, Vec<f64>)> = Vec::new();
        let mut slot = vec![usize::MAX; n];
        let mut add_col = |col: usize, src: usize, v: f64, cols: &mut Vec<(usize, Vec<f64>)>| {
            if slot[col] == usize::MAX {
                slot[col] = cols.len();
                cols.push((col, vec![0.0; n]));
            }
            let c = &mut cols[slot[col]].1;
            for (r, cr) in c.iter_mut().enumerate() {
                *cr += w[(r, src)] * v;
            }
        };
        for &(i, j, v) in &self.entries {
            add_col(j, i, v, &mut cols);
            if i != j {
                add_col(i, j, v, &mut cols);
            }
        }
        let mut out = Dense::zeros(n);
        for (b, col) in &cols {
            let zrow = z.row(*b);
            for (r, &wsb) in col.iter().enumerate() {
                if wsb == 0.0 {
                    continue;
                }
                for (c, &zv) in zrow.iter().enumerate() {
                    out[(r, c)] += wsb * zv;
                }
            }
        }
        out
    }
}

/// Ordered list of symmetric diagonal blocks.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct BlockDiagMatrix {
    pub blocks: Vec<SymMatrix>,
}

impl BlockDiagMatrix {
    pub fn new(blocks: Vec<SymMatrix>) -> Self {
        Self { blocks }
    }

    pub fn zeros(dims: &[usize]) -> Self {
        Self { blocks: dims.iter().map(|&d| SymMatrix::zeros(d)).collect() }
    }

    pub fn dims(&self) -> Vec<usize> {
        self.blocks.iter().map(SymMatrix::dim).collect()
    }

    pub fn total_dim(&self) -> usize {
        self.blocks.iter().map(SymMatrix::dim).sum()
    }

    pub fn inner(&self, other: &BlockDiagMatrix) -> f64 {
        self.blocks.iter().zip(&other.blocks).map(|(a, b)| super::inner_unchecked(a, b)).sum()
    }

    pub fn norm_fro(&self) -> f64 {
        self.blocks.iter().map(|b| b.norm_fro().powi(2)).sum::<f64>().sqrt()
    }

    pub fn is_zero(&self) -> bool {
        self.blocks.iter().all(|b| b.packed().iter().all(|&v| v == 0.0))
    }
}
