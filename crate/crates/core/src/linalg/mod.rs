//! Dense symmetric kernels: storage, Cholesky with shift search, eigenvalues,
//! symmetric vectorization and trace inner products.

mod chol;
mod eigen;
mod matrix;

pub use chol::{
    factorize, factorize_shifted, lambda_min_bisection, modified_factorize, CholFactor, Inertia,
    Ldlt, PivotFailure, PIVOT_TOL,
};
pub use eigen::{eig_extremes, eigenvalues, lambda_max, spectral_norm};
pub use matrix::{BlockDiagMatrix, Dense, SparseSym, SymMatrix};

use alloc::vec::Vec;

#[allow(unused_imports)] // shadowed by std's inherent methods when std is linked
use num_traits::Float;


use crate::error::{Error, Result};

/// Column-wise upper triangle `(a11, a12, a22, a13, a23, a33, …)`, unscaled.
pub fn svec(m: &SymMatrix) -> Vec<f64> {
    m.packed().to_vec()
}

/// Inverse of [`svec`].
pub fn smat(v: &[f64]) -> Result<SymMatrix> {
    let dim = triangular_root(v.len()).ok_or(Error::NotTriangular(v.len()))?;
    SymMatrix::from_packed(dim, v.to_vec())
}

/// `Some(d)` when `len = d(d+1)/2`.
pub fn triangular_root(len: usize) -> Option<usize> {
    let d = (((8 * len + 1) as f64).sqrt() as usize).saturating_sub(1) / 2;
    (d.saturating_sub(1)..=d + 1).find(|&k| k * (k + 1) / 2 == len)
}

/// Trace inner product `⟨A, B⟩ = trace(AB)`.
pub fn inner(a: &SymMatrix, b: &SymMatrix) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch { expected: a.dim(), found: b.dim() });
    }
    Ok(inner_unchecked(a, b))
}

pub(crate) fn inner_unchecked(a: &SymMatrix, b: &SymMatrix) -> f64 {
    let (pa, pb) = (a.packed(), b.packed());
    let mut diag = 0.0;
    let mut off = 0.0;
    let mut idx = 0;
    for i in 0..a.dim() {
        for _ in 0..i {
            off += pa[idx] * pb[idx];
            idx += 1;
        }
        diag += pa[idx] * pb[idx];
        idx += 1;
    }
    diag + 2.0 * off
}

/// Solves `(H + βI) d = rhs` with a stored factor.
pub fn solve_with_factor(f: &CholFactor, rhs: &[f64]) -> Result<Vec<f64>> {
    f.solve(rhs)
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn random_sym(n: usize, seed: u64) -> SymMatrix {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        SymMatrix::from_fn(n, |_, _| rng.gen_range(-1.0..1.0))
    }

    #[test]
    fn svec_order_is_columnwise_upper() {
        // x1 x2 x4 / x2 x3 x5 / x4 x5 x6
        let x = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
        let m = SymMatrix::from_fn(3, |i, j| match (i, j) {
            (0, 0) => x[0],
            (1, 0) => x[1],
            (1, 1) => x[2],
            (2, 0) => x[3],
            (2, 1) => x[4],
            _ => x[5],
        });
        assert_eq!(svec(&m), x.to_vec());
        assert_eq!(smat(&x).unwrap(), m);
        assert_eq!(m[(0, 2)], 4.0);
        assert_eq!(svec(&SymMatrix::from_diag(&[7.5])), vec![7.5]);
    }

    #[test]
    fn smat_small_cases() {
        assert_eq!(smat(&[1.0]).unwrap(), SymMatrix::from_diag(&[1.0]));
        assert_eq!(smat(&[1.0, 0.0, 1.0]).unwrap(), SymMatrix::identity(2));
        assert_eq!(smat(&[1.0, 2.0]), Err(Error::NotTriangular(2)));
        let m = random_sym(5, 3);
        assert_eq!(smat(&svec(&m)).unwrap(), m);
        for len in 0..200 {
            let tri = (0..30).any(|d| d * (d + 1) / 2 == len);
            assert_eq!(triangular_root(len).is_some(), tri, "len {len}");
        }
    }

    #[test]
    fn inner_products() {
        assert_eq!(inner(&SymMatrix::identity(4), &SymMatrix::identity(4)).unwrap(), 4.0);
        // antidiagonal ones against the 3x3 svec layout picks x4 twice and x3 once
        let x = smat(&[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]).unwrap();
        let anti = SymMatrix::from_fn(3, |i, j| if i + j == 2 { 1.0 } else { 0.0 });
        assert_eq!(inner(&x, &anti).unwrap(), 3.0 + 2.0 * 4.0);
        let (a, b) = (random_sym(4, 10), random_sym(4, 11));
        let mut naive = 0.0;
        for i in 0..4 {
            for j in 0..4 {
                naive += a[(i, j)] * b[(i, j)];
            }
        }
        assert!((inner(&a, &b).unwrap() - naive).abs() <= 1e-13);
        assert!(inner(&a, &SymMatrix::identity(3)).is_err());
    }

    #[test]
    fn factorize_examples() {
        let f = factorize(&SymMatrix::from_diag(&[4.0, 1.0])).unwrap();
        assert_eq!(f.lower()[(0, 0)], 2.0);
        assert_eq!(f.lower()[(1, 1)], 1.0);
        assert_eq!(f.lower()[(1, 0)], 0.0);
        let fail = factorize(&SymMatrix::from_diag(&[1.0, -2.0])).unwrap_err();
        assert_eq!(fail.pivot, 2);
        assert!(factorize(&SymMatrix::from_diag(&[1.0, 0.0])).is_err());
    }

    #[test]
    fn factorize_reconstructs() {
        let n = 5;
        let m = random_sym(n, 7).to_dense();
        let mut h = m.mul(&m).sym_part();
        h.add_identity(1.0);
        let f = factorize(&h).unwrap();
        let l = f.lower();
        for i in 0..n {
            for j in 0..=i {
                let s: f64 = (0..=j).map(|k| l[(i, k)] * l[(j, k)]).sum();
                assert!((s - h[(i, j)]).abs() <= 1e-12 * h.max_abs());
            }
        }
    }

    #[test]
    fn modified_factorize_traces() {
        let f = modified_factorize(&SymMatrix::from_diag(&[-1.0]), 1.0);
        assert_eq!(f.shift(), 2.0);
        let h = SymMatrix::from_diag(&[1.0, -2.0]);
        assert_eq!(modified_factorize(&h, 1.0).shift(), 4.0);
        assert_eq!(modified_factorize(&h, 8.0).shift(), 4.0);
    }

    #[test]
    fn modified_factorize_psd_floor() {
        let h = SymMatrix::from_diag(&[1.0, 0.0]);
        let f = modified_factorize(&h, 1.0);
        // the halving stops where the shifted zero pivot drops under the pivot tolerance
        assert!(f.shift() > 0.0 && f.shift() < 1e-13);
    }

    #[test]
    fn solves() {
        let f = factorize(&SymMatrix::identity(3)).unwrap();
        assert_eq!(solve_with_factor(&f, &[1.0, 2.0, 3.0]).unwrap(), vec![1.0, 2.0, 3.0]);
        let f = factorize(&SymMatrix::from_diag(&[2.0, 2.0])).unwrap();
        let d = solve_with_factor(&f, &[2.0, 4.0]).unwrap();
        assert!((d[0] - 1.0).abs() < 1e-15 && (d[1] - 2.0).abs() < 1e-15);
        assert!(solve_with_factor(&f, &[1.0]).is_err());
    }

    #[test]
    fn bisection_estimates_lambda_min() {
        let h = SymMatrix::from_diag(&[3.0, -0.7, 1.0]);
        let est = lambda_min_bisection(&h, 4.0, 1e-2);
        assert!((est + 0.7).abs() <= 0.01 * 0.7 + 1e-12);
    }

    #[test]
    fn ldlt_inertia_and_solve() {
        let a = SymMatrix::from_fn(3, |i, j| match (i, j) {
            (0, 0) => 2.0,
            (1, 1) => 3.0,
            (2, 2) => 0.0,
            (2, 0) => 1.0,
            (2, 1) => 1.0,
            _ => 0.0,
        });
        let f = Ldlt::factor(&a);
        assert_eq!(f.inertia(), Inertia { positive: 2, negative: 1, zero: 0 });
        let x = f.solve(&[1.0, 2.0, 3.0]);
        let r = a.mul_vec(&x);
        for (ri, bi) in r.iter().zip([1.0, 2.0, 3.0]) {
            assert!((ri - bi).abs() < 1e-12);
        }
    }

    #[test]
    fn sparse_sandwich_matches_dense() {
        let n = 4;
        let w = random_sym(n, 1).to_dense();
        let z = random_sym(n, 2).to_dense();
        let s = SparseSym::from_entries(n, [(0, 2, 1.5), (1, 1, -2.0), (3, 1, 0.25)]);
        let dense = w.mul(&s.to_sym().to_dense()).mul(&z);
        let fast = s.sandwich(&w, &z);
        for i in 0..n {
            for j in 0..n {
                assert!((dense[(i, j)] - fast[(i, j)]).abs() < 1e-14);
            }
        }
        assert!((w.trace_with_sparse(&s) - inner(&w.sym_part(), &s.to_sym()).unwrap()).abs() < 1e-14);
    }

    #[test]
    fn sparse_canonical_merges() {
        let s = SparseSym::from_entries(3, [(2, 0, 1.0), (0, 2, 1.0), (1, 1, 0.0)]);
        assert_eq!(s.entries(), &[(0, 2, 2.0)]);
    }
}
