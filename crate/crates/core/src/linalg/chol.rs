//! Cholesky factorization, the shift search for indefinite matrices and an
//! unpivoted LDLᵀ used for inertia counting.

use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)] // shadowed by std's inherent methods when std is linked
use num_traits::Float;


use super::matrix::SymMatrix;
use crate::error::{Error, Result};

/// Relative threshold below which a pivot counts as non-positive.
pub const PIVOT_TOL: f64 = 1e-14;

/// Lower-triangular factor `L` with `L·Lᵀ = H + shift·I`.
#[derive(Debug, Clone, PartialEq)]
pub struct CholFactor {
    l: SymMatrix,
    shift: f64,
}

/// First pivot that failed, 1-based as in textbook statements.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PivotFailure {
    pub pivot: usize,
    pub value: f64,
}

impl CholFactor {
    #[inline]
    pub fn dim(&self) -> usize {
        self.l.dim()
    }

    #[inline]
    pub fn shift(&self) -> f64 {
        self.shift
    }

    /// Packed lower-triangular factor (upper part of the packed storage is unused).
    pub fn lower(&self) -> &SymMatrix {
        &self.l
    }

    /// Solves `(H + shift·I) d = rhs`.
    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        let n = self.dim();
        if rhs.len() != n {
            return Err(Error::DimensionMismatch { expected: n, found: rhs.len() });
        }
        let l = self.l.packed();
        let mut y = rhs.to_vec();
        for i in 0..n {
            let row = i * (i + 1) / 2;
            let mut s = y[i];
            for j in 0..i {
                s -= l[row + j] * y[j];
            }
            y[i] = s / l[row + i];
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in i + 1..n {
                s -= l[k * (k + 1) / 2 + i] * y[k];
            }
            y[i] = s / l[i * (i + 1) / 2 + i];
        }
        Ok(y)
    }

    /// Explicit inverse of `H + shift·I`.
    pub fn inverse(&self) -> SymMatrix {
        let n = self.dim();
        let mut inv = SymMatrix::zeros(n);
        let mut e = vec![0.0; n];
        for j in 0..n {
            e.iter_mut().for_each(|v| *v = 0.0);
            e[j] = 1.0;
            let col = self.solve(&e).expect("dimension checked");
            for (i, &v) in col.iter().enumerate().skip(j) {
                inv[(i, j)] = v;
            }
        }
        inv
    }

    /// `log det(H + shift·I)`
    pub fn log_det(&self) -> f64 {
        (0..self.dim()).map(|i| 2.0 * self.l[(i, i)].ln()).sum()
    }
}

/// Cholesky factorization of `h + shift·I`; a pivot `<= PIVOT_TOL·(1 + max diag)` fails.
pub fn factorize_shifted(h: &SymMatrix, shift: f64) -> core::result::Result<CholFactor, PivotFailure> {
    let n = h.dim();
    let max_diag = (0..n).map(|i| (h[(i, i)] + shift).abs()).fold(0.0, f64::max);
    let tol = PIVOT_TOL * (1.0 + max_diag);
    let mut l = h.clone();
    if shift != 0.0 {
        l.add_identity(shift);
    }
    let a = l.packed_mut();
    for j in 0..n {
        let rj = j * (j + 1) / 2;
        let mut d = a[rj + j];
        for k in 0..j {
            d -= a[rj + k] * a[rj + k];
        }
        if !(d > tol) {
            return Err(PivotFailure { pivot: j + 1, value: d });
        }
        let djj = d.sqrt();
        a[rj + j] = djj;
        for i in j + 1..n {
            let ri = i * (i + 1) / 2;
            let mut s = a[ri + j];
            for k in 0..j {
                s -= a[ri + k] * a[rj + k];
            }
            a[ri + j] = s / djj;
        }
    }
    Ok(CholFactor { l, shift })
}

/// Plain Cholesky factorization; failure is a value carrying the first bad pivot.
pub fn factorize(h: &SymMatrix) -> core::result::Result<CholFactor, PivotFailure> {
    factorize_shifted(h, 0.0)
}

/// Shift search for a matrix whose plain factorization failed.
///
/// Starting from `beta0`, the shift is doubled while `H + βI` fails and halved
/// while it succeeds at or below `beta0`; a failure after halving doubles once
/// more and stops. The returned shift lies in `[-λ_min, -2λ_min]` for strictly
/// indefinite `H`. When `H + βI` succeeds for every tried `β` the halving is cut
/// off once `β < ε_mach·(1 + ‖H‖_∞)`.
pub fn modified_factorize(h: &SymMatrix, beta0: f64) -> CholFactor {
    assert!(beta0 > 0.0, "beta0 must be positive");
    let floor = f64::EPSILON * (1.0 + h.norm_inf());
    let mut beta = beta0;
    let mut last_ok: Option<CholFactor> = None;
    loop {
        match factorize_shifted(h, beta) {
            Err(_) => {
                if beta >= beta0 {
                    beta *= 2.0;
                    continue;
                }
                // came down from a success at 2β
                return last_ok.expect("halving only follows a success");
            }
            Ok(f) => {
                if beta <= beta0 {
                    if beta < floor {
                        return f;
                    }
                    last_ok = Some(f);
                    beta *= 0.5;
                    continue;
                }
                return f;
            }
        }
    }
}

/// Approximates `λ_min(H)` by bisection on factorization success of `H + σI`,
/// given a shift `upper` for which the factorization succeeds. Stops when the
/// bracket is relatively tighter than `rel_tol`.
pub fn lambda_min_bisection(h: &SymMatrix, upper: f64, rel_tol: f64) -> f64 {
    if factorize_shifted(h, 0.0).is_ok() {
        return 0.0;
    }
    let mut hi = upper;
    let mut lo = 0.0;
    while hi - lo > rel_tol * hi.abs().max(f64::MIN_POSITIVE) {
        let mid = 0.5 * (lo + hi);
        if factorize_shifted(h, mid).is_ok() {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    -hi
}

/// Pivot signs of an unpivoted LDLᵀ factorization.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Inertia {
    pub positive: usize,
    pub negative: usize,
    pub zero: usize,
}

/// Unpivoted LDLᵀ factorization of a (possibly indefinite) symmetric matrix.
#[derive(Debug, Clone)]
pub struct Ldlt {
    l: SymMatrix,
    d: Vec<f64>,
    inertia: Inertia,
}

impl Ldlt {
    pub fn factor(a: &SymMatrix) -> Self {
        let n = a.dim();
        let scale = (0..n).map(|i| a[(i, i)].abs()).fold(0.0, f64::max);
        let tol = PIVOT_TOL * (1.0 + scale);
        let mut l = SymMatrix::identity(n);
        let mut d = vec![0.0; n];
        let mut inertia = Inertia { positive: 0, negative: 0, zero: 0 };
        for j in 0..n {
            let mut dj = a[(j, j)];
            for k in 0..j {
                dj -= l[(j, k)] * l[(j, k)] * d[k];
            }
            d[j] = dj;
            if dj > tol {
                inertia.positive += 1;
            } else if dj < -tol {
                inertia.negative += 1;
            } else {
                inertia.zero += 1;
                continue;
            }
            for i in j + 1..n {
                let mut s = a[(i, j)];
                for k in 0..j {
                    s -= l[(i, k)] * l[(j, k)] * d[k];
                }
                l[(i, j)] = s / dj;
            }
        }
        Self { l, d, inertia }
    }

    pub fn inertia(&self) -> Inertia {
        self.inertia
    }

    /// Solves `A x = rhs`; only meaningful when no zero pivot occurred.
    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let n = self.d.len();
        let mut y = rhs.to_vec();
        for i in 0..n {
            for k in 0..i {
                y[i] -= self.l[(i, k)] * y[k];
            }
        }
        for i in 0..n {
            y[i] /= self.d[i];
        }
        for i in (0..n).rev() {
            for k in i + 1..n {
                y[i] -= self.l[(k, i)] * y[k];
            }
        }
        y
    }
}
