use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::packed_index;
use crate::linalg::SymMatrix;
#[allow(unused_imports)]
use num_traits::Float;
use crate::model::{LinearFn, MatrixVar, NlpSdpData, QuadraticFn, ScalarFn, SharedFn};

/// 6×6 correlation-like matrix whose last row and column come from a
/// different data source; it is indefinite. The printed source has one
/// asymmetric entry pair; the lower triangle is taken as authoritative.
pub fn h_ext() -> SymMatrix {
    #[rustfmt::skip]
    let lower = [
        1.0,
        -0.44, 1.0,
        -0.20, 0.87, 1.0,
        0.81, -0.38, -0.17, 1.0,
        -0.46, 0.81, 0.65, -0.37, 1.0,
        -0.05, -0.58, -0.56, -0.15, 0.08, 1.0,
    ];
    SymMatrix::from_packed(6, lower.to_vec()).expect("21 entries")
}

/// Weight of each packed entry in a Frobenius sum: off-diagonals count twice.
fn frobenius_weights(n: usize) -> Vec<f64> {
    let mut w = vec![2.0; n * (n + 1) / 2];
    for i in 0..n {
        w[packed_index(i, i)] = 1.0;
    }
    w
}

fn unit_diagonal(arity: usize, offset: usize, n: usize, zeta: Option<usize>) -> Vec<SharedFn> {
    (0..n)
        .map(|i| {
            let mut terms = vec![(offset + packed_index(i, i), 1.0)];
            let constant = match zeta {
                Some(k) => {
                    terms.push((k, -1.0));
                    0.0
                }
                None => -1.0,
            };
            Arc::new(LinearFn::sparse(arity, &terms, constant)) as SharedFn
        })
        .collect()
}

/// `min ‖X − H‖²_F` subject to `X_ii = 1`, `X ⪰ 0`; the only unknown is the
/// matrix variable `X`.
pub fn build_nearest_corr(h: &SymMatrix) -> NlpSdpData {
    let n = h.dim();
    let w = frobenius_weights(n);
    let len = w.len();
    let objective = QuadraticFn {
        q: SymMatrix::from_diag(&w.iter().map(|wi| 2.0 * wi).collect::<Vec<_>>()),
        linear: w.iter().zip(h.packed()).map(|(wi, hi)| -2.0 * wi * hi).collect(),
        constant: w.iter().zip(h.packed()).map(|(wi, hi)| wi * hi * hi).sum(),
    };
    NlpSdpData {
        n: 0,
        matrix_vars: vec![MatrixVar::psd(n)],
        objective: Arc::new(objective),
        inequalities: Vec::new(),
        equalities: unit_diagonal(len, 0, n, None),
        matrix_constraints: Vec::new(),
        initial: Some(SymMatrix::identity(n).into_packed()),
    }
}

/// `Σ w_t (y_t/ζ − h_t)²` over the packed entries `y` of the scaled matrix.
#[derive(Debug, Clone)]
struct ScaledFit {
    h: Vec<f64>,
    w: Vec<f64>,
}

impl ScalarFn for ScaledFit {
    fn arity(&self) -> usize {
        self.h.len() + 1
    }

    fn value(&self, z: &[f64]) -> f64 {
        let zeta = z[0];
        self.h.iter().zip(&self.w).zip(&z[1..]).map(|((h, w), y)| w * (y / zeta - h).powi(2)).sum()
    }

    fn gradient(&self, z: &[f64]) -> Vec<f64> {
        let zeta = z[0];
        let mut g = vec![0.0; z.len()];
        for (t, ((h, w), y)) in self.h.iter().zip(&self.w).zip(&z[1..]).enumerate() {
            let r = y / zeta - h;
            g[t + 1] = 2.0 * w * r / zeta;
            g[0] -= 2.0 * w * r * y / (zeta * zeta);
        }
        g
    }

    fn hessian(&self, z: &[f64]) -> Option<SymMatrix> {
        let zeta = z[0];
        let mut hm = SymMatrix::zeros(z.len());
        for (t, ((h, w), y)) in self.h.iter().zip(&self.w).zip(&z[1..]).enumerate() {
            let r = y / zeta - h;
            let d = y / (zeta * zeta);
            hm[(t + 1, t + 1)] = 2.0 * w / (zeta * zeta);
            hm[(t + 1, 0)] = -2.0 * w * (d / zeta + r / (zeta * zeta));
            hm[(0, 0)] += 2.0 * w * (d * d + 2.0 * r * y / (zeta * zeta * zeta));
        }
        Some(hm)
    }
}

/// Nearest correlation matrix with `cond(X) ≤ κ`, written for `X̃ = ζX`:
/// `min Σ (X̃_ij/ζ − H_ij)²` subject to `X̃_ii = ζ`, `I ⪯ X̃ ⪯ κI`.
/// Unknowns are `(ζ, svec X̃)`; the start point is `ζ = √κ`, `X̃ = ζI`, the
/// geometric center of the admissible range.
pub fn build_corr_cond(h: &SymMatrix, kappa: f64) -> NlpSdpData {
    let n = h.dim();
    let fit = ScaledFit { h: h.packed().to_vec(), w: frobenius_weights(n) };
    let arity = fit.arity();
    let zeta0 = kappa.sqrt();
    let mut initial = vec![zeta0];
    initial.extend(SymMatrix::scaled_identity(n, zeta0).into_packed());
    NlpSdpData {
        n: 1,
        matrix_vars: vec![MatrixVar::bounded(n, 1.0, kappa)],
        objective: Arc::new(fit),
        inequalities: Vec::new(),
        equalities: unit_diagonal(arity, 1, n, Some(0)),
        matrix_constraints: Vec::new(),
        initial: Some(initial),
    }
}

/// `(ζ, X̃/ζ)` from a point of [`build_corr_cond`].
pub fn corr_cond_matrix(z: &[f64], n: usize) -> (f64, SymMatrix) {
    let zeta = z[0];
    let x = SymMatrix::from_packed(n, z[1..].iter().map(|v| v / zeta).collect()).expect("packed length");
    (zeta, x)
}

/// `H = (1 − noise)·G + noise·E` with `G` a random correlation matrix (a
/// normalized Gram matrix of random vectors) and `E` symmetric with entries
/// uniform in `[−1, 1]`.
pub fn gen_perturbed_corr(n: usize, noise: f64, seed: u64) -> SymMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rows: Vec<Vec<f64>> = (0..n).map(|_| (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
    let gram = |i: usize, j: usize| rows[i].iter().zip(&rows[j]).map(|(a, b)| a * b).sum::<f64>();
    let norms: Vec<f64> = (0..n).map(|i| gram(i, i).sqrt()).collect();
    let mut e = SymMatrix::zeros(n);
    for i in 0..n {
        for j in 0..=i {
            e[(i, j)] = rng.gen_range(-1.0..=1.0);
        }
    }
    SymMatrix::from_fn(n, |i, j| {
        let g = if i == j { 1.0 } else { gram(i, j) / (norms[i] * norms[j]) };
        (1.0 - noise) * g + noise * e[(i, j)]
    })
}
