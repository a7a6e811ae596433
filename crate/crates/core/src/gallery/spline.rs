use alloc::format;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::SymMatrix;
#[allow(unused_imports)]
use num_traits::Float;
use crate::model::{LinearFn, MatrixVar, NlpSdpData, QuadraticFn, SharedFn};

/// `m + 1` equally spaced knots on `[0, 1]`.
pub fn uniform_knots(intervals: usize) -> Vec<f64> {
    (0..=intervals).map(|i| i as f64 / intervals as f64).collect()
}

/// Noisy samples `cos(4πt) + 1 + 0.5u − 0.25` at uniform random `t ∈ (0, 1)`.
pub fn cosine_samples(count: usize, seed: u64) -> Vec<(f64, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let mut t: f64 = rng.gen();
            while t == 0.0 {
                t = rng.gen();
            }
            let u: f64 = rng.gen();
            (t, (4.0 * core::f64::consts::PI * t).cos() + 1.0 + 0.5 * u - 0.25)
        })
        .collect()
}

/// Interval of `t`; a point on an interior knot belongs to the interval on its left.
fn interval_of(knots: &[f64], t: f64) -> usize {
    let m = knots.len() - 1;
    (1..=m).find(|&i| t <= knots[i]).unwrap_or(m) - 1
}

/// Value of the piecewise cubic with coefficients `c[4i + k]` of `(t − a_i)^k`.
pub fn spline_eval(knots: &[f64], coeffs: &[f64], t: f64) -> f64 {
    let i = interval_of(knots, t);
    let s = t - knots[i];
    let c = &coeffs[4 * i..4 * i + 4];
    c[0] + s * (c[1] + s * (c[2] + s * c[3]))
}

/// The `4m` polynomial coefficients at the front of a spline iterate.
pub fn spline_coefficients(z: &[f64], knots: &[f64]) -> Vec<f64> {
    z[..4 * (knots.len() - 1)].to_vec()
}

/// Jumps in value, first and second derivative at each interior knot.
pub fn continuity_residuals(knots: &[f64], coeffs: &[f64]) -> Vec<f64> {
    let mut out = Vec::new();
    for i in 0..knots.len().saturating_sub(2) {
        let d = knots[i + 1] - knots[i];
        let c = &coeffs[4 * i..4 * i + 4];
        let next = &coeffs[4 * i + 4..4 * i + 8];
        out.push(next[0] - c[0] - c[1] * d - c[2] * d * d - c[3] * d * d * d);
        out.push(next[1] - c[1] - 2.0 * c[2] * d - 3.0 * c[3] * d * d);
        out.push(2.0 * next[2] - 2.0 * c[2] - 6.0 * c[3] * d);
    }
    out
}

/// Least-squares cubic spline with continuous second derivative that is
/// nonnegative on `[0, 1]`.
///
/// Unknowns are the `4m` coefficients followed by two `2×2` PSD matrices per
/// interval, `X = [x y; y z]` and `S = [s v; v w]`, tied to the coefficients by
/// `P(τ) = τ·[1 τ]X[1 τ]ᵀ + (Δ − τ)·[1 τ]S[1 τ]ᵀ` on an interval of length `Δ`.
pub fn build_spline(knots: &[f64], data: &[(f64, f64)]) -> Result<NlpSdpData> {
    let m = knots.len().checked_sub(1).filter(|&m| m >= 1).ok_or_else(|| {
        Error::InvalidProblem("a spline needs at least two knots".into())
    })?;
    if knots[0] != 0.0 || knots[m] != 1.0 || knots.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::InvalidProblem("knots must increase strictly from 0 to 1".into()));
    }
    if let Some((j, _)) = data.iter().enumerate().find(|(_, (t, b))| !(*t > 0.0 && *t < 1.0) || !b.is_finite()) {
        return Err(Error::InvalidProblem(format!("data point {j} lies outside (0, 1)")));
    }
    let n = 4 * m;
    let arity = n + 2 * m * 3;
    let x_off = |i: usize| n + 6 * i;
    let s_off = |i: usize| n + 6 * i + 3;

    let mut q = SymMatrix::zeros(arity);
    let mut lin = vec![0.0; arity];
    let mut constant = 0.0;
    for &(t, b) in data {
        let i = interval_of(knots, t);
        let s = t - knots[i];
        let phi = [1.0, s, s * s, s * s * s];
        for k in 0..4 {
            lin[4 * i + k] -= 2.0 * b * phi[k];
            for l in 0..=k {
                q[(4 * i + k, 4 * i + l)] += 2.0 * phi[k] * phi[l];
            }
        }
        constant += b * b;
    }

    let mut eq: Vec<SharedFn> = Vec::new();
    let mut push = |terms: &[(usize, f64)]| eq.push(Arc::new(LinearFn::sparse(arity, terms, 0.0)));
    for i in 0..m - 1 {
        let d = knots[i + 1] - knots[i];
        let p = |k: usize| 4 * i + k;
        let next = |k: usize| 4 * (i + 1) + k;
        push(&[(next(0), 1.0), (p(0), -1.0), (p(1), -d), (p(2), -d * d), (p(3), -d * d * d)]);
        push(&[(next(1), 1.0), (p(1), -1.0), (p(2), -2.0 * d), (p(3), -3.0 * d * d)]);
        push(&[(next(2), 2.0), (p(2), -2.0), (p(3), -6.0 * d)]);
    }
    for i in 0..m {
        let d = knots[i + 1] - knots[i];
        let p = |k: usize| 4 * i + k;
        let (x, y, z) = (x_off(i), x_off(i) + 1, x_off(i) + 2);
        let (s, v, w) = (s_off(i), s_off(i) + 1, s_off(i) + 2);
        push(&[(p(0), 1.0), (s, -d)]);
        push(&[(p(1), 1.0), (x, -1.0), (s, 1.0), (v, -2.0 * d)]);
        push(&[(p(2), 1.0), (y, -2.0), (v, 2.0), (w, -d)]);
        push(&[(p(3), 1.0), (z, -1.0), (w, 1.0)]);
    }

    Ok(NlpSdpData {
        n,
        matrix_vars: vec![MatrixVar::psd(2); 2 * m],
        objective: Arc::new(QuadraticFn { q, linear: lin, constant }),
        inequalities: Vec::new(),
        equalities: eq,
        matrix_constraints: Vec::new(),
        initial: None,
    })
}
