use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::linalg::{SparseSym, SymMatrix};
#[allow(unused_imports)]
use num_traits::Float;
use crate::model::{LinearBlock, LinearSdpData};

fn random_sym(rng: &mut ChaCha8Rng, d: usize, density: f64) -> SymMatrix {
    let mut m = SymMatrix::zeros(d);
    for i in 0..d {
        for j in 0..=i {
            if i == j || rng.gen_bool(density) {
                m[(i, j)] = rng.gen_range(-1.0..1.0);
            }
        }
    }
    m
}

fn random_pd(rng: &mut ChaCha8Rng, d: usize) -> SymMatrix {
    let b: Vec<f64> = (0..d * d).map(|_| rng.gen_range(-1.0..1.0)).collect();
    SymMatrix::from_fn(d, |i, j| {
        (0..d).map(|k| b[i * d + k] * b[j * d + k]).sum::<f64>() / d as f64 + if i == j { 0.5 } else { 0.0 }
    })
}

/// Wraps coefficient matrices into an instance that has a Slater point and a
/// strictly feasible dual, hence a finite optimum attained on both sides.
fn close_instance(rng: &mut ChaCha8Rng, coeffs: Vec<Vec<SymMatrix>>, n: usize) -> LinearSdpData {
    let x0: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let mut cost = vec![0.0; n];
    let mut blocks = Vec::new();
    for block in coeffs {
        let d = block[0].dim();
        let u0 = random_pd(rng, d);
        let mut a0 = random_pd(rng, d);
        let mut b = LinearBlock::new(d);
        for (k, a) in block.into_iter().enumerate() {
            a0.axpy(x0[k], &a);
            cost[k] -= crate::linalg::inner(&a, &u0).expect("same dimension");
            b.coeffs.push((k, SparseSym::from_sym(&a)));
        }
        b.a0 = SparseSym::from_sym(&a0);
        blocks.push(b);
    }
    LinearSdpData { n, cost, blocks }
}

/// Random linear SDP with `n` variables and the given block sizes. Both the
/// primal and the dual problem are strictly feasible.
pub fn random_lsdp(seed: u64, n: usize, dims: &[usize]) -> LinearSdpData {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let coeffs = dims.iter().map(|&d| (0..n).map(|_| random_sym(&mut rng, d, 0.6)).collect()).collect();
    close_instance(&mut rng, coeffs, n)
}

/// Linear SDP whose Newton matrices are badly conditioned in a way diagonal
/// scaling cannot repair: each `A_k` mixes a few random basis matrices with
/// weights whose singular values decay geometrically over `decades` orders
/// of magnitude. One block of size `dim`, `n` variables.
pub fn ill_conditioned_lsdp(seed: u64, n: usize, dim: usize, decades: f64) -> LinearSdpData {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let basis: Vec<SymMatrix> = (0..n).map(|_| random_sym(&mut rng, dim, 0.5)).collect();
    // A_k = Σ_j M_kj B_j with M = V diag(σ) Wᵀ, V and W random orthogonal
    let v = random_orthogonal(&mut rng, n);
    let w = random_orthogonal(&mut rng, n);
    let sigma: Vec<f64> = (0..n).map(|j| 10f64.powf(-decades * j as f64 / (n.max(2) - 1) as f64)).collect();
    let m = |k: usize, j: usize| (0..n).map(|t| v[k][t] * sigma[t] * w[j][t]).sum::<f64>();
    let mut coeffs = Vec::with_capacity(n);
    for k in 0..n {
        let mut a = SymMatrix::zeros(dim);
        for (j, bj) in basis.iter().enumerate() {
            a.axpy(m(k, j), bj);
        }
        coeffs.push(a);
    }
    close_instance(&mut rng, vec![coeffs], n)
}

/// Rows of an orthogonal matrix from Gram–Schmidt on random vectors.
fn random_orthogonal(rng: &mut ChaCha8Rng, n: usize) -> Vec<Vec<f64>> {
    let mut q: Vec<Vec<f64>> = Vec::with_capacity(n);
    while q.len() < n {
        let mut v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        for _ in 0..2 {
            for u in &q {
                let c = crate::linalg::dot(u, &v);
                v.iter_mut().zip(u).for_each(|(vi, ui)| *vi -= c * ui);
            }
        }
        let nv = crate::linalg::norm2(&v);
        if nv > 1e-8 {
            v.iter_mut().for_each(|vi| *vi /= nv);
            q.push(v);
        }
    }
    q
}
