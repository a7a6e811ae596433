//! Acceptance suite: one line per criterion, `PASS` or `FAIL`, with the
//! measured quantities and the wall time. The lines go straight to standard
//! error so they show up without `--nocapture`.

use std::io::Write as _;
use std::time::Instant;

use matineq::{parse_sdpa, write_sdpa};
use matineq_core::config::{SolverConfig, SolverKind};
use matineq_core::gallery::*;
use matineq_core::linalg::{eigenvalues, factorize, modified_factorize, SparseSym, SymMatrix};
use matineq_core::model::{LinearBlock, LinearSdpData, Model, ProblemSpec};
use matineq_core::penalty::{hess_vec_implicit, update_multipliers, IterateState};
use matineq_core::subsolver::{solve_pcg, Precond};
use matineq_core::{solve, SolveStatus};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn rel_err(a: &[f64], b: &[f64]) -> f64 {
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    norm(&d) / (1.0 + norm(b))
}

fn full(m: &SymMatrix) -> Vec<f64> {
    let n = m.dim();
    (0..n * n).map(|t| m[(t / n, t % n)]).collect()
}

// ---------------------------------------------------------------- 1 and 2

#[rustfmt::skip]
const NEAREST_X: [f64; 36] = [
     1.0000, -0.4420, -0.2000,  0.8096, -0.4585, -0.0513,
    -0.4420,  1.0000,  0.8704, -0.3714,  0.7798, -0.5549,
    -0.2000,  0.8704,  1.0000, -0.1699,  0.6497, -0.5597,
     0.8096, -0.3714, -0.1699,  1.0000, -0.3766, -0.1445,
    -0.4585,  0.7798,  0.6497, -0.3766,  1.0000,  0.0608,
    -0.0513, -0.5549, -0.5597, -0.1445,  0.0608,  1.0000,
];
const NEAREST_EIG: [f64; 6] = [0.0000, 0.1163, 0.2120, 0.7827, 1.7132, 3.1757];

#[rustfmt::skip]
const COND_X: [f64; 36] = [
     1.0000, -0.3775, -0.2230,  0.7098, -0.4272, -0.0704,
    -0.3775,  1.0000,  0.6930, -0.3155,  0.5998, -0.4218,
    -0.2230,  0.6930,  1.0000, -0.1546,  0.5523, -0.4914,
     0.7098, -0.3155, -0.1546,  1.0000, -0.3857, -0.1294,
    -0.4272,  0.5998,  0.5523, -0.3857,  1.0000, -0.0576,
    -0.0704, -0.4218, -0.4914, -0.1294, -0.0576,  1.0000,
];
const COND_EIG: [f64; 6] = [0.2866, 0.2866, 0.2867, 0.6717, 1.6019, 2.8664];

fn nearest_correlation() -> Outcome {
    let r = solve(&ProblemSpec::Nlp(build_nearest_corr(&h_ext())), &SolverConfig::default());
    let x = SymMatrix::from_packed(6, r.x.clone()).map_err(|e| format!("{e}"))?;
    let dx = max_abs_diff(&full(&x), &NEAREST_X);
    let de = max_abs_diff(&eigenvalues(&x), &NEAREST_EIG);
    check(
        r.status == SolveStatus::Optimal && dx <= 2e-3 && de <= 2e-3,
        format!("{:?}, max |X − X_ref| = {dx:.1e}, max eigenvalue error = {de:.1e}", r.status),
    )
}

fn condition_bounded_correlation() -> Outcome {
    let r = solve(&ProblemSpec::Nlp(build_corr_cond(&h_ext(), 10.0)), &SolverConfig::default());
    let (zeta, x) = corr_cond_matrix(&r.x, 6);
    let eig = eigenvalues(&x);
    let cond = eig[5] / eig[0];
    let dx = max_abs_diff(&full(&x), &COND_X);
    let de = max_abs_diff(&eig, &COND_EIG);
    // entry-by-entry view of the mismatch, for the record
    let worst = (0..36).max_by(|&a, &b| {
        let da = (full(&x)[a] - COND_X[a]).abs();
        let db = (full(&x)[b] - COND_X[b]).abs();
        da.total_cmp(&db)
    });
    let at = worst.map(|t| format!(" at ({}, {})", t / 6 + 1, t % 6 + 1)).unwrap_or_default();
    check(
        r.status == SolveStatus::Optimal
            && (zeta - 3.4886).abs() <= 0.01
            && (cond - 10.0).abs() <= 0.01
            && dx <= 2e-3
            && de <= 2e-3,
        format!("{:?}, ζ = {zeta:.5}, cond = {cond:.6}, max |X − X_ref| = {dx:.1e}{at}, max eigenvalue error = {de:.1e}", r.status),
    )
}

// ---------------------------------------------------------------- 3

/// Stabilizing Riccati solution by Newton–Kleinman: repeated Lyapunov
/// solves with the Kronecker form, starting from K = 0 (A is stable).
fn riccati_trace() -> f64 {
    let a = DMatrix::from_row_slice(2, 2, &[LQ_A[0][0], LQ_A[0][1], LQ_A[1][0], LQ_A[1][1]]);
    let b = DMatrix::from_column_slice(2, 1, &LQ_B);
    let id = DMatrix::<f64>::identity(2, 2);
    let mut k = DMatrix::zeros(1, 2);
    let mut p = DMatrix::zeros(2, 2);
    for _ in 0..60 {
        let acl_t = (&a + &b * &k).transpose();
        let lhs = id.kronecker(&acl_t) + acl_t.kronecker(&id);
        let rhs = -(&id + k.transpose() * &k);
        let sol = lhs.lu().solve(&DVector::from_column_slice(rhs.as_slice())).expect("stable closed loop");
        p = DMatrix::from_column_slice(2, 2, sol.as_slice());
        k = -(b.transpose() * &p);
    }
    p.trace()
}

fn lq_feedback() -> Outcome {
    let r = solve(&ProblemSpec::Bmi(build_lq_feedback()), &SolverConfig::default());
    let (p, k) = lq_feedback_parts(&r.x);
    let acl = DMatrix::from_row_slice(
        2,
        2,
        &[LQ_A[0][0] + LQ_B[0] * k[0], LQ_A[0][1] + LQ_B[0] * k[1], LQ_A[1][0] + LQ_B[1] * k[0], LQ_A[1][1] + LQ_B[1] * k[1]],
    );
    let abscissa = acl.complex_eigenvalues().iter().map(|e| e.re).fold(f64::NEG_INFINITY, f64::max);
    let reference = riccati_trace();
    let rel = (p.trace() - reference).abs() / reference;
    check(
        r.status == SolveStatus::Optimal && abscissa < 0.0 && rel <= 1e-3,
        format!("{:?}, spectral abscissa = {abscissa:.4}, trace P = {:.8} vs {reference:.8} (rel {rel:.1e})", r.status, p.trace()),
    )
}

// ---------------------------------------------------------------- 4

struct DenseBlocks {
    a0: DMatrix<f64>,
    a: Vec<DMatrix<f64>>,
}

fn dense(s: &SparseSym) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(s.dim(), s.dim());
    for &(i, j, v) in s.entries() {
        m[(i, j)] = v;
        m[(j, i)] = v;
    }
    m
}

/// Minimizes `t·cᵀz − Σ log det(B0 − Σ z_k B_k)` by damped Newton from a
/// strictly feasible `z`. Returns `None` if the start is infeasible.
fn center(c: &[f64], blocks: &[DenseBlocks], z: &mut Vec<f64>, t: f64, ridge: bool, stop: &dyn Fn(&[f64]) -> bool) -> Option<()> {
    let n = z.len();
    let slack = |z: &[f64]| -> Vec<DMatrix<f64>> {
        blocks
            .iter()
            .map(|b| {
                let mut s = b.a0.clone();
                for (zk, ak) in z.iter().zip(&b.a) {
                    s -= ak * *zk;
                }
                s
            })
            .collect()
    };
    let merit = |z: &[f64]| -> Option<f64> {
        let mut v = t * c.iter().zip(z).map(|(a, b)| a * b).sum::<f64>();
        for s in slack(z) {
            let ch = s.cholesky()?;
            v -= 2.0 * ch.l().diagonal().iter().map(|d| d.ln()).sum::<f64>();
        }
        Some(v)
    };
    for _ in 0..200 {
        if stop(z) {
            return Some(());
        }
        let mut g = DVector::from_iterator(n, c.iter().map(|ci| t * ci));
        let mut h = DMatrix::zeros(n, n);
        for (b, s) in blocks.iter().zip(slack(z)) {
            let sinv = s.cholesky()?.inverse();
            let w: Vec<DMatrix<f64>> = b.a.iter().map(|ak| &sinv * ak).collect();
            for k in 0..n {
                g[k] += w[k].trace();
                for l in 0..=k {
                    let v = (&w[k] * &w[l]).trace();
                    h[(k, l)] += v;
                    h[(l, k)] = h[(k, l)];
                }
            }
        }
        // Directions with Σ d_k A_k = 0 leave the barrier flat. Phase one must
        // move along them (a small ridge allows it); in phase two the cost is
        // constant there, so they are projected out.
        let d = if ridge {
            let r = 1e-9 * (1.0 + (0..n).map(|i| h[(i, i)]).fold(0.0, f64::max));
            (h + DMatrix::identity(n, n) * r).cholesky()?.solve(&(-&g))
        } else {
            let svd = h.svd(true, true);
            let cut = 1e-12 * svd.singular_values.max();
            svd.solve(&(-&g), cut).ok()?
        };
        let dec = -g.dot(&d);
        if dec < 1e-14 {
            return Some(());
        }
        let m0 = merit(z)?;
        let mut step = 1.0;
        loop {
            let trial: Vec<f64> = z.iter().zip(d.iter()).map(|(a, b)| a + step * b).collect();
            if let Some(m1) = merit(&trial) {
                if m1 <= m0 - 0.25 * step * dec {
                    *z = trial;
                    break;
                }
            }
            step *= 0.5;
            if step < 1e-14 {
                return Some(());
            }
        }
    }
    Some(())
}

/// Optimal value of a linear SDP by a primal log-barrier method: phase one
/// finds a strictly feasible point, phase two follows the central path
/// until the duality gap bound Σdim/t is below 1e-11.
fn barrier_optimum(p: &LinearSdpData) -> f64 {
    let n = p.n;
    let blocks: Vec<DenseBlocks> = p
        .blocks
        .iter()
        .map(|b| DenseBlocks {
            a0: dense(&b.a0),
            a: (0..n).map(|k| b.coeff(k).map(dense).unwrap_or_else(|| DMatrix::zeros(b.dim, b.dim))).collect(),
        })
        .collect();
    // phase one: B0 − Σ x_k A_k + sI ≻ 0, minimize s until it is negative
    let s0 = blocks.iter().map(|b| -b.a0.symmetric_eigenvalues().min()).fold(0.0, f64::max) + 1.0;
    let ph1: Vec<DenseBlocks> = blocks
        .iter()
        .map(|b| {
            let mut a = b.a.clone();
            a.push(-DMatrix::identity(b.a0.nrows(), b.a0.nrows()));
            DenseBlocks { a0: b.a0.clone(), a }
        })
        .collect();
    let mut z = vec![0.0; n];
    z.push(s0);
    let mut c1 = vec![0.0; n];
    c1.push(1.0);
    let mut t = 1.0;
    while z[n] >= -1e-6 {
        center(&c1, &ph1, &mut z, t, true, &|z| z[n] < -1e-6).expect("phase one stays feasible");
        t *= 10.0;
        assert!(t < 1e12, "no strictly feasible point");
    }
    z.pop();
    let total: usize = p.blocks.iter().map(|b| b.dim).sum();
    let mut t = 1.0;
    while (total as f64) / t > 1e-11 {
        center(&p.cost, &blocks, &mut z, t, false, &|_| false).expect("phase two stays feasible");
        t *= 8.0;
    }
    center(&p.cost, &blocks, &mut z, t, false, &|_| false).expect("phase two stays feasible");
    p.cost.iter().zip(&z).map(|(a, b)| a * b).sum()
}

fn random_lsdps() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let cfg = SolverConfig { dimacs: true, ..Default::default() };
    let (mut worst_obj, mut worst_dimacs) = (0.0f64, 0.0f64);
    let mut failures = Vec::new();
    for case in 0..20 {
        let n = rng.gen_range(1..=10);
        let mut dims = Vec::new();
        let mut left = rng.gen_range(1..=8usize);
        while left > 0 {
            let d = rng.gen_range(1..=left);
            dims.push(d);
            left -= d;
        }
        let p = random_lsdp(1000 + case, n, &dims);
        let reference = barrier_optimum(&p);
        let r = solve(&ProblemSpec::Linear(p), &cfg);
        let d = r.dimacs.map(|d| d.max()).unwrap_or(f64::INFINITY);
        let gap = (r.objective - reference).abs();
        worst_obj = worst_obj.max(gap);
        worst_dimacs = worst_dimacs.max(d);
        if r.status != SolveStatus::Optimal || gap > 1e-5 || d > 1e-7 {
            failures.push(format!("case {case} (n = {n}, blocks {dims:?}): {:?}, gap {gap:.1e}, DIMACS {d:.1e}", r.status));
        }
    }
    let detail = format!("20 instances, max objective gap = {worst_obj:.1e}, max DIMACS error = {worst_dimacs:.1e}");
    if failures.is_empty() {
        Ok(detail)
    } else {
        Err(format!("{detail}; {}", failures.join("; ")))
    }
}

// ---------------------------------------------------------------- 5

fn spline_experiment() -> Outcome {
    let knots = uniform_knots(8);
    let p = build_spline(&knots, &cosine_samples(500, 0)).map_err(|e| format!("{e}"))?;
    let r = solve(&ProblemSpec::Nlp(p), &SolverConfig::default());
    let c = spline_coefficients(&r.x, &knots);
    let cont = continuity_residuals(&knots, &c).iter().fold(0.0f64, |a, b| a.max(b.abs()));
    let min_p = (0..=1000).map(|i| spline_eval(&knots, &c, i as f64 / 1000.0)).fold(f64::INFINITY, f64::min);
    check(
        r.status == SolveStatus::Optimal && cont <= 1e-6 && min_p >= -1e-8 && r.outer_iterations <= 60,
        format!(
            "{:?}, {} outer / {} Newton, continuity residual = {cont:.1e}, min P on grid = {min_p:.2e}",
            r.status, r.outer_iterations, r.stats.newton_steps
        ),
    )
}

// ---------------------------------------------------------------- 6

fn random_pd(rng: &mut ChaCha8Rng, d: usize) -> SymMatrix {
    let b: Vec<f64> = (0..d * d).map(|_| rng.gen_range(-1.0..1.0)).collect();
    SymMatrix::from_fn(d, |i, j| (0..d).map(|k| b[i * d + k] * b[j * d + k]).sum::<f64>() + if i == j { 0.3 } else { 0.0 })
}

fn random_sym(rng: &mut ChaCha8Rng, d: usize) -> SymMatrix {
    let mut m = SymMatrix::zeros(d);
    for i in 0..d {
        for j in 0..=i {
            m[(i, j)] = rng.gen_range(-1.0..1.0);
        }
    }
    m
}

/// Random point, PD multipliers and a penalty well inside the domain.
fn random_state(model: &Model, x: Vec<f64>, rng: &mut ChaCha8Rng) -> IterateState {
    let mut st = IterateState::new(model, x, &SolverConfig::default());
    st.u = model.blocks().iter().map(|b| random_pd(rng, b.dim)).collect();
    st.v = st.v.iter().map(|_| rng.gen_range(-1.0..1.0)).collect();
    st.p = 1.0 + 2.0 * model.max_violation(&st.x).max(0.0);
    st
}

/// A mix of linear, bilinear and nonlinear models with random states.
fn sample_states(rng: &mut ChaCha8Rng) -> Vec<(Model, IterateState)> {
    let mut out = Vec::new();
    for seed in 0..4 {
        let m = Model::new(&ProblemSpec::Linear(random_lsdp(seed, 5, &[3, 2]))).unwrap();
        let x = (0..5).map(|_| rng.gen_range(-0.5..0.5)).collect();
        let st = random_state(&m, x, rng);
        out.push((m, st));
    }
    let m = Model::new(&ProblemSpec::Bmi(build_lq_feedback())).unwrap();
    for _ in 0..3 {
        let x = vec![1.0 + rng.gen_range(-0.3..0.3), rng.gen_range(-0.3..0.3), 1.0 + rng.gen_range(-0.3..0.3), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
        let st = random_state(&m, x, rng);
        out.push((m.clone(), st));
    }
    let m = Model::new(&ProblemSpec::Nlp(build_corr_cond(&h_ext(), 10.0))).unwrap();
    for _ in 0..3 {
        let zeta = rng.gen_range(2.0..4.0);
        let mut x = vec![zeta];
        x.extend(SymMatrix::from_fn(6, |i, j| if i == j { zeta } else { 0.2 * rng.gen_range(-1.0..1.0) }).into_packed());
        let st = random_state(&m, x, rng);
        out.push((m.clone(), st));
    }
    out
}

fn derivative_suites(rng: &mut ChaCha8Rng) -> Result<String, String> {
    let (mut g_worst, mut h_worst, mut i_worst) = (0.0f64, 0.0f64, 0.0f64);
    for (m, st) in sample_states(rng) {
        let al = st.lagrangian(&m);
        let x = &st.x;
        let h = 1e-6 * (1.0 + norm(x));
        let g = al.gradient(x).map_err(|e| format!("{e}"))?;
        let hess = al.hessian(x).map_err(|e| format!("{e}"))?;
        let mut fd_g = vec![0.0; x.len()];
        for i in 0..x.len() {
            let (mut a, mut b) = (x.clone(), x.clone());
            a[i] += h;
            b[i] -= h;
            fd_g[i] = (al.value(&a).unwrap() - al.value(&b).unwrap()) / (2.0 * h);
            let (ga, gb) = (al.gradient(&a).unwrap(), al.gradient(&b).unwrap());
            let col: Vec<f64> = ga.iter().zip(&gb).map(|(p, q)| (p - q) / (2.0 * h)).collect();
            let exact: Vec<f64> = (0..x.len()).map(|j| hess[(j, i)]).collect();
            h_worst = h_worst.max(rel_err(&col, &exact));
        }
        g_worst = g_worst.max(rel_err(&fd_g, &g));
        if m.blocks().iter().all(|b| b.kind == matineq_core::model::BlockKind::Penalty) && m.equalities().is_empty() {
            if let Ok(w0) = hess_vec_implicit(&m, &st, &vec![0.0; x.len()]) {
                assert!(w0.iter().all(|v| *v == 0.0));
                let w: Vec<f64> = (0..x.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
                let implicit = hess_vec_implicit(&m, &st, &w).map_err(|e| format!("{e}"))?;
                i_worst = i_worst.max(rel_err(&implicit, &hess.mul_vec(&w)));
            }
        }
    }
    let line = format!("gradient vs FD {g_worst:.1e}, Hessian vs FD {h_worst:.1e}, implicit product {i_worst:.1e}");
    if g_worst <= 1e-6 && h_worst <= 1e-4 && i_worst <= 1e-10 {
        Ok(line)
    } else {
        Err(line)
    }
}

fn shift_suite(rng: &mut ChaCha8Rng) -> Result<String, String> {
    let mut worst: f64 = 0.0;
    for case in 0..100 {
        let d = rng.gen_range(2..12);
        let m = random_sym(rng, d);
        let na = DMatrix::from_fn(d, d, |i, j| m[(i, j)]);
        let lmin = na.symmetric_eigenvalues().min();
        if lmin >= 0.0 {
            continue;
        }
        let beta0 = 1e-3 * (1.0 + m.norm_inf());
        let shift = modified_factorize(&m, beta0).shift();
        // the factorization test has a relative pivot floor; allow that much slack
        let slack = 1e-10 * (1.0 + m.norm_inf());
        let (lo, hi) = (-lmin - slack, -2.0 * lmin + slack);
        if !(shift >= lo && shift <= hi) {
            return Err(format!("case {case}: shift {shift:e} outside [{:e}, {:e}]", -lmin, -2.0 * lmin));
        }
        worst = worst.max(shift / -lmin);
    }
    Ok(format!("shift/(−λmin) ≤ {worst:.3}"))
}

fn multiplier_suite(rng: &mut ChaCha8Rng) -> Result<String, String> {
    let mut tried = 0;
    for seed in 0..100u64 {
        let m = Model::new(&ProblemSpec::Linear(random_lsdp(seed, 3, &[3, 2]))).unwrap();
        let x: Vec<f64> = (0..3).map(|_| rng.gen_range(-0.5..0.5)).collect();
        let st = random_state(&m, x, rng);
        let x_new: Vec<f64> = st.x.iter().map(|v| v + rng.gen_range(-0.1..0.1)).collect();
        if m.max_violation(&x_new) >= st.p {
            continue;
        }
        tried += 1;
        let mu = rng.gen_range(0.05..1.0);
        for u in update_multipliers(&m, &st, &x_new, mu).map_err(|e| format!("{e}"))? {
            if factorize(&u).is_err() {
                return Err(format!("seed {seed}: updated multiplier is not positive definite"));
            }
        }
    }
    check(tried >= 90, format!("{tried} updates stayed positive definite"))
}

fn pcg_suite(rng: &mut ChaCha8Rng) -> Result<String, String> {
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let d = rng.gen_range(1..40);
        let h = random_pd(rng, d);
        let g: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let cg = solve_pcg(&mut |v| Ok(h.mul_vec(v)), &g, &Precond::Identity, 1e-10, 10 * d).map_err(|e| format!("{e}"))?;
        let neg: Vec<f64> = g.iter().map(|v| -v).collect();
        let direct = factorize(&h).map_err(|e| format!("{e:?}"))?.solve(&neg).map_err(|e| format!("{e}"))?;
        worst = worst.max(rel_err(&cg.d, &direct));
    }
    check(worst <= 1e-6, format!("PCG vs direct {worst:.1e}"))
}

fn random_sparse(rng: &mut ChaCha8Rng, dim: usize, diagonal: bool) -> SparseSym {
    let mut e = Vec::new();
    for j in 0..dim {
        for i in 0..=j {
            if (!diagonal || i == j) && rng.gen_bool(0.5) {
                let scale = 10f64.powi(rng.gen_range(-8..8));
                e.push((i, j, scale * rng.gen_range(-1.0..1.0)));
            }
        }
    }
    SparseSym::from_entries(dim, e)
}

/// Random problem in canonical form: sorted entries, no explicit zeros,
/// coefficient lists ordered by variable.
pub fn random_canonical_lsdp(rng: &mut ChaCha8Rng) -> LinearSdpData {
    let n = rng.gen_range(1..6);
    let blocks = (0..rng.gen_range(1..4))
        .map(|_| {
            let dim = rng.gen_range(1..6);
            let mut b = LinearBlock::new(dim);
            b.diagonal = rng.gen_bool(0.3);
            b.a0 = random_sparse(rng, dim, b.diagonal);
            for k in 0..n {
                let a = random_sparse(rng, dim, b.diagonal);
                if !a.is_empty() {
                    b.coeffs.push((k, a));
                }
            }
            b
        })
        .collect();
    LinearSdpData { n, cost: (0..n).map(|_| rng.gen_range(-1e3..1e3)).collect(), blocks }
}

fn sdpa_suite(rng: &mut ChaCha8Rng) -> Result<String, String> {
    for case in 0..100 {
        let p = random_canonical_lsdp(rng);
        let text = write_sdpa(&p);
        let back = parse_sdpa(&text).map_err(|e| format!("case {case}: {e}"))?;
        if back != p {
            return Err(format!("case {case}: parse(write(P)) differs"));
        }
        if write_sdpa(&back) != text {
            return Err(format!("case {case}: writer output not stable"));
        }
    }
    Ok("100 SDPA round trips exact".into())
}

fn property_suites() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let parts = [
        derivative_suites(&mut rng),
        shift_suite(&mut rng),
        multiplier_suite(&mut rng),
        pcg_suite(&mut rng),
        sdpa_suite(&mut rng),
    ];
    let ok = parts.iter().all(|p| p.is_ok());
    let text: Vec<String> = parts.into_iter().map(|p| p.unwrap_or_else(|e| format!("FAILED {e}"))).collect();
    check(ok, text.join("; "))
}

// ---------------------------------------------------------------- 7

fn contraction() -> Outcome {
    // min x1 + x2  s.t. [[x1, 1], [1, x2]] ⪰ 0, optimum (1, 1) by AM-GM
    let mut b = LinearBlock::new(2);
    b.a0 = SparseSym::from_entries(2, [(0, 1, 1.0)]);
    b.coeffs.push((0, SparseSym::from_entries(2, [(0, 0, -1.0)])));
    b.coeffs.push((1, SparseSym::from_entries(2, [(1, 1, -1.0)])));
    let p = LinearSdpData { n: 2, cost: vec![1.0, 1.0], blocks: vec![b] };
    let cfg = SolverConfig { record_iterates: true, ..Default::default() };
    let r = solve(&ProblemSpec::Linear(p), &cfg);
    let errs: Vec<f64> = r.iterates.iter().map(|x| ((x[0] - 1.0).powi(2) + (x[1] - 1.0).powi(2)).sqrt()).collect();
    // ratios once inside the 1e-2 ball and above the noise floor of the final accuracy
    let ratios: Vec<f64> = errs
        .windows(2)
        .skip_while(|w| w[0] > 1e-2)
        .filter(|w| w[0] > 1e-9)
        .map(|w| w[1] / w[0])
        .collect();
    let worst = ratios.iter().copied().fold(0.0, f64::max);
    check(
        r.status == SolveStatus::Optimal && !ratios.is_empty() && worst <= 0.95,
        format!(
            "{:?}, {} iterates, {} ratios inside the ball, worst ratio = {worst:.3}, final error = {:.1e}",
            r.status,
            errs.len(),
            ratios.len(),
            errs.last().copied().unwrap_or(f64::NAN)
        ),
    )
}

// ---------------------------------------------------------------- 8

fn hybrid_mode() -> Outcome {
    let p = ill_conditioned_lsdp(1, 120, 12, 4.0);
    let run = |solver| {
        let cfg = SolverConfig { solver, dimacs: true, delta_dimacs: 1e-7, max_newton: 300, ..Default::default() };
        let t = Instant::now();
        let r = solve(&ProblemSpec::Linear(p.clone()), &cfg);
        (r, t.elapsed().as_secs_f64())
    };
    let (h, th) = run(SolverKind::Hybrid);
    let (c, tc) = run(SolverKind::Cg);
    let reached = |r: &matineq_core::SolveReport| r.status == SolveStatus::Optimal && r.dimacs.is_some_and(|d| d.max() <= 1e-7);
    let dm = |r: &matineq_core::SolveReport| r.dimacs.map(|d| d.max()).unwrap_or(f64::NAN);
    check(
        reached(&h) && !reached(&c),
        format!(
            "hybrid {:?} DIMACS {:.1e} ({} Newton, {} CG, {th:.1}s); CG {:?} DIMACS {:.1e} ({} Newton, {} CG, {tc:.1}s)",
            h.status,
            dm(&h),
            h.stats.newton_steps,
            h.stats.cg_steps,
            c.status,
            dm(&c),
            c.stats.newton_steps,
            c.stats.cg_steps
        ),
    )
}

// ----------------------------------------------------------------

#[test]
fn acceptance() {
    let criteria: [(&str, f64, fn() -> Outcome); 8] = [
        ("nearest correlation matrix", 5.0, nearest_correlation),
        ("condition-bounded correlation, kappa = 10", 10.0, condition_bounded_correlation),
        ("LQ state feedback vs Riccati", 5.0, lq_feedback),
        ("20 random linear SDPs vs barrier oracle", 60.0, random_lsdps),
        ("nonnegative spline, 500 points", 30.0, spline_experiment),
        ("property suites", f64::INFINITY, property_suites),
        ("outer contraction", f64::INFINITY, contraction),
        ("hybrid vs CG on ill-conditioned LSDP", f64::INFINITY, hybrid_mode),
    ];
    let mut failed = Vec::new();
    let mut err = std::io::stderr();
    for (i, (name, limit, run)) in criteria.into_iter().enumerate() {
        let t = Instant::now();
        let outcome = run();
        let secs = t.elapsed().as_secs_f64();
        let in_time = secs < limit;
        let (ok, detail) = match outcome {
            Ok(d) => (in_time, d),
            Err(d) => (false, d),
        };
        let budget = if limit.is_finite() { format!(" (limit {limit:.0}s)") } else { String::new() };
        let _ = writeln!(err, "[{}] {}. {name}: {detail} [{secs:.2}s{budget}]", if ok { "PASS" } else { "FAIL" }, i + 1);
        if !ok {
            failed.push(i + 1);
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
