use super::*;
use alloc::vec;
use alloc::vec::Vec;
use crate::config::SolverConfig;
use crate::driver::{solve, solve_from, FeasibilityVerdict, SolveStatus};
use crate::linalg::{eigenvalues, SparseSym, SymMatrix};
use crate::model::{BmiConstraint, Model, ProblemSpec};
use nalgebra::{DMatrix, DVector};

fn sq(v: f64) -> f64 {
    v * v
}

fn scalar_plant(nz2: bool) -> Plant {
    let m = |r, c, d: &[f64]| Mat::from_rows(r, c, d).unwrap();
    let (c1, d12, nz) = if nz2 { (m(2, 1, &[1.0, 0.0]), m(2, 1, &[0.0, 1.0]), 2) } else { (m(1, 1, &[1.0]), m(1, 1, &[0.0]), 1) };
    Plant {
        a: m(1, 1, &[-1.0]),
        b1: m(1, 1, &[1.0]),
        b: m(1, 1, &[1.0]),
        c1,
        c: m(1, 1, &[1.0]),
        d11: Mat::zeros(nz, 1),
        d12,
        d21: m(1, 1, &[0.0]),
    }
}

#[test]
fn h_ext_is_symmetric_and_indefinite() {
    let h = h_ext();
    assert_eq!(h[(5, 4)], 0.08);
    assert_eq!(h[(4, 5)], 0.08);
    assert!(eigenvalues(&h)[0] < 0.0);
    assert!(h.diagonal().iter().all(|&d| d == 1.0));
}

#[test]
fn built_instances_compile() {
    let specs = vec![
        ProblemSpec::Nlp(build_nearest_corr(&h_ext())),
        ProblemSpec::Nlp(build_corr_cond(&h_ext(), 10.0)),
        ProblemSpec::Nlp(build_spline(&uniform_knots(8), &cosine_samples(50, 1)).unwrap()),
        ProblemSpec::Bmi(build_lq_feedback()),
        ProblemSpec::Bmi(build_sof_h2(&scalar_plant(true)).unwrap()),
        ProblemSpec::Bmi(build_sof_hinf(&scalar_plant(true)).unwrap()),
        ProblemSpec::Linear(random_lsdp(3, 5, &[3, 2])),
        ProblemSpec::Linear(ill_conditioned_lsdp(3, 20, 6, 4.0)),
    ];
    for s in &specs {
        s.validate().unwrap();
        Model::new(s).unwrap();
    }
}

#[test]
fn nearest_corr_keeps_a_correlation_matrix() {
    let h = SymMatrix::from_packed(3, vec![1.0, 0.3, 1.0, -0.2, 0.1, 1.0]).unwrap();
    let r = solve(&ProblemSpec::Nlp(build_nearest_corr(&h)), &SolverConfig::default());
    assert_eq!(r.status, SolveStatus::Optimal);
    assert!(r.objective.abs() < 1e-8, "{}", r.objective);
    for (a, b) in r.x.iter().zip(h.packed()) {
        assert!((a - b).abs() < 1e-5);
    }
}

#[test]
fn nearest_corr_two_by_two_closed_form() {
    // off-diagonal y minimizes 2(y − 2)² over |y| ≤ 1
    let h = SymMatrix::from_packed(2, vec![1.0, 2.0, 1.0]).unwrap();
    let r = solve(&ProblemSpec::Nlp(build_nearest_corr(&h)), &SolverConfig::default());
    assert_eq!(r.status, SolveStatus::Optimal);
    assert!((r.x[1] - 1.0).abs() < 1e-5, "{:?}", r.x);
    assert!((r.objective - 2.0).abs() < 1e-5);
}

#[test]
fn corr_cond_objective_derivatives() {
    let d = build_corr_cond(&h_ext(), 10.0);
    let f = &d.objective;
    let mut z = d.initial.clone().unwrap();
    z.iter_mut().enumerate().for_each(|(i, v)| *v += 0.03 * ((i * 7 % 5) as f64 - 2.0));
    let g = f.gradient(&z);
    let h = f.hessian(&z).unwrap();
    let eps = 1e-6;
    for i in 0..z.len() {
        let mut zp = z.clone();
        let mut zm = z.clone();
        zp[i] += eps;
        zm[i] -= eps;
        let fd = (f.value(&zp) - f.value(&zm)) / (2.0 * eps);
        assert!((fd - g[i]).abs() <= 1e-6 * (1.0 + g[i].abs()), "grad {i}");
        let gp = f.gradient(&zp);
        let gm = f.gradient(&zm);
        for j in 0..z.len() {
            let fd = (gp[j] - gm[j]) / (2.0 * eps);
            assert!((fd - h[(i, j)]).abs() <= 1e-5 * (1.0 + h[(i, j)].abs()), "hess {i},{j}");
        }
    }
}

#[test]
fn corr_cond_start_and_unit_scaling() {
    let h = h_ext();
    let d = build_corr_cond(&h, 10.0);
    let z0 = d.initial.clone().unwrap();
    assert_eq!(z0[0], 10f64.sqrt());
    let model = Model::new(&ProblemSpec::Nlp(d.clone())).unwrap();
    assert!(model.max_violation(&z0) <= 0.0);
    assert!(model.equality_values(&z0).iter().all(|v| v.abs() < 1e-15));
    // ζ = 1, X̃ = I
    let mut z1 = vec![1.0];
    z1.extend(SymMatrix::identity(6).into_packed());
    let expect: f64 = (0..6).flat_map(|i| (0..6).map(move |j| (i, j))).map(|(i, j)| {
        sq(if i == j { 1.0 } else { 0.0 } - h[(i, j)])
    }).sum();
    assert!((d.objective.value(&z1) - expect).abs() < 1e-12);
}

#[test]
fn corr_cond_with_loose_bound_matches_nearest_corr() {
    let h = SymMatrix::from_packed(3, vec![1.0, 0.9, 1.0, 0.6, 0.1, 1.0]).unwrap();
    let plain = solve(&ProblemSpec::Nlp(build_nearest_corr(&h)), &SolverConfig::default());
    let cond = solve(&ProblemSpec::Nlp(build_corr_cond(&h, 1e6)), &SolverConfig::default());
    assert_eq!(plain.status, SolveStatus::Optimal);
    assert!(!matches!(cond.status, SolveStatus::Failed(_)), "{:?}", cond.status);
    assert!((plain.objective - cond.objective).abs() <= 1e-6, "{} vs {}", plain.objective, cond.objective);
}

#[test]
fn perturbed_corr_properties() {
    let g = gen_perturbed_corr(12, 0.0, 5);
    assert!(g.diagonal().iter().all(|&d| (d - 1.0).abs() < 1e-15));
    assert!(eigenvalues(&g)[0] > -1e-12);
    let h = gen_perturbed_corr(12, 0.1, 5);
    assert!(h.diagonal().iter().all(|&d| (0.8 - 1e-15..=1.0 + 1e-15).contains(&d)));
    for i in 0..12 {
        for j in 0..12 {
            assert!(h[(i, j)].abs() <= 1.0 + 1e-15);
        }
    }
    assert_eq!(h, gen_perturbed_corr(12, 0.1, 5));
    assert_ne!(h, gen_perturbed_corr(12, 0.1, 6));
}

#[test]
fn spline_shape_at_paper_scale() {
    let d = build_spline(&uniform_knots(8), &cosine_samples(500, 0)).unwrap();
    assert_eq!(d.arity(), 80);
    assert_eq!(d.matrix_vars.len(), 16);
    assert!(d.matrix_vars.iter().all(|v| v.dim == 2));
    assert_eq!(d.equalities.len(), 3 * 7 + 4 * 8);
}

#[test]
fn spline_rejects_bad_input() {
    assert!(build_spline(&uniform_knots(3), &[(0.0, 1.0)]).is_err());
    assert!(build_spline(&uniform_knots(3), &[(1.2, 1.0)]).is_err());
    assert!(build_spline(&[0.0, 0.6, 0.5, 1.0], &[(0.2, 1.0)]).is_err());
    assert!(build_spline(&[0.1, 1.0], &[(0.2, 1.0)]).is_err());
}

#[test]
fn spline_tie_goes_left() {
    let knots = uniform_knots(2);
    let mut c = vec![0.0; 8];
    c[0] = 1.0;
    c[4] = 5.0;
    assert_eq!(spline_eval(&knots, &c, 0.5), 1.0);
    assert_eq!(spline_eval(&knots, &c, 0.5000001), 5.0);
}

#[test]
fn constant_data_gives_constant_spline() {
    let knots = uniform_knots(3);
    let data: Vec<(f64, f64)> = (1..30).map(|j| (j as f64 / 30.0, 1.0)).collect();
    let r = solve(&ProblemSpec::Nlp(build_spline(&knots, &data).unwrap()), &SolverConfig::default());
    assert_eq!(r.status, SolveStatus::Optimal);
    assert!(r.objective < 1e-8, "{}", r.objective);
    let c = spline_coefficients(&r.x, &knots);
    for k in 0..100 {
        let t = k as f64 / 99.0;
        assert!((spline_eval(&knots, &c, t) - 1.0).abs() < 1e-4);
    }
    assert!(continuity_residuals(&knots, &c).iter().all(|v| v.abs() < 1e-6));
}

#[test]
fn single_interval_matches_least_squares() {
    let data: Vec<(f64, f64)> = (1..40).map(|j| {
        let t = j as f64 / 40.0;
        (t, t * (1.0 - t))
    }).collect();
    let cfg = SolverConfig { eps1: 1e-10, eps2: 1e-10, alpha_final: 1e-10, ..Default::default() };
    let r = solve(&ProblemSpec::Nlp(build_spline(&[0.0, 1.0], &data).unwrap()), &cfg);
    assert_eq!(r.status, SolveStatus::Optimal);
    // unconstrained cubic fit via normal equations
    let phi = DMatrix::from_fn(data.len(), 4, |j, k| data[j].0.powi(k as i32));
    let b = DVector::from_iterator(data.len(), data.iter().map(|d| d.1));
    let coef = (phi.transpose() * &phi).cholesky().unwrap().solve(&(phi.transpose() * b));
    for k in 0..4 {
        assert!((r.x[k] - coef[k]).abs() < 1e-4, "{k}: {} vs {}", r.x[k], coef[k]);
    }
}

fn scalar_feas(w: f64) -> BmiFeasInstance {
    // x − 1 ⪯ λ
    let c = BmiConstraint {
        dim: 1,
        a0: SparseSym::from_entries(1, [(0, 0, -1.0)]),
        linear: vec![(0, SparseSym::from_entries(1, [(0, 0, 1.0)]))],
        quadratic: Vec::new(),
    };
    BmiFeasInstance { n: 1, blocks: vec![c], weight: w, x_bound: 10.0 }
}

#[test]
fn bmi_feasibility_box_optimum() {
    let d = build_bmi_feasibility(&scalar_feas(0.0)).unwrap();
    assert_eq!(d.n, 2);
    assert_eq!(d.feasibility_var, Some(1));
    let r = solve(&ProblemSpec::Bmi(d), &SolverConfig::default());
    assert_eq!(r.status, SolveStatus::Feasible, "{r:?}");
    assert!((r.x[0] + 10.0).abs() < 1e-4 && (r.x[1] + 11.0).abs() < 1e-4, "{:?}", r.x);
    assert_eq!(r.verdict, Some(FeasibilityVerdict::StrictlyFeasible));
}

#[test]
fn bmi_feasibility_heavy_weight_pins_x() {
    let r = solve(&ProblemSpec::Bmi(build_bmi_feasibility(&scalar_feas(1e4)).unwrap()), &SolverConfig::default());
    // λ + w x² with λ = x − 1: x = −1/(2w)
    assert!(r.x[0].abs() < 1e-3, "{:?}", r.x);
    assert!((r.x[1] + 1.0).abs() < 1e-3);
}

#[test]
fn bmi_feasibility_folds_quadratic_orders() {
    let k = |v| SparseSym::from_entries(1, [(0, 0, v)]);
    let c = BmiConstraint {
        dim: 1,
        a0: k(1.0),
        linear: Vec::new(),
        quadratic: vec![(1, 0, k(1.0)), (0, 1, k(2.0))],
    };
    let d = build_bmi_feasibility(&BmiFeasInstance { n: 2, blocks: vec![c], weight: 0.0, x_bound: 1.0 }).unwrap();
    assert_eq!(d.constraints[0].quadratic.len(), 1);
    let q = &d.constraints[0].quadratic[0];
    assert_eq!((q.0, q.1), (0, 1));
    assert_eq!(q.2.to_sym()[(0, 0)], 3.0);
    assert!(build_bmi_feasibility(&BmiFeasInstance { x_bound: 0.0, ..scalar_feas(0.0) }).is_err());
}

/// Stabilizing ARE solution by Newton–Kleinman iterations from `K = 0`.
pub(crate) fn riccati_oracle() -> (DMatrix<f64>, DMatrix<f64>) {
    let a = DMatrix::from_row_slice(2, 2, &[LQ_A[0][0], LQ_A[0][1], LQ_A[1][0], LQ_A[1][1]]);
    let b = DMatrix::from_column_slice(2, 1, &LQ_B);
    let mut k = DMatrix::zeros(1, 2);
    let mut p = DMatrix::zeros(2, 2);
    for _ in 0..50 {
        let acl = &a + &b * &k;
        let rhs = -(DMatrix::identity(2, 2) + k.transpose() * &k);
        // vec(AᵀP + PA) = (I⊗Aᵀ + Aᵀ⊗I) vec(P)
        let at = acl.transpose();
        let l = DMatrix::identity(2, 2).kronecker(&at) + at.kronecker(&DMatrix::identity(2, 2));
        let sol = l.lu().solve(&DVector::from_column_slice(rhs.as_slice())).unwrap();
        p = DMatrix::from_column_slice(2, 2, sol.as_slice());
        k = -(b.transpose() * &p);
    }
    (p, k)
}

#[test]
fn lq_feedback_dimensions_and_solution() {
    let d = build_lq_feedback();
    assert_eq!(d.n, 5);
    assert_eq!(d.constraints.len(), 2);
    assert!(d.constraints.iter().all(|c| c.dim == 2));
    let r = solve(&ProblemSpec::Bmi(d), &SolverConfig::default());
    assert_eq!(r.status, SolveStatus::Optimal, "{r:?}");
    let (p, k) = lq_feedback_parts(&r.x);
    let (p_ref, k_ref) = riccati_oracle();
    assert!((p_ref.trace() - 0.46697287657).abs() < 1e-9);
    assert!((p.trace() - p_ref.trace()).abs() <= 1e-3 * p_ref.trace());
    assert!((k[0] - k_ref[0]).abs() < 1e-2 && (k[1] - k_ref[1]).abs() < 1e-2, "{k:?}");
    let acl = DMatrix::from_row_slice(2, 2, &[-1.0 + k[0], 2.0 + k[1], -3.0 + k[0], -4.0 + k[1]]);
    assert!(acl.complex_eigenvalues().iter().all(|e| e.re < 0.0));
}

#[test]
fn sof_hinf_bookkeeping() {
    let d = build_sof_hinf(&scalar_plant(false)).unwrap();
    assert_eq!(d.n, 3);
    let dims: Vec<usize> = d.constraints.iter().map(|c| c.dim).collect();
    assert_eq!(dims, vec![1, 3]);
    assert_eq!(d.linear_rows.len(), 1);
    let mut bad = scalar_plant(false);
    bad.d21 = Mat::zeros(2, 2);
    assert!(build_sof_hinf(&bad).is_err());
    let mut h2 = scalar_plant(true);
    h2.d21 = Mat::from_rows(1, 1, &[1.0]).unwrap();
    assert!(build_sof_h2(&h2).is_err());
}

/// `sup_ω σ_max(C(iω − A)⁻¹B + D)` for a 1-state system on a frequency grid.
fn hinf_norm_scalar(a: f64, b: f64, c: &[f64], d: &[f64]) -> f64 {
    (0..20000)
        .map(|i| {
            let w = 1e-3 * 1.001f64.powi(i);
            // |c b /(iω − a) + d|² summed over outputs
            let den = a * a + w * w;
            let (re, im) = (-a / den, -w / den);
            c.iter().zip(d).map(|(ci, di)| sq(ci * b * re + di) + sq(ci * b * im)).sum::<f64>().sqrt()
        })
        .fold(0.0, f64::max)
}

#[test]
fn sof_hinf_scalar_plant() {
    let plant = scalar_plant(true);
    let r = solve(&ProblemSpec::Bmi(build_sof_hinf(&plant).unwrap()), &SolverConfig::default());
    assert_eq!(r.status, SolveStatus::Optimal, "{r:?}");
    let gamma = r.x[2];
    let f = r.x[1];
    let open_loop = hinf_norm_scalar(-1.0, 1.0, &[1.0, 0.0], &[0.0, 0.0]);
    assert!(gamma <= open_loop + 1e-6);
    assert!((gamma - 0.5f64.sqrt()).abs() < 1e-4, "γ = {gamma}");
    assert!((f + 1.0).abs() < 1e-2, "F = {f}");
    assert!(-1.0 + f < 0.0);
    // the closed loop actually achieves γ
    let achieved = hinf_norm_scalar(-1.0 + f, 1.0, &[1.0, f], &[0.0, 0.0]);
    assert!(achieved <= gamma + 1e-4);
}

#[test]
fn sof_h2_scalar_plant() {
    let plant = scalar_plant(true);
    let d = build_sof_h2(&plant).unwrap();
    // (Q, X₁₁, X₂₁, X₂₂, F)
    assert_eq!(d.n, 5);
    let r = solve(&ProblemSpec::Bmi(d), &SolverConfig::default());
    assert_eq!(r.status, SolveStatus::Optimal, "{r:?}");
    assert!((r.objective - (2f64.sqrt() - 1.0)).abs() < 1e-4, "{}", r.objective);
    assert!((r.x[4] - (1.0 - 2f64.sqrt())).abs() < 1e-2);
}

#[test]
fn random_lsdp_is_solvable() {
    let p = random_lsdp(11, 6, &[4, 3]);
    let r = solve_from(&ProblemSpec::Linear(p), &SolverConfig { dimacs: true, ..Default::default() }, None);
    assert_eq!(r.status, SolveStatus::Optimal);
}
