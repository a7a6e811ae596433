use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::{packed_index, STRICT_MARGIN};
use crate::error::{Error, Result};
use crate::linalg::{lambda_max, SparseSym, SymMatrix};
use crate::model::{BmiConstraint, BmiData, LinearRow};

/// Small dense row-major matrix for plant data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mat {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Mat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn from_rows(rows: usize, cols: usize, data: &[f64]) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch { expected: rows * cols, found: data.len() });
        }
        Ok(Self { rows, cols, data: data.to_vec() })
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn t(&self) -> Mat {
        let mut out = Mat::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.set(j, i, self.get(i, j));
            }
        }
        out
    }

    pub fn mul(&self, o: &Mat) -> Mat {
        debug_assert_eq!(self.cols, o.rows);
        let mut out = Mat::zeros(self.rows, o.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a != 0.0 {
                    for j in 0..o.cols {
                        out.data[i * o.cols + j] += a * o.get(k, j);
                    }
                }
            }
        }
        out
    }

    pub fn add(&self, o: &Mat) -> Mat {
        Mat { rows: self.rows, cols: self.cols, data: self.data.iter().zip(&o.data).map(|(a, b)| a + b).collect() }
    }

    fn from_sym(s: &SymMatrix) -> Mat {
        let n = s.dim();
        let mut out = Mat::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                out.set(i, j, s[(i, j)]);
            }
        }
        out
    }
}

/// `ẋ = Ax + B₁w + Bu`, `z = C₁x + D₁₁w + D₁₂u`, `y = Cx + D₂₁w`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Plant {
    pub a: Mat,
    pub b1: Mat,
    pub b: Mat,
    pub c1: Mat,
    pub c: Mat,
    pub d11: Mat,
    pub d12: Mat,
    pub d21: Mat,
}

impl Plant {
    pub fn nx(&self) -> usize {
        self.a.rows
    }
    pub fn nw(&self) -> usize {
        self.b1.cols
    }
    pub fn nu(&self) -> usize {
        self.b.cols
    }
    pub fn nz(&self) -> usize {
        self.c1.rows
    }
    pub fn ny(&self) -> usize {
        self.c.rows
    }

    pub fn validate(&self) -> Result<()> {
        let (nx, nw, nu, nz, ny) = (self.nx(), self.nw(), self.nu(), self.nz(), self.ny());
        let shapes = [
            ("A", &self.a, nx, nx),
            ("B1", &self.b1, nx, nw),
            ("B", &self.b, nx, nu),
            ("C1", &self.c1, nz, nx),
            ("C", &self.c, ny, nx),
            ("D11", &self.d11, nz, nw),
            ("D12", &self.d12, nz, nu),
            ("D21", &self.d21, ny, nw),
        ];
        for (name, m, r, c) in shapes {
            if m.rows != r || m.cols != c || m.data.len() != r * c {
                return Err(Error::InvalidProblem(format!("plant matrix {name} should be {r}×{c}")));
            }
        }
        Ok(())
    }

    /// Closed-loop `(A(F), B(F), C(F), D(F))` under `u = Fy`.
    pub fn closed_loop(&self, f: &Mat) -> (Mat, Mat, Mat, Mat) {
        let bf = self.b.mul(f);
        let d12f = self.d12.mul(f);
        (
            self.a.add(&bf.mul(&self.c)),
            self.b1.add(&bf.mul(&self.d21)),
            self.c1.add(&d12f.mul(&self.c)),
            self.d11.add(&d12f.mul(&self.d21)),
        )
    }
}

/// Symmetric matrix assembled from a grid of dense blocks (upper blocks given).
fn assemble(sizes: &[usize], block: impl Fn(usize, usize) -> Option<Mat>) -> SymMatrix {
    let offsets: Vec<usize> = sizes.iter().scan(0, |acc, s| {
        let o = *acc;
        *acc += s;
        Some(o)
    }).collect();
    let total = sizes.iter().sum();
    let mut out = SymMatrix::zeros(total);
    for bi in 0..sizes.len() {
        for bj in bi..sizes.len() {
            if let Some(m) = block(bi, bj) {
                for i in 0..sizes[bi] {
                    for j in 0..sizes[bj] {
                        let (r, c) = (offsets[bi] + i, offsets[bj] + j);
                        if bi != bj || r >= c {
                            out[(r, c)] = m.get(i, j);
                        }
                    }
                }
            }
        }
    }
    out
}

fn sym_var(x: &[f64], off: usize, dim: usize) -> SymMatrix {
    SymMatrix::from_packed(dim, x[off..off + dim * (dim + 1) / 2].to_vec()).expect("packed length")
}

fn shifted(m: &SymMatrix, margin: f64) -> SymMatrix {
    let mut m = m.clone();
    m.add_identity(margin);
    m
}

fn neg_identity_block(dim: usize, off: usize, margin: f64) -> BmiConstraint {
    // margin·I − Y ⪯ 0 for the svec variable at `off`
    let mut linear = Vec::new();
    for i in 0..dim {
        for j in 0..=i {
            linear.push((off + packed_index(i, j), SparseSym::from_entries(dim, [(j, i, -1.0)])));
        }
    }
    BmiConstraint { dim, a0: SparseSym::from_sym(&SymMatrix::scaled_identity(dim, margin)), linear, quadratic: Vec::new() }
}

pub const LQ_A: [[f64; 2]; 2] = [[-1.0, 2.0], [-3.0, -4.0]];
pub const LQ_B: [f64; 2] = [1.0, 1.0];

/// `(P, K)` from an LQ-feedback iterate `(svec P, K)`.
pub fn lq_feedback_parts(x: &[f64]) -> (SymMatrix, [f64; 2]) {
    (sym_var(x, 0, 2), [x[3], x[4]])
}

/// LQ optimal state feedback as a BMI: `min trace P` subject to
/// `(A + BK)ᵀP + P(A + BK) + I + KᵀK ≺ 0` and `P ≻ 0`.
/// Unknowns are `(svec P, K)`; the start point is `P = I`, `K = 0`.
pub fn build_lq_feedback() -> BmiData {
    let a = Mat::from_rows(2, 2, &[LQ_A[0][0], LQ_A[0][1], LQ_A[1][0], LQ_A[1][1]]).expect("2×2");
    let b = Mat::from_rows(2, 1, &LQ_B).expect("2×1");
    let n = 5;
    let lyap = BmiConstraint::from_quadratic_map(2, n, |x| {
        let (p, k) = lq_feedback_parts(x);
        let k = Mat::from_rows(1, 2, &k).expect("1×2");
        let acl = a.add(&b.mul(&k));
        let pm = Mat::from_sym(&p);
        let m = acl.t().mul(&pm).add(&pm.mul(&acl)).add(&k.t().mul(&k));
        shifted(&SymMatrix::from_fn(2, |i, j| m.get(i, j)), 1.0 + STRICT_MARGIN)
    });
    let mut d = BmiData::new(n);
    d.f = vec![1.0, 0.0, 1.0, 0.0, 0.0];
    d.constraints = vec![lyap, neg_identity_block(2, 0, STRICT_MARGIN)];
    d.initial = Some(vec![1.0, 0.0, 1.0, 0.0, 0.0]);
    d
}

fn sof_offsets(p: &Plant) -> (usize, usize) {
    let sx = p.nx() * (p.nx() + 1) / 2;
    (sx, p.nu() * p.ny())
}

/// Gain `F` (`n_u × n_y`, row-major) stored at `off`.
pub fn sof_gain(x: &[f64], off: usize, plant: &Plant) -> Mat {
    Mat::from_rows(plant.nu(), plant.ny(), &x[off..off + plant.nu() * plant.ny()]).expect("gain length")
}

/// SOF-H₂ synthesis: `min tr X` subject to `Q ≻ 0`,
/// `A(F)Q + QA(F)ᵀ + B₁B₁ᵀ ⪯ 0` and `[X, C(F)Q; QC(F)ᵀ, Q] ⪰ 0`.
/// Unknowns are `(svec Q, svec X, F)`; needs `D₁₁ = 0` and `D₂₁ = 0`.
pub fn build_sof_h2(plant: &Plant) -> Result<BmiData> {
    plant.validate()?;
    if plant.d11.data.iter().chain(&plant.d21.data).any(|&v| v != 0.0) {
        return Err(Error::InvalidProblem("H2 synthesis needs D11 = 0 and D21 = 0".into()));
    }
    let (nx, nz) = (plant.nx(), plant.nz());
    let (sq, nf) = sof_offsets(plant);
    let sxz = nz * (nz + 1) / 2;
    let f_off = sq + sxz;
    let n = f_off + nf;
    let lyap = {
        let plant = plant.clone();
        BmiConstraint::from_quadratic_map(nx, n, move |x| {
            let q = Mat::from_sym(&sym_var(x, 0, nx));
            let (af, _, _, _) = plant.closed_loop(&sof_gain(x, f_off, &plant));
            let m = af.mul(&q).add(&q.mul(&af.t())).add(&plant.b1.mul(&plant.b1.t()));
            SymMatrix::from_fn(nx, |i, j| m.get(i, j))
        })
    };
    let coupling = {
        let plant = plant.clone();
        BmiConstraint::from_quadratic_map(nz + nx, n, move |x| {
            let q = sym_var(x, 0, nx);
            let xm = sym_var(x, sq, nz);
            let (_, _, cf, _) = plant.closed_loop(&sof_gain(x, f_off, &plant));
            let cq = cf.mul(&Mat::from_sym(&q));
            let mut m = assemble(&[nz, nx], |bi, bj| match (bi, bj) {
                (0, 0) => Some(Mat::from_sym(&xm)),
                (0, 1) => Some(cq.clone()),
                _ => Some(Mat::from_sym(&q)),
            });
            m.scale(-1.0);
            m
        })
    };
    let mut d = BmiData::new(n);
    for i in 0..nz {
        d.f[sq + packed_index(i, i)] = 1.0;
    }
    d.constraints = vec![neg_identity_block(nx, 0, STRICT_MARGIN), lyap, coupling];
    let mut x0 = vec![0.0; n];
    for i in 0..nx {
        x0[packed_index(i, i)] = 1.0;
    }
    for i in 0..nz {
        x0[sq + packed_index(i, i)] = 1.0;
    }
    d.initial = Some(x0);
    Ok(d)
}

/// SOF-H∞ synthesis: `min γ` subject to `X ≻ 0`, `γ > 0` and
/// `[A(F)ᵀX + XA(F), XB(F), C(F)ᵀ; B(F)ᵀX, −γI, D(F)ᵀ; C(F), D(F), −γI] ≺ 0`.
/// Unknowns are `(svec X, F, γ)`.
pub fn build_sof_hinf(plant: &Plant) -> Result<BmiData> {
    plant.validate()?;
    let (nx, nw, nz) = (plant.nx(), plant.nw(), plant.nz());
    let (sx, nf) = sof_offsets(plant);
    let g_idx = sx + nf;
    let n = g_idx + 1;
    let big = {
        let plant = plant.clone();
        BmiConstraint::from_quadratic_map(nx + nw + nz, n, move |x| {
            let xm = Mat::from_sym(&sym_var(x, 0, nx));
            let (af, bf, cf, df) = plant.closed_loop(&sof_gain(x, sx, &plant));
            let gamma = x[g_idx];
            let neg_gamma = |k: usize| {
                let mut m = Mat::zeros(k, k);
                (0..k).for_each(|i| m.set(i, i, -gamma));
                m
            };
            let m = assemble(&[nx, nw, nz], |bi, bj| match (bi, bj) {
                (0, 0) => Some(af.t().mul(&xm).add(&xm.mul(&af))),
                (0, 1) => Some(xm.mul(&bf)),
                (0, 2) => Some(cf.t()),
                (1, 1) => Some(neg_gamma(nw)),
                (1, 2) => Some(df.t()),
                _ => Some(neg_gamma(nz)),
            });
            shifted(&m, STRICT_MARGIN)
        })
    };
    let mut d = BmiData::new(n);
    d.f[g_idx] = 1.0;
    d.linear_rows.push(LinearRow { b: vec![(g_idx, -1.0)], c: -STRICT_MARGIN });
    d.constraints = vec![neg_identity_block(nx, 0, STRICT_MARGIN), big];
    let mut x0 = vec![0.0; n];
    for i in 0..nx {
        x0[packed_index(i, i)] = 1.0;
    }
    x0[g_idx] = 10.0;
    d.initial = Some(x0);
    Ok(d)
}

/// System `A⁰ + Σ x_k A_k + Σ x_k x_l K_kl ≺ 0` (one constraint per block)
/// tested through `min λ + w‖x‖²` with `A(x) ⪯ λI` and `|x_k| ≤ bound`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BmiFeasInstance {
    pub n: usize,
    /// Quadratic terms may use any `(k, l)` order; both orders add up.
    pub blocks: Vec<BmiConstraint>,
    pub weight: f64,
    pub x_bound: f64,
}

/// Unknowns are `(x, λ)`; `λ` is the last variable and is reported as the
/// feasibility variable. The start point is `x = 0` with `λ` one above the
/// largest eigenvalue of the constant terms.
pub fn build_bmi_feasibility(inst: &BmiFeasInstance) -> Result<BmiData> {
    if !(inst.x_bound > 0.0) || !(inst.weight >= 0.0) {
        return Err(Error::InvalidProblem("need x_bound > 0 and weight ≥ 0".into()));
    }
    let n = inst.n;
    let lam = n;
    let mut d = BmiData::new(n + 1);
    for k in 0..n {
        d.q[(k, k)] = 2.0 * inst.weight;
        d.linear_rows.push(LinearRow { b: vec![(k, 1.0)], c: inst.x_bound });
        d.linear_rows.push(LinearRow { b: vec![(k, -1.0)], c: inst.x_bound });
    }
    d.f[lam] = 1.0;
    let mut lam0 = f64::NEG_INFINITY;
    for b in &inst.blocks {
        let mut c = b.clone();
        for q in &mut c.quadratic {
            if q.0 > q.1 {
                core::mem::swap(&mut q.0, &mut q.1);
            }
        }
        c.quadratic.sort_by_key(|q| (q.0, q.1));
        let mut merged: Vec<(usize, usize, SparseSym)> = Vec::new();
        for (k, l, m) in c.quadratic {
            match merged.last_mut() {
                Some(last) if last.0 == k && last.1 == l => {
                    let mut s = last.2.to_sym();
                    m.add_to(&mut s, 1.0);
                    last.2 = SparseSym::from_sym(&s);
                }
                _ => merged.push((k, l, m)),
            }
        }
        c.quadratic = merged;
        c.linear.push((lam, SparseSym::from_sym(&SymMatrix::scaled_identity(c.dim, -1.0))));
        lam0 = lam0.max(lambda_max(&b.a0.to_sym()));
        d.constraints.push(c);
    }
    let mut x0 = vec![0.0; n + 1];
    x0[lam] = if lam0.is_finite() { lam0 + 1.0 } else { 0.0 };
    d.initial = Some(x0);
    d.feasibility_var = Some(lam);
    Ok(d)
}
