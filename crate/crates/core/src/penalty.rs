//! Matrix penalty `Φ_p(A) = −p²(A − pI)⁻¹ − pI`, the augmented Lagrangian built
//! from it and the multiplier/penalty update rules.

use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)] // shadowed by std's inherent methods when std is linked
use num_traits::Float;

use crate::config::SolverConfig;
use crate::error::{Error, Result};
use crate::linalg::{
    dot, factorize, inner_unchecked, lambda_max, norm2, spectral_norm, BlockDiagMatrix, Dense, SparseSym, SymMatrix,
};
use crate::model::{BlockKind, Model};

/// `Z = (pI − A)⁻¹` and `Φ_p(A) = p²Z − pI` for one block.
#[derive(Debug, Clone, PartialEq)]
pub struct PhiBlock {
    pub z: SymMatrix,
    pub phi: SymMatrix,
}

fn inverse_pd(m: &SymMatrix) -> Option<(SymMatrix, f64)> {
    let f = factorize(m).ok()?;
    Some((f.inverse(), f.log_det()))
}

/// Evaluates the penalty blockwise. Fails when `pI − A_j` is not positive definite.
pub fn phi_eval(a: &BlockDiagMatrix, p: f64) -> Result<Vec<PhiBlock>> {
    a.blocks
        .iter()
        .enumerate()
        .map(|(j, aj)| {
            let mut m = aj.scaled(-1.0);
            m.add_identity(p);
            let (z, _) = inverse_pd(&m).ok_or(Error::PenaltyDomain { block: j })?;
            let mut phi = z.scaled(p * p);
            phi.add_identity(-p);
            Ok(PhiBlock { z, phi })
        })
        .collect()
}

/// Solver state carried between outer iterations.
#[derive(Debug, Clone, PartialEq)]
pub struct IterateState {
    pub x: Vec<f64>,
    /// One multiplier per block; barrier blocks carry an unused zero matrix.
    pub u: Vec<SymMatrix>,
    /// Equality multipliers.
    pub v: Vec<f64>,
    pub p: f64,
    /// Barrier weight for strictly feasible blocks.
    pub s: f64,
    /// Consecutive penalty updates that could not use the full reduction.
    pub l: u8,
    pub x_feas: Option<Vec<f64>>,
    /// `λ_max` of the constraints at `x_feas`.
    pub feas_lmax: f64,
    /// Inner stopping tolerance.
    pub alpha: f64,
}

impl IterateState {
    pub fn new(model: &Model, x: Vec<f64>, cfg: &SolverConfig) -> Self {
        let u = init_multipliers(model, &x);
        let p = init_penalty(model, &x);
        Self {
            x,
            u,
            v: vec![0.0; model.equalities().len()],
            p,
            s: cfg.barrier_init,
            l: 0,
            x_feas: None,
            feas_lmax: f64::INFINITY,
            alpha: cfg.alpha_init,
        }
    }

    pub fn lagrangian<'a>(&'a self, model: &'a Model) -> AugLag<'a> {
        AugLag { model, u: &self.u, v: &self.v, p: self.p, s: self.s }
    }
}

/// Per-block quantities at one point.
#[derive(Debug, Clone)]
pub struct BlockEval {
    pub kind: BlockKind,
    pub value: SymMatrix,
    /// `Z = (pI − A)⁻¹` for penalty blocks, `R = (−A)⁻¹` for barrier blocks.
    pub z: SymMatrix,
    /// Contribution to the augmented Lagrangian.
    pub term: f64,
}

/// Full evaluation data needed for derivatives.
#[derive(Debug, Clone)]
pub struct BlockDerivData {
    pub z: Dense,
    /// `ZUZ` (penalty) or `R` (barrier), dense and packed.
    pub w: Dense,
    pub w_sym: SymMatrix,
    pub derivs: Vec<(usize, SparseSym)>,
    /// Gradient weight: `p²` or `s`.
    pub coef: f64,
    /// Curvature weight in the Hessian: 2 for the penalty, 1 for the barrier.
    pub curv: f64,
}

/// The augmented Lagrangian `F(x) = f(x) + Σ⟨U_j, Φ_p(A_j(x))⟩ + vᵀh(x) + s·Σ −log det(−S_j(x))`
/// for fixed multipliers and parameters.
#[derive(Debug, Clone, Copy)]
pub struct AugLag<'a> {
    pub model: &'a Model,
    pub u: &'a [SymMatrix],
    pub v: &'a [f64],
    pub p: f64,
    pub s: f64,
}

impl<'a> AugLag<'a> {
    pub fn n(&self) -> usize {
        self.model.n()
    }

    pub fn eval_blocks(&self, x: &[f64]) -> Result<Vec<BlockEval>> {
        self.model
            .blocks()
            .iter()
            .enumerate()
            .map(|(j, b)| {
                let value = b.value(x);
                match b.kind {
                    BlockKind::Penalty => {
                        let mut m = value.scaled(-1.0);
                        m.add_identity(self.p);
                        let (z, _) = inverse_pd(&m).ok_or(Error::PenaltyDomain { block: j })?;
                        let u = &self.u[j];
                        let term = self.p * self.p * inner_unchecked(u, &z) - self.p * u.trace();
                        Ok(BlockEval { kind: b.kind, value, z, term })
                    }
                    BlockKind::Barrier => {
                        let m = value.scaled(-1.0);
                        let (r, logdet) = inverse_pd(&m).ok_or(Error::BarrierDomain { block: j })?;
                        Ok(BlockEval { kind: b.kind, value, z: r, term: -self.s * logdet })
                    }
                }
            })
            .collect()
    }

    /// `F(x)`; domain violations are errors.
    pub fn value(&self, x: &[f64]) -> Result<f64> {
        let blocks = self.eval_blocks(x)?;
        Ok(self.value_from(x, &blocks))
    }

    pub fn value_from(&self, x: &[f64], blocks: &[BlockEval]) -> f64 {
        let mut f = self.model.objective().value(x) + blocks.iter().map(|b| b.term).sum::<f64>();
        if !self.v.is_empty() {
            f += dot(self.v, &self.model.equality_values(x));
        }
        f
    }

    pub fn deriv_data(&self, x: &[f64], blocks: &[BlockEval]) -> Vec<BlockDerivData> {
        self.model
            .blocks()
            .iter()
            .zip(blocks)
            .enumerate()
            .map(|(j, (b, e))| {
                let z = e.z.to_dense();
                let (w, coef, curv) = match b.kind {
                    BlockKind::Penalty => (z.mul(&self.u[j].to_dense()).mul(&z), self.p * self.p, 2.0),
                    BlockKind::Barrier => (z.clone(), self.s, 1.0),
                };
                let w_sym = w.sym_part();
                BlockDerivData { z, w, w_sym, derivs: b.derivs(x), coef, curv }
            })
            .collect()
    }

    pub fn gradient_from(&self, x: &[f64], data: &[BlockDerivData]) -> Vec<f64> {
        let mut g = self.model.objective().gradient(x);
        for d in data {
            for (i, a) in &d.derivs {
                g[*i] += d.coef * a.inner_sym(&d.w_sym);
            }
        }
        for (h, &vr) in self.model.equalities().iter().zip(self.v) {
            if vr != 0.0 {
                for (gi, hi) in g.iter_mut().zip(h.gradient(x)) {
                    *gi += vr * hi;
                }
            }
        }
        g
    }

    pub fn gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        let blocks = self.eval_blocks(x)?;
        let data = self.deriv_data(x, &blocks);
        Ok(self.gradient_from(x, &data))
    }

    /// Second-order terms that do not come from the constraint blocks:
    /// `∇²f + Σ v_r ∇²h_r`.
    fn smooth_hessian(&self, x: &[f64]) -> SymMatrix {
        let n = self.n();
        let mut h = self.model.objective().hessian(x).unwrap_or_else(|| SymMatrix::zeros(n));
        for (hr, &vr) in self.model.equalities().iter().zip(self.v) {
            if vr != 0.0 {
                if let Some(m) = hr.hessian(x) {
                    h.axpy(vr, &m);
                }
            }
        }
        h
    }

    pub fn hessian_from(&self, x: &[f64], data: &[BlockDerivData]) -> SymMatrix {
        let mut h = self.smooth_hessian(x);
        for (b, d) in self.model.blocks().iter().zip(data) {
            let scale = d.coef * d.curv;
            let products: Vec<(usize, Dense)> = d.derivs.iter().map(|(i, a)| (*i, a.sandwich(&d.w, &d.z))).collect();
            for (pi, (i, t)) in products.iter().enumerate() {
                for (k, ak) in &d.derivs[..=pi] {
                    // tr(W A_i Z A_k)
                    h[(*i, *k)] += scale * t.trace_with_sparse(ak);
                }
            }
            for (i, k, aik) in b.derivs2(x) {
                h[(i, k)] += d.coef * aik.inner_sym(&d.w_sym);
            }
        }
        h
    }

    pub fn hessian(&self, x: &[f64]) -> Result<SymMatrix> {
        let blocks = self.eval_blocks(x)?;
        let data = self.deriv_data(x, &blocks);
        Ok(self.hessian_from(x, &data))
    }

    /// Diagonal of the Hessian computed from the closed formula.
    pub fn hessian_diag_from(&self, x: &[f64], data: &[BlockDerivData]) -> Vec<f64> {
        let sh = self.smooth_hessian(x);
        let mut diag = sh.diagonal();
        for (b, d) in self.model.blocks().iter().zip(data) {
            for (i, a) in &d.derivs {
                diag[*i] += d.coef * d.curv * a.sandwich(&d.w, &d.z).trace_with_sparse(a);
            }
            for (i, k, aik) in b.derivs2(x) {
                if i == k {
                    diag[i] += d.coef * aik.inner_sym(&d.w_sym);
                }
            }
        }
        diag
    }

    /// Hessian-vector product through the operator formula
    /// `(Hw)_k = c·curv·⟨W A(w) Z, A_k⟩`, without forming the Hessian.
    /// Requires affine blocks.
    pub fn hess_vec_implicit_from(&self, x: &[f64], data: &[BlockDerivData], w: &[f64]) -> Result<Vec<f64>> {
        if !self.model.blocks().iter().all(|b| b.is_affine()) {
            return Err(Error::Unsupported("implicit Hessian-vector product needs affine constraints"));
        }
        let mut out = self.smooth_hessian(x).mul_vec(w);
        for d in data {
            let dim = d.z.dim();
            let mut aw = SymMatrix::zeros(dim);
            for (i, a) in &d.derivs {
                if w[*i] != 0.0 {
                    a.add_to(&mut aw, w[*i]);
                }
            }
            let m = d.w.mul(&aw.to_dense()).mul(&d.z);
            let scale = d.coef * d.curv;
            for (k, ak) in &d.derivs {
                out[*k] += scale * m.trace_with_sparse(ak);
            }
        }
        Ok(out)
    }

    /// Finite-difference Hessian-vector product `(∇F(x + hw) − ∇F(x))/h`
    /// with `h = √ε(1 + ‖x‖)/‖w‖`.
    pub fn hess_vec_fd(&self, x: &[f64], grad: &[f64], w: &[f64], eps: f64) -> Result<Vec<f64>> {
        let wn = norm2(w);
        if wn == 0.0 {
            return Ok(vec![0.0; w.len()]);
        }
        let h = eps.sqrt() * (1.0 + norm2(x)) / wn;
        let xh: Vec<f64> = x.iter().zip(w).map(|(a, b)| a + h * b).collect();
        let gh = self.gradient(&xh)?;
        Ok(gh.iter().zip(grad).map(|(a, b)| (a - b) / h).collect())
    }

    /// Undamped multiplier candidates `p²ZUZ` (zero for barrier blocks).
    pub fn multiplier_candidates(&self, x: &[f64]) -> Result<Vec<SymMatrix>> {
        let blocks = self.eval_blocks(x)?;
        Ok(self
            .model
            .blocks()
            .iter()
            .zip(&blocks)
            .enumerate()
            .map(|(j, (b, e))| match b.kind {
                BlockKind::Penalty => {
                    let z = e.z.to_dense();
                    z.mul(&self.u[j].to_dense()).mul(&z).sym_part().scaled(self.p * self.p)
                }
                BlockKind::Barrier => SymMatrix::zeros(b.dim),
            })
            .collect())
    }
}

/// `F(x)` at the state's multipliers and parameters.
pub fn auglag_value(model: &Model, st: &IterateState) -> Result<f64> {
    st.lagrangian(model).value(&st.x)
}

pub fn auglag_grad(model: &Model, st: &IterateState) -> Result<Vec<f64>> {
    st.lagrangian(model).gradient(&st.x)
}

pub fn auglag_hess(model: &Model, st: &IterateState) -> Result<SymMatrix> {
    st.lagrangian(model).hessian(&st.x)
}

pub fn hess_vec_implicit(model: &Model, st: &IterateState, w: &[f64]) -> Result<Vec<f64>> {
    let al = st.lagrangian(model);
    let blocks = al.eval_blocks(&st.x)?;
    let data = al.deriv_data(&st.x, &blocks);
    al.hess_vec_implicit_from(&st.x, &data, w)
}

pub fn hess_vec_fd(model: &Model, st: &IterateState, w: &[f64], eps: f64) -> Result<Vec<f64>> {
    let al = st.lagrangian(model);
    let g = al.gradient(&st.x)?;
    al.hess_vec_fd(&st.x, &g, w, eps)
}

/// Damped multiplier step from `U` toward `p²ZUZ`.
pub fn damp_multiplier(u: &SymMatrix, candidate: &SymMatrix, mu_a: f64) -> SymMatrix {
    let diff = candidate.sub(u);
    let dn = diff.norm_fro();
    if dn == 0.0 {
        return u.clone();
    }
    let lambda = mu_a.min(mu_a * u.norm_fro() / dn);
    let mut out = u.clone();
    out.axpy(lambda, &diff);
    out
}

/// Multipliers after the damped update at `x_new`.
pub fn update_multipliers(model: &Model, st: &IterateState, x_new: &[f64], mu_a: f64) -> Result<Vec<SymMatrix>> {
    let cand = st.lagrangian(model).multiplier_candidates(x_new)?;
    Ok(model
        .blocks()
        .iter()
        .zip(st.u.iter().zip(&cand))
        .map(|(b, (u, c))| match b.kind {
            BlockKind::Penalty => damp_multiplier(u, c, mu_a),
            BlockKind::Barrier => u.clone(),
        })
        .collect())
}

/// Outcome of the penalty update.
#[derive(Debug, Clone, PartialEq)]
pub struct PenaltyStep {
    pub p: f64,
    pub l: u8,
    /// Possibly blended toward the stored feasible point.
    pub x: Vec<f64>,
    pub blended: bool,
}

/// Six-step penalty update. `lmax` is `λ_max(A(x_new))` over penalized blocks.
pub fn update_penalty_with(
    model: &Model,
    p: f64,
    l: u8,
    x_new: &[f64],
    lmax: f64,
    x_feas: Option<&[f64]>,
    pi: f64,
    p_eps: f64,
) -> Result<PenaltyStep> {
    if p < p_eps {
        return Ok(PenaltyStep { p, l, x: x_new.to_vec(), blended: false });
    }
    if pi * p > lmax {
        return Ok(PenaltyStep { p: pi * p, l: 0, x: x_new.to_vec(), blended: false });
    }
    if l < 3 {
        let gamma = (lmax + p) / (2.0 * p);
        return Ok(PenaltyStep { p: gamma * p, l: l + 1, x: x_new.to_vec(), blended: false });
    }
    let feas = x_feas.ok_or(Error::RestartRequired)?;
    let mut lambda = 1.0;
    let mut chosen = feas.to_vec();
    for _ in 0..40 {
        lambda *= 0.5;
        let blend: Vec<f64> = x_new.iter().zip(feas).map(|(a, b)| lambda * a + (1.0 - lambda) * b).collect();
        if model.max_violation(&blend) < pi * p {
            chosen = blend;
            break;
        }
    }
    Ok(PenaltyStep { p: pi * p, l: 0, x: chosen, blended: true })
}

pub fn update_penalty(model: &Model, st: &IterateState, x_new: &[f64], cfg: &SolverConfig) -> Result<PenaltyStep> {
    let lmax = model.max_violation(x_new);
    update_penalty_with(model, st.p, st.l, x_new, lmax, st.x_feas.as_deref(), cfg.pi, cfg.p_eps)
}

/// `U¹_j = μ_j I` with `μ_j = m_j · max_ℓ (1 + |∂f/∂x_ℓ|)/(1 + ‖∂A_j/∂x_ℓ‖₂)` over
/// the variables entering block `j`; `μ_j = m_j` for a constant block.
pub fn init_multipliers(model: &Model, x: &[f64]) -> Vec<SymMatrix> {
    let gf = model.objective().gradient(x);
    model
        .blocks()
        .iter()
        .map(|b| match b.kind {
            BlockKind::Barrier => SymMatrix::zeros(b.dim),
            BlockKind::Penalty => {
                let m = b.dim as f64;
                let derivs = b.derivs(x);
                let mu = if derivs.is_empty() {
                    m
                } else {
                    derivs
                        .iter()
                        .map(|(l, a)| (1.0 + gf[*l].abs()) / (1.0 + spectral_norm(&a.to_sym())))
                        .fold(0.0, f64::max)
                        * m
                };
                SymMatrix::scaled_identity(b.dim, mu)
            }
        })
        .collect()
}

/// `p¹ = max(1, 2·λ_max(A(x¹)))` over penalized blocks.
pub fn init_penalty(model: &Model, x: &[f64]) -> f64 {
    let lmax = model
        .blocks()
        .iter()
        .filter(|b| b.kind == BlockKind::Penalty)
        .map(|b| lambda_max(&b.value(x)))
        .fold(f64::NEG_INFINITY, f64::max);
    1f64.max(2.0 * lmax)
}
