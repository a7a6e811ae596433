use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)] // shadowed by std's inherent methods when std is linked
use num_traits::Float;

use super::{NewtonStats, SmoothFn};
use crate::config::{PairSelection, PrecondKind, SolverConfig, SolverKind};
use crate::error::Result;
use crate::linalg::{dot, factorize, modified_factorize, norm2, CholFactor, SymMatrix};

/// Limited-memory BFGS inverse approximation built from CG pairs.
#[derive(Debug, Clone)]
pub struct LbfgsStore {
    capacity: usize,
    selection: PairSelection,
    pairs: Vec<(Vec<f64>, Vec<f64>)>,
}

impl LbfgsStore {
    pub fn new(capacity: usize, selection: PairSelection) -> Self {
        Self { capacity: capacity.max(1), selection, pairs: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn pairs(&self) -> &[(Vec<f64>, Vec<f64>)] {
        &self.pairs
    }

    /// Replaces the store with pairs picked from one CG run. Pairs without
    /// positive curvature are dropped first.
    pub fn rebuild(&mut self, candidates: Vec<(Vec<f64>, Vec<f64>)>) {
        let good: Vec<_> = candidates
            .into_iter()
            .filter(|(s, y)| dot(s, y) > 1e-12 * norm2(s) * norm2(y))
            .collect();
        if good.is_empty() {
            return;
        }
        let k = good.len();
        let m = self.capacity.min(k);
        self.pairs = match self.selection {
            PairSelection::Last => good.into_iter().skip(k - m).collect(),
            PairSelection::Equidistant => {
                let mut picked: Vec<usize> =
                    (0..m).map(|i| if m == 1 { k - 1 } else { i * (k - 1) / (m - 1) }).collect();
                picked.dedup();
                let mut out = Vec::with_capacity(picked.len());
                let mut it = good.into_iter().enumerate();
                for idx in picked {
                    for (j, pair) in it.by_ref() {
                        if j == idx {
                            out.push(pair);
                            break;
                        }
                    }
                }
                out
            }
        };
    }

    pub fn clear(&mut self) {
        self.pairs.clear();
    }

    /// Two-loop recursion; identity when empty.
    pub fn apply(&self, r: &[f64]) -> Vec<f64> {
        let mut q = r.to_vec();
        let Some((s_last, y_last)) = self.pairs.last() else {
            return q;
        };
        let mut alphas = vec![0.0; self.pairs.len()];
        for (i, (s, y)) in self.pairs.iter().enumerate().rev() {
            let rho = 1.0 / dot(y, s);
            alphas[i] = rho * dot(s, &q);
            q.iter_mut().zip(y).for_each(|(qi, yi)| *qi -= alphas[i] * yi);
        }
        let gamma = dot(s_last, y_last) / dot(y_last, y_last);
        q.iter_mut().for_each(|v| *v *= gamma);
        for (i, (s, y)) in self.pairs.iter().enumerate() {
            let rho = 1.0 / dot(y, s);
            let beta = rho * dot(y, &q);
            q.iter_mut().zip(s).for_each(|(qi, si)| *qi += (alphas[i] - beta) * si);
        }
        q
    }
}

/// Inverse-diagonal preconditioner; nonpositive or tiny entries fall back to 1.
pub fn precond_diagonal(diag: &[f64]) -> Vec<f64> {
    let scale = diag.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    diag.iter()
        .map(|&d| if d > 1e-14 * (1.0 + scale) { 1.0 / d } else { 1.0 })
        .collect()
}

/// Preconditioner `M⁻¹` for PCG.
#[derive(Debug, Clone, Copy)]
pub enum Precond<'a> {
    Identity,
    /// Stores the inverse diagonal.
    Diagonal(&'a [f64]),
    Lbfgs(&'a LbfgsStore),
    Factor(&'a CholFactor),
}

impl Precond<'_> {
    pub fn apply(&self, r: &[f64]) -> Vec<f64> {
        match self {
            Precond::Identity => r.to_vec(),
            Precond::Diagonal(inv) => r.iter().zip(inv.iter()).map(|(a, b)| a * b).collect(),
            Precond::Lbfgs(store) => store.apply(r),
            Precond::Factor(f) => f.solve(r).unwrap_or_else(|_| r.to_vec()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CgResult {
    pub d: Vec<f64>,
    pub iterations: usize,
    /// Normalized residual test met.
    pub converged: bool,
    pub negative_curvature: bool,
    /// `(αp, αHp)` from every iteration.
    pub pairs: Vec<(Vec<f64>, Vec<f64>)>,
}

/// Preconditioned CG on `H d = −g` from `d₀ = 0`, stopping once
/// `‖Hd + g‖/‖g‖ ≤ tol` or after `cap` iterations. Stops early on
/// nonpositive curvature; if that happens in the first iteration the
/// preconditioned steepest-descent direction is returned.
pub fn solve_pcg(
    op: &mut dyn FnMut(&[f64]) -> Result<Vec<f64>>,
    g: &[f64],
    m: &Precond,
    tol: f64,
    cap: usize,
) -> Result<CgResult> {
    let n = g.len();
    let gn = norm2(g);
    let mut out = CgResult { d: vec![0.0; n], iterations: 0, converged: true, negative_curvature: false, pairs: Vec::new() };
    if gn == 0.0 {
        return Ok(out);
    }
    let mut r: Vec<f64> = g.iter().map(|v| -v).collect();
    let mut z = m.apply(&r);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    out.converged = false;
    while out.iterations < cap {
        let q = op(&p)?;
        let curv = dot(&p, &q);
        if !(curv > 0.0) {
            out.negative_curvature = true;
            if out.iterations == 0 {
                out.d = p;
            }
            return Ok(out);
        }
        let alpha = rz / curv;
        out.iterations += 1;
        out.d.iter_mut().zip(&p).for_each(|(d, pi)| *d += alpha * pi);
        r.iter_mut().zip(&q).for_each(|(ri, qi)| *ri -= alpha * qi);
        out.pairs.push((p.iter().map(|v| alpha * v).collect(), q.iter().map(|v| alpha * v).collect()));
        if norm2(&r) <= tol * gn {
            out.converged = true;
            break;
        }
        z = m.apply(&r);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        p.iter_mut().zip(&z).for_each(|(pi, zi)| *pi = zi + beta * *pi);
    }
    Ok(out)
}

/// Newton direction from a factorization; the shift is the one applied to `H`.
pub fn solve_direct(h: &SymMatrix, g: &[f64], beta0: f64) -> Result<(Vec<f64>, CholFactor)> {
    let f = match factorize(h) {
        Ok(f) => f,
        Err(_) => modified_factorize(h, beta0),
    };
    let mut d = f.solve(g)?;
    d.iter_mut().for_each(|v| *v = -*v);
    Ok((d, f))
}

/// A search direction and how it was produced.
#[derive(Debug, Clone)]
pub struct Direction {
    pub d: Vec<f64>,
    /// Shift added to the Hessian (0 when none was needed or CG was used).
    pub shift: f64,
    /// Assembled Hessian, when one was formed.
    pub hessian: Option<SymMatrix>,
}

/// Linear-system strategy with the state it carries across Newton steps:
/// the L-BFGS store, the hybrid-mode factor and its failure counter.
#[derive(Debug, Clone)]
pub struct LinearSolver {
    kind: SolverKind,
    precond: PrecondKind,
    cg_tol: f64,
    cg_cap: usize,
    hybrid_switch: usize,
    beta0_rel: f64,
    lbfgs: LbfgsStore,
    factor: Option<CholFactor>,
    consecutive_caps: usize,
    forced_direct: bool,
}

impl LinearSolver {
    pub fn new(cfg: &SolverConfig) -> Self {
        Self {
            kind: cfg.solver,
            precond: cfg.precond,
            cg_tol: cfg.cg_tol,
            cg_cap: cfg.cg_cap,
            hybrid_switch: cfg.hybrid_switch,
            beta0_rel: cfg.beta0_rel,
            lbfgs: LbfgsStore::new(cfg.lbfgs_pairs, cfg.pair_selection),
            factor: None,
            consecutive_caps: 0,
            forced_direct: false,
        }
    }

    pub fn kind(&self) -> SolverKind {
        self.kind
    }

    /// Whether factorizations are used for every system from now on.
    pub fn is_direct(&self) -> bool {
        self.kind == SolverKind::Direct || self.forced_direct
    }

    pub fn consecutive_cap_hits(&self) -> usize {
        self.consecutive_caps
    }

    pub fn has_factor_preconditioner(&self) -> bool {
        self.factor.is_some()
    }

    pub fn lbfgs(&self) -> &LbfgsStore {
        &self.lbfgs
    }

    fn beta0(&self, h: &SymMatrix) -> f64 {
        self.beta0_rel * (1.0 + h.norm_inf())
    }

    fn direct(&self, f: &mut dyn SmoothFn, g: &[f64], stats: &mut NewtonStats) -> Result<(Direction, CholFactor)> {
        let h = f.hessian()?;
        let (d, fac) = solve_direct(&h, g, self.beta0(&h))?;
        stats.factorizations += 1;
        if fac.shift() > 0.0 {
            stats.shifts_applied.push(fac.shift());
        }
        Ok((Direction { d, shift: fac.shift(), hessian: Some(h) }, fac))
    }

    /// Newton direction at the point currently set in `f`.
    pub fn direction(&mut self, f: &mut dyn SmoothFn, g: &[f64], stats: &mut NewtonStats) -> Result<Direction> {
        if self.is_direct() {
            return Ok(self.direct(f, g, stats)?.0);
        }
        let diag;
        let m = if let Some(fac) = &self.factor {
            Precond::Factor(fac)
        } else {
            match self.precond {
                PrecondKind::None => Precond::Identity,
                PrecondKind::Diagonal => {
                    diag = precond_diagonal(&f.hess_diag()?);
                    Precond::Diagonal(&diag)
                }
                PrecondKind::Lbfgs => Precond::Lbfgs(&self.lbfgs),
            }
        };
        let res = solve_pcg(&mut |w| f.hess_vec(w), g, &m, self.cg_tol, self.cg_cap)?;
        stats.cg_steps += res.iterations;
        let capped = !res.converged && !res.negative_curvature;
        if self.kind == SolverKind::Hybrid && capped {
            self.consecutive_caps += 1;
            if self.consecutive_caps >= self.hybrid_switch {
                self.forced_direct = true;
            }
            let (dir, fac) = self.direct(f, g, stats)?;
            self.factor = Some(fac);
            self.lbfgs.clear();
            return Ok(dir);
        }
        if self.kind == SolverKind::Hybrid {
            self.consecutive_caps = 0;
        }
        if self.precond == PrecondKind::Lbfgs && self.factor.is_none() {
            self.lbfgs.rebuild(res.pairs);
        }
        Ok(Direction { d: res.d, shift: 0.0, hessian: None })
    }
}
