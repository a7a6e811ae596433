use alloc::vec::Vec;

use super::SmoothFn;
use crate::config::HessVecKind;
use crate::error::Result;
use crate::linalg::SymMatrix;
use crate::penalty::{AugLag, BlockDerivData};

struct Point {
    x: Vec<f64>,
    data: Vec<BlockDerivData>,
    grad: Vec<f64>,
    hess: Option<SymMatrix>,
}

/// The augmented Lagrangian as a [`SmoothFn`], caching per-point block data.
pub struct PenaltyObjective<'a> {
    al: AugLag<'a>,
    hess_vec: HessVecKind,
    fd_eps: f64,
    point: Option<Point>,
}

impl<'a> PenaltyObjective<'a> {
    /// `Auto` resolves to the implicit product when every block is affine and
    /// to the assembled Hessian otherwise.
    pub fn new(al: AugLag<'a>, hess_vec: HessVecKind, fd_eps: f64) -> Self {
        let hess_vec = match hess_vec {
            HessVecKind::Auto if al.model.blocks().iter().all(|b| b.is_affine()) => HessVecKind::Auto,
            HessVecKind::Auto => HessVecKind::Explicit,
            k => k,
        };
        Self { al, hess_vec, fd_eps, point: None }
    }

    pub fn lagrangian(&self) -> &AugLag<'a> {
        &self.al
    }

    fn point(&mut self) -> &mut Point {
        self.point.as_mut().expect("set_point must be called before derivative queries")
    }
}

impl SmoothFn for PenaltyObjective<'_> {
    fn dim(&self) -> usize {
        self.al.n()
    }

    fn value(&self, x: &[f64]) -> Option<f64> {
        self.al.value(x).ok()
    }

    fn set_point(&mut self, x: &[f64]) -> Result<Vec<f64>> {
        let blocks = self.al.eval_blocks(x)?;
        let data = self.al.deriv_data(x, &blocks);
        let grad = self.al.gradient_from(x, &data);
        self.point = Some(Point { x: x.to_vec(), data, grad: grad.clone(), hess: None });
        Ok(grad)
    }

    fn hessian(&mut self) -> Result<SymMatrix> {
        let al = self.al;
        let pt = self.point();
        if pt.hess.is_none() {
            pt.hess = Some(al.hessian_from(&pt.x, &pt.data));
        }
        Ok(pt.hess.clone().expect("just filled"))
    }

    fn hess_vec(&mut self, w: &[f64]) -> Result<Vec<f64>> {
        let al = self.al;
        let eps = self.fd_eps;
        match self.hess_vec {
            HessVecKind::Auto => {
                let pt = self.point();
                al.hess_vec_implicit_from(&pt.x, &pt.data, w)
            }
            HessVecKind::FiniteDifference => {
                let pt = self.point();
                al.hess_vec_fd(&pt.x, &pt.grad, w, eps)
            }
            HessVecKind::Explicit => {
                let pt = self.point();
                if pt.hess.is_none() {
                    pt.hess = Some(al.hessian_from(&pt.x, &pt.data));
                }
                Ok(pt.hess.as_ref().expect("just filled").mul_vec(w))
            }
        }
    }

    fn hess_diag(&mut self) -> Result<Vec<f64>> {
        let al = self.al;
        let pt = self.point();
        Ok(match &pt.hess {
            Some(h) => h.diagonal(),
            None => al.hessian_diag_from(&pt.x, &pt.data),
        })
    }
}
