use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::linalg::SymMatrix;

/// Twice differentiable scalar function of the full variable vector.
///
/// Implementations must be pure: equal inputs give equal outputs.
pub trait ScalarFn: Send + Sync {
    /// Length of the argument vector.
    fn arity(&self) -> usize;

    fn value(&self, x: &[f64]) -> f64;

    /// Dense gradient of length [`arity`](Self::arity).
    fn gradient(&self, x: &[f64]) -> Vec<f64>;

    /// Dense Hessian, or `None` when it is identically zero.
    fn hessian(&self, x: &[f64]) -> Option<SymMatrix>;

    /// Indices the function may depend on; `None` means all of them.
    fn support(&self) -> Option<Vec<usize>> {
        None
    }
}

pub type SharedFn = Arc<dyn ScalarFn>;

impl fmt::Debug for dyn ScalarFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ScalarFn(arity = {})", self.arity())
    }
}

/// `cᵀx + d`
#[derive(Debug, Clone, PartialEq)]
pub struct LinearFn {
    pub coeffs: Vec<f64>,
    pub constant: f64,
}

impl LinearFn {
    pub fn new(coeffs: Vec<f64>, constant: f64) -> Self {
        Self { coeffs, constant }
    }

    /// Builds from sparse `(index, coefficient)` pairs; repeated indices add up.
    pub fn sparse(arity: usize, terms: &[(usize, f64)], constant: f64) -> Self {
        let mut coeffs = vec![0.0; arity];
        for &(i, c) in terms {
            coeffs[i] += c;
        }
        Self { coeffs, constant }
    }
}

impl ScalarFn for LinearFn {
    fn arity(&self) -> usize {
        self.coeffs.len()
    }
    fn value(&self, x: &[f64]) -> f64 {
        self.constant + crate::linalg::dot(&self.coeffs, x)
    }
    fn gradient(&self, _x: &[f64]) -> Vec<f64> {
        self.coeffs.clone()
    }
    fn hessian(&self, _x: &[f64]) -> Option<SymMatrix> {
        None
    }
    fn support(&self) -> Option<Vec<usize>> {
        Some(self.coeffs.iter().enumerate().filter(|(_, c)| **c != 0.0).map(|(i, _)| i).collect())
    }
}

/// `½ xᵀQx + cᵀx + d`
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticFn {
    pub q: SymMatrix,
    pub linear: Vec<f64>,
    pub constant: f64,
}

impl ScalarFn for QuadraticFn {
    fn arity(&self) -> usize {
        self.linear.len()
    }
    fn value(&self, x: &[f64]) -> f64 {
        let qx = self.q.mul_vec(x);
        0.5 * crate::linalg::dot(&qx, x) + crate::linalg::dot(&self.linear, x) + self.constant
    }
    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let mut g = self.q.mul_vec(x);
        for (gi, ci) in g.iter_mut().zip(&self.linear) {
            *gi += ci;
        }
        g
    }
    fn hessian(&self, _x: &[f64]) -> Option<SymMatrix> {
        if self.q.packed().iter().all(|&v| v == 0.0) {
            None
        } else {
            Some(self.q.clone())
        }
    }
}

/// `scale · inner(x)`
#[derive(Debug, Clone)]
pub struct ScaledFn {
    pub inner: SharedFn,
    pub scale: f64,
}

/// `-inner(x)`, used when an equality is split into two inequalities.
pub fn negated(inner: SharedFn) -> ScaledFn {
    ScaledFn { inner, scale: -1.0 }
}

impl ScalarFn for ScaledFn {
    fn arity(&self) -> usize {
        self.inner.arity()
    }
    fn value(&self, x: &[f64]) -> f64 {
        self.scale * self.inner.value(x)
    }
    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let mut g = self.inner.gradient(x);
        g.iter_mut().for_each(|v| *v *= self.scale);
        g
    }
    fn hessian(&self, x: &[f64]) -> Option<SymMatrix> {
        self.inner.hessian(x).map(|h| h.scaled(self.scale))
    }
    fn support(&self) -> Option<Vec<usize>> {
        self.inner.support()
    }
}

/// Restriction of a function to a subset of its arguments, the others being
/// held at fixed values.
#[derive(Debug, Clone)]
pub struct EmbeddedFn {
    pub inner: SharedFn,
    /// Position in the inner argument of each reduced variable.
    pub positions: Vec<usize>,
    /// Inner argument with the eliminated coordinates set.
    pub template: Vec<f64>,
}

impl EmbeddedFn {
    fn lift(&self, x: &[f64]) -> Vec<f64> {
        let mut full = self.template.clone();
        for (&p, &v) in self.positions.iter().zip(x) {
            full[p] = v;
        }
        full
    }
}

impl ScalarFn for EmbeddedFn {
    fn arity(&self) -> usize {
        self.positions.len()
    }
    fn value(&self, x: &[f64]) -> f64 {
        self.inner.value(&self.lift(x))
    }
    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let g = self.inner.gradient(&self.lift(x));
        self.positions.iter().map(|&p| g[p]).collect()
    }
    fn hessian(&self, x: &[f64]) -> Option<SymMatrix> {
        let h = self.inner.hessian(&self.lift(x))?;
        Some(SymMatrix::from_fn(self.positions.len(), |i, j| h[(self.positions[i], self.positions[j])]))
    }
    fn support(&self) -> Option<Vec<usize>> {
        let inner = self.inner.support()?;
        Some(
            self.positions
                .iter()
                .enumerate()
                .filter(|(_, p)| inner.contains(p))
                .map(|(i, _)| i)
                .collect(),
        )
    }
}

/// Function given by closures; handy for tests and small custom problems.
pub struct ClosureFn<V, G, H> {
    pub arity: usize,
    pub value: V,
    pub gradient: G,
    pub hessian: H,
}

impl<V, G, H> ScalarFn for ClosureFn<V, G, H>
where
    V: Fn(&[f64]) -> f64 + Send + Sync,
    G: Fn(&[f64]) -> Vec<f64> + Send + Sync,
    H: Fn(&[f64]) -> Option<SymMatrix> + Send + Sync,
{
    fn arity(&self) -> usize {
        self.arity
    }
    fn value(&self, x: &[f64]) -> f64 {
        (self.value)(x)
    }
    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        (self.gradient)(x)
    }
    fn hessian(&self, x: &[f64]) -> Option<SymMatrix> {
        (self.hessian)(x)
    }
}
