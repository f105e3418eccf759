//! First-order jets, used when assembling connections from second-order
//! data: a `Dual` built from a [`Jet2`] keeps the value and gradient, or the
//! k-th gradient entry together with the k-th Hessian row.

use std::ops::{Add, Div, Mul, Neg, Sub};

use num_complex::Complex;
use num_traits::{One, Zero};

use super::jet::{Jet2, MAX_DIM};
use crate::scalar::{is_finite, Cx, Real, Scalar};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Dual<R: Real> {
    pub n: usize,
    pub val: Cx<R>,
    pub grad: [Cx<R>; MAX_DIM],
}

impl<R: Real> Dual<R> {
    pub fn constant(val: Cx<R>, n: usize) -> Self {
        assert!(n <= MAX_DIM, "chart dimension {n} exceeds {MAX_DIM}");
        Dual { n, val, grad: [Complex::zero(); MAX_DIM] }
    }

    pub fn var(val: Cx<R>, k: usize, n: usize) -> Self {
        let mut d = Self::constant(val, n);
        d.grad[k] = Complex::one();
        d
    }

    pub fn from_jet(j: &Jet2<R>) -> Self {
        Dual { n: j.n, val: j.val, grad: j.grad }
    }

    /// `∂_k f` as a first-order jet.
    pub fn partial_of(j: &Jet2<R>, k: usize) -> Self {
        Dual { n: j.n, val: j.grad[k], grad: j.hess[k] }
    }

    pub fn d(&self, k: usize) -> Cx<R> {
        self.grad[k]
    }

    /// Directional derivative `X^k ∂_k`.
    pub fn along(&self, x: &[Cx<R>]) -> Cx<R> {
        let mut s = Complex::zero();
        for (k, xk) in x.iter().enumerate() {
            s = s + self.grad[k] * xk;
        }
        s
    }
}

impl<R: Real> Add for Dual<R> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        let n = self.n.max(o.n);
        let mut grad = self.grad;
        for k in 0..n {
            grad[k] = grad[k] + o.grad[k];
        }
        Dual { n, val: self.val + o.val, grad }
    }
}

impl<R: Real> Sub for Dual<R> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        let n = self.n.max(o.n);
        let mut grad = self.grad;
        for k in 0..n {
            grad[k] = grad[k] - o.grad[k];
        }
        Dual { n, val: self.val - o.val, grad }
    }
}

impl<R: Real> Neg for Dual<R> {
    type Output = Self;
    fn neg(self) -> Self {
        let mut grad = self.grad;
        for g in grad.iter_mut().take(self.n) {
            *g = -*g;
        }
        Dual { n: self.n, val: -self.val, grad }
    }
}

impl<R: Real> Mul for Dual<R> {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        let n = self.n.max(o.n);
        let mut grad = [Complex::zero(); MAX_DIM];
        for k in 0..n {
            grad[k] = self.grad[k] * o.val + self.val * o.grad[k];
        }
        Dual { n, val: self.val * o.val, grad }
    }
}

/// Panics on a zero denominator; use [`Scalar::try_div`] for checked division.
impl<R: Real> Div for Dual<R> {
    type Output = Self;
    fn div(self, o: Self) -> Self {
        self * o.recip().expect("dual division by zero")
    }
}

impl<R: Real> Scalar for Dual<R> {
    type R = R;

    fn constant(c: Cx<R>, dim: usize) -> Self {
        Dual::constant(c, dim)
    }
    fn value(&self) -> Cx<R> {
        self.val
    }
    fn dim(&self) -> usize {
        self.n
    }
    fn chain(&self, f: Cx<R>, f1: Cx<R>, _f2: Cx<R>) -> Self {
        let mut grad = [Complex::zero(); MAX_DIM];
        for k in 0..self.n {
            grad[k] = f1 * self.grad[k];
        }
        Dual { n: self.n, val: f, grad }
    }
    fn mulc(&self, s: Cx<R>) -> Self {
        let mut grad = self.grad;
        for g in grad.iter_mut().take(self.n) {
            *g = *g * s;
        }
        Dual { n: self.n, val: self.val * s, grad }
    }
    fn magnitude(&self) -> R {
        (0..self.n).fold(self.val.norm(), |m, k| m.max(self.grad[k].norm()))
    }
    fn all_finite(&self) -> bool {
        is_finite(self.val) && (0..self.n).all(|k| is_finite(self.grad[k]))
    }
    fn is_const(&self) -> bool {
        (0..self.n).all(|k| self.grad[k].is_zero())
    }
}
