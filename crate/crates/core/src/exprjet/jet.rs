//! Second-order forward-mode jets (value, gradient, Hessian).

use std::ops::{Add, Div, Mul, Neg, Sub};

use num_complex::Complex;
use num_traits::{One, Zero};

use crate::scalar::{is_finite, Cx, Real, Scalar};

/// Largest chart dimension carried by the fixed-size jets.
pub const MAX_DIM: usize = 6;

/// Value, gradient and Hessian of a scalar function of `n` variables.
///
/// Only the leading `n` entries of `grad` and the leading `n × n` block of
/// `hess` are meaningful; the rest stay zero. The Hessian is symmetric by
/// construction: every operation fills the upper triangle and mirrors it.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Jet2<R: Real> {
    pub n: usize,
    pub val: Cx<R>,
    pub grad: [Cx<R>; MAX_DIM],
    pub hess: [[Cx<R>; MAX_DIM]; MAX_DIM],
}

fn czero<R: Real>() -> Cx<R> {
    Complex::zero()
}

impl<R: Real> Jet2<R> {
    pub fn constant(val: Cx<R>, n: usize) -> Self {
        assert!(n <= MAX_DIM, "chart dimension {n} exceeds {MAX_DIM}");
        Jet2 { n, val, grad: [czero(); MAX_DIM], hess: [[czero(); MAX_DIM]; MAX_DIM] }
    }

    /// The coordinate function `u_k` evaluated at `val`.
    pub fn var(val: Cx<R>, k: usize, n: usize) -> Self {
        let mut j = Self::constant(val, n);
        j.grad[k] = Complex::one();
        j
    }

    /// Seed all coordinates of a point.
    pub fn point(p: &[Cx<R>]) -> Vec<Self> {
        (0..p.len()).map(|k| Self::var(p[k], k, p.len())).collect()
    }

    pub fn gradient(&self) -> Vec<Cx<R>> {
        self.grad[..self.n].to_vec()
    }

    pub fn hessian(&self) -> Vec<Vec<Cx<R>>> {
        (0..self.n).map(|i| self.hess[i][..self.n].to_vec()).collect()
    }

    fn with_upper(n: usize, val: Cx<R>, grad: [Cx<R>; MAX_DIM], mut f: impl FnMut(usize, usize) -> Cx<R>) -> Self {
        let mut hess = [[czero(); MAX_DIM]; MAX_DIM];
        for i in 0..n {
            for j in i..n {
                let h = f(i, j);
                hess[i][j] = h;
                hess[j][i] = h;
            }
        }
        Jet2 { n, val, grad, hess }
    }

    fn dims(&self, other: &Self) -> usize {
        debug_assert!(self.n == other.n || self.n == 0 || other.n == 0);
        self.n.max(other.n)
    }
}

impl<R: Real> Add for Jet2<R> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        let n = self.dims(&o);
        let mut grad = self.grad;
        for k in 0..n {
            grad[k] = grad[k] + o.grad[k];
        }
        Self::with_upper(n, self.val + o.val, grad, |i, j| self.hess[i][j] + o.hess[i][j])
    }
}

impl<R: Real> Sub for Jet2<R> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        let n = self.dims(&o);
        let mut grad = self.grad;
        for k in 0..n {
            grad[k] = grad[k] - o.grad[k];
        }
        Self::with_upper(n, self.val - o.val, grad, |i, j| self.hess[i][j] - o.hess[i][j])
    }
}

impl<R: Real> Neg for Jet2<R> {
    type Output = Self;
    fn neg(self) -> Self {
        let mut grad = self.grad;
        for g in grad.iter_mut().take(self.n) {
            *g = -*g;
        }
        Self::with_upper(self.n, -self.val, grad, |i, j| -self.hess[i][j])
    }
}

impl<R: Real> Mul for Jet2<R> {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        let n = self.dims(&o);
        let (a, b) = (self.val, o.val);
        let mut grad = [czero(); MAX_DIM];
        for k in 0..n {
            grad[k] = self.grad[k] * b + a * o.grad[k];
        }
        Self::with_upper(n, a * b, grad, |i, j| self.hess[i][j] * b + a * o.hess[i][j] + self.grad[i] * o.grad[j] + self.grad[j] * o.grad[i])
    }
}

/// Panics on a zero denominator; use [`Scalar::try_div`] for checked division.
impl<R: Real> Div for Jet2<R> {
    type Output = Self;
    fn div(self, o: Self) -> Self {
        self * o.recip().expect("jet division by zero")
    }
}

impl<R: Real> Scalar for Jet2<R> {
    type R = R;

    fn constant(c: Cx<R>, dim: usize) -> Self {
        Jet2::constant(c, dim)
    }
    fn value(&self) -> Cx<R> {
        self.val
    }
    fn dim(&self) -> usize {
        self.n
    }
    fn chain(&self, f: Cx<R>, f1: Cx<R>, f2: Cx<R>) -> Self {
        let mut grad = [czero(); MAX_DIM];
        for k in 0..self.n {
            grad[k] = f1 * self.grad[k];
        }
        Self::with_upper(self.n, f, grad, |i, j| f2 * self.grad[i] * self.grad[j] + f1 * self.hess[i][j])
    }
    fn mulc(&self, s: Cx<R>) -> Self {
        let mut grad = self.grad;
        for g in grad.iter_mut().take(self.n) {
            *g = *g * s;
        }
        Self::with_upper(self.n, self.val * s, grad, |i, j| self.hess[i][j] * s)
    }
    fn magnitude(&self) -> R {
        let mut m = self.val.norm();
        for i in 0..self.n {
            m = m.max(self.grad[i].norm());
            for j in 0..self.n {
                m = m.max(self.hess[i][j].norm());
            }
        }
        m
    }
    fn all_finite(&self) -> bool {
        is_finite(self.val) && (0..self.n).all(|i| is_finite(self.grad[i]) && (0..self.n).all(|j| is_finite(self.hess[i][j])))
    }
    fn is_const(&self) -> bool {
        (0..self.n).all(|i| self.grad[i].is_zero() && (0..self.n).all(|j| self.hess[i][j].is_zero()))
    }
}
