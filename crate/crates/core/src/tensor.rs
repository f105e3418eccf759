//! Dense tensors at a point.
//!
//! Index order follows the written symbol: `c^i_{jk}` is stored with slots
//! `(i, j, k)`, `Γ^i_{jk}` as `(i, j, k)`, and the curvature `R^h_{ikj}` as
//! `(h, i, k, j)`, meaning `R(∂_k, ∂_j)∂_i = R^h_{ikj} ∂_h`. Data is
//! row-major in that order.

use std::ops::{Index, IndexMut};

use crate::exprjet::Dual;
use crate::linalg::{self, SingularMatrix};
use num_traits::ToPrimitive;

use crate::scalar::{Real, Scalar};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum Variance {
    Up,
    Down,
}

pub use Variance::{Down, Up};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TensorError {
    #[error("slot {slot} out of range for rank {rank}")]
    SlotOutOfRange { slot: usize, rank: usize },
    #[error("contraction needs one upper and one lower slot")]
    VarianceMismatch,
    #[error("dimension mismatch ({0} vs {1})")]
    DimensionMismatch(usize, usize),
    #[error("expected a rank-2 tensor, got rank {0}")]
    NotMatrix(usize),
    #[error(transparent)]
    Singular(#[from] SingularMatrix),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Tensor<S> {
    n: usize,
    sig: Vec<Variance>,
    data: Vec<S>,
}

impl<S: Scalar> Tensor<S> {
    pub fn zeros(n: usize, sig: &[Variance], dim: usize) -> Self {
        Tensor { n, sig: sig.to_vec(), data: vec![S::zeroed(dim); n.pow(sig.len() as u32)] }
    }

    pub fn from_fn(n: usize, sig: &[Variance], mut f: impl FnMut(&[usize]) -> S) -> Self {
        let rank = sig.len();
        let len = n.pow(rank as u32);
        let mut idx = vec![0usize; rank];
        let mut data = Vec::with_capacity(len);
        for flat in 0..len {
            let mut r = flat;
            for s in (0..rank).rev() {
                idx[s] = r % n;
                r /= n;
            }
            data.push(f(&idx));
        }
        Tensor { n, sig: sig.to_vec(), data }
    }

    /// Fallible variant of [`Tensor::from_fn`].
    pub fn try_from_fn<E>(n: usize, sig: &[Variance], mut f: impl FnMut(&[usize]) -> Result<S, E>) -> Result<Self, E> {
        let mut err = None;
        let t = Self::from_fn(n, sig, |i| match f(i) {
            Ok(v) => v,
            Err(e) => {
                err.get_or_insert(e);
                S::zeroed(0)
            }
        });
        match err {
            Some(e) => Err(e),
            None => Ok(t),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn rank(&self) -> usize {
        self.sig.len()
    }

    pub fn signature(&self) -> &[Variance] {
        &self.sig
    }

    pub fn data(&self) -> &[S] {
        &self.data
    }

    fn offset(&self, idx: &[usize]) -> usize {
        debug_assert_eq!(idx.len(), self.sig.len());
        idx.iter().fold(0, |o, &i| {
            debug_assert!(i < self.n);
            o * self.n + i
        })
    }

    pub fn get(&self, idx: &[usize]) -> S {
        self.data[self.offset(idx)]
    }

    pub fn set(&mut self, idx: &[usize], v: S) {
        let o = self.offset(idx);
        self.data[o] = v;
    }

    pub fn map<T: Scalar>(&self, f: impl Fn(S) -> T) -> Tensor<T> {
        Tensor { n: self.n, sig: self.sig.clone(), data: self.data.iter().map(|&x| f(x)).collect() }
    }

    pub fn zip(&self, o: &Self, f: impl Fn(S, S) -> S) -> Self {
        assert_eq!(self.data.len(), o.data.len(), "tensor shapes differ");
        Tensor { n: self.n, sig: self.sig.clone(), data: self.data.iter().zip(&o.data).map(|(&a, &b)| f(a, b)).collect() }
    }

    pub fn add(&self, o: &Self) -> Self {
        self.zip(o, |a, b| a + b)
    }

    pub fn sub(&self, o: &Self) -> Self {
        self.zip(o, |a, b| a - b)
    }

    pub fn scale(&self, s: S) -> Self {
        self.map(|x| x * s)
    }

    /// Largest modulus of the value parts.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|x| x.value().norm().to_f64().unwrap_or(f64::INFINITY)).fold(0.0, f64::max)
    }

    /// Single-index contraction of slot `sa` of `self` with slot `sb` of `b`.
    /// The result carries the remaining slots of `self`, then those of `b`.
    pub fn contract(&self, sa: usize, b: &Self, sb: usize) -> Result<Self, TensorError> {
        if sa >= self.rank() {
            return Err(TensorError::SlotOutOfRange { slot: sa, rank: self.rank() });
        }
        if sb >= b.rank() {
            return Err(TensorError::SlotOutOfRange { slot: sb, rank: b.rank() });
        }
        if self.n != b.n {
            return Err(TensorError::DimensionMismatch(self.n, b.n));
        }
        if self.sig[sa] == b.sig[sb] {
            return Err(TensorError::VarianceMismatch);
        }
        let ra = self.rank() - 1;
        let mut sig: Vec<Variance> = self.sig.iter().enumerate().filter(|&(i, _)| i != sa).map(|(_, &v)| v).collect();
        sig.extend(b.sig.iter().enumerate().filter(|&(i, _)| i != sb).map(|(_, &v)| v));
        let dim = self.data.first().map_or(0, |x| x.dim());
        let mut ia = vec![0; self.rank()];
        let mut ib = vec![0; b.rank()];
        Ok(Self::from_fn(self.n, &sig, |idx| {
            let (left, right) = idx.split_at(ra);
            let mut s = S::zeroed(dim);
            for k in 0..self.n {
                fill(&mut ia, left, sa, k);
                fill(&mut ib, right, sb, k);
                s = s + self.get(&ia) * b.get(&ib);
            }
            s
        }))
    }

    /// Average over transpositions of slots `a` and `b`.
    pub fn symmetrize(&self, a: usize, b: usize) -> Self {
        let half = S::from_real(0.5, self.data.first().map_or(0, |x| x.dim()));
        Self::from_fn(self.n, &self.sig, |idx| {
            let mut t = idx.to_vec();
            t.swap(a, b);
            (self.get(idx) + self.get(&t)) * half
        })
    }

    pub fn to_matrix(&self) -> Result<Vec<Vec<S>>, TensorError> {
        if self.rank() != 2 {
            return Err(TensorError::NotMatrix(self.rank()));
        }
        Ok((0..self.n).map(|i| (0..self.n).map(|j| self.get(&[i, j])).collect()).collect())
    }

    pub fn from_matrix(m: &[Vec<S>], sig: [Variance; 2]) -> Self {
        Self::from_fn(m.len(), &sig, |i| m[i[0]][i[1]])
    }

    /// Matrix inverse; `g_{ij}` becomes `g^{ij}`, a mixed `A^i_j` stays mixed.
    pub fn invert_matrix(&self) -> Result<Self, TensorError> {
        let inv = linalg::invert(&self.to_matrix()?)?;
        let flip = |v: Variance| if v == Up { Down } else { Up };
        let sig = if self.sig[0] == self.sig[1] { [flip(self.sig[0]), flip(self.sig[1])] } else { [self.sig[0], self.sig[1]] };
        Ok(Self::from_matrix(&inv, sig))
    }
}

fn fill(full: &mut [usize], rest: &[usize], slot: usize, k: usize) {
    let mut r = rest.iter();
    for (i, f) in full.iter_mut().enumerate() {
        *f = if i == slot { k } else { *r.next().unwrap() };
    }
}

impl<S: Scalar, const N: usize> Index<[usize; N]> for Tensor<S> {
    type Output = S;
    fn index(&self, idx: [usize; N]) -> &S {
        &self.data[self.offset(&idx)]
    }
}

impl<S: Scalar, const N: usize> IndexMut<[usize; N]> for Tensor<S> {
    fn index_mut(&mut self, idx: [usize; N]) -> &mut S {
        let o = self.offset(&idx);
        &mut self.data[o]
    }
}

impl<R: Real> Tensor<Dual<R>> {
    pub fn values(&self) -> Tensor<num_complex::Complex<R>> {
        self.map(|d| d.val)
    }

    /// `∂_k` of every component.
    pub fn partial(&self, k: usize) -> Tensor<num_complex::Complex<R>> {
        self.map(|d| d.grad[k])
    }
}

/// Lie derivative `ℒ_X T` of a tensor field given with first derivatives:
/// `X^k ∂_k T − Σ_up T^{..k..} ∂_k X^a + Σ_down T_{..k..} ∂_b X^k`.
pub fn lie_derivative<R: Real>(t: &Tensor<Dual<R>>, x: &[Dual<R>]) -> Tensor<num_complex::Complex<R>> {
    let n = t.n();
    let zero = num_complex::Complex::new(R::zero(), R::zero());
    Tensor::from_fn(n, t.signature(), |idx| {
        let here = t.get(idx);
        let mut s = zero;
        for k in 0..n {
            s = s + x[k].val * here.grad[k];
        }
        let mut j = idx.to_vec();
        for (slot, v) in t.signature().iter().enumerate() {
            let a = idx[slot];
            for k in 0..n {
                j[slot] = k;
                let tk = t.get(&j).val;
                s = match v {
                    Up => s - tk * x[a].grad[k],
                    Down => s + tk * x[k].grad[a],
                };
            }
            j[slot] = a;
        }
        s
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::C64;
    use num_complex::Complex;

    fn c(x: f64) -> C64 {
        Complex::new(x, 0.0)
    }

    fn canonical(n: usize) -> Tensor<C64> {
        Tensor::from_fn(n, &[Up, Down, Down], |i| if i[0] == i[1] && i[1] == i[2] { c(1.0) } else { c(0.0) })
    }

    #[test]
    fn unit_contraction_gives_identity() {
        let e = Tensor::from_fn(2, &[Up], |_| c(1.0));
        let r = canonical(2).contract(1, &e, 0).unwrap();
        assert_eq!(r.signature(), &[Up, Down]);
        for i in 0..2 {
            for k in 0..2 {
                assert_eq!(r[[i, k]], c(if i == k { 1.0 } else { 0.0 }));
            }
        }
    }

    #[test]
    fn contraction_errors() {
        let e = Tensor::from_fn(2, &[Up], |_| c(1.0));
        assert_eq!(e.contract(0, &e, 0), Err(TensorError::VarianceMismatch));
        assert!(matches!(e.contract(1, &e, 0), Err(TensorError::SlotOutOfRange { .. })));
        let f = Tensor::from_fn(3, &[Down], |_| c(1.0));
        assert_eq!(e.contract(0, &f, 0), Err(TensorError::DimensionMismatch(2, 3)));
    }

    #[test]
    fn inverse_metric_flips_variance() {
        let g = Tensor::from_fn(2, &[Down, Down], |i| if i[0] == i[1] { c(2.0 + i[0] as f64) } else { c(0.5) });
        let gi = g.invert_matrix().unwrap();
        assert_eq!(gi.signature(), &[Up, Up]);
        let id = gi.contract(1, &g, 0).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                assert!((id[[i, j]] - c(if i == j { 1.0 } else { 0.0 })).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn symmetrize_is_idempotent() {
        let t = Tensor::from_fn(3, &[Down, Down, Up], |i| c((i[0] * 7 + i[1] * 3 + i[2]) as f64));
        let s = t.symmetrize(0, 1);
        assert_eq!(s.symmetrize(0, 1), s);
    }

    #[test]
    fn lie_derivative_of_constant_field_along_translation() {
        let t: Tensor<Dual<f64>> = Tensor::from_fn(2, &[Down, Down], |i| Dual::constant(c((i[0] + i[1]) as f64), 2));
        let x = vec![Dual::constant(c(1.0), 2); 2];
        assert_eq!(lie_derivative(&t, &x).max_abs(), 0.0);
    }
}
