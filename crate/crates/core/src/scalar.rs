//! Real and complex scalar plumbing shared by every layer.
//!
//! [`Real`] is the floating-point parameter (`f32` or `f64`); every quantity
//! is a `Complex<R>`. [`Scalar`] abstracts over plain complex values and the
//! forward-mode jets so that expression evaluation, matrix inversion and
//! tensor algebra are written once.

use std::fmt::{Debug, Display};
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_complex::Complex;
use num_traits::{Float, FloatConst, FromPrimitive, One, ToPrimitive, Zero};

use crate::exprjet::EvalError;

pub trait Real: Float + FloatConst + FromPrimitive + Debug + Display + Default + Send + Sync + 'static {
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal representable")
    }
}

impl Real for f32 {}
impl Real for f64 {}

pub type Cx<R> = Complex<R>;

fn positive_zero_im<R: Real>(z: Cx<R>) -> Cx<R> {
    if z.im == R::zero() {
        Complex::new(z.re, R::zero())
    } else {
        z
    }
}

/// Principal square root, cut on the negative real axis (approached from above).
pub fn csqrt<R: Real>(z: Cx<R>) -> Cx<R> {
    positive_zero_im(z).sqrt()
}

/// Principal logarithm, `Im ln z ∈ (−π, π]`.
pub fn cln<R: Real>(z: Cx<R>) -> Cx<R> {
    positive_zero_im(z).ln()
}

/// Principal power `exp(p ln z)`.
pub fn cpow<R: Real>(z: Cx<R>, p: Cx<R>) -> Cx<R> {
    (p * cln(z)).exp()
}

pub fn is_finite<R: Real>(z: Cx<R>) -> bool {
    z.re.is_finite() && z.im.is_finite()
}

/// `|a − b| ≤ atol + rtol·|b|`.
pub fn close<R: Real>(a: Cx<R>, b: Cx<R>, atol: R, rtol: R) -> bool {
    (a - b).norm() <= atol + rtol * b.norm()
}

/// Common interface of complex numbers and jets.
///
/// `dim` is the number of independent variables carried by the derivative
/// part (zero for plain complex numbers).
pub trait Scalar: Copy + Debug + Add<Output = Self> + Sub<Output = Self> + Mul<Output = Self> + Div<Output = Self> + Neg<Output = Self> {
    type R: Real;

    fn constant(c: Cx<Self::R>, dim: usize) -> Self;
    fn value(&self) -> Cx<Self::R>;
    fn dim(&self) -> usize;
    /// Push a univariate map through the chain rule given its value, first
    /// and second derivative at `self.value()`.
    fn chain(&self, f: Cx<Self::R>, f1: Cx<Self::R>, f2: Cx<Self::R>) -> Self;
    fn mulc(&self, s: Cx<Self::R>) -> Self;
    /// Largest modulus over value and all stored derivatives.
    fn magnitude(&self) -> Self::R;
    fn all_finite(&self) -> bool;
    /// True when every stored derivative vanishes exactly.
    fn is_const(&self) -> bool;

    fn zeroed(dim: usize) -> Self {
        Self::constant(Complex::new(Self::R::zero(), Self::R::zero()), dim)
    }

    fn unit(dim: usize) -> Self {
        Self::constant(Complex::new(Self::R::one(), Self::R::zero()), dim)
    }

    fn from_real(x: f64, dim: usize) -> Self {
        Self::constant(Complex::new(Self::R::lit(x), Self::R::zero()), dim)
    }

    fn checked(self, op: &'static str) -> Result<Self, EvalError> {
        if self.all_finite() {
            Ok(self)
        } else {
            Err(EvalError::NonFinite(op))
        }
    }

    fn recip(&self) -> Result<Self, EvalError> {
        let v = self.value();
        if v.norm() == Self::R::zero() {
            return Err(EvalError::DivisionByZero);
        }
        let r = v.inv();
        let two = Self::R::lit(2.0);
        self.chain(r, -r * r, r * r * r * two).checked("division")
    }

    fn try_div(&self, other: &Self) -> Result<Self, EvalError> {
        Ok(*self * other.recip()?)
    }

    fn sqrt(&self) -> Result<Self, EvalError> {
        let v = self.value();
        let s = csqrt(v);
        if self.dim() > 0 && s.norm() == Self::R::zero() {
            return Err(EvalError::NonFinite("sqrt"));
        }
        let half = Self::R::lit(0.5);
        let f1 = if self.dim() > 0 { s.inv().scale(half) } else { s };
        let f2 = if self.dim() > 0 { -(f1 / v).scale(half) } else { s };
        self.chain(s, f1, f2).checked("sqrt")
    }

    fn ln(&self) -> Result<Self, EvalError> {
        let v = self.value();
        if v.norm() == Self::R::zero() {
            return Err(EvalError::LogOfZero);
        }
        let r = v.inv();
        self.chain(cln(v), r, -r * r).checked("ln")
    }

    fn exp(&self) -> Result<Self, EvalError> {
        let f = self.value().exp();
        self.chain(f, f, f).checked("exp")
    }

    fn powi(&self, k: i32) -> Result<Self, EvalError> {
        let v = self.value();
        if k < 0 && v.norm() == Self::R::zero() {
            return Err(EvalError::DivisionByZero);
        }
        let kr = Self::R::lit(k as f64);
        let f = v.powi(k);
        let f1 = if k == 0 { v * Self::R::zero() } else { v.powi(k - 1).scale(kr) };
        let f2 = if k == 0 || k == 1 { v * Self::R::zero() } else { v.powi(k - 2).scale(kr * (kr - Self::R::one())) };
        self.chain(f, f1, f2).checked("pow")
    }

    fn powc(&self, p: Cx<Self::R>) -> Result<Self, EvalError> {
        let v = self.value();
        if v.norm() == Self::R::zero() {
            return Err(EvalError::NonFinite("pow"));
        }
        let f = cpow(v, p);
        let one = Complex::new(Self::R::one(), Self::R::zero());
        let f1 = p * f / v;
        let f2 = p * (p - one) * f / (v * v);
        self.chain(f, f1, f2).checked("pow")
    }

    /// General power; integer and constant exponents avoid the logarithm.
    fn pow(&self, e: &Self) -> Result<Self, EvalError> {
        if e.is_const() {
            let p = e.value();
            if p.im == Self::R::zero() && p.re.fract() == Self::R::zero() && p.re.abs() < Self::R::lit(1e9) {
                return self.powi(p.re.to_i32().expect("small integer"));
            }
            return self.powc(p);
        }
        (*e * self.ln()?).exp()
    }
}

impl<R: Real> Scalar for Complex<R> {
    type R = R;

    fn constant(c: Cx<R>, _dim: usize) -> Self {
        c
    }
    fn value(&self) -> Cx<R> {
        *self
    }
    fn dim(&self) -> usize {
        0
    }
    fn chain(&self, f: Cx<R>, _f1: Cx<R>, _f2: Cx<R>) -> Self {
        f
    }
    fn mulc(&self, s: Cx<R>) -> Self {
        *self * s
    }
    fn magnitude(&self) -> R {
        self.norm()
    }
    fn all_finite(&self) -> bool {
        is_finite(*self)
    }
    fn is_const(&self) -> bool {
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sqrt_of_negative_real_is_upper() {
        let z = Complex::new(-4.0_f64, -0.0);
        assert_eq!(csqrt(z), Complex::new(0.0, 2.0));
        let z = -Complex::new(4.0_f64, 0.0);
        assert_eq!(csqrt(z), Complex::new(0.0, 2.0));
    }

    #[test]
    fn ln_of_negative_real() {
        let z = -Complex::new(1.0_f64, 0.0);
        assert!((cln(z) - Complex::new(0.0, std::f64::consts::PI)).norm() < 1e-15);
    }

    #[test]
    fn f32_scalar_ops() {
        let z = Complex::new(2.0_f32, 0.0);
        let s = <Complex<f32> as Scalar>::sqrt(&z).unwrap();
        assert!((s.re - 2.0_f32.sqrt()).abs() < 1e-6);
        assert!(<Complex<f32> as Scalar>::recip(&Complex::new(0.0, 0.0)).is_err());
    }
}
