//! Central finite differences of an expression, the independent oracle for
//! the jet arithmetic.

use num_complex::Complex;

use super::ast::Expr;
use super::eval::{eval_value, Params};
use super::EvalError;
use crate::scalar::{Cx, Real};

pub type FdDerivatives<R> = (Vec<Cx<R>>, Vec<Vec<Cx<R>>>);

/// Gradient and Hessian of `e` at `point` by central differences of step
/// `step` along the real coordinate axes.
pub fn finite_diff_oracle<R: Real>(e: &Expr, point: &[Cx<R>], params: &Params<R>, step: R) -> Result<FdDerivatives<R>, EvalError> {
    let n = point.len();
    let h = Complex::new(step, R::zero());
    let two = R::lit(2.0);
    let f = |shift: &[(usize, R)]| {
        let mut p = point.to_vec();
        for &(k, s) in shift {
            p[k] = p[k] + h * s;
        }
        eval_value(e, &p, params)
    };
    let one = R::one();
    let f0 = f(&[])?;
    let mut grad = vec![Complex::new(R::zero(), R::zero()); n];
    let mut hess = vec![grad.clone(); n];
    for k in 0..n {
        let fp = f(&[(k, one)])?;
        let fm = f(&[(k, -one)])?;
        grad[k] = (fp - fm) / (h * two);
        hess[k][k] = (fp - f0 * two + fm) / (h * h);
        for l in 0..k {
            let pp = f(&[(k, one), (l, one)])?;
            let pm = f(&[(k, one), (l, -one)])?;
            let mp = f(&[(k, -one), (l, one)])?;
            let mm = f(&[(k, -one), (l, -one)])?;
            let v = (pp - pm - mp + mm) / (h * h * R::lit(4.0));
            hess[k][l] = v;
            hess[l][k] = v;
        }
    }
    Ok((grad, hess))
}
