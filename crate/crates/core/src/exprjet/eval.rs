use std::collections::BTreeMap;

use num_complex::Complex;

use super::ast::{Expr, Func};
use super::jet::Jet2;
use super::EvalError;
use crate::scalar::{Cx, Real, Scalar};

/// Named parameter bindings.
pub type Params<R> = BTreeMap<String, Cx<R>>;

/// Evaluate over any scalar type; `vars[i]` is the value of coordinate `i`.
pub fn eval<S: Scalar>(e: &Expr, vars: &[S], params: &Params<S::R>) -> Result<S, EvalError> {
    let dim = vars.first().map_or(0, |v| v.dim());
    let lit = |x: f64| S::constant(Complex::new(S::R::lit(x), S::R::lit(0.0)), dim);
    match e {
        Expr::Num(x) => lit(*x),
        Expr::Imag(x) => S::constant(Complex::new(S::R::lit(0.0), S::R::lit(*x)), dim),
        Expr::Var(i) => *vars.get(*i).ok_or(EvalError::VariableOutOfRange { index: *i, n: vars.len() })?,
        Expr::Param(p) => S::constant(*params.get(p).ok_or_else(|| EvalError::UnboundParameter(p.clone()))?, dim),
        Expr::Neg(a) => -eval(a, vars, params)?,
        Expr::Add(a, b) => eval(a, vars, params)? + eval(b, vars, params)?,
        Expr::Sub(a, b) => eval(a, vars, params)? - eval(b, vars, params)?,
        Expr::Mul(a, b) => eval(a, vars, params)? * eval(b, vars, params)?,
        Expr::Div(a, b) => eval(a, vars, params)?.try_div(&eval(b, vars, params)?)?,
        Expr::Pow(a, b) => eval(a, vars, params)?.pow(&eval(b, vars, params)?)?,
        Expr::Call(f, a) => {
            let x = eval(a, vars, params)?;
            match f {
                Func::Sqrt => x.sqrt()?,
                Func::Ln => x.ln()?,
                Func::Exp => x.exp()?,
            }
        }
    }
    .checked("expression")
}

pub fn eval_value<R: Real>(e: &Expr, point: &[Cx<R>], params: &Params<R>) -> Result<Cx<R>, EvalError> {
    eval(e, point, params)
}

/// Value, gradient and Hessian at `point`.
pub fn eval_jet<R: Real>(e: &Expr, point: &[Cx<R>], params: &Params<R>) -> Result<Jet2<R>, EvalError> {
    eval(e, &Jet2::point(point), params)
}

#[cfg(test)]
mod tests {
    use super::super::parse;
    use super::*;

    fn c(x: f64) -> Complex<f64> {
        Complex::new(x, 0.0)
    }

    #[test]
    fn elementary_values() {
        let p = Params::new();
        let v = eval_value(&parse("sqrt(-1)").unwrap(), &[], &p).unwrap();
        assert_eq!(v, Complex::new(0.0, 1.0));
        let v = eval_value(&parse("u1*u2 + ln(u3)").unwrap(), &[c(1.0), c(2.0), c(std::f64::consts::E)], &p).unwrap();
        assert!((v - c(3.0)).norm() < 1e-15);
    }

    #[test]
    fn polynomial_jet() {
        let j = eval_jet(&parse("u1^2*u2").unwrap(), &[c(3.0), c(2.0)], &Params::new()).unwrap();
        assert_eq!(j.val, c(18.0));
        assert_eq!(j.gradient(), vec![c(12.0), c(9.0)]);
        assert_eq!(j.hessian(), vec![vec![c(4.0), c(6.0)], vec![c(6.0), c(0.0)]]);
    }

    #[test]
    fn sqrt_jet() {
        let j = eval_jet(&parse("sqrt(u1)").unwrap(), &[c(4.0)], &Params::new()).unwrap();
        assert_eq!(j.val, c(2.0));
        assert_eq!(j.grad[0], c(0.25));
        assert_eq!(j.hess[0][0], c(-1.0 / 32.0));
    }

    #[test]
    fn domain_errors() {
        let p = Params::new();
        assert_eq!(eval_value(&parse("1/(u1-u1)").unwrap(), &[c(1.0)], &p), Err(EvalError::DivisionByZero));
        assert_eq!(eval_value(&parse("ln(u1-1)").unwrap(), &[c(1.0)], &p), Err(EvalError::LogOfZero));
        assert_eq!(eval_value(&parse("a*u1").unwrap(), &[c(1.0)], &p), Err(EvalError::UnboundParameter("a".into())));
        assert!(matches!(eval_value(&parse("u3").unwrap(), &[c(1.0)], &p), Err(EvalError::VariableOutOfRange { index: 2, n: 1 })));
    }

    #[test]
    fn single_precision_evaluation() {
        let p = Params::<f32>::new();
        let j = eval_jet(&parse("u1^3").unwrap(), &[Complex::new(2.0f32, 0.0)], &p).unwrap();
        assert_eq!(j.grad[0], Complex::new(12.0f32, 0.0));
        assert_eq!(j.hess[0][0], Complex::new(12.0f32, 0.0));
    }
}
