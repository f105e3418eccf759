//! Expression DSL and forward-mode jets.
//!
//! Formulas are parsed once into an [`Expr`] tree and evaluated over any
//! [`Scalar`](crate::scalar::Scalar): plain complex numbers, first-order
//! [`Dual`] jets or second-order [`Jet2`] jets. Evaluating over jets yields
//! exact gradients and Hessians; [`fd`] provides the central-difference
//! oracle used to cross-check them.

mod ast;
mod dual;
mod eval;
pub mod fd;
mod jet;
mod parse;
mod print;

pub use ast::{Expr, Func};
pub use dual::Dual;
pub use eval::{eval, eval_jet, eval_value, Params};
pub use jet::{Jet2, MAX_DIM};
pub use parse::{parse, parse_with, Names};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("division by zero")]
    DivisionByZero,
    #[error("logarithm of zero")]
    LogOfZero,
    #[error("non-finite result in {0}")]
    NonFinite(&'static str),
    #[error("unbound parameter `{0}`")]
    UnboundParameter(String),
    #[error("variable index {index} out of range for a chart of dimension {n}")]
    VariableOutOfRange { index: usize, n: usize },
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("{line}:{col}: {msg}")]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub msg: String,
}
