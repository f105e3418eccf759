use thiserror::Error;

use crate::exprjet::{EvalError, ParseError};
use crate::linalg::SingularMatrix;
use crate::ode::OdeError;
use crate::tensor::TensorError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("{field}: {err}")]
    Parse { field: String, err: ParseError },
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("invalid spec: {0}")]
    Spec(String),
    #[error(transparent)]
    Singular(#[from] SingularMatrix),
    #[error(transparent)]
    Tensor(#[from] TensorError),
    #[error(transparent)]
    Ode(#[from] OdeError),
    #[error("spec has no {0}")]
    Missing(&'static str),
    #[error("no admissible point found after {0} attempts")]
    RegionEmpty(usize),
    #[error("metric is not diagonal at the point")]
    NonDiagonalMetric,
    #[error("Lamé coefficient H_{0} vanishes")]
    ZeroLame(usize),
    #[error("coordinates {0} and {1} coincide")]
    CoordinateCollision(usize, usize),
    #[error("singular point z = {0}")]
    SingularPoint(f64),
    #[error("segment from {from} to {to} approaches a singular point")]
    SingularApproach { from: f64, to: f64 },
    #[error("parameter combination is singular: {0}")]
    ParameterSingular(String),
    #[error("field is not invertible for the product (|det X∘| = {0:e})")]
    NotInvertible(f64),
    #[error("hypothesis violated: {0}")]
    HypothesisViolated(String),
    #[error("GMC equations fail (max residual {0:e})")]
    GmcFailed(f64),
    #[error("catalog entry `{0}` is unknown")]
    UnknownEntry(String),
    #[error("entry `{0}` has no companion data for this check")]
    MissingCompanionData(String),
    #[error("Jacobian of the coordinate change is singular")]
    JacobianSingular,
    #[error("metric vanishes identically at the point")]
    AllEntriesZero,
    #[error("json: {0}")]
    Json(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Json(e.to_string())
    }
}
