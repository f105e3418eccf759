#![allow(clippy::needless_range_loop)]
// NaN-rejecting comparisons and division as multiplication by the reciprocal are deliberate
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::suspicious_arithmetic_impl)]

pub mod catalog;
pub mod connection;
pub mod error;
pub mod exprjet;
pub mod hamops;
pub mod legendre;
pub mod linalg;
pub mod manifold;
pub mod ode;
pub mod ode3d;
pub mod pencil;
pub mod report;
pub mod rotation;
pub mod scalar;
pub mod tensor;

pub use num_complex::Complex;

/// Double-precision complex scalar used by the geometry layers.
pub type C64 = num_complex::Complex<f64>;
pub type Jet64 = exprjet::Jet2<f64>;
pub type Dual64 = exprjet::Dual<f64>;
