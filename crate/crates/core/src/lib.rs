//! Measure expressions on `ℝᵈ`, their Fourier transforms, and numerical
//! verification of Bessel and frame inequalities
//! `A‖f‖²_{L²(μ)} ≤ ∫ |f̂dμ|² dν ≤ B‖f‖²_{L²(μ)}` against certified bounds.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod constructions;
pub mod error;
pub mod integrate;
pub mod interval;
pub mod measure;
pub mod phase;
pub mod pwexp;
pub mod quadrature;
pub mod real;
pub mod test_function;
pub mod transform;
pub mod verifier;

pub use error::{CertError, MeasureError, VerifyError};
pub use interval::{Interval, IntervalUnion};
pub use measure::{Atoms, BoundedDensity, Ifs, MeasureExpr};
pub use test_function::TestFunction;
pub use transform::{Accuracy, ComplexValueWithError};
