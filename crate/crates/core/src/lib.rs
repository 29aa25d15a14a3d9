//! Search for degree-4 self-dual L-functions with integer coefficients.
//!
//! Admissible Euler factors are enumerated prime by prime, and partial
//! coefficient assignments are pruned with linear relations derived from the
//! smoothed approximate functional equation. Products of two elliptic-curve
//! L-functions serve as known solutions for validation.
//!
//! Analytic code is generic over [`scalar::Real`]; [`Mp`] (MPFR-backed, global
//! working precision) is the scalar used in practice, `f64` is used for fast
//! checks.

pub mod afe;
pub mod arith;
pub mod assignment;
pub mod basis;
pub mod error;
pub mod gamma;
pub mod linalg;
pub mod local;
pub mod oracle;
pub mod quadrature;
pub mod relation;
pub mod roots;
pub mod scalar;
pub mod search;
pub mod types;

pub use error::{Error, Result};

/// Working-precision real.
pub type Mp = scalar::MpFloat;
/// Working-precision complex.
pub type MpComplex = num_complex::Complex<Mp>;
pub type MpParams = types::FunctionalEquationParams<Mp>;
pub type MpWeights = afe::WeightVector<Mp>;
pub type MpRelation = relation::LinearRelation<Mp>;
pub type MpEngine = afe::AfeEngine<Mp>;
pub type MpSearch = search::PreparedSearch<Mp>;
