//! Symbolic-numeric engine for Moyal-Weyl star products on the plane in
//! complex coordinates `(z, zbar)`.
//!
//! The crate works on a star-closed family of functions (finite sums of
//! `c * z^m * zbar^n * exp(i*(alpha*z + beta*zbar))`) and provides:
//!
//! - [`term`]: canonical forms, pointwise algebra, Wirtinger calculus
//! - [`star`]: exact and `hbar`-truncated star products, Poisson brackets
//! - [`beltrami`]: Beltrami coefficients, quasiconformality certification,
//!   conformal-invariance checks
//! - [`conformal`]: the fixed catalog of conformal test maps
//! - [`cauchy`]: contour reproduction of the star product as a function of
//!   the Beltrami coefficients, plus Cauchy-Riemann residuals
//! - [`parser`]: the expression mini-language and its canonical serializer
//! - [`numeric`]: quadrature summation and finite-difference helpers

pub mod beltrami;
pub mod cauchy;
pub mod conformal;
pub mod numeric;
pub mod parser;
pub mod star;
pub mod term;

pub use num_complex::Complex64;

pub use beltrami::{
    conformal_pullback_check, mu_exact, mu_grid, qc_certify, transform_mu, BeltramiError,
    BeltramiValue, FamilyMember, GridDomain, MuField, QCReport, QCWitness, WitnessKind,
};
pub use cauchy::{
    analytic_derivative, cauchy_derivative, cauchy_reproduce, cr_residual, cr_residual_second,
    mu_function_eval, CauchyError, ContourSpec, MuFunction,
};
pub use conformal::{ConformalMap, ConformalMapError};
pub use parser::{parse, serialize, ParseError};
pub use star::{
    hbar_coefficient, poisson_bracket, star, star_n, star_truncated, StarConfig, StarError,
};
pub use term::{CanonError, EvalError, StarExpr, Term};
