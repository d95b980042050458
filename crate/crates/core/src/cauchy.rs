//! Contour reproduction of the star product as a function of the Beltrami
//! coefficients.
//!
//! An n-fold star product of exponentials `exp(i alpha_j z) exp(i beta_j zbar)`
//! evaluated at a fixed point is, with `beta_j = mu_j alpha_j`, an entire
//! function `F(mu_1, ..., mu_n)`. This module reproduces values and partial
//! derivatives of `F` through iterated Cauchy integrals over circles and
//! checks the Cauchy-Riemann conditions in each `mu_j` numerically.
//!
//! Circles centered at the origin with radius `2 max(1, |mu_j|)` are the
//! default contours: `F` is entire in every `mu_j`, so any enclosing circle
//! is valid, and the periodic trapezoid rule converges spectrally there.
//! The iterated integral is evaluated as nested one-dimensional quadratures
//! (cost `nodes^n`), with the arity capped at three.

use num_complex::Complex64;
use thiserror::Error;

use crate::numeric::{pairwise_sum, wirtinger_fd};
use crate::star::{star_n, StarConfig, StarError};
use crate::term::{EvalError, StarExpr, I, ONE};

/// Largest supported number of star factors for the iterated integrals.
pub const MAX_ARITY: usize = 3;

/// Default node count per contour.
pub const DEFAULT_NODES: usize = 128;

#[derive(Debug, Error, PartialEq)]
pub enum CauchyError {
    #[error("invalid contour: {0}")]
    InvalidContour(&'static str),
    #[error("invalid mu-function: {0}")]
    InvalidFunction(&'static str),
    #[error("expected {expected} values, got {got}")]
    ArityMismatch { expected: usize, got: usize },
    #[error("target mu[{index}] does not lie strictly inside its contour")]
    TargetNotEnclosed { index: usize },
    #[error("finite-difference step must be positive and finite, got {0}")]
    InvalidStep(f64),
    #[error(transparent)]
    Star(#[from] StarError),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// A circular integration path with a fixed node count.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContourSpec {
    pub center: Complex64,
    pub radius: f64,
    pub nodes: usize,
}

impl ContourSpec {
    pub fn new(center: Complex64, radius: f64, nodes: usize) -> Result<Self, CauchyError> {
        if !center.is_finite() {
            return Err(CauchyError::InvalidContour("center must be finite"));
        }
        if !(radius.is_finite() && radius > 0.0) {
            return Err(CauchyError::InvalidContour("radius must be positive"));
        }
        if nodes < 16 {
            return Err(CauchyError::InvalidContour("need at least 16 nodes"));
        }
        Ok(ContourSpec {
            center,
            radius,
            nodes,
        })
    }

    /// Default contour for a target: origin-centered circle of radius
    /// `2 max(1, |mu|)` with [`DEFAULT_NODES`] nodes.
    pub fn enclosing(mu: Complex64) -> Self {
        ContourSpec {
            center: Complex64::new(0.0, 0.0),
            radius: 2.0 * 1f64.max(mu.norm()),
            nodes: DEFAULT_NODES,
        }
    }

    pub fn encloses(&self, target: Complex64) -> bool {
        (target - self.center).norm() < self.radius
    }
}

/// The star product of `n` exponentials at a fixed evaluation point, seen
/// as a function of the Beltrami coefficients `mu_j` through
/// `beta_j = mu_j alpha_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct MuFunction {
    alphas: Vec<Complex64>,
    z0: Complex64,
    hbar: f64,
}

impl MuFunction {
    pub fn new(alphas: Vec<Complex64>, z0: Complex64, hbar: f64) -> Result<Self, CauchyError> {
        if alphas.is_empty() || alphas.len() > MAX_ARITY {
            return Err(CauchyError::InvalidFunction(
                "between one and three frequencies are supported",
            ));
        }
        if alphas.iter().any(|a| !a.is_finite() || a.norm() == 0.0) {
            return Err(CauchyError::InvalidFunction(
                "all frequencies must be finite and nonzero",
            ));
        }
        if !z0.is_finite() || !hbar.is_finite() {
            return Err(CauchyError::InvalidFunction(
                "evaluation point and hbar must be finite",
            ));
        }
        Ok(MuFunction { alphas, z0, hbar })
    }

    pub fn arity(&self) -> usize {
        self.alphas.len()
    }

    pub fn alphas(&self) -> &[Complex64] {
        &self.alphas
    }

    pub fn z0(&self) -> Complex64 {
        self.z0
    }

    pub fn hbar(&self) -> f64 {
        self.hbar
    }

    /// Coefficient of `mu_j` in the exponent of the normal-ordered form:
    /// `g_j = i (alpha_j zbar0 + hbar (sum_{k>j} alpha_j alpha_k - sum_{k<j} alpha_k alpha_j))`,
    /// so that `d F / d mu_j = g_j F`.
    fn exponent_factor(&self, j: usize) -> Complex64 {
        let zbar0 = self.z0.conj();
        let mut signed = Complex64::new(0.0, 0.0);
        for (k, &alpha_k) in self.alphas.iter().enumerate() {
            use std::cmp::Ordering::*;
            match k.cmp(&j) {
                Greater => signed += self.alphas[j] * alpha_k,
                Less => signed -= alpha_k * self.alphas[j],
                Equal => {}
            }
        }
        I * (self.alphas[j] * zbar0 + self.hbar * signed)
    }

    fn check_arity(&self, got: usize) -> Result<(), CauchyError> {
        if got != self.arity() {
            return Err(CauchyError::ArityMismatch {
                expected: self.arity(),
                got,
            });
        }
        Ok(())
    }
}

/// Direct evaluation of `F(mu_1, ..., mu_n)` through the star engine.
pub fn mu_function_eval(mf: &MuFunction, mus: &[Complex64]) -> Result<Complex64, CauchyError> {
    mf.check_arity(mus.len())?;
    if mus.iter().any(|m| !m.is_finite()) {
        return Err(CauchyError::InvalidFunction("mu values must be finite"));
    }
    let factors: Vec<StarExpr> = mf
        .alphas
        .iter()
        .zip(mus)
        .map(|(&alpha, &mu)| StarExpr::exponential(ONE, alpha, mu * alpha))
        .collect();
    let product = star_n(&factors, &StarConfig::exact(mf.hbar))?;
    Ok(product.eval(mf.z0)?)
}

fn validate_contours(
    mf: &MuFunction,
    mus: &[Complex64],
    contours: &[ContourSpec],
) -> Result<(), CauchyError> {
    mf.check_arity(mus.len())?;
    mf.check_arity(contours.len())?;
    for (index, (&mu, spec)) in mus.iter().zip(contours).enumerate() {
        if !spec.encloses(mu) {
            return Err(CauchyError::TargetNotEnclosed { index });
        }
    }
    Ok(())
}

/// One level of the nested trapezoid quadrature over circle `level`.
fn quadrature_level(
    mf: &MuFunction,
    mus: &[Complex64],
    orders: &[u32],
    contours: &[ContourSpec],
    level: usize,
    zetas: &mut Vec<Complex64>,
) -> Result<Complex64, CauchyError> {
    if level == mf.arity() {
        return mu_function_eval(mf, zetas);
    }
    let spec = &contours[level];
    let mut samples = Vec::with_capacity(spec.nodes);
    for k in 0..spec.nodes {
        let theta = 2.0 * std::f64::consts::PI * k as f64 / spec.nodes as f64;
        let direction = Complex64::from_polar(1.0, theta);
        let zeta = spec.center + spec.radius * direction;
        zetas.push(zeta);
        let inner = quadrature_level(mf, mus, orders, contours, level + 1, zetas)?;
        zetas.pop();
        let pole = (zeta - mus[level]).powu(orders[level] + 1);
        samples.push(spec.radius * direction * inner / pole);
    }
    Ok(pairwise_sum(&samples) / spec.nodes as f64)
}

/// Reproduce `F(mu)` from its values on the contours via the iterated
/// Cauchy integral; to be compared with [`mu_function_eval`].
pub fn cauchy_reproduce(
    mf: &MuFunction,
    mus: &[Complex64],
    contours: &[ContourSpec],
) -> Result<Complex64, CauchyError> {
    validate_contours(mf, mus, contours)?;
    let orders = vec![0u32; mf.arity()];
    quadrature_level(mf, mus, &orders, contours, 0, &mut Vec::new())
}

/// Mixed partial derivative of `F` of the given orders via the iterated
/// Cauchy derivative formula (`m_j! / (zeta_j - mu_j)^{m_j + 1}` kernels).
pub fn cauchy_derivative(
    mf: &MuFunction,
    mus: &[Complex64],
    orders: &[u32],
    contours: &[ContourSpec],
) -> Result<Complex64, CauchyError> {
    mf.check_arity(orders.len())?;
    validate_contours(mf, mus, contours)?;
    let value = quadrature_level(mf, mus, orders, contours, 0, &mut Vec::new())?;
    let mut factorials = 1.0f64;
    for &m in orders {
        for j in 1..=m {
            factorials *= f64::from(j);
        }
    }
    Ok(value * factorials)
}

/// Analytic mixed partial derivative from the normal-ordered factorization
/// `F = C prod_j exp(g_j mu_j)`: each derivative in `mu_j` multiplies by
/// `g_j`. Serves as the closed-form counterpart of [`cauchy_derivative`].
pub fn analytic_derivative(
    mf: &MuFunction,
    mus: &[Complex64],
    orders: &[u32],
) -> Result<Complex64, CauchyError> {
    mf.check_arity(orders.len())?;
    let mut factor = ONE;
    for (j, &m) in orders.iter().enumerate() {
        factor *= mf.exponent_factor(j).powu(m);
    }
    Ok(factor * mu_function_eval(mf, mus)?)
}

/// Magnitude of the numerical Wirtinger derivative of `F` with respect to
/// `conj(mu_j)` (4-point central stencil with the given step). Vanishes up
/// to discretization error because `F` is entire in each `mu_j`.
pub fn cr_residual(
    mf: &MuFunction,
    mus: &[Complex64],
    j: usize,
    step: f64,
) -> Result<f64, CauchyError> {
    mf.check_arity(mus.len())?;
    if j >= mf.arity() {
        return Err(CauchyError::ArityMismatch {
            expected: mf.arity(),
            got: j + 1,
        });
    }
    if !(step > 0.0 && step.is_finite()) {
        return Err(CauchyError::InvalidStep(step));
    }
    let f = |w: Complex64| {
        let mut shifted = mus.to_vec();
        shifted[j] = w;
        mu_function_eval(mf, &shifted)
    };
    let (_, dzbar) = wirtinger_fd(f, mus[j], step)?;
    Ok(dzbar.norm())
}

/// Magnitude of the numerical second mixed derivative
/// `d/d mu_j (d F / d conj(mu_k))`, nested 4-point stencils.
pub fn cr_residual_second(
    mf: &MuFunction,
    mus: &[Complex64],
    j: usize,
    k: usize,
    step: f64,
) -> Result<f64, CauchyError> {
    mf.check_arity(mus.len())?;
    if j >= mf.arity() || k >= mf.arity() {
        return Err(CauchyError::ArityMismatch {
            expected: mf.arity(),
            got: j.max(k) + 1,
        });
    }
    if !(step > 0.0 && step.is_finite()) {
        return Err(CauchyError::InvalidStep(step));
    }
    let inner = |w_j: Complex64| -> Result<Complex64, CauchyError> {
        let mut outer = mus.to_vec();
        outer[j] = w_j;
        let base_k = outer[k];
        let g = |w_k: Complex64| {
            let mut shifted = outer.clone();
            shifted[k] = w_k;
            mu_function_eval(mf, &shifted)
        };
        let (_, dzbar) = wirtinger_fd(g, base_k, step)?;
        Ok(dzbar)
    };
    let (dmu, _) = wirtinger_fd(inner, mus[j], step)?;
    Ok(dmu.norm())
}
