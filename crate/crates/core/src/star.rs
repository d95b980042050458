//! Exact and truncated Moyal-Weyl star products.
//!
//! The product is `f (star) g = f exp[i*hbar*(<d_z d_zbar> - <d_zbar d_z>)] g`
//! with the left arrows acting on `f` and the right arrows on `g`. On the
//! closed term family the exponential series resums in closed form: each
//! Wirtinger derivative splits into multiplication by `i*alpha` / `i*beta`
//! plus a derivation that only touches the polynomial factor, so the
//! bidifferential exponential factors into the scalar phase
//! `exp(-i*hbar*(alpha1*beta2 - beta1*alpha2))` times a terminating series
//! of commuting derivations (nilpotent beyond the combined polynomial
//! degree). Every identity downstream is therefore a strict equality check.

use std::collections::BTreeMap;

use num_complex::Complex64;
use thiserror::Error;

use crate::term::{StarExpr, Term, I, MAX_POW_SUM, ONE};

/// Parameters of the star product.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StarConfig {
    /// Deformation parameter; real, matching conjugation compatibility.
    pub hbar: f64,
    /// When present, compute the partial sum up to this order in `hbar`
    /// instead of the exact resummed product.
    pub truncation_order: Option<usize>,
}

impl StarConfig {
    pub fn exact(hbar: f64) -> Self {
        StarConfig {
            hbar,
            truncation_order: None,
        }
    }

    pub fn truncated(hbar: f64, order: usize) -> Self {
        StarConfig {
            hbar,
            truncation_order: Some(order),
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum StarError {
    #[error("combined polynomial degree {pow_sum} exceeds the bound {limit}")]
    DegreeBound { pow_sum: u32, limit: u32 },
    #[error("hbar must be finite")]
    NonFiniteHbar,
    #[error("star product of an empty factor list")]
    EmptyProduct,
}

/// Star product of two expressions.
///
/// With `truncation_order` set this delegates to [`star_truncated`];
/// otherwise the product is exact. Term pairs whose combined polynomial
/// degree exceeds [`MAX_POW_SUM`] are rejected.
pub fn star(f: &StarExpr, g: &StarExpr, cfg: &StarConfig) -> Result<StarExpr, StarError> {
    if !cfg.hbar.is_finite() {
        return Err(StarError::NonFiniteHbar);
    }
    if let Some(order) = cfg.truncation_order {
        return Ok(star_truncated(f, g, cfg.hbar, order));
    }
    let mut raw = Vec::new();
    for s in f.terms() {
        for t in g.terms() {
            let pow_sum = s.pow_sum() + t.pow_sum();
            if pow_sum > MAX_POW_SUM {
                return Err(StarError::DegreeBound {
                    pow_sum,
                    limit: MAX_POW_SUM,
                });
            }
            star_term_pair(s, t, cfg.hbar, &mut raw);
        }
    }
    Ok(StarExpr::merged(raw))
}

/// Exact star product of a single term pair, appended to `out`.
///
/// The scalar phase carries the frequency part; the derivation series acts
/// on the pair of polynomial factors, tracked as tensor monomials
/// `z^a zbar^b (x) z^c zbar^d`.
fn star_term_pair(s: &Term, t: &Term, hbar: f64, out: &mut Vec<Term>) {
    let kappa = s.freq_z * t.freq_zbar - s.freq_zbar * t.freq_z;
    let base = s.coeff * t.coeff * (-I * hbar * kappa).exp();
    let alpha = s.freq_z + t.freq_z;
    let beta = s.freq_zbar + t.freq_zbar;

    let mut layer: BTreeMap<(u32, u32, u32, u32), Complex64> = BTreeMap::new();
    layer.insert((s.pow_z, s.pow_zbar, t.pow_z, t.pow_zbar), ONE);
    let mut series_coeff = ONE; // (i*hbar)^k / k!
    let mut order = 0u32;

    while !layer.is_empty() {
        for (&(a, b, c, d), &w) in &layer {
            out.push(Term::new(base * series_coeff * w, a + c, b + d, alpha, beta));
        }
        order += 1;
        series_coeff *= I * hbar / f64::from(order);

        let mut next: BTreeMap<(u32, u32, u32, u32), Complex64> = BTreeMap::new();
        let mut bump = |key: (u32, u32, u32, u32), v: Complex64| {
            *next.entry(key).or_insert(Complex64::new(0.0, 0.0)) += v;
        };
        for (&(a, b, c, d), &w) in &layer {
            if a > 0 && d > 0 {
                bump((a - 1, b, c, d - 1), w * f64::from(a) * f64::from(d));
            }
            if b > 0 && c > 0 {
                bump((a, b - 1, c - 1, d), -w * f64::from(b) * f64::from(c));
            }
            if a > 0 {
                bump((a - 1, b, c, d), w * f64::from(a) * I * t.freq_zbar);
            }
            if b > 0 {
                bump((a, b - 1, c, d), -w * f64::from(b) * I * t.freq_z);
            }
            if d > 0 {
                bump((a, b, c, d - 1), w * f64::from(d) * I * s.freq_z);
            }
            if c > 0 {
                bump((a, b, c - 1, d), -w * f64::from(c) * I * s.freq_zbar);
            }
        }
        layer = next;
    }
}

/// Partial sum of the `hbar` power series up to `order`.
pub fn star_truncated(f: &StarExpr, g: &StarExpr, hbar: f64, order: usize) -> StarExpr {
    let mut acc = StarExpr::zero();
    let mut hbar_pow = 1.0;
    for k in 0..=order {
        acc = acc.add(&hbar_coefficient(f, g, k).scale(Complex64::new(hbar_pow, 0.0)));
        hbar_pow *= hbar;
    }
    acc
}

/// The exact coefficient of `hbar^k` in the star-product series:
/// `(i^k / k!) * sum_j C(k,j) (-1)^j (d_z^{k-j} d_zbar^j f)(d_zbar^{k-j} d_z^j g)`.
pub fn hbar_coefficient(f: &StarExpr, g: &StarExpr, k: usize) -> StarExpr {
    let mut factorial = 1.0f64;
    for j in 1..=k {
        factorial *= j as f64;
    }
    let scale = I.powu(k as u32) / factorial;
    let mut acc = StarExpr::zero();
    for j in 0..=k {
        let df = derive(f, k - j, j);
        let dg = derive(g, j, k - j);
        let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
        let weight = sign * binomial(k, j);
        acc = acc.add(&df.mul(&dg).scale(Complex64::new(weight, 0.0)));
    }
    acc.scale(scale)
}

fn derive(f: &StarExpr, z_order: usize, zbar_order: usize) -> StarExpr {
    let mut out = f.clone();
    for _ in 0..z_order {
        out = out.d_z();
    }
    for _ in 0..zbar_order {
        out = out.d_zbar();
    }
    out
}

fn binomial(n: usize, k: usize) -> f64 {
    let mut acc = 1.0f64;
    for j in 0..k {
        acc = acc * (n - j) as f64 / (j + 1) as f64;
    }
    acc
}

/// Canonical Poisson bracket `{f, g} = d_z f d_zbar g - d_zbar f d_z g`,
/// always computed from the derivatives.
pub fn poisson_bracket(f: &StarExpr, g: &StarExpr) -> StarExpr {
    f.d_z().mul(&g.d_zbar()).sub(&f.d_zbar().mul(&g.d_z()))
}

/// Left fold `f1 (star) f2 (star) ... (star) fn`; associativity makes the
/// fold order immaterial.
pub fn star_n(factors: &[StarExpr], cfg: &StarConfig) -> Result<StarExpr, StarError> {
    let (first, rest) = factors.split_first().ok_or(StarError::EmptyProduct)?;
    let mut acc = first.clone();
    for f in rest {
        acc = star(&acc, f, cfg)?;
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::term::ZERO;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn affine_pair_closed_form() {
        // (2z + zbar) (star) (3z - zbar) at hbar = 1:
        // pointwise product + i*(a1*b2 - b1*a2) = 6z^2 + z*zbar - zbar^2 - 5i
        let f = StarExpr::affine(c(2.0, 0.0), ONE, ZERO);
        let g = StarExpr::affine(c(3.0, 0.0), -ONE, ZERO);
        let got = star(&f, &g, &StarConfig::exact(1.0)).unwrap();
        let expected = StarExpr::canonicalize(vec![
            Term::monomial(c(6.0, 0.0), 2, 0),
            Term::monomial(ONE, 1, 1),
            Term::monomial(-ONE, 0, 2),
            Term::constant(c(0.0, -5.0)),
        ])
        .unwrap();
        assert!(got.approx_eq(&expected, 1e-14));
    }

    #[test]
    fn exponential_pair_is_phase_times_product() {
        let (a1, b1) = (c(1.0, 0.0), c(0.3, 0.0));
        let (a2, b2) = (c(2.0, 0.0), c(-0.5, 0.0));
        let hbar = 0.7;
        let f = StarExpr::exponential(ONE, a1, b1);
        let g = StarExpr::exponential(ONE, a2, b2);
        let got = star(&f, &g, &StarConfig::exact(hbar)).unwrap();
        let kappa = a1 * b2 - b1 * a2;
        let expected = f.mul(&g).scale((-I * hbar * kappa).exp());
        assert!(got.approx_eq(&expected, 1e-14));
    }

    #[test]
    fn one_is_the_star_unit() {
        let f = StarExpr::canonicalize(vec![
            Term::new(c(0.4, -1.0), 2, 1, c(0.5, 0.0), c(-0.2, 0.1)),
            Term::monomial(c(1.5, 2.0), 0, 1),
        ])
        .unwrap();
        let cfg = StarConfig::exact(0.9);
        assert!(star(&f, &StarExpr::one(), &cfg).unwrap().approx_eq(&f, 1e-14));
        assert!(star(&StarExpr::one(), &f, &cfg).unwrap().approx_eq(&f, 1e-14));
    }

    #[test]
    fn hbar_zero_reduces_to_pointwise_product() {
        let f = StarExpr::affine(c(1.0, 2.0), c(0.3, 0.0), ONE);
        let g = StarExpr::exponential(c(0.5, 0.5), ONE, c(0.25, 0.0));
        let got = star(&f, &g, &StarConfig::exact(0.0)).unwrap();
        assert!(got.approx_eq(&f.mul(&g), 1e-15));
    }

    #[test]
    fn canonical_pair_bracket() {
        let got = poisson_bracket(&StarExpr::z(), &StarExpr::zbar());
        assert!(got.approx_eq(&StarExpr::one(), 1e-15));
    }

    #[test]
    fn bracket_is_antisymmetric_on_the_diagonal() {
        let f = StarExpr::canonicalize(vec![
            Term::new(c(0.7, -0.1), 1, 1, c(0.2, 0.0), c(0.4, -0.3)),
            Term::monomial(c(2.0, 1.0), 2, 0),
        ])
        .unwrap();
        assert!(poisson_bracket(&f, &f).is_zero());
    }

    #[test]
    fn hbar_coefficients_match_product_and_bracket() {
        let f = StarExpr::affine(c(1.0, 0.5), c(0.4, 0.0), ZERO);
        let g = StarExpr::exponential(ONE, c(0.8, 0.0), c(0.2, 0.0));
        assert!(hbar_coefficient(&f, &g, 0).approx_eq(&f.mul(&g), 1e-15));
        let first = hbar_coefficient(&f, &g, 1);
        let bracket = poisson_bracket(&f, &g).scale(I);
        assert!(first.approx_eq(&bracket, 1e-14));
    }

    #[test]
    fn exponential_hbar_coefficients_follow_the_phase_taylor_series() {
        let (a1, b1) = (c(1.0, 0.2), c(0.3, -0.1));
        let (a2, b2) = (c(-0.7, 0.0), c(0.5, 0.4));
        let f = StarExpr::exponential(ONE, a1, b1);
        let g = StarExpr::exponential(ONE, a2, b2);
        let kappa = a1 * b2 - b1 * a2;
        let mut factor = ONE;
        for k in 0..6 {
            if k > 0 {
                factor *= -I * kappa / k as f64;
            }
            let got = hbar_coefficient(&f, &g, k as usize);
            let expected = f.mul(&g).scale(factor);
            assert!(got.approx_eq(&expected, 1e-12), "order {k}");
        }
    }

    #[test]
    fn truncated_series_converges_to_the_exact_phase() {
        let (a1, b1) = (c(1.2, 0.0), c(0.4, 0.0));
        let (a2, b2) = (c(0.9, 0.0), c(-0.6, 0.0));
        let hbar = 0.8;
        let f = StarExpr::exponential(ONE, a1, b1);
        let g = StarExpr::exponential(ONE, a2, b2);
        let exact = star(&f, &g, &StarConfig::exact(hbar)).unwrap();
        assert!(star_truncated(&f, &g, hbar, 0).approx_eq(&f.mul(&g), 1e-15));
        let kappa = (a1 * b2 - b1 * a2).re * hbar;
        let mut bound = 1.0;
        for order in 0..12usize {
            let trunc = star_truncated(&f, &g, hbar, order);
            let diff = trunc.sub(&exact);
            let residual: f64 = diff.terms().iter().map(|t| t.coeff.norm()).sum();
            bound *= kappa.abs() / (order + 1) as f64;
            assert!(
                residual <= bound + 1e-12,
                "order {order}: residual {residual} above remainder bound {bound}"
            );
        }
    }

    #[test]
    fn triple_exponential_phase_matches_the_pairwise_sum() {
        let alphas = [c(1.0, 0.0), c(0.5, 0.2), c(-0.8, 0.1)];
        let betas = [c(0.2, 0.0), c(-0.4, 0.1), c(0.3, 0.0)];
        let hbar = 0.6;
        let fs: Vec<StarExpr> = alphas
            .iter()
            .zip(&betas)
            .map(|(&a, &b)| StarExpr::exponential(ONE, a, b))
            .collect();
        let got = star_n(&fs, &StarConfig::exact(hbar)).unwrap();
        let mut kappa = Complex64::new(0.0, 0.0);
        for j in 0..3 {
            for k in (j + 1)..3 {
                kappa += alphas[j] * betas[k] - betas[j] * alphas[k];
            }
        }
        let expected = fs[0].mul(&fs[1]).mul(&fs[2]).scale((-I * hbar * kappa).exp());
        assert!(got.approx_eq(&expected, 1e-13));
    }

    #[test]
    fn cyclic_reordering_changes_the_phase() {
        let f1 = StarExpr::exponential(ONE, c(1.0, 0.0), c(0.3, 0.0));
        let f2 = StarExpr::exponential(ONE, c(2.0, 0.0), c(-0.1, 0.0));
        let f3 = StarExpr::exponential(ONE, c(-0.5, 0.0), c(0.7, 0.0));
        let cfg = StarConfig::exact(1.0);
        let a = star_n(&[f1.clone(), f2.clone(), f3.clone()], &cfg).unwrap();
        let b = star_n(&[f2, f3, f1], &cfg).unwrap();
        assert!(!a.approx_eq(&b, 1e-6));
    }

    #[test]
    fn single_factor_list_is_returned_unchanged() {
        let f = StarExpr::affine(ONE, c(0.5, 0.0), ZERO);
        let got = star_n(std::slice::from_ref(&f), &StarConfig::exact(1.3)).unwrap();
        assert_eq!(got, f);
    }

    #[test]
    fn empty_factor_list_is_an_error() {
        assert_eq!(
            star_n(&[], &StarConfig::exact(1.0)).unwrap_err(),
            StarError::EmptyProduct
        );
    }

    #[test]
    fn moyal_commutator_of_exponentials() {
        // f (star) g - g (star) f = -2i sin(hbar*kappa) f g for real kappa
        let f = StarExpr::exponential(ONE, c(1.1, 0.0), c(0.4, 0.0));
        let g = StarExpr::exponential(ONE, c(-0.6, 0.0), c(0.9, 0.0));
        let hbar = 1.7;
        let cfg = StarConfig::exact(hbar);
        let comm = star(&f, &g, &cfg).unwrap().sub(&star(&g, &f, &cfg).unwrap());
        let kappa = 1.1 * 0.9 - 0.4 * (-0.6);
        let expected = f.mul(&g).scale(c(0.0, -2.0) * (hbar * kappa).sin());
        assert!(comm.approx_eq(&expected, 1e-13));
    }

    #[test]
    fn factors_commute_exactly_when_kappa_vanishes() {
        // beta_j = mu alpha_j with a shared mu: kappa = alpha1*beta2 - beta1*alpha2 = 0
        let mu = c(0.4, -0.2);
        let (a1, a2) = (c(1.3, 0.1), c(-0.8, 0.5));
        let f = StarExpr::exponential(ONE, a1, mu * a1);
        let g = StarExpr::exponential(ONE, a2, mu * a2);
        let cfg = StarConfig::exact(1.1);
        let fg = star(&f, &g, &cfg).unwrap();
        let gf = star(&g, &f, &cfg).unwrap();
        assert!(fg.approx_eq(&gf, 1e-14));
        assert!(fg.approx_eq(&f.mul(&g), 1e-14));
    }

    #[test]
    fn degree_bound_is_enforced() {
        let f: StarExpr = Term::monomial(ONE, 40, 0).into();
        let g: StarExpr = Term::monomial(ONE, 0, 40).into();
        let err = star(&f, &g, &StarConfig::exact(1.0)).unwrap_err();
        assert_eq!(
            err,
            StarError::DegreeBound {
                pow_sum: 80,
                limit: MAX_POW_SUM
            }
        );
    }

    #[test]
    fn truncation_order_in_config_delegates() {
        let f = StarExpr::exponential(ONE, ONE, c(0.3, 0.0));
        let g = StarExpr::exponential(ONE, c(2.0, 0.0), c(0.1, 0.0));
        let via_cfg = star(&f, &g, &StarConfig::truncated(0.5, 3)).unwrap();
        let direct = star_truncated(&f, &g, 0.5, 3);
        assert_eq!(via_cfg, direct);
    }

    #[test]
    fn conjugation_compatibility_at_real_hbar() {
        let f = StarExpr::canonicalize(vec![
            Term::new(c(0.3, 0.8), 1, 0, c(0.5, 0.1), c(-0.2, 0.0)),
            Term::constant(c(1.0, -0.5)),
        ])
        .unwrap();
        let g = StarExpr::canonicalize(vec![Term::new(c(-1.0, 0.4), 0, 1, ZERO, c(0.7, -0.3))])
            .unwrap();
        let cfg = StarConfig::exact(1.4);
        let lhs = star(&f, &g, &cfg).unwrap().conj();
        let rhs = star(&f.conj(), &g.conj(), &cfg).unwrap();
        assert!(lhs.approx_eq(&rhs, 1e-13));
    }
}
