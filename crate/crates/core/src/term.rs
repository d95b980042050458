//! Canonical term algebra for the star-closed function family.
//!
//! Every function handled exactly by this crate is a finite sum of
//! generators `c * z^m * zbar^n * exp(i*(alpha*z + beta*zbar))` with complex
//! coefficient `c` and complex frequencies `alpha`, `beta`. The family is
//! closed under addition, pointwise multiplication, complex conjugation,
//! the Wirtinger derivatives and (see [`crate::star`]) the star product,
//! so every identity we certify can be checked as an equality of canonical
//! forms instead of a truncation estimate.

use std::fmt;

use num_complex::Complex64;
use thiserror::Error;

/// Relative tolerance for treating two frequencies as the same merge key.
pub const FREQ_MERGE_TOL: f64 = 1e-12;

/// Relative tolerance for pruning coefficients after a merge; measured
/// against the largest coefficient magnitude of the raw (pre-merge) term
/// list so that roundoff left over from cancellations is dropped.
pub const COEFF_PRUNE_TOL: f64 = 1e-14;

/// Combined polynomial degree bound `m + n` enforced at the construction
/// gates (parser input and star-product expansion).
pub const MAX_POW_SUM: u32 = 64;

pub(crate) const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub(crate) const ONE: Complex64 = Complex64::new(1.0, 0.0);
pub(crate) const I: Complex64 = Complex64::new(0.0, 1.0);

/// One generator `coeff * z^pow_z * zbar^pow_zbar * exp(i*(freq_z*z + freq_zbar*zbar))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Term {
    pub coeff: Complex64,
    pub pow_z: u32,
    pub pow_zbar: u32,
    pub freq_z: Complex64,
    pub freq_zbar: Complex64,
}

impl Term {
    pub fn new(
        coeff: Complex64,
        pow_z: u32,
        pow_zbar: u32,
        freq_z: Complex64,
        freq_zbar: Complex64,
    ) -> Self {
        Term {
            coeff,
            pow_z,
            pow_zbar,
            freq_z,
            freq_zbar,
        }
    }

    /// Pure monomial `coeff * z^m * zbar^n`.
    pub fn monomial(coeff: Complex64, pow_z: u32, pow_zbar: u32) -> Self {
        Term::new(coeff, pow_z, pow_zbar, ZERO, ZERO)
    }

    /// Pure exponential `coeff * exp(i*(alpha*z + beta*zbar))`.
    pub fn exponential(coeff: Complex64, alpha: Complex64, beta: Complex64) -> Self {
        Term::new(coeff, 0, 0, alpha, beta)
    }

    pub fn constant(coeff: Complex64) -> Self {
        Term::monomial(coeff, 0, 0)
    }

    fn is_finite(&self) -> bool {
        self.coeff.is_finite() && self.freq_z.is_finite() && self.freq_zbar.is_finite()
    }

    pub fn pow_sum(&self) -> u32 {
        self.pow_z + self.pow_zbar
    }

    fn eval(&self, z: Complex64) -> Complex64 {
        let zb = z.conj();
        self.coeff
            * z.powu(self.pow_z)
            * zb.powu(self.pow_zbar)
            * (I * (self.freq_z * z + self.freq_zbar * zb)).exp()
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}+{}i)", self.coeff.re, self.coeff.im)?;
        if self.pow_z > 0 {
            write!(f, "*z^{}", self.pow_z)?;
        }
        if self.pow_zbar > 0 {
            write!(f, "*zbar^{}", self.pow_zbar)?;
        }
        if self.freq_z != ZERO || self.freq_zbar != ZERO {
            write!(
                f,
                "*exp(i*(({}+{}i)*z+({}+{}i)*zbar))",
                self.freq_z.re, self.freq_z.im, self.freq_zbar.re, self.freq_zbar.im
            )?;
        }
        Ok(())
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum CanonError {
    #[error("term {index} has a non-finite coefficient or frequency")]
    NonFinite { index: usize },
}

#[derive(Debug, Error, PartialEq)]
pub enum EvalError {
    #[error("evaluation produced a non-finite value; dominating term {term}")]
    Overflow { term: Term },
}

fn cmp_c(a: Complex64, b: Complex64) -> std::cmp::Ordering {
    a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im))
}

/// Fixed total order on term keys: lexicographic on `(m, n, alpha, beta)`
/// with complex values ordered by `(re, im)`.
fn cmp_key(a: &Term, b: &Term) -> std::cmp::Ordering {
    a.pow_z
        .cmp(&b.pow_z)
        .then(a.pow_zbar.cmp(&b.pow_zbar))
        .then(cmp_c(a.freq_z, b.freq_z))
        .then(cmp_c(a.freq_zbar, b.freq_zbar))
}

fn freq_close(a: Complex64, b: Complex64) -> bool {
    (a - b).norm() <= FREQ_MERGE_TOL * 1f64.max(a.norm()).max(b.norm())
}

/// Whether two terms share a merge key (equal powers, frequencies within
/// the merge tolerance).
pub(crate) fn keys_match(a: &Term, b: &Term) -> bool {
    a.pow_z == b.pow_z
        && a.pow_zbar == b.pow_zbar
        && freq_close(a.freq_z, b.freq_z)
        && freq_close(a.freq_zbar, b.freq_zbar)
}

/// A finite sum of [`Term`]s in canonical form: deterministic order, no two
/// terms with the same key, no coefficients below the prune threshold.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct StarExpr {
    terms: Vec<Term>,
}

impl StarExpr {
    /// Canonicalize a raw term list: reject non-finite fields, merge equal
    /// keys, prune negligible coefficients, sort.
    pub fn canonicalize(raw: Vec<Term>) -> Result<StarExpr, CanonError> {
        for (index, t) in raw.iter().enumerate() {
            if !t.is_finite() {
                return Err(CanonError::NonFinite { index });
            }
        }
        Ok(Self::merged(raw))
    }

    /// Internal merge for terms produced by closed operations on already
    /// canonical inputs (finiteness is the caller's invariant).
    pub(crate) fn merged(mut raw: Vec<Term>) -> StarExpr {
        let scale = raw.iter().map(|t| t.coeff.norm()).fold(0.0, f64::max);
        raw.sort_by(cmp_key);
        let mut terms: Vec<Term> = Vec::with_capacity(raw.len());
        for t in raw {
            match terms.last_mut() {
                Some(last) if keys_match(last, &t) => last.coeff += t.coeff,
                _ => terms.push(t),
            }
        }
        terms.retain(|t| t.coeff.norm() > COEFF_PRUNE_TOL * scale);
        StarExpr { terms }
    }

    pub fn zero() -> StarExpr {
        StarExpr { terms: Vec::new() }
    }

    pub fn one() -> StarExpr {
        Self::constant(ONE)
    }

    pub fn constant(c: Complex64) -> StarExpr {
        Self::merged(vec![Term::constant(c)])
    }

    /// The coordinate function `z`.
    pub fn z() -> StarExpr {
        Self::merged(vec![Term::monomial(ONE, 1, 0)])
    }

    /// The coordinate function `zbar`.
    pub fn zbar() -> StarExpr {
        Self::merged(vec![Term::monomial(ONE, 0, 1)])
    }

    /// The affine map `a*z + b*zbar + c`.
    pub fn affine(a: Complex64, b: Complex64, c: Complex64) -> StarExpr {
        Self::merged(vec![
            Term::monomial(a, 1, 0),
            Term::monomial(b, 0, 1),
            Term::constant(c),
        ])
    }

    /// The exponential `coeff * exp(i*(alpha*z + beta*zbar))`.
    pub fn exponential(coeff: Complex64, alpha: Complex64, beta: Complex64) -> StarExpr {
        Self::merged(vec![Term::exponential(coeff, alpha, beta)])
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Largest `m + n` over the terms (0 for the zero expression).
    pub fn max_pow_sum(&self) -> u32 {
        self.terms.iter().map(Term::pow_sum).max().unwrap_or(0)
    }

    pub fn add(&self, other: &StarExpr) -> StarExpr {
        let mut raw = self.terms.clone();
        raw.extend_from_slice(&other.terms);
        Self::merged(raw)
    }

    pub fn sub(&self, other: &StarExpr) -> StarExpr {
        self.add(&other.scale(-ONE))
    }

    /// Exact pointwise product: coefficients multiply, powers and
    /// frequencies add.
    pub fn mul(&self, other: &StarExpr) -> StarExpr {
        let mut raw = Vec::with_capacity(self.terms.len() * other.terms.len());
        for a in &self.terms {
            for b in &other.terms {
                raw.push(Term::new(
                    a.coeff * b.coeff,
                    a.pow_z + b.pow_z,
                    a.pow_zbar + b.pow_zbar,
                    a.freq_z + b.freq_z,
                    a.freq_zbar + b.freq_zbar,
                ));
            }
        }
        Self::merged(raw)
    }

    pub fn scale(&self, c: Complex64) -> StarExpr {
        Self::merged(
            self.terms
                .iter()
                .map(|t| Term { coeff: t.coeff * c, ..*t })
                .collect(),
        )
    }

    /// Complex conjugate as a function:
    /// `(c, m, n, alpha, beta) -> (conj c, n, m, -conj beta, -conj alpha)`.
    pub fn conj(&self) -> StarExpr {
        Self::merged(
            self.terms
                .iter()
                .map(|t| {
                    Term::new(
                        t.coeff.conj(),
                        t.pow_zbar,
                        t.pow_z,
                        -t.freq_zbar.conj(),
                        -t.freq_z.conj(),
                    )
                })
                .collect(),
        )
    }

    /// Wirtinger derivative with respect to `z`.
    pub fn d_z(&self) -> StarExpr {
        let mut raw = Vec::with_capacity(2 * self.terms.len());
        for t in &self.terms {
            if t.pow_z > 0 {
                raw.push(Term {
                    coeff: t.coeff * t.pow_z as f64,
                    pow_z: t.pow_z - 1,
                    ..*t
                });
            }
            raw.push(Term {
                coeff: t.coeff * I * t.freq_z,
                ..*t
            });
        }
        Self::merged(raw)
    }

    /// Wirtinger derivative with respect to `zbar`.
    pub fn d_zbar(&self) -> StarExpr {
        let mut raw = Vec::with_capacity(2 * self.terms.len());
        for t in &self.terms {
            if t.pow_zbar > 0 {
                raw.push(Term {
                    coeff: t.coeff * t.pow_zbar as f64,
                    pow_zbar: t.pow_zbar - 1,
                    ..*t
                });
            }
            raw.push(Term {
                coeff: t.coeff * I * t.freq_zbar,
                ..*t
            });
        }
        Self::merged(raw)
    }

    /// Real-direction derivative, `d_x = d_z + d_zbar` for `z = x + iy`.
    pub fn d_x(&self) -> StarExpr {
        self.d_z().add(&self.d_zbar())
    }

    /// Imaginary-direction derivative, `d_y = i*(d_z - d_zbar)`.
    pub fn d_y(&self) -> StarExpr {
        self.d_z().sub(&self.d_zbar()).scale(I)
    }

    /// Evaluate at a point without the finiteness check; overflow shows up
    /// as infinities in the result. Used by grid reports whose verdicts
    /// must absorb overflow instead of aborting.
    pub(crate) fn eval_unchecked(&self, z: Complex64) -> Complex64 {
        self.terms.iter().map(|t| t.eval(z)).sum()
    }

    /// Evaluate at a point. Overflow (a non-finite partial result) is
    /// reported together with the term that produced it.
    pub fn eval(&self, z: Complex64) -> Result<Complex64, EvalError> {
        let mut acc = ZERO;
        for t in &self.terms {
            let v = t.eval(z);
            if !v.is_finite() {
                return Err(EvalError::Overflow { term: *t });
            }
            acc += v;
        }
        Ok(acc)
    }

    /// Largest coefficient difference between two canonical forms, matched
    /// key by key and measured relative to the largest coefficient
    /// magnitude. Zero for identical expressions; `approx_eq(_, tol)` holds
    /// exactly when this distance is at most `tol`.
    pub fn coeff_distance(&self, other: &StarExpr) -> f64 {
        let scale = self
            .terms
            .iter()
            .chain(other.terms.iter())
            .map(|t| t.coeff.norm())
            .fold(0.0, f64::max);
        if scale == 0.0 {
            return 0.0;
        }
        let mut worst = 0.0f64;
        let (mut i, mut j) = (0, 0);
        while i < self.terms.len() && j < other.terms.len() {
            let (a, b) = (&self.terms[i], &other.terms[j]);
            if keys_match(a, b) {
                worst = worst.max((a.coeff - b.coeff).norm());
                i += 1;
                j += 1;
            } else if cmp_key(a, b) == std::cmp::Ordering::Less {
                worst = worst.max(a.coeff.norm());
                i += 1;
            } else {
                worst = worst.max(b.coeff.norm());
                j += 1;
            }
        }
        for t in &self.terms[i..] {
            worst = worst.max(t.coeff.norm());
        }
        for t in &other.terms[j..] {
            worst = worst.max(t.coeff.norm());
        }
        worst / scale
    }

    /// Canonical equality up to a relative coefficient tolerance. The scale
    /// is the largest coefficient magnitude across both expressions, so the
    /// comparison is stable under overall rescaling.
    pub fn approx_eq(&self, other: &StarExpr, tol: f64) -> bool {
        let scale = self
            .terms
            .iter()
            .chain(other.terms.iter())
            .map(|t| t.coeff.norm())
            .fold(0.0, f64::max);
        if scale == 0.0 {
            return true;
        }
        let bound = tol * scale;
        let (mut i, mut j) = (0, 0);
        while i < self.terms.len() && j < other.terms.len() {
            let (a, b) = (&self.terms[i], &other.terms[j]);
            if keys_match(a, b) {
                if (a.coeff - b.coeff).norm() > bound {
                    return false;
                }
                i += 1;
                j += 1;
            } else if cmp_key(a, b) == std::cmp::Ordering::Less {
                if a.coeff.norm() > bound {
                    return false;
                }
                i += 1;
            } else {
                if b.coeff.norm() > bound {
                    return false;
                }
                j += 1;
            }
        }
        self.terms[i..].iter().all(|t| t.coeff.norm() <= bound)
            && other.terms[j..].iter().all(|t| t.coeff.norm() <= bound)
    }
}

impl From<Term> for StarExpr {
    fn from(t: Term) -> Self {
        StarExpr::merged(vec![t])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn canonicalize_merges_duplicate_keys() {
        let e = StarExpr::canonicalize(vec![
            Term::monomial(ONE, 1, 0),
            Term::monomial(c(2.0, 0.0), 1, 0),
        ])
        .unwrap();
        assert_eq!(e.terms().len(), 1);
        assert_eq!(e.terms()[0].coeff, c(3.0, 0.0));
        assert_eq!(e.terms()[0].pow_z, 1);
    }

    #[test]
    fn canonicalize_cancels_to_zero() {
        let e = StarExpr::canonicalize(vec![
            Term::monomial(ONE, 1, 0),
            Term::monomial(-ONE, 1, 0),
        ])
        .unwrap();
        assert!(e.is_zero());
    }

    #[test]
    fn canonicalize_keeps_distinct_keys() {
        let e = StarExpr::canonicalize(vec![
            Term::exponential(ONE, ONE, ZERO),
            Term::new(ONE, 1, 0, ONE, ZERO),
        ])
        .unwrap();
        assert_eq!(e.terms().len(), 2);
        // canonical order: lower pow_z first
        assert_eq!(e.terms()[0].pow_z, 0);
        assert_eq!(e.terms()[1].pow_z, 1);
    }

    #[test]
    fn canonicalize_rejects_non_finite_with_index() {
        let err = StarExpr::canonicalize(vec![
            Term::constant(ONE),
            Term::constant(c(f64::NAN, 0.0)),
        ])
        .unwrap_err();
        assert_eq!(err, CanonError::NonFinite { index: 1 });
    }

    #[test]
    fn mul_adds_powers_and_frequencies() {
        let zzb = StarExpr::z().mul(&StarExpr::zbar());
        assert_eq!(zzb.terms().len(), 1);
        assert_eq!((zzb.terms()[0].pow_z, zzb.terms()[0].pow_zbar), (1, 1));

        let e1 = StarExpr::exponential(ONE, c(1.5, 0.0), ZERO);
        let e2 = StarExpr::exponential(ONE, c(0.5, 0.0), ZERO);
        let p = e1.mul(&e2);
        assert_eq!(p.terms().len(), 1);
        assert_eq!(p.terms()[0].freq_z, c(2.0, 0.0));
    }

    #[test]
    fn add_zero_is_identity() {
        let f = StarExpr::affine(c(2.0, 1.0), c(0.5, 0.0), c(-1.0, 3.0));
        assert_eq!(f.add(&StarExpr::zero()), f);
    }

    #[test]
    fn conj_maps_z_to_zbar() {
        assert_eq!(StarExpr::z().conj(), StarExpr::zbar());
        // real alpha: conj(exp(i*alpha*z)) = exp(-i*alpha*zbar)
        let f = StarExpr::exponential(ONE, c(2.0, 0.0), ZERO);
        let g = StarExpr::exponential(ONE, ZERO, c(-2.0, 0.0));
        assert_eq!(f.conj(), g);
    }

    #[test]
    fn wirtinger_derivative_of_affine() {
        let f = StarExpr::affine(c(2.0, 1.0), c(0.5, -0.25), c(7.0, 0.0));
        assert_eq!(f.d_z(), StarExpr::constant(c(2.0, 1.0)));
        assert_eq!(f.d_zbar(), StarExpr::constant(c(0.5, -0.25)));
    }

    #[test]
    fn holomorphic_exponential_has_zero_dzbar() {
        let f = StarExpr::exponential(ONE, ONE, ZERO);
        assert!(f.d_zbar().is_zero());
        assert_eq!(f.d_z(), f.scale(I));
    }

    #[test]
    fn real_direction_derivatives() {
        assert_eq!(StarExpr::z().d_x(), StarExpr::one());
        assert_eq!(StarExpr::z().d_y(), StarExpr::constant(I));
        assert_eq!(StarExpr::zbar().d_x(), StarExpr::one());
        assert_eq!(StarExpr::zbar().d_y(), StarExpr::constant(-I));
    }

    #[test]
    fn eval_matches_hand_values() {
        let f = StarExpr::z().add(&StarExpr::zbar());
        assert_eq!(f.eval(c(1.0, 1.0)).unwrap(), c(2.0, 0.0));
        let g = StarExpr::exponential(ONE, ONE, ZERO);
        assert_eq!(g.eval(ZERO).unwrap(), ONE);
    }

    #[test]
    fn eval_overflow_reports_term() {
        // exp(i * beta * zbar) with beta = -1e9 i grows like exp(1e9 * x)
        let f = StarExpr::exponential(ONE, ZERO, c(0.0, -1e9));
        let err = f.eval(c(1.0, 0.0)).unwrap_err();
        match err {
            EvalError::Overflow { term } => assert_eq!(term.freq_zbar, c(0.0, -1e9)),
        }
    }

    #[test]
    fn cancellation_residue_is_pruned() {
        // A pair whose merge leaves only roundoff must canonicalize to zero.
        let a = c(0.1, 0.0) + c(0.2, 0.0); // 0.30000000000000004
        let b = c(0.3, 0.0);
        let e = StarExpr::canonicalize(vec![
            Term::monomial(a, 1, 0),
            Term::monomial(-b, 1, 0),
        ])
        .unwrap();
        assert!(e.is_zero());
    }

    #[test]
    fn approx_eq_tolerates_small_coefficient_noise() {
        let f = StarExpr::affine(c(1.0, 0.0), c(0.5, 0.0), ZERO);
        let g = StarExpr::affine(c(1.0 + 1e-13, 0.0), c(0.5, 0.0), ZERO);
        assert!(f.approx_eq(&g, 1e-10));
        assert!(!f.approx_eq(&g, 1e-15));
    }
}
