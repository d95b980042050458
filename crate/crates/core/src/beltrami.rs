//! Beltrami coefficients and quasiconformality certification.
//!
//! The Beltrami coefficient of `f` is the ratio `mu_f = d_zbar f / d_z f`
//! from the equation `d_zbar f = mu_f d_z f`; it vanishes exactly when `f`
//! is holomorphic. Two routes are provided: [`mu_exact`] recognizes the
//! constant-`mu` patterns (affine maps and single exponentials, which cover
//! star products of exponentials after canonicalization) and returns the
//! closed-form constant; [`mu_grid`] evaluates the derivative quotient on a
//! sampling grid with masking wherever `d_z f` vanishes.
//!
//! [`qc_certify`] checks the differential quasiconformality conditions on a
//! grid: the sup of `|d_zbar f| / |d_z f|` stays below a threshold `k < 1`,
//! `d_z f` does not vanish, and both derivative fields are square
//! integrable over the domain. The sup is a sample estimate with a witness
//! point, not a proof over the continuum, and homeomorphism is not checked;
//! every report carries that caveat.

use num_complex::Complex64;
use thiserror::Error;

use crate::conformal::{ConformalMap, ConformalMapError};
use crate::numeric::{pairwise_sum_f64, wirtinger_fd};
use crate::term::{EvalError, StarExpr, Term};

/// Scale-free zero threshold for `d_z f` on a grid: a point counts as a
/// zero of the derivative when its magnitude is below this fraction of the
/// grid maximum.
pub const CONDITION_III_TOL: f64 = 1e-12;

/// Default strict-inequality threshold for the quasiconformality bound.
pub const DEFAULT_K_THRESHOLD: f64 = 1.0 - 1e-9;

/// Default finite-difference step for pullback derivatives.
pub const DEFAULT_FD_STEP: f64 = 1e-4;

/// Caveat attached to every certification report.
pub const SAMPLING_NOTE: &str = "differential conditions checked on grid samples; \
sup ratio is an estimate with witness, homeomorphism is not verified";

#[derive(Debug, Error, PartialEq)]
pub enum BeltramiError {
    /// The coefficient of `d_z f` vanishes identically, so the Beltrami
    /// equation does not determine `mu`.
    #[error("Beltrami equation undefined: {0}")]
    UndefinedEquation(&'static str),
    /// The expression is outside the recognized constant-`mu` patterns;
    /// use the grid route instead.
    #[error("no exact constant-mu pattern for this expression")]
    NotRepresentable,
    #[error("d_z f vanishes at every grid point")]
    DegenerateInput,
    #[error("invalid grid domain: {0}")]
    InvalidDomain(&'static str),
    #[error("expression is not in a recognized constant-mu family")]
    PatternNotRecognized,
    #[error("dilation factor must be positive and finite, got {0}")]
    InvalidDilation(f64),
    #[error("transformed |mu| = {0} violates the quasiconformal bound |mu| < 1")]
    MuBoundExceeded(f64),
    #[error(transparent)]
    Map(#[from] ConformalMapError),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// Rectangular sampling region in the z-plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridDomain {
    pub re_min: f64,
    pub re_max: f64,
    pub im_min: f64,
    pub im_max: f64,
    pub nx: usize,
    pub ny: usize,
}

impl GridDomain {
    pub fn new(
        re_min: f64,
        re_max: f64,
        im_min: f64,
        im_max: f64,
        nx: usize,
        ny: usize,
    ) -> Result<Self, BeltramiError> {
        if !(re_min.is_finite() && re_max.is_finite() && im_min.is_finite() && im_max.is_finite())
        {
            return Err(BeltramiError::InvalidDomain("bounds must be finite"));
        }
        if re_min >= re_max || im_min >= im_max {
            return Err(BeltramiError::InvalidDomain(
                "bounds must satisfy re_min < re_max and im_min < im_max",
            ));
        }
        if nx < 8 || ny < 8 {
            return Err(BeltramiError::InvalidDomain("resolution must be at least 8"));
        }
        Ok(GridDomain {
            re_min,
            re_max,
            im_min,
            im_max,
            nx,
            ny,
        })
    }

    /// `[-1, 1]^2` at 256 x 256, the default certification domain.
    pub fn default_square() -> Self {
        GridDomain::new(-1.0, 1.0, -1.0, 1.0, 256, 256).expect("static bounds")
    }

    /// Same rectangle at a different resolution.
    pub fn with_resolution(&self, nx: usize, ny: usize) -> Result<Self, BeltramiError> {
        GridDomain::new(self.re_min, self.re_max, self.im_min, self.im_max, nx, ny)
    }

    pub fn step_re(&self) -> f64 {
        (self.re_max - self.re_min) / (self.nx - 1) as f64
    }

    pub fn step_im(&self) -> f64 {
        (self.im_max - self.im_min) / (self.ny - 1) as f64
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Sample point at `(ix, iy)`; row-major index `iy * nx + ix`.
    pub fn point(&self, ix: usize, iy: usize) -> Complex64 {
        Complex64::new(
            self.re_min + ix as f64 * self.step_re(),
            self.im_min + iy as f64 * self.step_im(),
        )
    }

    /// Row-major iterator over the sample points.
    pub fn points(&self) -> impl Iterator<Item = Complex64> + '_ {
        (0..self.ny).flat_map(move |iy| (0..self.nx).map(move |ix| self.point(ix, iy)))
    }

    /// Trapezoid weight (including the cell area) of point `(ix, iy)`.
    fn trapezoid_weight(&self, ix: usize, iy: usize) -> f64 {
        let wx = if ix == 0 || ix == self.nx - 1 { 0.5 } else { 1.0 };
        let wy = if iy == 0 || iy == self.ny - 1 { 0.5 } else { 1.0 };
        wx * wy * self.step_re() * self.step_im()
    }
}

impl Default for GridDomain {
    fn default() -> Self {
        Self::default_square()
    }
}

/// A pointwise Beltrami field on a grid, masked where `d_z f` vanishes.
#[derive(Debug, Clone, PartialEq)]
pub struct MuField {
    pub domain: GridDomain,
    /// Row-major values of `d_zbar f / d_z f`; zero at masked points.
    pub values: Vec<Complex64>,
    /// True where `d_z f` is below the condition-III threshold.
    pub masked: Vec<bool>,
}

/// A Beltrami coefficient: exact constant when the pattern is recognized,
/// otherwise a pointwise grid field.
#[derive(Debug, Clone, PartialEq)]
pub enum BeltramiValue {
    ExactConstant(Complex64),
    PointwiseField(MuField),
}

impl BeltramiValue {
    pub fn as_constant(&self) -> Option<Complex64> {
        match self {
            BeltramiValue::ExactConstant(c) => Some(*c),
            BeltramiValue::PointwiseField(_) => None,
        }
    }
}

/// How a term list matches the constant-`mu` patterns.
enum Pattern {
    /// All frequencies zero, every power sum at most one: `a z + b zbar + c`.
    Affine { a: Complex64, b: Complex64 },
    /// A single pure exponential term.
    Exponential { alpha: Complex64, beta: Complex64 },
    None,
}

fn recognize(f: &StarExpr) -> Pattern {
    let zero = Complex64::new(0.0, 0.0);
    let affine = f
        .terms()
        .iter()
        .all(|t| t.freq_z == zero && t.freq_zbar == zero && t.pow_sum() <= 1);
    if affine {
        let mut a = zero;
        let mut b = zero;
        for t in f.terms() {
            match (t.pow_z, t.pow_zbar) {
                (1, 0) => a = t.coeff,
                (0, 1) => b = t.coeff,
                _ => {}
            }
        }
        return Pattern::Affine { a, b };
    }
    if let [t] = f.terms() {
        if t.pow_sum() == 0 {
            return Pattern::Exponential {
                alpha: t.freq_z,
                beta: t.freq_zbar,
            };
        }
    }
    Pattern::None
}

/// Exact Beltrami coefficient for the recognized constant-`mu` patterns:
/// `b/a` for affine maps, `beta/alpha` for single exponentials (covering
/// star products of exponentials, whose frequencies add). A vanishing
/// denominator is reported distinctly from an unrecognized pattern.
pub fn mu_exact(f: &StarExpr) -> Result<BeltramiValue, BeltramiError> {
    match recognize(f) {
        Pattern::Affine { a, b } => {
            if a.norm() == 0.0 {
                Err(BeltramiError::UndefinedEquation(
                    "affine z-coefficient a vanishes, so d_z f = 0",
                ))
            } else {
                Ok(BeltramiValue::ExactConstant(b / a))
            }
        }
        Pattern::Exponential { alpha, beta } => {
            if alpha.norm() == 0.0 {
                Err(BeltramiError::UndefinedEquation(
                    "exponential z-frequency alpha vanishes, so d_z f is not invertible",
                ))
            } else {
                Ok(BeltramiValue::ExactConstant(beta / alpha))
            }
        }
        Pattern::None => Err(BeltramiError::NotRepresentable),
    }
}

/// Pointwise Beltrami field `eval(d_zbar f) / eval(d_z f)` on `dom`,
/// masked where `|d_z f|` falls below [`CONDITION_III_TOL`] relative to its
/// grid maximum. Fails with [`BeltramiError::DegenerateInput`] when every
/// point is masked.
pub fn mu_grid(f: &StarExpr, dom: &GridDomain) -> Result<BeltramiValue, BeltramiError> {
    let dz = f.d_z();
    let dzbar = f.d_zbar();
    let mut dz_vals = Vec::with_capacity(dom.len());
    let mut dzb_vals = Vec::with_capacity(dom.len());
    for z in dom.points() {
        dz_vals.push(dz.eval(z)?);
        dzb_vals.push(dzbar.eval(z)?);
    }
    let dz_max = dz_vals.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let threshold = CONDITION_III_TOL * dz_max;
    let mut values = Vec::with_capacity(dom.len());
    let mut masked = Vec::with_capacity(dom.len());
    let mut all_masked = true;
    for (num, den) in dzb_vals.iter().zip(&dz_vals) {
        if den.norm() <= threshold {
            masked.push(true);
            values.push(Complex64::new(0.0, 0.0));
        } else {
            masked.push(false);
            values.push(num / den);
            all_masked = false;
        }
    }
    if all_masked {
        return Err(BeltramiError::DegenerateInput);
    }
    Ok(BeltramiValue::PointwiseField(MuField {
        domain: *dom,
        values,
        masked,
    }))
}

/// Why a witness point is reported.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WitnessKind {
    /// Point attaining the sup of `|d_zbar f| / |d_z f|`.
    SupRatio,
    /// Point where `d_z f` vanishes (condition III failure).
    VanishingDz,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QCWitness {
    pub point: Complex64,
    pub kind: WitnessKind,
    pub value: f64,
}

/// Outcome of one quasiconformality certification.
#[derive(Debug, Clone, PartialEq)]
pub struct QCReport {
    /// Grid sup of `|d_zbar f| / |d_z f|` over unmasked points; infinite
    /// when `d_z f` vanishes everywhere.
    pub k_hat: f64,
    /// Condition III: `d_z f` vanished at no grid point.
    pub dz_nonvanishing: bool,
    /// Trapezoid quadrature of `|d_z f|^2` over the domain.
    pub l2_dz: f64,
    /// Trapezoid quadrature of `|d_zbar f|^2` over the domain.
    pub l2_dzbar: f64,
    pub k_threshold: f64,
    pub verdict: bool,
    pub witness: Option<QCWitness>,
    /// Certification caveat, attached to every report.
    pub sampling_note: &'static str,
}

/// Certify the differential quasiconformality conditions of `f` on `dom`.
///
/// The verdict is `k_hat < k_threshold` and condition III holds and both
/// quadratures are finite. Failures are verdicts, not errors; evaluation
/// overflow flows into the quadratures and fails the verdict.
///
/// Requires `0 <= k_threshold < 1`.
pub fn qc_certify(f: &StarExpr, dom: &GridDomain, k_threshold: f64) -> QCReport {
    assert!(
        (0.0..1.0).contains(&k_threshold),
        "k_threshold must lie in [0, 1)"
    );
    let dz = f.d_z();
    let dzbar = f.d_zbar();
    let n = dom.len();
    let mut dz_norm = Vec::with_capacity(n);
    let mut dzb_norm = Vec::with_capacity(n);
    for z in dom.points() {
        dz_norm.push(dz.eval_unchecked(z).norm());
        dzb_norm.push(dzbar.eval_unchecked(z).norm());
    }
    let dz_max = dz_norm.iter().copied().fold(0.0, f64::max);
    let threshold = CONDITION_III_TOL * dz_max;

    let mut k_hat = 0.0f64;
    let mut sup_witness: Option<(usize, f64)> = None;
    let mut vanish_witness: Option<(usize, f64)> = None;
    for (idx, (&den, &num)) in dz_norm.iter().zip(&dzb_norm).enumerate() {
        if den <= threshold {
            if vanish_witness.is_none() {
                vanish_witness = Some((idx, den));
            }
            continue;
        }
        let ratio = num / den;
        match sup_witness {
            Some((_, best)) if ratio <= best => {}
            _ => sup_witness = Some((idx, ratio)),
        }
        k_hat = k_hat.max(ratio);
    }
    let dz_nonvanishing = vanish_witness.is_none();
    if sup_witness.is_none() {
        k_hat = f64::INFINITY;
    }

    let weighted = |norms: &[f64]| -> f64 {
        let cells: Vec<f64> = (0..dom.ny)
            .flat_map(|iy| {
                (0..dom.nx).map(move |ix| {
                    let v = norms[iy * dom.nx + ix];
                    v * v * dom.trapezoid_weight(ix, iy)
                })
            })
            .collect();
        pairwise_sum_f64(&cells)
    };
    let l2_dz = weighted(&dz_norm);
    let l2_dzbar = weighted(&dzb_norm);

    let verdict =
        k_hat < k_threshold && dz_nonvanishing && l2_dz.is_finite() && l2_dzbar.is_finite();

    let witness = match (vanish_witness, sup_witness) {
        (Some((idx, value)), _) => Some(QCWitness {
            point: dom.point(idx % dom.nx, idx / dom.nx),
            kind: WitnessKind::VanishingDz,
            value,
        }),
        (None, Some((idx, value))) => Some(QCWitness {
            point: dom.point(idx % dom.nx, idx / dom.nx),
            kind: WitnessKind::SupRatio,
            value,
        }),
        (None, None) => None,
    };

    QCReport {
        k_hat,
        dz_nonvanishing,
        l2_dz,
        l2_dzbar,
        k_threshold,
        verdict,
        witness,
        sampling_note: SAMPLING_NOTE,
    }
}

/// A family member with a constant Beltrami coefficient, given by its
/// defining parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FamilyMember {
    /// `a z + b zbar + c` with `a != 0`.
    Affine {
        a: Complex64,
        b: Complex64,
        c: Complex64,
    },
    /// `coeff exp(i (alpha z + beta zbar))` with `alpha != 0`.
    Exponential {
        coeff: Complex64,
        alpha: Complex64,
        beta: Complex64,
    },
}

impl FamilyMember {
    pub fn expr(&self) -> StarExpr {
        match *self {
            FamilyMember::Affine { a, b, c } => StarExpr::affine(a, b, c),
            FamilyMember::Exponential { coeff, alpha, beta } => {
                StarExpr::exponential(coeff, alpha, beta)
            }
        }
    }

    pub fn mu(&self) -> Result<Complex64, BeltramiError> {
        mu_exact(&self.expr())?
            .as_constant()
            .ok_or(BeltramiError::NotRepresentable)
    }
}

/// Invariance residual of `|mu|` under a conformal map: the maximum over
/// the grid of `| |mu_{f o phi}|(z) - |mu_f| |`, with the pullback
/// coefficient computed numerically from finite differences of the
/// composed evaluation (no chain rule assumed).
pub fn conformal_pullback_check(
    member: &FamilyMember,
    phi: &ConformalMap,
    dom: &GridDomain,
    fd_step: f64,
) -> Result<f64, BeltramiError> {
    let mu_ref = member.mu()?.norm();
    phi.validate_on(dom, 2.0 * fd_step)?;
    let expr = member.expr();
    let composed = |z: Complex64| expr.eval(phi.apply(z));
    let mut worst = 0.0f64;
    for z in dom.points() {
        let (hz, hzbar) = wirtinger_fd(composed, z, fd_step)?;
        let pullback = (hzbar / hz).norm();
        worst = worst.max((pullback - mu_ref).abs());
    }
    Ok(worst)
}

/// Rotate and dilate the Beltrami coefficient of a recognized constant-`mu`
/// family member: `mu -> exp(i theta) lambda mu`, realized by scaling the
/// antiholomorphic parameter (`b` or `beta`). The result is rejected when
/// it would leave the quasiconformal disc `|mu| < 1`.
pub fn transform_mu(f: &StarExpr, theta: f64, lambda: f64) -> Result<StarExpr, BeltramiError> {
    if !(lambda > 0.0 && lambda.is_finite() && theta.is_finite()) {
        return Err(BeltramiError::InvalidDilation(lambda));
    }
    let factor = Complex64::from_polar(lambda, theta);
    match recognize(f) {
        Pattern::Affine { a, b } => {
            if a.norm() == 0.0 {
                return Err(BeltramiError::PatternNotRecognized);
            }
            let new_mu = (factor * b / a).norm();
            if new_mu >= 1.0 {
                return Err(BeltramiError::MuBoundExceeded(new_mu));
            }
            let raw = f
                .terms()
                .iter()
                .map(|t| {
                    if (t.pow_z, t.pow_zbar) == (0, 1) {
                        Term {
                            coeff: factor * t.coeff,
                            ..*t
                        }
                    } else {
                        *t
                    }
                })
                .collect();
            Ok(StarExpr::canonicalize(raw).expect("scaling preserves finiteness"))
        }
        Pattern::Exponential { alpha, beta } => {
            if alpha.norm() == 0.0 {
                return Err(BeltramiError::PatternNotRecognized);
            }
            let new_mu = (factor * beta / alpha).norm();
            if new_mu >= 1.0 {
                return Err(BeltramiError::MuBoundExceeded(new_mu));
            }
            let coeff = f.terms()[0].coeff;
            Ok(StarExpr::exponential(coeff, alpha, factor * beta))
        }
        Pattern::None => Err(BeltramiError::PatternNotRecognized),
    }
}
