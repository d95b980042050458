//! The scenario registry: every identity the engine certifies, packaged as
//! a named, parameterized, seeded check that emits a [`CheckReport`].
//!
//! Scenario runs are deterministic given their parameters (all randomness
//! flows from the `seed` parameter through a counter-based generator), so
//! reports are byte-identical across runs with the same inputs.

use std::collections::BTreeMap;
use std::time::Instant;

use mwqc_core::beltrami::{self, FamilyMember, GridDomain};
use mwqc_core::cauchy::{self, ContourSpec, MuFunction};
use mwqc_core::conformal::ConformalMap;
use mwqc_core::numeric::wirtinger_fd;
use mwqc_core::{
    hbar_coefficient, mu_exact, parse, poisson_bracket, serialize, star, star_n, star_truncated,
    transform_mu, Complex64, StarConfig, StarExpr, Term,
};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::Value;
use thiserror::Error;

use crate::parse_complex;
use crate::report::{CheckReport, Status};

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("unknown scenario {0:?}")]
    UnknownScenario(String),
    #[error("scenario {scenario:?} has no parameter {key:?}")]
    UnknownParameter { scenario: String, key: String },
    #[error("parameter {key:?} of {scenario:?}: expected {expected}, got {got}")]
    InvalidOverride {
        scenario: String,
        key: String,
        expected: &'static str,
        got: String,
    },
}

/// Validated parameter map for one scenario run.
pub struct Params {
    map: BTreeMap<String, Value>,
}

impl Params {
    fn get(&self, key: &str) -> Result<&Value, String> {
        self.map.get(key).ok_or_else(|| format!("missing parameter {key:?}"))
    }

    fn f64(&self, key: &str) -> Result<f64, String> {
        self.get(key)?
            .as_f64()
            .ok_or_else(|| format!("parameter {key:?} must be a number"))
    }

    fn usize(&self, key: &str) -> Result<usize, String> {
        let v = self.f64(key)?;
        if v < 0.0 || v.fract() != 0.0 {
            return Err(format!("parameter {key:?} must be a nonnegative integer"));
        }
        Ok(v as usize)
    }

    fn u64(&self, key: &str) -> Result<u64, String> {
        let v = self.f64(key)?;
        if v < 0.0 || v.fract() != 0.0 {
            return Err(format!("parameter {key:?} must be a nonnegative integer"));
        }
        Ok(v as u64)
    }

    fn opt_f64(&self, key: &str) -> Result<Option<f64>, String> {
        match self.get(key)? {
            Value::Null => Ok(None),
            v => v
                .as_f64()
                .map(Some)
                .ok_or_else(|| format!("parameter {key:?} must be a number or null")),
        }
    }

    /// Complex-valued parameter: a number or an expression string; null
    /// means absent.
    fn opt_complex(&self, key: &str) -> Result<Option<Complex64>, String> {
        match self.get(key)? {
            Value::Null => Ok(None),
            Value::String(s) => parse_complex(s).map(Some),
            v => v
                .as_f64()
                .map(|x| Some(Complex64::new(x, 0.0)))
                .ok_or_else(|| format!("parameter {key:?} must be a number, string or null")),
        }
    }

    fn f64_list(&self, key: &str) -> Result<Vec<f64>, String> {
        self.get(key)?
            .as_array()
            .ok_or_else(|| format!("parameter {key:?} must be an array of numbers"))?
            .iter()
            .map(|v| {
                v.as_f64()
                    .ok_or_else(|| format!("parameter {key:?} must contain only numbers"))
            })
            .collect()
    }

    fn rng(&self) -> Result<ChaCha8Rng, String> {
        Ok(ChaCha8Rng::seed_from_u64(self.u64("seed")?))
    }
}

/// Mutable outcome a scenario body fills in.
#[derive(Default)]
pub struct Outcome {
    pub pass: bool,
    pub residuals: BTreeMap<String, f64>,
    pub witnesses: BTreeMap<String, String>,
}

impl Outcome {
    fn new() -> Self {
        Outcome {
            pass: true,
            residuals: BTreeMap::new(),
            witnesses: BTreeMap::new(),
        }
    }

    /// Record a named residual against its tolerance; failures flip the
    /// verdict and store the witness.
    fn check(&mut self, name: &str, residual: f64, tol: f64, witness: impl FnOnce() -> String) {
        let slot = self.residuals.entry(name.to_string()).or_insert(0.0);
        *slot = slot.max(residual);
        if residual > tol || residual.is_nan() {
            self.pass = false;
            self.witnesses
                .entry(name.to_string())
                .or_insert_with(witness);
        }
    }

    fn fail(&mut self, name: &str, witness: String) {
        self.pass = false;
        self.witnesses.insert(name.to_string(), witness);
    }
}

type ScenarioFn = fn(&Params) -> Result<Outcome, String>;

pub struct ScenarioSpec {
    pub id: &'static str,
    pub claim: &'static str,
    defaults: fn() -> BTreeMap<String, Value>,
    run: ScenarioFn,
}

impl ScenarioSpec {
    pub fn defaults(&self) -> BTreeMap<String, Value> {
        (self.defaults)()
    }

    /// Headline tolerance of the scenario under these parameters.
    fn tolerance(&self, params: &Params) -> f64 {
        params.f64("tol").unwrap_or(0.0)
    }
}

fn json(v: f64) -> Value {
    serde_json::Number::from_f64(v).map(Value::Number).unwrap_or(Value::Null)
}

fn base_defaults(seed: u64, trials: usize, tol: f64) -> BTreeMap<String, Value> {
    let mut map = BTreeMap::new();
    map.insert("seed".to_string(), Value::from(seed));
    map.insert("trials".to_string(), Value::from(trials));
    map.insert("tol".to_string(), json(tol));
    map
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn draw(rng: &mut ChaCha8Rng, radius: f64, min_abs: f64) -> Complex64 {
    loop {
        let v = c(
            rng.random_range(-radius..radius),
            rng.random_range(-radius..radius),
        );
        if v.norm() >= min_abs && v.norm() <= radius {
            return v;
        }
    }
}

// --- scenario bodies -----------------------------------------------------

fn affine_star(params: &Params) -> Result<Outcome, String> {
    let mut rng = params.rng()?;
    let trials = params.usize("trials")?;
    let tol = params.f64("tol")?;
    let hbar_max = params.f64("hbar_max")?;
    let mut out = Outcome::new();
    for trial in 0..trials {
        let (a1, b1, c1) = (
            draw(&mut rng, 2.0, 0.0),
            draw(&mut rng, 2.0, 0.0),
            draw(&mut rng, 2.0, 0.0),
        );
        let (a2, b2, c2) = (
            draw(&mut rng, 2.0, 0.0),
            draw(&mut rng, 2.0, 0.0),
            draw(&mut rng, 2.0, 0.0),
        );
        let hbar = rng.random_range(-hbar_max..hbar_max);
        let f = StarExpr::affine(a1, b1, c1);
        let g = StarExpr::affine(a2, b2, c2);
        let got = star(&f, &g, &StarConfig::exact(hbar)).map_err(|e| e.to_string())?;
        let closed = f
            .mul(&g)
            .add(&StarExpr::constant(c(0.0, hbar) * (a1 * b2 - b1 * a2)));
        out.check("max_relative_residual", got.coeff_distance(&closed), tol, || {
            format!("trial {trial}: hbar={hbar}, f={}, g={}", serialize(&f), serialize(&g))
        });
    }
    Ok(out)
}

fn exp_phase(params: &Params) -> Result<Outcome, String> {
    let mut rng = params.rng()?;
    let trials = params.usize("trials")?;
    let tol = params.f64("tol")?;
    let fixed_hbar = params.opt_f64("hbar")?;
    let mut out = Outcome::new();
    for trial in 0..trials {
        let (a1, b1) = (draw(&mut rng, 1.5, 0.0), draw(&mut rng, 1.5, 0.0));
        let (a2, b2) = (draw(&mut rng, 1.5, 0.0), draw(&mut rng, 1.5, 0.0));
        let hbar = fixed_hbar.unwrap_or_else(|| rng.random_range(-2.0..2.0));
        let f = StarExpr::exponential(c(1.0, 0.0), a1, b1);
        let g = StarExpr::exponential(c(1.0, 0.0), a2, b2);
        let got = star(&f, &g, &StarConfig::exact(hbar)).map_err(|e| e.to_string())?;
        let kappa = a1 * b2 - b1 * a2;
        let closed = f.mul(&g).scale((c(0.0, -hbar) * kappa).exp());
        out.check("max_phase_residual", got.coeff_distance(&closed), tol, || {
            format!("trial {trial}: hbar={hbar}, kappa={kappa}")
        });
    }

    // truncated series against the factorial remainder bound, at real
    // frequencies where the bound is exact
    for trial in 0..trials.min(20) {
        let (a1, b1) = (
            c(rng.random_range(-1.5..1.5), 0.0),
            c(rng.random_range(-1.5..1.5), 0.0),
        );
        let (a2, b2) = (
            c(rng.random_range(-1.5..1.5), 0.0),
            c(rng.random_range(-1.5..1.5), 0.0),
        );
        let hbar: f64 = fixed_hbar.unwrap_or_else(|| rng.random_range(-1.5..1.5));
        let f = StarExpr::exponential(c(1.0, 0.0), a1, b1);
        let g = StarExpr::exponential(c(1.0, 0.0), a2, b2);
        let exact = star(&f, &g, &StarConfig::exact(hbar)).map_err(|e| e.to_string())?;
        let x = (hbar * (a1 * b2 - b1 * a2).re).abs();
        let mut bound = 1.0;
        for order in 0..=8usize {
            let truncated = star_truncated(&f, &g, hbar, order);
            let residual: f64 = truncated
                .sub(&exact)
                .terms()
                .iter()
                .map(|t| t.coeff.norm())
                .sum();
            bound *= x / (order + 1) as f64;
            out.check(
                "max_remainder_excess",
                (residual - bound).max(0.0),
                tol,
                || format!("trial {trial}, order {order}: residual {residual} vs bound {bound}"),
            );
        }
    }
    Ok(out)
}

fn hbar_series(params: &Params) -> Result<Outcome, String> {
    let mut rng = params.rng()?;
    let trials = params.usize("trials")?;
    let tol = params.f64("tol")?;
    let max_order = params.usize("max_order")?;
    let mut out = Outcome::new();
    for trial in 0..trials {
        let f: StarExpr = Term::new(
            draw(&mut rng, 1.5, 0.05),
            rng.random_range(0..3),
            rng.random_range(0..3),
            draw(&mut rng, 1.0, 0.0),
            draw(&mut rng, 1.0, 0.0),
        )
        .into();
        let g: StarExpr = Term::new(
            draw(&mut rng, 1.5, 0.05),
            rng.random_range(0..3),
            rng.random_range(0..3),
            draw(&mut rng, 1.0, 0.0),
            draw(&mut rng, 1.0, 0.0),
        )
        .into();
        out.check(
            "order0_vs_product",
            hbar_coefficient(&f, &g, 0).coeff_distance(&f.mul(&g)),
            tol,
            || format!("trial {trial}"),
        );
        let bracket = poisson_bracket(&f, &g).scale(c(0.0, 1.0));
        out.check(
            "order1_vs_bracket",
            hbar_coefficient(&f, &g, 1).coeff_distance(&bracket),
            tol,
            || format!("trial {trial}"),
        );

        // exponential pairs: the k-th coefficient follows the phase series.
        // The error is measured at the unit product scale; high orders with
        // a near-cancelling kappa make coefficient-relative errors
        // meaningless while the series itself stays exact to roundoff.
        let (a1, b1) = (draw(&mut rng, 1.2, 0.0), draw(&mut rng, 1.2, 0.0));
        let (a2, b2) = (draw(&mut rng, 1.2, 0.0), draw(&mut rng, 1.2, 0.0));
        let ef = StarExpr::exponential(c(1.0, 0.0), a1, b1);
        let eg = StarExpr::exponential(c(1.0, 0.0), a2, b2);
        let kappa = a1 * b2 - b1 * a2;
        let mut factor = c(1.0, 0.0);
        for k in 0..=max_order {
            if k > 0 {
                factor *= c(0.0, -1.0) * kappa / k as f64;
            }
            let diff = hbar_coefficient(&ef, &eg, k).sub(&ef.mul(&eg).scale(factor));
            let residual: f64 = diff.terms().iter().map(|t| t.coeff.norm()).sum();
            out.check("exponential_coefficient", residual, tol, || {
                format!("trial {trial}, order {k}")
            });
        }

        // polynomial inputs: the series terminates at the combined degree
        let pf = StarExpr::affine(draw(&mut rng, 1.5, 0.0), draw(&mut rng, 1.5, 0.0), c(0.0, 0.0));
        let pg = StarExpr::canonicalize(vec![
            Term::monomial(draw(&mut rng, 1.5, 0.05), 1, 1),
            Term::monomial(draw(&mut rng, 1.5, 0.05), 0, 1),
        ])
        .map_err(|e| e.to_string())?;
        let hbar = rng.random_range(-1.5..1.5);
        let order = (pf.max_pow_sum() + pg.max_pow_sum()) as usize;
        let exact = star(&pf, &pg, &StarConfig::exact(hbar)).map_err(|e| e.to_string())?;
        out.check(
            "terminating_series",
            star_truncated(&pf, &pg, hbar, order).coeff_distance(&exact),
            tol,
            || format!("trial {trial}, order {order}"),
        );
    }
    Ok(out)
}

fn mu_composite(params: &Params) -> Result<Outcome, String> {
    let mut rng = params.rng()?;
    let trials = params.usize("trials")?;
    let tol = params.f64("tol")?;
    let hbars = params.f64_list("hbars")?;
    let mut out = Outcome::new();
    for trial in 0..trials {
        let a1 = draw(&mut rng, 1.5, 0.3);
        let mut a2 = draw(&mut rng, 1.5, 0.3);
        while (a1 + a2).norm() < 0.2 {
            a2 = draw(&mut rng, 1.5, 0.3);
        }
        let (b1, b2) = (draw(&mut rng, 1.0, 0.0), draw(&mut rng, 1.0, 0.0));
        let f = StarExpr::exponential(c(1.0, 0.0), a1, b1);
        let g = StarExpr::exponential(c(1.0, 0.0), a2, b2);
        let want = (b1 + b2) / (a1 + a2);
        for &hbar in &hbars {
            let fg = star(&f, &g, &StarConfig::exact(hbar)).map_err(|e| e.to_string())?;
            let mu = mu_exact(&fg)
                .map_err(|e| e.to_string())?
                .as_constant()
                .ok_or("expected a constant Beltrami coefficient")?;
            let residual = (mu - want).norm() / 1f64.max(want.norm());
            out.check("max_mu_residual", residual, tol, || {
                format!("trial {trial}, hbar {hbar}: mu={mu}, want={want}")
            });
        }
    }
    Ok(out)
}

fn associativity(params: &Params) -> Result<Outcome, String> {
    let mut rng = params.rng()?;
    let trials = params.usize("trials")?;
    let tol = params.f64("tol")?;
    let phase_tol = params.f64("phase_tol")?;
    let mut out = Outcome::new();
    for trial in 0..trials {
        let factors: Vec<StarExpr> = (0..3)
            .map(|_| {
                Term::new(
                    draw(&mut rng, 1.5, 0.05),
                    rng.random_range(0..3),
                    rng.random_range(0..3),
                    draw(&mut rng, 1.0, 0.0),
                    draw(&mut rng, 1.0, 0.0),
                )
                .into()
            })
            .collect();
        let cfg = StarConfig::exact(rng.random_range(-2.0..2.0));
        let left = star(&star(&factors[0], &factors[1], &cfg).map_err(|e| e.to_string())?, &factors[2], &cfg)
            .map_err(|e| e.to_string())?;
        let right = star(&factors[0], &star(&factors[1], &factors[2], &cfg).map_err(|e| e.to_string())?, &cfg)
            .map_err(|e| e.to_string())?;
        out.check("max_associativity_residual", left.coeff_distance(&right), tol, || {
            format!("trial {trial}")
        });
    }
    for trial in 0..trials {
        let alphas: Vec<Complex64> = (0..3).map(|_| draw(&mut rng, 1.2, 0.0)).collect();
        let betas: Vec<Complex64> = (0..3).map(|_| draw(&mut rng, 1.2, 0.0)).collect();
        let hbar = rng.random_range(-1.5..1.5);
        let fs: Vec<StarExpr> = alphas
            .iter()
            .zip(&betas)
            .map(|(&a, &b)| StarExpr::exponential(c(1.0, 0.0), a, b))
            .collect();
        let got = star_n(&fs, &StarConfig::exact(hbar)).map_err(|e| e.to_string())?;
        let mut kappa = c(0.0, 0.0);
        for j in 0..3 {
            for k in (j + 1)..3 {
                kappa += alphas[j] * betas[k] - betas[j] * alphas[k];
            }
        }
        let closed = fs[0]
            .mul(&fs[1])
            .mul(&fs[2])
            .scale((c(0.0, -hbar) * kappa).exp());
        out.check("max_triple_phase_residual", got.coeff_distance(&closed), phase_tol, || {
            format!("trial {trial}: kappa={kappa}")
        });
    }
    Ok(out)
}

fn poisson_vanishing(params: &Params) -> Result<Outcome, String> {
    let mut rng = params.rng()?;
    let trials = params.usize("trials")?;
    let separation = params.f64("separation")?;
    let mut out = Outcome::new();
    let mut aligned_max = 0.0f64;
    let mut misaligned_min = f64::INFINITY;
    for trial in 0..trials {
        let a1 = draw(&mut rng, 1.5, 0.2);
        let a2 = draw(&mut rng, 1.5, 0.2);
        let mu1 = draw(&mut rng, 0.9, 0.1);
        if trial % 2 == 0 {
            let f1 = StarExpr::exponential(c(1.0, 0.0), a1, mu1 * a1);
            let f2 = if trial % 4 == 0 {
                StarExpr::exponential(c(1.0, 0.0), a2, mu1 * a2)
            } else {
                let mut mu2 = draw(&mut rng, 0.9, 0.1);
                while (mu1 - mu2).norm() < separation {
                    mu2 = draw(&mut rng, 0.9, 0.1);
                }
                let raw = StarExpr::exponential(c(1.0, 0.0), a2, mu2 * a2);
                transform_mu(&raw, mu1.arg() - mu2.arg(), mu1.norm() / mu2.norm())
                    .map_err(|e| e.to_string())?
            };
            let bracket = poisson_bracket(&f1, &f2);
            let size: f64 = bracket.terms().iter().map(|t| t.coeff.norm()).sum();
            aligned_max = aligned_max.max(size);
            if !bracket.is_zero() {
                out.fail(
                    "aligned_bracket_nonzero",
                    format!("trial {trial}: bracket size {size}"),
                );
            }
        } else {
            let mut mu2 = draw(&mut rng, 0.9, 0.1);
            while (mu1 - mu2).norm() < separation {
                mu2 = draw(&mut rng, 0.9, 0.1);
            }
            let f1 = StarExpr::exponential(c(1.0, 0.0), a1, mu1 * a1);
            let f2 = StarExpr::exponential(c(1.0, 0.0), a2, mu2 * a2);
            let bracket = poisson_bracket(&f1, &f2);
            let size: f64 = bracket.terms().iter().map(|t| t.coeff.norm()).sum();
            misaligned_min = misaligned_min.min(size);
            if bracket.is_zero() {
                out.fail(
                    "misaligned_bracket_zero",
                    format!("trial {trial}: mu1={mu1}, mu2={mu2}"),
                );
            }
        }
    }
    out.residuals
        .insert("aligned_bracket_max".to_string(), aligned_max);
    out.residuals
        .insert("misaligned_bracket_min".to_string(), misaligned_min);
    Ok(out)
}

fn conformal_invariance(params: &Params) -> Result<Outcome, String> {
    let grid = params.usize("grid")?;
    let tol = params.f64("tol")?;
    let fd_step = params.f64("fd_step")?;
    let mut out = Outcome::new();
    let square = GridDomain::new(-1.0, 1.0, -1.0, 1.0, grid, grid).map_err(|e| e.to_string())?;
    let upper_half =
        GridDomain::new(-1.0, 1.0, 0.25, 2.25, grid, grid).map_err(|e| e.to_string())?;
    let members = [
        FamilyMember::Affine {
            a: c(1.0, 0.0),
            b: c(0.4, 0.1),
            c: c(0.3, -0.2),
        },
        FamilyMember::Exponential {
            coeff: c(1.0, 0.0),
            alpha: c(1.0, 0.0),
            beta: c(0.25, 0.0),
        },
    ];
    let maps: [(&str, ConformalMap, &GridDomain); 5] = [
        ("identity", ConformalMap::Identity, &square),
        ("translation", ConformalMap::Translation(c(0.7, -0.3)), &square),
        (
            "scaling",
            ConformalMap::scaling(c(2.0, 1.0)).map_err(|e| e.to_string())?,
            &square,
        ),
        (
            "mobius",
            ConformalMap::mobius(c(1.0, 0.0), c(0.0, -1.0), c(1.0, 0.0), c(0.0, 1.0))
                .map_err(|e| e.to_string())?,
            &upper_half,
        ),
        ("exp_strip", ConformalMap::ExpStrip, &square),
    ];
    for member in &members {
        for (name, phi, dom) in &maps {
            let residual = beltrami::conformal_pullback_check(member, phi, dom, fd_step)
                .map_err(|e| e.to_string())?;
            out.check(name, residual, tol, || format!("{member:?} under {phi:?}"));
        }
    }
    Ok(out)
}

fn cauchy_2var(params: &Params) -> Result<Outcome, String> {
    let mut rng = params.rng()?;
    let trials = params.usize("trials")?;
    let tol = params.f64("tol")?;
    let nodes = params.usize("nodes")?;
    let mut out = Outcome::new();
    for trial in 0..trials {
        let alphas = vec![draw(&mut rng, 1.0, 0.3), draw(&mut rng, 1.0, 0.3)];
        let z0 = draw(&mut rng, 0.8, 0.0);
        let hbar = rng.random_range(0.0..0.6);
        let mf = MuFunction::new(alphas, z0, hbar).map_err(|e| e.to_string())?;
        let mus = vec![draw(&mut rng, 0.8, 0.0), draw(&mut rng, 0.8, 0.0)];
        let contours: Vec<ContourSpec> = mus
            .iter()
            .map(|&m| ContourSpec::new(c(0.0, 0.0), 2.0 * 1f64.max(m.norm()), nodes))
            .collect::<Result<_, _>>()
            .map_err(|e| e.to_string())?;
        let direct = cauchy::mu_function_eval(&mf, &mus).map_err(|e| e.to_string())?;
        let reproduced = cauchy::cauchy_reproduce(&mf, &mus, &contours).map_err(|e| e.to_string())?;
        out.check("max_reproduction_residual", (reproduced - direct).norm(), tol, || {
            format!("trial {trial}: mus {mus:?}")
        });

        let wider: Vec<ContourSpec> = mus
            .iter()
            .map(|&m| ContourSpec::new(c(0.0, 0.0), 3.0 * 1f64.max(m.norm()), nodes))
            .collect::<Result<_, _>>()
            .map_err(|e| e.to_string())?;
        let again = cauchy::cauchy_reproduce(&mf, &mus, &wider).map_err(|e| e.to_string())?;
        out.check("max_contour_dependence", (again - reproduced).norm(), tol, || {
            format!("trial {trial}")
        });

        for orders in [[1u32, 0u32], [1, 1]] {
            let got = cauchy::cauchy_derivative(&mf, &mus, &orders, &contours)
                .map_err(|e| e.to_string())?;
            let want =
                cauchy::analytic_derivative(&mf, &mus, &orders).map_err(|e| e.to_string())?;
            out.check("max_derivative_residual", (got - want).norm(), tol, || {
                format!("trial {trial}, orders {orders:?}")
            });
        }
    }
    Ok(out)
}

fn cauchy_3var(params: &Params) -> Result<Outcome, String> {
    let mut rng = params.rng()?;
    let trials = params.usize("trials")?;
    let tol = params.f64("tol")?;
    let nodes = params.usize("nodes")?;
    let mut out = Outcome::new();
    for trial in 0..trials {
        let alphas = vec![
            draw(&mut rng, 0.9, 0.3),
            draw(&mut rng, 0.9, 0.3),
            draw(&mut rng, 0.9, 0.3),
        ];
        let z0 = draw(&mut rng, 0.6, 0.0);
        let hbar = rng.random_range(0.0..0.5);
        let mf = MuFunction::new(alphas, z0, hbar).map_err(|e| e.to_string())?;
        let mus = vec![
            draw(&mut rng, 0.7, 0.0),
            draw(&mut rng, 0.7, 0.0),
            draw(&mut rng, 0.7, 0.0),
        ];
        let contours: Vec<ContourSpec> = mus
            .iter()
            .map(|&m| ContourSpec::new(c(0.0, 0.0), 2.0 * 1f64.max(m.norm()), nodes))
            .collect::<Result<_, _>>()
            .map_err(|e| e.to_string())?;
        let direct = cauchy::mu_function_eval(&mf, &mus).map_err(|e| e.to_string())?;
        let reproduced = cauchy::cauchy_reproduce(&mf, &mus, &contours).map_err(|e| e.to_string())?;
        out.check("max_reproduction_residual", (reproduced - direct).norm(), tol, || {
            format!("trial {trial}")
        });
    }
    Ok(out)
}

fn cr_residual_scenario(params: &Params) -> Result<Outcome, String> {
    let mut rng = params.rng()?;
    let trials = params.usize("trials")?;
    let tol = params.f64("tol")?;
    let second_tol = params.f64("second_tol")?;
    let step = params.f64("step")?;
    let mut out = Outcome::new();
    for trial in 0..trials {
        let alphas = vec![draw(&mut rng, 1.0, 0.3), draw(&mut rng, 1.0, 0.3)];
        let z0 = draw(&mut rng, 0.8, 0.0);
        let hbar = rng.random_range(0.0..0.6);
        let mf = MuFunction::new(alphas, z0, hbar).map_err(|e| e.to_string())?;
        let mus = vec![draw(&mut rng, 0.8, 0.0), draw(&mut rng, 0.8, 0.0)];
        for j in 0..2 {
            let r = cauchy::cr_residual(&mf, &mus, j, step).map_err(|e| e.to_string())?;
            out.check("max_first_order", r, tol, || format!("trial {trial}, j={j}"));
        }
        for j in 0..2 {
            for k in 0..2 {
                let r = cauchy::cr_residual_second(&mf, &mus, j, k, step)
                    .map_err(|e| e.to_string())?;
                out.check("max_second_mixed", r, second_tol, || {
                    format!("trial {trial}, j={j}, k={k}")
                });
            }
        }
    }
    Ok(out)
}

fn lagrangian_phase(params: &Params) -> Result<Outcome, String> {
    let mut rng = params.rng()?;
    let trials = params.usize("trials")?;
    let tol = params.f64("tol")?;
    let grid = params.usize("grid")?;
    let fixed_alpha = params.opt_complex("alpha")?;
    let fixed_beta = params.opt_complex("beta")?;
    let fixed_coeff = params.opt_complex("coeff")?;
    let fixed_hbar = params.opt_f64("hbar")?;
    let dom = GridDomain::new(-1.0, 1.0, -1.0, 1.0, grid, grid).map_err(|e| e.to_string())?;
    let mut out = Outcome::new();

    let fixed_run = fixed_alpha.is_some() || fixed_beta.is_some() || fixed_hbar.is_some();
    let runs = if fixed_run { 1 } else { trials };
    for trial in 0..runs {
        let coeff = fixed_coeff.unwrap_or_else(|| draw(&mut rng, 1.5, 0.1));
        let alpha = fixed_alpha.unwrap_or_else(|| draw(&mut rng, 1.2, 0.2));
        let beta = fixed_beta.unwrap_or_else(|| draw(&mut rng, 1.0, 0.0));
        let hbar = fixed_hbar.unwrap_or_else(|| rng.random_range(-1.5..1.5));

        let phi = StarExpr::exponential(coeff, alpha, beta);
        let phi_dag = phi.conj();
        let lagrangian = phi_dag
            .d_x()
            .mul(&phi.d_x())
            .add(&phi_dag.d_y().mul(&phi.d_y()));
        let cfg = StarConfig::exact(hbar);
        let lagrangian_star = star(&phi_dag.d_x(), &phi.d_x(), &cfg)
            .map_err(|e| e.to_string())?
            .add(&star(&phi_dag.d_y(), &phi.d_y(), &cfg).map_err(|e| e.to_string())?);

        let exponent = -hbar * (alpha.norm_sqr() - beta.norm_sqr());
        let phase = c(0.0, exponent).exp();
        if fixed_run {
            out.witnesses
                .insert("phase".to_string(), format!("exp({exponent}i)"));
        }
        for z in dom.points() {
            let lhs = lagrangian_star.eval(z).map_err(|e| e.to_string())?;
            let rhs = phase * lagrangian.eval(z).map_err(|e| e.to_string())?;
            let residual = (lhs - rhs).norm() / rhs.norm();
            out.check("max_pointwise_residual", residual, tol, || {
                format!("trial {trial} at z={z}")
            });
        }
    }
    Ok(out)
}

fn qc_classification(params: &Params) -> Result<Outcome, String> {
    let mut rng = params.rng()?;
    let cases = params.usize("cases")?;
    let grid = params.usize("grid")?;
    let k_threshold = params.f64("k_threshold")?;
    if !(0.0..1.0).contains(&k_threshold) {
        return Err("k_threshold must lie in [0, 1)".to_string());
    }
    let dom = GridDomain::new(-1.0, 1.0, -1.0, 1.0, grid, grid).map_err(|e| e.to_string())?;
    let mut out = Outcome::new();
    let mut disagreements = 0usize;
    for case in 0..cases {
        let (expr, mu_abs, dz_ok) = match case % 5 {
            0 => {
                let a = draw(&mut rng, 1.5, 0.3);
                let ratio = rng.random_range(0.05..0.9);
                let b = a * ratio * Complex64::from_polar(1.0, rng.random_range(0.0..std::f64::consts::TAU));
                (StarExpr::affine(a, b, draw(&mut rng, 1.0, 0.0)), ratio, true)
            }
            1 => {
                let a = draw(&mut rng, 1.0, 0.2);
                let ratio = rng.random_range(1.1..3.0);
                let b = a * ratio * Complex64::from_polar(1.0, rng.random_range(0.0..std::f64::consts::TAU));
                (StarExpr::affine(a, b, c(0.0, 0.0)), ratio, true)
            }
            2 => {
                let alpha = draw(&mut rng, 1.2, 0.3);
                let ratio = rng.random_range(0.05..0.9);
                let beta = alpha * ratio * Complex64::from_polar(1.0, rng.random_range(0.0..std::f64::consts::TAU));
                (StarExpr::exponential(c(1.0, 0.0), alpha, beta), ratio, true)
            }
            3 => {
                let alpha = draw(&mut rng, 1.2, 0.3);
                let ratio = rng.random_range(1.1..3.0);
                let beta = alpha * ratio * Complex64::from_polar(1.0, rng.random_range(0.0..std::f64::consts::TAU));
                (StarExpr::exponential(c(1.0, 0.0), alpha, beta), ratio, true)
            }
            _ => (StarExpr::zbar(), f64::INFINITY, false),
        };
        let report = mwqc_core::qc_certify(&expr, &dom, k_threshold);
        let analytic = dz_ok && mu_abs < k_threshold;
        if report.verdict != analytic {
            disagreements += 1;
            out.fail(
                "verdict_disagreement",
                format!("case {case}: grid verdict {}, analytic {}", report.verdict, analytic),
            );
        }
        if dz_ok {
            out.check(
                "max_k_hat_error",
                (report.k_hat - mu_abs).abs() / mu_abs.max(1.0),
                1e-9,
                || format!("case {case}"),
            );
        }
    }
    out.residuals
        .insert("disagreements".to_string(), disagreements as f64);
    Ok(out)
}

fn derivative_fd(params: &Params) -> Result<Outcome, String> {
    let mut rng = params.rng()?;
    let trials = params.usize("trials")?;
    let tol = params.f64("tol")?;
    let step = params.f64("step")?;
    let mut out = Outcome::new();
    for trial in 0..trials {
        let n_terms = rng.random_range(1..4);
        let raw: Vec<Term> = (0..n_terms)
            .map(|_| {
                Term::new(
                    draw(&mut rng, 2.0, 0.05),
                    rng.random_range(0..4),
                    rng.random_range(0..4),
                    draw(&mut rng, 1.5, 0.0),
                    draw(&mut rng, 1.5, 0.0),
                )
            })
            .collect();
        let f = StarExpr::canonicalize(raw).map_err(|e| e.to_string())?;
        let dz = f.d_z();
        let dzbar = f.d_zbar();
        let samples: Vec<Complex64> = (0..5)
            .flat_map(|ix| (0..5).map(move |iy| c(-0.8 + 0.4 * ix as f64, -0.8 + 0.4 * iy as f64)))
            .collect();
        let mut scale = 1.0f64;
        for &z in &samples {
            scale = scale
                .max(dz.eval(z).map_err(|e| e.to_string())?.norm())
                .max(dzbar.eval(z).map_err(|e| e.to_string())?.norm());
        }
        for &z in &samples {
            let (fd_z, fd_zbar) = wirtinger_fd(|w| f.eval(w), z, step).map_err(|e| e.to_string())?;
            let err_z = (fd_z - dz.eval(z).map_err(|e| e.to_string())?).norm() / scale;
            let err_zbar =
                (fd_zbar - dzbar.eval(z).map_err(|e| e.to_string())?).norm() / scale;
            out.check("max_fd_error", err_z.max(err_zbar), tol, || {
                format!("trial {trial} at z={z}")
            });
        }
    }
    Ok(out)
}

fn parser_roundtrip(params: &Params) -> Result<Outcome, String> {
    let mut rng = params.rng()?;
    let trials = params.usize("trials")?;
    let mut out = Outcome::new();
    let mut failures = 0usize;
    for trial in 0..trials {
        let n_terms = rng.random_range(0..4);
        let raw: Vec<Term> = (0..n_terms)
            .map(|_| {
                let freq = |rng: &mut ChaCha8Rng| {
                    if rng.random_range(0..2) == 0 {
                        c(0.0, 0.0)
                    } else {
                        draw(rng, 1.5, 0.0)
                    }
                };
                Term::new(
                    draw(&mut rng, 2.0, 0.01),
                    rng.random_range(0..4),
                    rng.random_range(0..4),
                    freq(&mut rng),
                    freq(&mut rng),
                )
            })
            .collect();
        let f = StarExpr::canonicalize(raw).map_err(|e| e.to_string())?;
        let text = serialize(&f);
        match parse(&text) {
            Ok(reparsed) if reparsed == f => {}
            Ok(_) => {
                failures += 1;
                out.fail("roundtrip_mismatch", format!("trial {trial}: {text:?}"));
            }
            Err(e) => {
                failures += 1;
                out.fail("roundtrip_parse_error", format!("trial {trial}: {text:?}: {e}"));
            }
        }
    }
    let error_cases: &[(&str, usize)] = &[
        ("2*@z", 2),
        ("z + $", 4),
        ("exp(z", 5),
        ("exp(z*z)", 4),
        ("z^65", 1),
        ("z z", 2),
        ("--z", 1),
        ("2*w", 2),
    ];
    for (src, want) in error_cases {
        match parse(src) {
            Err(e) if e.position == *want => {}
            Err(e) => {
                failures += 1;
                out.fail(
                    "error_position",
                    format!("{src:?}: reported byte {}, wanted {want}", e.position),
                );
            }
            Ok(_) => {
                failures += 1;
                out.fail("error_not_detected", format!("{src:?} parsed"));
            }
        }
    }
    out.residuals
        .insert("failures".to_string(), failures as f64);
    Ok(out)
}

// --- registry and runner -------------------------------------------------

pub fn registry() -> Vec<ScenarioSpec> {
    let mut list = vec![
        ScenarioSpec {
            id: "affine-star",
            claim: "star of affine pairs equals the pointwise product plus i*hbar*(a1*b2 - b1*a2)",
            defaults: || {
                let mut map = base_defaults(42, 100, 1e-12);
                map.insert("hbar_max".into(), json(2.0));
                map
            },
            run: affine_star,
        },
        ScenarioSpec {
            id: "exp-phase",
            claim: "star of exponential pairs is exp(-i*hbar*(alpha1*beta2 - beta1*alpha2)) times the pointwise product, and the truncated series obeys the factorial remainder bound",
            defaults: || {
                let mut map = base_defaults(42, 100, 1e-12);
                map.insert("hbar".into(), Value::Null);
                map
            },
            run: exp_phase,
        },
        ScenarioSpec {
            id: "hbar-series",
            claim: "series coefficients: order zero is the pointwise product, order one is i times the Poisson bracket, exponential orders follow the phase Taylor series, and the series terminates on polynomials",
            defaults: || {
                let mut map = base_defaults(42, 50, 1e-10);
                map.insert("max_order".into(), Value::from(6u64));
                map
            },
            run: hbar_series,
        },
        ScenarioSpec {
            id: "mu-composite",
            claim: "the Beltrami coefficient of an exponential star product is (beta1+beta2)/(alpha1+alpha2), independent of hbar",
            defaults: || {
                let mut map = base_defaults(42, 100, 1e-12);
                map.insert(
                    "hbars".into(),
                    Value::Array(vec![json(0.0), json(0.5), json(1.0), json(2.0)]),
                );
                map
            },
            run: mu_composite,
        },
        ScenarioSpec {
            id: "associativity",
            claim: "(f star g) star h equals f star (g star h), and the triple exponential phase is the sum of the three pairwise phases",
            defaults: || {
                let mut map = base_defaults(42, 100, 1e-10);
                map.insert("phase_tol".into(), json(1e-12));
                map
            },
            run: associativity,
        },
        ScenarioSpec {
            id: "poisson-vanishing",
            claim: "the Poisson bracket of exponential family members vanishes exactly when their Beltrami coefficients coincide, including coincidence forced by rotation and dilation",
            defaults: || {
                let mut map = base_defaults(42, 100, 0.0);
                map.insert("separation".into(), json(0.05));
                map
            },
            run: poisson_vanishing,
        },
        ScenarioSpec {
            id: "conformal-invariance",
            claim: "|mu| of affine and exponential members is invariant under precomposition with the conformal catalog maps",
            defaults: || {
                let mut map = base_defaults(42, 1, 1e-6);
                map.remove("trials");
                map.insert("grid".into(), Value::from(256u64));
                map.insert("fd_step".into(), json(1e-4));
                map
            },
            run: conformal_invariance,
        },
        ScenarioSpec {
            id: "cauchy-2var",
            claim: "the two-variable iterated Cauchy integral over circles reproduces F(mu1, mu2) and its first derivatives",
            defaults: || {
                let mut map = base_defaults(42, 20, 1e-8);
                map.insert("nodes".into(), Value::from(128u64));
                map
            },
            run: cauchy_2var,
        },
        ScenarioSpec {
            id: "cauchy-3var",
            claim: "the three-variable iterated Cauchy integral reproduces F(mu1, mu2, mu3)",
            defaults: || {
                let mut map = base_defaults(42, 3, 1e-6);
                map.insert("nodes".into(), Value::from(64u64));
                map
            },
            run: cauchy_3var,
        },
        ScenarioSpec {
            id: "cr-residual",
            claim: "F is holomorphic in each mu_j: numerical conjugate-derivatives and mixed second derivatives vanish",
            defaults: || {
                let mut map = base_defaults(42, 10, 1e-6);
                map.insert("second_tol".into(), json(1e-4));
                map.insert("step".into(), json(1e-4));
                map
            },
            run: cr_residual_scenario,
        },
        ScenarioSpec {
            id: "lagrangian-phase",
            claim: "the star-product Lagrangian density equals exp(-i*hbar*(1-|mu|^2)*|alpha|^2) times the pointwise density",
            defaults: || {
                let mut map = base_defaults(42, 20, 1e-10);
                map.insert("grid".into(), Value::from(16u64));
                map.insert("alpha".into(), Value::Null);
                map.insert("beta".into(), Value::Null);
                map.insert("coeff".into(), Value::Null);
                map.insert("hbar".into(), Value::Null);
                map
            },
            run: lagrangian_phase,
        },
        ScenarioSpec {
            id: "qc-classification",
            claim: "grid certification agrees with the analytic |mu|: members with |mu| < 1 certify, ratio >= 1 and antiholomorphic members fail",
            defaults: || {
                let mut map = base_defaults(42, 1, 0.0);
                map.remove("trials");
                map.insert("cases".into(), Value::from(50u64));
                map.insert("grid".into(), Value::from(64u64));
                map.insert("k_threshold".into(), json(beltrami::DEFAULT_K_THRESHOLD));
                map
            },
            run: qc_classification,
        },
        ScenarioSpec {
            id: "derivative-fd",
            claim: "symbolic Wirtinger derivatives agree with central finite differences of evaluation",
            defaults: || {
                let mut map = base_defaults(42, 50, 1e-6);
                map.insert("step".into(), json(1e-4));
                map
            },
            run: derivative_fd,
        },
        ScenarioSpec {
            id: "parser-roundtrip",
            claim: "parse of serialize is the identity on canonical expressions, and malformed input is reported at exact byte positions",
            defaults: || base_defaults(42, 1000, 0.0),
            run: parser_roundtrip,
        },
    ];
    list.sort_by_key(|s| s.id);
    list
}

pub fn find(id: &str) -> Result<ScenarioSpec, ScenarioError> {
    registry()
        .into_iter()
        .find(|s| s.id == id)
        .ok_or_else(|| ScenarioError::UnknownScenario(id.to_string()))
}

fn type_name(v: &Value) -> &'static str {
    match v {
        Value::Null => "null",
        Value::Bool(_) => "boolean",
        Value::Number(_) => "number",
        Value::String(_) => "string",
        Value::Array(_) => "array",
        Value::Object(_) => "object",
    }
}

/// Merge overrides into the scenario defaults, rejecting unknown keys and
/// type switches (null defaults accept numbers and strings).
fn merge_params(
    spec: &ScenarioSpec,
    overrides: &BTreeMap<String, Value>,
) -> Result<Params, ScenarioError> {
    let mut map = spec.defaults();
    for (key, value) in overrides {
        let Some(slot) = map.get_mut(key) else {
            return Err(ScenarioError::UnknownParameter {
                scenario: spec.id.to_string(),
                key: key.clone(),
            });
        };
        let compatible = matches!(slot, Value::Null)
            || value.is_null()
            || type_name(slot) == type_name(value);
        if !compatible {
            return Err(ScenarioError::InvalidOverride {
                scenario: spec.id.to_string(),
                key: key.clone(),
                expected: type_name(slot),
                got: type_name(value).to_string(),
            });
        }
        *slot = value.clone();
    }
    Ok(Params { map })
}

/// Run one scenario with overrides merged over its defaults.
pub fn run_scenario(
    id: &str,
    overrides: &BTreeMap<String, Value>,
) -> Result<CheckReport, ScenarioError> {
    let spec = find(id)?;
    let params = merge_params(&spec, overrides)?;
    let start = Instant::now();
    let (status, residuals, witnesses) = match (spec.run)(&params) {
        Ok(outcome) => {
            let status = if outcome.pass { Status::Pass } else { Status::Fail };
            (status, outcome.residuals, outcome.witnesses)
        }
        Err(message) => {
            let mut witnesses = BTreeMap::new();
            witnesses.insert("error".to_string(), message);
            (Status::Error, BTreeMap::new(), witnesses)
        }
    };
    let mut witnesses = witnesses;
    if status != Status::Pass && witnesses.is_empty() {
        witnesses.insert("failure".to_string(), "no witness recorded".to_string());
    }
    Ok(CheckReport {
        scenario: spec.id.to_string(),
        status,
        claim: spec.claim.to_string(),
        tolerance: spec.tolerance(&params),
        parameters: params.map,
        residuals,
        witnesses,
        wall: start.elapsed(),
    })
}

/// Run every registered scenario in id order.
///
/// `global` entries apply to every scenario that has the key among its
/// defaults; `per_scenario` entries are validated strictly.
pub fn run_all(
    global: &BTreeMap<String, Value>,
    per_scenario: &BTreeMap<String, BTreeMap<String, Value>>,
) -> Result<Vec<CheckReport>, ScenarioError> {
    for id in per_scenario.keys() {
        find(id)?;
    }
    let mut reports = Vec::new();
    for spec in registry() {
        let defaults = spec.defaults();
        let mut overrides: BTreeMap<String, Value> = global
            .iter()
            .filter(|(k, _)| defaults.contains_key(*k))
            .map(|(k, v)| (k.clone(), v.clone()))
            .collect();
        if let Some(extra) = per_scenario.get(spec.id) {
            overrides.extend(extra.iter().map(|(k, v)| (k.clone(), v.clone())));
        }
        reports.push(run_scenario(spec.id, &overrides)?);
    }
    Ok(reports)
}
