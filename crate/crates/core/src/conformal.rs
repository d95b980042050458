//! Fixed catalog of conformal (biholomorphic) test maps.
//!
//! Arbitrary user maps are out of scope: injectivity cannot be certified
//! cheaply, so the catalog is limited to maps whose injectivity and
//! derivative bounds are known in closed form on the domains we admit.

use num_complex::Complex64;
use thiserror::Error;

use crate::beltrami::GridDomain;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ConformalMap {
    Identity,
    /// `z -> z + t`.
    Translation(Complex64),
    /// `z -> s * z` with `s != 0`.
    Scaling(Complex64),
    /// `z -> (a z + b) / (c z + d)` with `a d - b c != 0`.
    Mobius {
        a: Complex64,
        b: Complex64,
        c: Complex64,
        d: Complex64,
    },
    /// `z -> exp(z)`, injective on horizontal strips of height below `2 pi`.
    ExpStrip,
}

#[derive(Debug, Error, PartialEq)]
pub enum ConformalMapError {
    #[error("scaling factor must be nonzero")]
    DegenerateScaling,
    #[error("Mobius coefficients are singular (a*d - b*c = 0)")]
    SingularMobius,
    #[error("Mobius pole {pole} lies inside or too close to the domain")]
    PoleInsideDomain { pole: Complex64 },
    #[error("domain height {height} does not fit an injectivity strip of exp (< 2 pi)")]
    StripTooTall { height: f64 },
}

impl ConformalMap {
    pub fn scaling(s: Complex64) -> Result<Self, ConformalMapError> {
        if s.norm() == 0.0 {
            return Err(ConformalMapError::DegenerateScaling);
        }
        Ok(ConformalMap::Scaling(s))
    }

    pub fn mobius(
        a: Complex64,
        b: Complex64,
        c: Complex64,
        d: Complex64,
    ) -> Result<Self, ConformalMapError> {
        if (a * d - b * c).norm() == 0.0 {
            return Err(ConformalMapError::SingularMobius);
        }
        Ok(ConformalMap::Mobius { a, b, c, d })
    }

    pub fn apply(&self, z: Complex64) -> Complex64 {
        match *self {
            ConformalMap::Identity => z,
            ConformalMap::Translation(t) => z + t,
            ConformalMap::Scaling(s) => s * z,
            ConformalMap::Mobius { a, b, c, d } => (a * z + b) / (c * z + d),
            ConformalMap::ExpStrip => z.exp(),
        }
    }

    /// Holomorphic derivative of the map.
    pub fn derivative(&self, z: Complex64) -> Complex64 {
        match *self {
            ConformalMap::Identity => Complex64::new(1.0, 0.0),
            ConformalMap::Translation(_) => Complex64::new(1.0, 0.0),
            ConformalMap::Scaling(s) => s,
            ConformalMap::Mobius { a, b, c, d } => {
                let den = c * z + d;
                (a * d - b * c) / (den * den)
            }
            ConformalMap::ExpStrip => z.exp(),
        }
    }

    /// Check that the map is conformal and injective on `dom`, leaving a
    /// `margin` so that finite-difference stencils stay on the good side of
    /// any pole or strip boundary.
    pub fn validate_on(&self, dom: &GridDomain, margin: f64) -> Result<(), ConformalMapError> {
        match *self {
            ConformalMap::Mobius { c, d, .. } if c.norm() > 0.0 => {
                let pole = -d / c;
                let inside = pole.re >= dom.re_min - margin
                    && pole.re <= dom.re_max + margin
                    && pole.im >= dom.im_min - margin
                    && pole.im <= dom.im_max + margin;
                if inside {
                    return Err(ConformalMapError::PoleInsideDomain { pole });
                }
                Ok(())
            }
            ConformalMap::ExpStrip => {
                let height = dom.im_max - dom.im_min + 2.0 * margin;
                if height >= 2.0 * std::f64::consts::PI {
                    return Err(ConformalMapError::StripTooTall { height });
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }
}
