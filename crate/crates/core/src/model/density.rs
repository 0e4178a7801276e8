//! Initial densities h_n(x) = Z * s(x) * p(n) with a normalised spatial
//! profile s on the box and a normalised mass profile p.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use statrs::function::erf::erf;

use crate::error::{Error, Result};
use crate::quadrature::integrate;

/// Knots of the tabulated inverse mass CDF.
pub const INVERSE_CDF_KNOTS: usize = 4096;

/// Serialisable description of an initial density.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialPreset {
    /// Gaussian in space (truncated to the box) times `exp(-n/mass_scale)`.
    GaussianExp {
        total: f64,
        sigma: f64,
        #[serde(default)]
        center: Option<Vec<f64>>,
        #[serde(default = "unit")]
        mass_scale: f64,
    },
    /// Uniform mass band `[mass - width, mass + width]`; uniform in space
    /// unless `sigma` is given.
    MonodisperseBand {
        total: f64,
        mass: f64,
        #[serde(default = "default_width")]
        width: f64,
        #[serde(default)]
        sigma: Option<f64>,
        #[serde(default)]
        center: Option<Vec<f64>>,
    },
}

fn unit() -> f64 {
    1.0
}

fn default_width() -> f64 {
    0.01
}

#[derive(Debug, Clone, PartialEq)]
pub enum SpatialProfile {
    Uniform,
    /// Truncated Gaussian; `norm` makes it integrate to one over the box.
    Gaussian { center: Vec<f64>, sigma: f64, norm: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MassProfile {
    Exponential { scale: f64 },
    Band { lo: f64, hi: f64 },
}

impl MassProfile {
    pub fn density(&self, n: f64) -> f64 {
        match *self {
            Self::Exponential { scale } => {
                if n < 0.0 {
                    0.0
                } else {
                    (-n / scale).exp() / scale
                }
            }
            Self::Band { lo, hi } => {
                if (lo..=hi).contains(&n) {
                    1.0 / (hi - lo)
                } else {
                    0.0
                }
            }
        }
    }

    pub fn cdf(&self, n: f64) -> f64 {
        match *self {
            Self::Exponential { scale } => {
                if n <= 0.0 {
                    0.0
                } else {
                    -(-n / scale).exp_m1()
                }
            }
            Self::Band { lo, hi } => ((n - lo) / (hi - lo)).clamp(0.0, 1.0),
        }
    }

    pub fn quantile(&self, q: f64) -> f64 {
        match *self {
            Self::Exponential { scale } => -scale * (-q).ln_1p(),
            Self::Band { lo, hi } => lo + q * (hi - lo),
        }
    }

    pub fn mean(&self) -> f64 {
        match *self {
            Self::Exponential { scale } => scale,
            Self::Band { lo, hi } => 0.5 * (lo + hi),
        }
    }

    /// Range holding all but ~e^-60 of the mass.
    pub fn support(&self) -> (f64, f64) {
        match *self {
            Self::Exponential { scale } => (0.0, 60.0 * scale),
            Self::Band { lo, hi } => (lo, hi),
        }
    }

    /// `int g(n) p(n) dn` by adaptive quadrature, split into decades near
    /// zero so weights singular at the origin are resolved.
    pub fn expectation(&self, g: impl Fn(f64) -> f64) -> f64 {
        let (lo, hi) = self.support();
        let mut breaks = vec![lo];
        if lo == 0.0 {
            let mut b = hi * 1e-12;
            while b < hi {
                breaks.push(b);
                b *= 10.0;
            }
        }
        breaks.push(hi);
        breaks
            .windows(2)
            .map(|w| integrate(|n| g(n) * self.density(n), w[0], w[1], 1e-10, 0.0))
            .sum()
    }
}

/// Tabulated inverse CDF on log-spaced knots.
#[derive(Debug, Clone)]
pub struct InverseCdf {
    knots: Vec<f64>,
    cdf: Vec<f64>,
}

impl InverseCdf {
    pub fn new(profile: &MassProfile) -> Self {
        let (lo, hi) = profile.support();
        let lo = if lo > 0.0 { lo } else { hi * 1e-12 };
        let ratio = (hi / lo).ln() / (INVERSE_CDF_KNOTS - 1) as f64;
        let mut knots: Vec<f64> = (0..INVERSE_CDF_KNOTS)
            .map(|i| lo * (ratio * i as f64).exp())
            .collect();
        knots[0] = lo;
        knots[INVERSE_CDF_KNOTS - 1] = hi;
        let cdf = knots.iter().map(|&n| profile.cdf(n)).collect();
        Self { knots, cdf }
    }

    pub fn sample(&self, u: f64) -> f64 {
        let c0 = self.cdf[0];
        if u <= c0 {
            return if c0 > 0.0 { self.knots[0] * u / c0 } else { self.knots[0] };
        }
        let last = self.cdf.len() - 1;
        if u >= self.cdf[last] {
            return self.knots[last];
        }
        let k = self.cdf.partition_point(|&c| c <= u) - 1;
        let span = self.cdf[k + 1] - self.cdf[k];
        let t = if span > 0.0 { (u - self.cdf[k]) / span } else { 0.0 };
        self.knots[k] + t * (self.knots[k + 1] - self.knots[k])
    }
}

/// Initial density `h_n(x) = total * s(x) * p(n)` on the box `[0, L)^d`.
#[derive(Debug, Clone, PartialEq)]
pub struct InitialDensity {
    dim: usize,
    box_side: f64,
    total: f64,
    spatial: SpatialProfile,
    mass: MassProfile,
}

fn truncated_gaussian_norm(center: &[f64], sigma: f64, side: f64) -> f64 {
    center
        .iter()
        .map(|&c| {
            let s = sigma * std::f64::consts::SQRT_2;
            0.5 * (erf((side - c) / s) - erf(-c / s)) * sigma * (2.0 * PI).sqrt()
        })
        .product::<f64>()
        .recip()
}

impl InitialDensity {
    pub fn new(dim: usize, box_side: f64, total: f64, spatial: SpatialProfile, mass: MassProfile) -> Result<Self> {
        if !(total >= 0.0 && total.is_finite()) {
            return Err(Error::InvalidParameter(format!("total {total} must be finite and >= 0")));
        }
        if !(box_side > 0.0) {
            return Err(Error::InvalidParameter(format!("box side {box_side} must be > 0")));
        }
        match mass {
            MassProfile::Exponential { scale } if !(scale > 0.0) => {
                return Err(Error::InvalidParameter(format!("mass scale {scale} must be > 0")))
            }
            MassProfile::Band { lo, hi } if !(lo > 0.0 && hi > lo) => {
                return Err(Error::InvalidParameter(format!("mass band [{lo}, {hi}] must be positive and non-empty")))
            }
            _ => {}
        }
        if let SpatialProfile::Gaussian { center, sigma, .. } = &spatial {
            if center.len() != dim || !(*sigma > 0.0) {
                return Err(Error::InvalidParameter("gaussian centre/sigma do not match the dimension".into()));
            }
        }
        Ok(Self { dim, box_side, total, spatial, mass })
    }

    pub fn from_preset(preset: &InitialPreset, dim: usize, box_side: f64) -> Result<Self> {
        let centre = |c: &Option<Vec<f64>>| c.clone().unwrap_or_else(|| vec![0.5 * box_side; dim]);
        let gaussian = |center: Vec<f64>, sigma: f64| SpatialProfile::Gaussian {
            norm: truncated_gaussian_norm(&center, sigma, box_side),
            center,
            sigma,
        };
        match preset {
            InitialPreset::GaussianExp { total, sigma, center, mass_scale } => Self::new(
                dim,
                box_side,
                *total,
                gaussian(centre(center), *sigma),
                MassProfile::Exponential { scale: *mass_scale },
            ),
            InitialPreset::MonodisperseBand { total, mass, width, sigma, center } => {
                let spatial = match sigma {
                    Some(s) => gaussian(centre(center), *s),
                    None => SpatialProfile::Uniform,
                };
                Self::new(dim, box_side, *total, spatial, MassProfile::Band { lo: mass - width, hi: mass + width })
            }
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn box_side(&self) -> f64 {
        self.box_side
    }

    /// Z = int int h.
    pub fn total(&self) -> f64 {
        self.total
    }

    pub fn spatial(&self) -> &SpatialProfile {
        &self.spatial
    }

    pub fn mass(&self) -> &MassProfile {
        &self.mass
    }

    /// Normalised spatial profile s(x); zero outside the box.
    pub fn spatial_density(&self, x: &[f64]) -> f64 {
        if x.iter().any(|&v| v < 0.0 || v >= self.box_side) {
            return 0.0;
        }
        match &self.spatial {
            SpatialProfile::Uniform => self.box_side.powi(-(self.dim as i32)),
            SpatialProfile::Gaussian { center, sigma, norm } => {
                let r2: f64 = x.iter().zip(center).map(|(a, b)| (a - b) * (a - b)).sum();
                norm * (-0.5 * r2 / (sigma * sigma)).exp()
            }
        }
    }

    /// Cell average of s over `[lo, lo + side)^d`.
    pub fn spatial_cell_average(&self, lo: &[f64], side: f64) -> f64 {
        match &self.spatial {
            SpatialProfile::Uniform => self.box_side.powi(-(self.dim as i32)),
            SpatialProfile::Gaussian { center, sigma, norm } => {
                let s = sigma * std::f64::consts::SQRT_2;
                let mut v = *norm;
                for (a, c) in lo.iter().zip(center) {
                    let b = (a + side).min(self.box_side);
                    v *= 0.5 * (erf((b - c) / s) - erf((a - c) / s)) * sigma * (2.0 * PI).sqrt() / side;
                }
                v
            }
        }
    }

    pub fn eval(&self, x: &[f64], n: f64) -> f64 {
        self.total * self.spatial_density(x) * self.mass.density(n)
    }

    /// `h-hat(x) = int (n + 1) h_n(x) dn`.
    pub fn hat(&self, x: &[f64]) -> f64 {
        self.total * self.spatial_density(x) * (self.mass.mean() + 1.0)
    }

    /// Mass-space factor of `h-bar_k`: `Z int n d^{d/2 - 1/k} phi^{dk/2 - 1} p dn`,
    /// so that `h-bar_k(x) = factor * s(x)`.
    pub fn bar_factor(&self, k: usize, d: impl Fn(f64) -> f64, phi: impl Fn(f64) -> f64) -> f64 {
        let dim = self.dim as f64;
        let kf = k as f64;
        let e_d = dim / 2.0 - 1.0 / kf;
        let e_phi = dim * kf / 2.0 - 1.0;
        self.total * self.mass.expectation(|n| n * d(n).powf(e_d) * phi(n).powf(e_phi))
    }

    /// Draws a mass from the tabulated inverse CDF.
    pub fn inverse_cdf(&self) -> InverseCdf {
        InverseCdf::new(&self.mass)
    }

    /// Peak of s, used as the rejection envelope.
    pub fn spatial_peak(&self) -> f64 {
        match &self.spatial {
            SpatialProfile::Uniform => self.box_side.powi(-(self.dim as i32)),
            SpatialProfile::Gaussian { norm, .. } => *norm,
        }
    }
}
