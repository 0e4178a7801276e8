//! Model input functions: d(.), alpha(.,.), V, tau. Each is a small
//! serialisable preset with an `eval` method; all are `Send + Sync` and
//! immutable after construction.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::{bump_mass, bump_profile, gauss_legendre, integrate, unit_sphere_area};

/// Mass-dependent diffusion rate d(m); particles move with generator d(m)Δ.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DiffusionCoefficient {
    Constant {
        value: f64,
    },
    /// `min(m^{-phi}, cap)`.
    Power {
        phi: f64,
        #[serde(default)]
        cap: Option<f64>,
    },
    /// Piecewise linear through `(masses[i], values[i])`, constant beyond
    /// the end knots.
    Tabulated { masses: Vec<f64>, values: Vec<f64> },
}

impl DiffusionCoefficient {
    pub fn constant(value: f64) -> Self {
        Self::Constant { value }
    }

    pub fn power(phi: f64) -> Self {
        Self::Power { phi, cap: None }
    }

    pub fn eval(&self, m: f64) -> f64 {
        match self {
            Self::Constant { value } => *value,
            Self::Power { phi, cap } => {
                let v = m.powf(-phi);
                cap.map_or(v, |c| v.min(c))
            }
            Self::Tabulated { masses, values } => piecewise_linear(masses, values, m),
        }
    }

    /// Declared upper bound D = sup d, when one exists.
    pub fn upper_bound(&self) -> Option<f64> {
        match self {
            Self::Constant { value } => Some(*value),
            Self::Power { phi, cap } => {
                if *phi == 0.0 {
                    Some(cap.map_or(1.0, |c| c.min(1.0)))
                } else {
                    *cap
                }
            }
            Self::Tabulated { values, .. } => values.iter().cloned().reduce(f64::max),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Self::Constant { value } if !(*value >= 0.0 && value.is_finite()) => {
                Err(Error::InvalidParameter(format!("diffusion constant {value} must be finite and >= 0")))
            }
            Self::Power { phi, cap } => {
                if !(*phi >= 0.0) {
                    return Err(Error::InvalidParameter(format!("power exponent {phi} must be >= 0")));
                }
                if let Some(c) = cap {
                    if !(*c > 0.0) {
                        return Err(Error::InvalidParameter(format!("diffusion cap {c} must be > 0")));
                    }
                }
                Ok(())
            }
            Self::Tabulated { masses, values } => {
                if masses.len() != values.len() || masses.len() < 2 {
                    return Err(Error::InvalidParameter("tabulated diffusion needs >= 2 matching knots".into()));
                }
                if masses.windows(2).any(|w| w[1] <= w[0]) {
                    return Err(Error::InvalidParameter("tabulated diffusion knots must increase".into()));
                }
                if values.iter().any(|v| !(*v > 0.0)) {
                    return Err(Error::InvalidParameter("tabulated diffusion values must be > 0".into()));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }
}

pub(crate) fn piecewise_linear(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    if x <= xs[0] {
        return ys[0];
    }
    let last = xs.len() - 1;
    if x >= xs[last] {
        return ys[last];
    }
    let k = xs.partition_point(|&v| v <= x) - 1;
    let t = (x - xs[k]) / (xs[k + 1] - xs[k]);
    ys[k] + t * (ys[k + 1] - ys[k])
}

/// Microscopic coagulation propensity alpha(n, m), symmetric by construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CoagulationPropensity {
    Constant {
        value: f64,
    },
    /// `scale * (n^eta + m^eta)`.
    SumEta {
        eta: f64,
        #[serde(default = "one")]
        scale: f64,
    },
    /// `scale * min(n, m)`.
    Min {
        #[serde(default = "one")]
        scale: f64,
    },
}

fn one() -> f64 {
    1.0
}

impl CoagulationPropensity {
    pub fn constant(value: f64) -> Self {
        Self::Constant { value }
    }

    pub fn eval(&self, n: f64, m: f64) -> f64 {
        match self {
            Self::Constant { value } => *value,
            Self::SumEta { eta, scale } => scale * (n.powf(*eta) + m.powf(*eta)),
            Self::Min { scale } => scale * n.min(m),
        }
    }

    pub fn is_symmetric(&self) -> bool {
        true
    }

    /// True when alpha vanishes identically.
    pub fn is_zero(&self) -> bool {
        match self {
            Self::Constant { value } => *value == 0.0,
            Self::SumEta { scale, .. } | Self::Min { scale } => *scale == 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match self {
            Self::Constant { value } => *value >= 0.0 && value.is_finite(),
            Self::SumEta { eta, scale } => *eta >= 0.0 && *scale >= 0.0,
            Self::Min { scale } => *scale >= 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!("invalid propensity {self:?}")))
        }
    }
}

/// Serialisable description of the interaction profile V.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InteractionPreset {
    /// Normalised C-infinity bump supported on `|x| < radius`.
    Bump { radius: f64 },
}

impl Default for InteractionPreset {
    fn default() -> Self {
        Self::Bump { radius: 1.0 }
    }
}

/// Interaction profile V >= 0 with compact support and unit integral.
#[derive(Debug, Clone, PartialEq)]
pub struct InteractionProfile {
    dim: usize,
    radius: f64,
    norm: f64,
}

impl InteractionProfile {
    pub fn bump(dim: usize, radius: f64) -> Result<Self> {
        if !(radius > 0.0) || dim == 0 {
            return Err(Error::InvalidParameter(format!("bump radius {radius} in d = {dim}")));
        }
        let norm = 1.0 / (radius.powi(dim as i32) * bump_mass(dim));
        Ok(Self { dim, radius, norm })
    }

    pub fn from_preset(preset: &InteractionPreset, dim: usize) -> Result<Self> {
        match preset {
            InteractionPreset::Bump { radius } => Self::bump(dim, *radius),
        }
    }

    pub fn preset(&self) -> InteractionPreset {
        InteractionPreset::Bump { radius: self.radius }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// C0: V(x) = 0 whenever |x| >= C0.
    pub fn support_radius(&self) -> f64 {
        self.radius
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        let r2: f64 = x.iter().map(|v| v * v).sum();
        self.eval_r2(r2)
    }

    /// V as a function of |x|^2.
    #[inline]
    pub fn eval_r2(&self, r2: f64) -> f64 {
        self.norm * bump_profile(r2 / (self.radius * self.radius))
    }

    pub fn peak(&self) -> f64 {
        self.eval_r2(0.0)
    }

    /// Integral of V by Cartesian tensor Gauss-Legendre quadrature over the
    /// bounding cube (radial quadrature in d > 4). Should be 1 to ~1e-6.
    pub fn normalization_certificate(&self) -> f64 {
        let d = self.dim;
        if d > 4 {
            let radial = integrate(
                |r| r.powi(d as i32 - 1) * self.eval_r2(r * r),
                0.0,
                self.radius,
                1e-12,
                0.0,
            );
            return unit_sphere_area(d) * radial;
        }
        let rule = gauss_legendre(48);
        let n = rule.len();
        let total = n.pow(d as u32);
        let mut sum = 0.0;
        for flat in 0..total {
            let mut rem = flat;
            let mut w = 1.0;
            let mut r2 = 0.0;
            for _ in 0..d {
                let (t, wt) = rule[rem % n];
                rem /= n;
                let x = self.radius * t;
                r2 += x * x;
                w *= wt * self.radius;
            }
            sum += w * self.eval_r2(r2);
        }
        sum
    }
}

/// Reference mass density tau(n) of the entropy functional; integrates to 1
/// over (0, inf).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum EntropyReference {
    /// `(n + 1)^{-2}`.
    #[default]
    InverseSquare,
    /// `exp(-n / scale) / scale`.
    Exponential { scale: f64 },
}

impl EntropyReference {
    pub fn eval(&self, n: f64) -> f64 {
        match self {
            Self::InverseSquare => (n + 1.0).powi(-2),
            Self::Exponential { scale } => (-n / scale).exp() / scale,
        }
    }
}
