//! Model parameters, the k_eps particle-count scaling and rho(n).

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::density::{InitialDensity, InitialPreset};
use super::phi::{construct_phi, PhiFunction};
use super::presets::{CoagulationPropensity, DiffusionCoefficient, EntropyReference, InteractionPreset, InteractionProfile};
use crate::error::{Error, Result};
use crate::quadrature::integrate;

/// `k_eps = eps^{2-d}` for d >= 3 and `|log eps|` for d = 2.
pub fn k_epsilon(epsilon: f64, dim: usize) -> Result<f64> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::InvalidParameter(format!("epsilon = {epsilon} must lie in (0, 1)")));
    }
    match dim {
        0 | 1 => Err(Error::UnsupportedDimension { dim, reason: "k_eps needs d >= 2" }),
        2 => Ok(epsilon.ln().abs()),
        _ => Ok(epsilon.powi(2 - dim as i32)),
    }
}

/// The eps with `k_eps Z = N`, i.e. `(Z/N)^{1/(d-2)}`.
pub fn epsilon_for_count(count: u64, total: f64, dim: usize) -> Result<f64> {
    if dim == 2 {
        return Err(Error::UnsupportedDimension { dim, reason: "inverting |log eps| is not supported" });
    }
    if dim < 2 {
        return Err(Error::UnsupportedDimension { dim, reason: "k_eps needs d >= 2" });
    }
    if !(total > 0.0) || !(count as f64 > total) {
        return Err(Error::InvalidParameter(format!("need N > Z > 0, got N = {count}, Z = {total}")));
    }
    Ok((total / count as f64).powf(1.0 / (dim as f64 - 2.0)))
}

/// `rho(n) = int_0^n alpha(m, n-m) tau(m) tau(n-m) / tau(n) dm`.
pub fn rho_of_n(alpha: &CoagulationPropensity, tau: &EntropyReference, n: f64) -> Result<f64> {
    let tn = tau.eval(n);
    if tn == 0.0 {
        return Err(Error::DivisionByZero(format!("tau({n}) = 0")));
    }
    if n <= 0.0 {
        return Ok(0.0);
    }
    let v = integrate(
        |m| alpha.eval(m, n - m) * tau.eval(m) * tau.eval(n - m),
        0.0,
        n,
        1e-10,
        0.0,
    );
    Ok(v / tn)
}

/// Inputs of the microscopic model on the periodic box `[0, box_side)^d`.
#[derive(Debug, Clone)]
pub struct ModelParams {
    pub dim: usize,
    pub diffusion: DiffusionCoefficient,
    pub phi: PhiFunction,
    pub alpha: CoagulationPropensity,
    pub potential: InteractionProfile,
    pub epsilon: f64,
    /// Z.
    pub total: f64,
    pub box_side: f64,
    pub tau: EntropyReference,
}

impl ModelParams {
    /// d = 1, phi = 1, alpha = 1, unit bump, tau = (n+1)^{-2}.
    pub fn standard(dim: usize, epsilon: f64, total: f64, box_side: f64) -> Result<Self> {
        let diffusion = DiffusionCoefficient::constant(1.0);
        let params = Self {
            dim,
            phi: PhiFunction::constant(1.0, diffusion.clone()),
            diffusion,
            alpha: CoagulationPropensity::constant(1.0),
            potential: InteractionProfile::bump(dim, 1.0)?,
            epsilon,
            total,
            box_side,
            tau: EntropyReference::InverseSquare,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn with_alpha(mut self, alpha: CoagulationPropensity) -> Self {
        self.alpha = alpha;
        self
    }

    pub fn with_diffusion(mut self, diffusion: DiffusionCoefficient) -> Self {
        self.phi = PhiFunction::constant(1.0, diffusion.clone());
        self.diffusion = diffusion;
        self
    }

    pub fn with_epsilon(mut self, epsilon: f64) -> Self {
        self.epsilon = epsilon;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim < 3 {
            return Err(Error::UnsupportedDimension { dim: self.dim, reason: "the particle model needs d >= 3" });
        }
        if self.potential.dim() != self.dim {
            return Err(Error::InvalidParameter("interaction profile dimension mismatch".into()));
        }
        self.diffusion.validate()?;
        self.alpha.validate()?;
        if !(self.total > 0.0 && self.total.is_finite()) {
            return Err(Error::InvalidParameter(format!("Z = {} must be positive and finite", self.total)));
        }
        k_epsilon(self.epsilon, self.dim)?;
        let limit = self.box_side / (4.0 * self.potential.support_radius());
        if !(self.epsilon < limit) {
            return Err(Error::InvalidParameter(format!(
                "epsilon = {} must be below L/(4 C0) = {limit}",
                self.epsilon
            )));
        }
        Ok(())
    }

    pub fn k_epsilon(&self) -> f64 {
        self.epsilon.powi(2 - self.dim as i32)
    }

    /// N = round(k_eps Z).
    pub fn particle_count(&self) -> usize {
        (self.k_epsilon() * self.total).round() as usize
    }

    /// Weight eps^{d-2} carried by each particle in the empirical measure.
    pub fn particle_weight(&self) -> f64 {
        self.epsilon.powi(self.dim as i32 - 2)
    }

    /// C0 * eps.
    pub fn interaction_range(&self) -> f64 {
        self.potential.support_radius() * self.epsilon
    }

    /// D = sup d.
    pub fn diffusion_bound(&self) -> Result<f64> {
        self.diffusion
            .upper_bound()
            .filter(|d| *d > 0.0 && d.is_finite())
            .ok_or_else(|| Error::InvalidParameter("diffusion coefficient has no finite positive bound D".into()))
    }
}

/// phi as read from a config: a constant, or built from a monotonicity
/// partition of d.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PhiConfig {
    Constant { value: f64 },
    Construct { partition: Vec<f64>, scale: f64 },
}

impl Default for PhiConfig {
    fn default() -> Self {
        Self::Constant { value: 1.0 }
    }
}

fn default_dim() -> usize {
    3
}

/// JSON form of the model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    #[serde(default = "default_dim")]
    pub dim: usize,
    pub box_side: f64,
    pub epsilon: f64,
    pub diffusion: DiffusionCoefficient,
    pub alpha: CoagulationPropensity,
    #[serde(default)]
    pub potential: InteractionPreset,
    #[serde(default)]
    pub phi: PhiConfig,
    #[serde(default)]
    pub tau: EntropyReference,
    pub initial: InitialPreset,
}

impl ModelConfig {
    pub fn build(&self) -> Result<(ModelParams, InitialDensity)> {
        let h = InitialDensity::from_preset(&self.initial, self.dim, self.box_side)?;
        let phi = match &self.phi {
            PhiConfig::Constant { value } => PhiFunction::constant(*value, self.diffusion.clone()),
            PhiConfig::Construct { partition, scale } => construct_phi(&self.diffusion, partition, *scale)?,
        };
        let params = ModelParams {
            dim: self.dim,
            diffusion: self.diffusion.clone(),
            phi,
            alpha: self.alpha.clone(),
            potential: InteractionProfile::from_preset(&self.potential, self.dim)?,
            epsilon: self.epsilon,
            total: h.total(),
            box_side: self.box_side,
            tau: self.tau.clone(),
        };
        params.validate()?;
        Ok((params, h))
    }

    /// SHA-256 of the canonical JSON form, ignoring epsilon, so every rung
    /// of an eps ladder shares one hash.
    pub fn physics_hash(&self) -> String {
        let mut canonical = self.clone();
        canonical.epsilon = 0.0;
        let bytes = serde_json::to_vec(&canonical).expect("model config serialises");
        let digest = Sha256::digest(&bytes);
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn k_epsilon_values() {
        assert!((k_epsilon(0.1, 3).unwrap() - 10.0).abs() < 1e-12);
        assert!((k_epsilon(0.1, 2).unwrap() - std::f64::consts::LN_10).abs() < 1e-14);
        assert!((k_epsilon(0.1, 4).unwrap() - 100.0).abs() < 1e-10);
        assert!(k_epsilon(1.0, 3).is_err());
        assert!(k_epsilon(0.0, 3).is_err());
        assert!(k_epsilon(-0.5, 3).is_err());
    }

    #[test]
    fn epsilon_for_count_values() {
        assert!((epsilon_for_count(1000, 1.0, 3).unwrap() - 0.001).abs() < 1e-15);
        assert!((epsilon_for_count(100, 1.0, 4).unwrap() - 0.1).abs() < 1e-15);
        assert!(matches!(
            epsilon_for_count(100, 1.0, 2),
            Err(Error::UnsupportedDimension { dim: 2, .. })
        ));
        assert!(epsilon_for_count(1, 2.0, 3).is_err());
    }

    #[test]
    fn rho_vanishes_linearly_at_zero() {
        let a = CoagulationPropensity::constant(1.0);
        let tau = EntropyReference::InverseSquare;
        let r1 = rho_of_n(&a, &tau, 1e-3).unwrap();
        let r2 = rho_of_n(&a, &tau, 2e-3).unwrap();
        assert!(r1 > 0.0 && (r2 / r1 - 2.0).abs() < 1e-2);
        assert_eq!(rho_of_n(&a, &tau, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn rho_matches_trapezoid_oracle() {
        let a = CoagulationPropensity::constant(1.0);
        let tau = EntropyReference::InverseSquare;
        let n = 1.0;
        let steps = 1_000_000;
        let h = n / steps as f64;
        let f = |m: f64| tau.eval(m) * tau.eval(n - m) / tau.eval(n);
        let mut trap = 0.5 * (f(0.0) + f(n));
        for i in 1..steps {
            trap += f(i as f64 * h);
        }
        trap *= h;
        assert!((rho_of_n(&a, &tau, n).unwrap() - trap).abs() < 1e-5);
    }

    #[test]
    fn rho_linear_bound_for_additive_alpha() {
        let a = CoagulationPropensity::SumEta { eta: 1.0, scale: 1.0 };
        let tau = EntropyReference::InverseSquare;
        let grid: Vec<f64> = (1..=100).map(|i| i as f64 * 0.1).collect();
        let ratios: Vec<f64> = grid.iter().map(|&n| rho_of_n(&a, &tau, n).unwrap() / n).collect();
        let c = ratios.iter().cloned().fold(0.0, f64::max);
        assert!(c.is_finite());
        for (&n, &r) in grid.iter().zip(&ratios) {
            assert!(r >= 0.0 && r * n <= c * n * (1.0 + 1e-12));
        }
        // rho(n)/n stays bounded as n grows.
        assert!(ratios[99] < 2.0 * ratios[49]);
    }

    #[test]
    fn tau_zero_is_division_error() {
        let a = CoagulationPropensity::constant(1.0);
        let tau = EntropyReference::Exponential { scale: 1e-3 };
        assert!(matches!(rho_of_n(&a, &tau, 1e3), Err(Error::DivisionByZero(_))));
    }
}
