//! Self-similar scaling exponents for `d(n) = n^{-phi}` and
//! `beta(n, m) = n^eta + m^eta`.
//!
//! Under `g_n(x, t) = lambda^alpha f_{n lambda^gamma}(lambda^tau x, lambda t)`
//! the free motion, interaction and mass terms scale with the residuals
//! `1 - gamma phi - 2 tau`, `-alpha + gamma (1 + eta) + 1` and
//! `alpha - tau d - 2 gamma`. Here `alpha` is always the amplitude exponent,
//! never the microscopic propensity.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pde::{DensityField, SpatialMesh};

pub const CONDITION_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalingInput {
    pub phi: f64,
    pub eta: f64,
    pub dim: usize,
}

impl ScalingInput {
    pub fn new(phi: f64, eta: f64, dim: usize) -> Result<Self> {
        if !(phi.is_finite() && eta.is_finite() && phi >= 0.0 && eta >= 0.0) {
            return Err(Error::InvalidParameter(format!("phi = {phi}, eta = {eta} must be finite and >= 0")));
        }
        if dim < 2 {
            return Err(Error::UnsupportedDimension { dim, reason: "scaling needs d >= 2" });
        }
        Ok(Self { phi, eta, dim })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Exponents {
    pub gamma: f64,
    pub alpha: f64,
    pub tau: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CriticalExponents {
    pub gamma: f64,
    pub alpha: f64,
    pub tau: f64,
    /// All three conditions hold.
    pub critical: bool,
}

impl CriticalExponents {
    pub fn exponents(&self) -> Exponents {
        Exponents { gamma: self.gamma, alpha: self.alpha, tau: self.tau }
    }
}

/// Exponents preserving all three terms; `d = 2` always gives `(0, 1, 1/2)`.
pub fn critical_exponents(inp: &ScalingInput) -> Result<CriticalExponents> {
    let (phi, eta) = (inp.phi, inp.eta);
    let (gamma, alpha, tau) = if inp.dim == 2 {
        (0.0, 1.0, 0.5)
    } else {
        let d = inp.dim as f64;
        let denom = eta + phi * d / 2.0 - 1.0;
        if denom == 0.0 {
            return Err(Error::SingularScaling { phi, eta, dim: inp.dim });
        }
        (
            (d / 2.0 - 1.0) / denom,
            (d / 2.0 * (phi + eta + 1.0) - 2.0) / denom,
            (eta + phi - 1.0) / (2.0 * denom),
        )
    };
    let exps = Exponents { gamma, alpha, tau };
    let critical = check_scaling_conditions(&exps, inp).all();
    Ok(CriticalExponents { gamma, alpha, tau, critical })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScalingConditions {
    /// `1 - gamma phi - 2 tau`.
    pub free_motion: f64,
    /// `-alpha + gamma (1 + eta) + 1`.
    pub interaction: f64,
    /// `alpha - tau d - 2 gamma`.
    pub mass: f64,
    pub free_motion_holds: bool,
    pub interaction_holds: bool,
    pub mass_holds: bool,
}

impl ScalingConditions {
    pub fn all(&self) -> bool {
        self.free_motion_holds && self.interaction_holds && self.mass_holds
    }
}

pub fn check_scaling_conditions(e: &Exponents, inp: &ScalingInput) -> ScalingConditions {
    let free_motion = 1.0 - e.gamma * inp.phi - 2.0 * e.tau;
    let interaction = -e.alpha + e.gamma * (1.0 + inp.eta) + 1.0;
    let mass = mass_exponent(e, inp.dim);
    ScalingConditions {
        free_motion,
        interaction,
        mass,
        free_motion_holds: free_motion.abs() <= CONDITION_TOLERANCE,
        interaction_holds: interaction.abs() <= CONDITION_TOLERANCE,
        mass_holds: mass.abs() <= CONDITION_TOLERANCE,
    }
}

/// `alpha - tau d - 2 gamma`: the power of lambda picked up by the total mass.
pub fn mass_exponent(e: &Exponents, dim: usize) -> f64 {
    e.alpha - e.tau * dim as f64 - 2.0 * e.gamma
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regime {
    /// `phi + eta >= 1`: scaling does not rule out mass escaping to large
    /// particles.
    ScalingPermitsHeavyMass,
    /// `phi + eta < 1`.
    MassConserving,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BlowupExponents {
    pub gamma: f64,
    pub alpha: f64,
    pub tau: f64,
    /// `alpha - 2 gamma`.
    pub mass_exponent: f64,
    pub regime: Regime,
}

/// Exponents with `tau = 0` that keep free motion and interaction:
/// `gamma = 1/phi`, `alpha = 1 + (1 + eta)/phi`.
pub fn blowup_exponents(phi: f64, eta: f64) -> Result<BlowupExponents> {
    if !(phi > 0.0) {
        return Err(Error::InvalidParameter(format!("blow-up exponents need phi > 0, got {phi}")));
    }
    let gamma = 1.0 / phi;
    let alpha = 1.0 + (1.0 + eta) / phi;
    // alpha - 2 gamma in closed form, so its sign matches the regime test exactly.
    let mass = (phi + eta - 1.0) / phi;
    let regime = if phi + eta >= 1.0 { Regime::ScalingPermitsHeavyMass } else { Regime::MassConserving };
    Ok(BlowupExponents { gamma, alpha, tau: 0.0, mass_exponent: mass, regime })
}

/// `g_n(x, t) = lambda^alpha f_{n lambda^gamma}(lambda^tau x, lambda t)`.
///
/// The rescaled field lives on the mass grid divided by `lambda^gamma` and
/// the box divided by `lambda^tau`, so values are carried over without
/// interpolation: frame `f(t_k)` becomes `g(t_k / lambda)`.
pub fn rescale_field(frames: &[DensityField], lambda: f64, e: &Exponents) -> Result<Vec<DensityField>> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidParameter(format!("lambda = {lambda}")));
    }
    let amp = lambda.powf(e.alpha);
    let mass_factor = lambda.powf(-e.gamma);
    let space_factor = lambda.powf(-e.tau);
    frames
        .iter()
        .map(|f| {
            let grid = f.grid.scaled(mass_factor);
            let mesh = SpatialMesh { side: f.mesh.side * space_factor, ..f.mesh };
            if !(grid.cap().is_finite() && grid.pivot(0) > 0.0 && mesh.side.is_finite() && mesh.side > 0.0) {
                return Err(Error::Domain("rescaled grid degenerates".into()));
            }
            Ok(DensityField {
                grid,
                mesh,
                values: f.values.iter().map(|v| v * amp).collect(),
                time: f.time / lambda,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::DiffusionCoefficient;
    use crate::pde::{exact_constant_kernel, weak_residual, MassGrid, PivotKernel, SpatialFactor, TimeFactor, WeakTestFunction};
    use crate::sim::MassWeight;

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() < 1e-12
    }

    #[test]
    fn critical_examples() {
        let c = critical_exponents(&ScalingInput::new(1.0, 0.0, 3).unwrap()).unwrap();
        assert!(close(c.gamma, 1.0) && close(c.alpha, 2.0) && close(c.tau, 0.0) && c.critical);
        let c = critical_exponents(&ScalingInput::new(0.0, 0.0, 3).unwrap()).unwrap();
        assert!(close(c.gamma, -0.5) && close(c.alpha, 0.5) && close(c.tau, 0.5));
        let c = critical_exponents(&ScalingInput::new(0.3, 0.2, 2).unwrap()).unwrap();
        assert_eq!((c.gamma, c.alpha, c.tau), (0.0, 1.0, 0.5));
    }

    #[test]
    fn singular_denominator() {
        let inp = ScalingInput::new(0.5, 0.25, 3).unwrap();
        assert!(matches!(critical_exponents(&inp), Err(Error::SingularScaling { .. })));
    }

    #[test]
    fn condition_residuals() {
        let inp = ScalingInput::new(1.0, 0.0, 2).unwrap();
        let r = check_scaling_conditions(&Exponents { gamma: 0.0, alpha: 1.0, tau: 0.5 }, &inp);
        assert!(r.all());
        let inp3 = ScalingInput::new(1.0, 0.0, 3).unwrap();
        let mut e = critical_exponents(&inp3).unwrap().exponents();
        e.tau += 1e-3;
        let r = check_scaling_conditions(&e, &inp3);
        assert!((r.free_motion + 2e-3).abs() < 1e-15);
    }

    #[test]
    fn mass_exponent_examples() {
        let b = blowup_exponents(1.0, 1.0).unwrap();
        assert!(close(mass_exponent(&Exponents { gamma: b.gamma, alpha: b.alpha, tau: 0.0 }, 3), 1.0));
        assert_eq!(mass_exponent(&Exponents { gamma: 0.0, alpha: 0.0, tau: 0.0 }, 3), 0.0);
    }

    #[test]
    fn blowup_examples() {
        let b = blowup_exponents(1.0, 1.0).unwrap();
        assert!(close(b.gamma, 1.0) && close(b.alpha, 3.0));
        assert_eq!(b.regime, Regime::ScalingPermitsHeavyMass);
        let b = blowup_exponents(0.5, 0.0).unwrap();
        assert!(close(b.gamma, 2.0) && close(b.alpha, 3.0) && close(b.mass_exponent, -1.0));
        assert_eq!(b.regime, Regime::MassConserving);
        let b = blowup_exponents(2.0, 0.0).unwrap();
        assert!(close(b.gamma, 0.5) && close(b.alpha, 1.5));
        assert_eq!(b.regime, Regime::ScalingPermitsHeavyMass);
        assert!(blowup_exponents(0.0, 1.0).is_err());
    }

    fn exact_frames(grid: &MassGrid, frames: usize, horizon: f64) -> Vec<DensityField> {
        let mesh = SpatialMesh::homogeneous(3, 1.0);
        (0..=frames)
            .map(|k| {
                let t = horizon * k as f64 / frames as f64;
                let mut f = DensityField::zeros(grid.clone(), mesh);
                for j in 0..grid.len() {
                    f.values[j] = exact_constant_kernel(grid.pivot(j), t, 1.0);
                }
                f.time = t;
                f
            })
            .collect()
    }

    fn residual(frames: &[DensityField]) -> f64 {
        let j = WeakTestFunction::new(
            SpatialFactor::Constant,
            MassWeight::Band { lo: 0.3, hi: 1.0, width: 0.1 },
            TimeFactor::Decay { rate: 0.5 },
        );
        let grid = &frames[0].grid;
        weak_residual(frames, &j, &PivotKernel::constant(grid, 1.0), &DiffusionCoefficient::constant(0.0))
            .unwrap()
            .residual
            .abs()
    }

    #[test]
    fn identity_rescaling() {
        let grid = MassGrid::geometric(1e-3, 200.0, 200).unwrap();
        let frames = exact_frames(&grid, 20, 1.0);
        let e = Exponents { gamma: 1.0, alpha: 2.0, tau: 0.3 };
        let same = rescale_field(&frames, 1.0, &e).unwrap();
        assert_eq!(same, frames);
    }

    #[test]
    fn matched_exponents_keep_the_equation() {
        let grid = MassGrid::geometric(1e-3, 400.0, 240).unwrap();
        let lambda = 1.5;
        let frames = exact_frames(&grid, 30, 1.5);
        let base = residual(&frames);
        let matched = residual(&rescale_field(&frames, lambda, &Exponents { gamma: 1.0, alpha: 2.0, tau: 0.0 }).unwrap());
        let wrong = residual(&rescale_field(&frames, lambda, &Exponents { gamma: 1.2, alpha: 2.0, tau: 0.0 }).unwrap());
        assert!(matched <= 3.0 * base.max(1e-12), "{matched} vs {base}");
        assert!(wrong >= 10.0 * matched, "{wrong} vs {matched}");
    }
}
