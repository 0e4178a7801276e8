use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::ModelParams;

fn default_dt_factor() -> f64 {
    0.1
}

/// Time stepping and output schedule of a particle run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    /// c_dt in dt = c_dt eps^2 / (2 D).
    #[serde(default = "default_dt_factor")]
    pub dt_factor: f64,
    pub horizon: f64,
    #[serde(default)]
    pub snapshots: Vec<f64>,
    /// Neighbour cell side; defaults to the interaction range C0 eps.
    #[serde(default)]
    pub cell_size: Option<f64>,
}

impl SimConfig {
    pub fn new(horizon: f64) -> Self {
        Self {
            dt_factor: default_dt_factor(),
            horizon,
            snapshots: Vec::new(),
            cell_size: None,
        }
    }

    pub fn with_snapshots(mut self, times: Vec<f64>) -> Self {
        self.snapshots = times;
        self
    }

    pub fn validate(&self, model: &ModelParams) -> Result<()> {
        if !(self.dt_factor > 0.0 && self.dt_factor <= 0.5) {
            return Err(Error::InvalidParameter(format!("dt factor {} must lie in (0, 0.5]", self.dt_factor)));
        }
        if !(self.horizon >= 0.0 && self.horizon.is_finite()) {
            return Err(Error::InvalidParameter(format!("horizon {} must be finite and >= 0", self.horizon)));
        }
        if self.snapshots.iter().any(|&t| !(t >= 0.0 && t <= self.horizon)) {
            return Err(Error::InvalidParameter("snapshot times must lie in [0, horizon]".into()));
        }
        if let Some(c) = self.cell_size {
            if !(c >= model.interaction_range()) {
                return Err(Error::InvalidParameter(format!(
                    "cell size {c} is below the interaction range {}",
                    model.interaction_range()
                )));
            }
        }
        Ok(())
    }

    pub fn dt(&self, model: &ModelParams) -> Result<f64> {
        Ok(self.dt_factor * model.epsilon * model.epsilon / (2.0 * model.diffusion_bound()?))
    }

    pub fn steps(&self, model: &ModelParams) -> Result<u64> {
        Ok((self.horizon / self.dt(model)?).round() as u64)
    }

    pub fn cell_side(&self, model: &ModelParams) -> f64 {
        self.cell_size.unwrap_or_else(|| model.interaction_range())
    }
}
