//! Experiment configuration: one JSON document per run.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::AGridSpec;
use crate::model::{HypothesisGrid, ModelConfig, SamplingMode};
use crate::pde::{MassGrid, WeakTestFunction};
use crate::sim::{MassWeight, SpatialBump};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunKind {
    Check,
    Kernel,
    Sim,
    Pde,
    Scaling,
    Compare,
}

impl RunKind {
    pub fn is_stochastic(self) -> bool {
        matches!(self, RunKind::Sim | RunKind::Compare)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    #[serde(default)]
    pub run: Option<RunKind>,
    #[serde(default)]
    pub model: Option<ModelConfig>,
    #[serde(default)]
    pub check: CheckBlock,
    #[serde(default)]
    pub kernel: KernelBlock,
    #[serde(default)]
    pub sim: SimBlock,
    #[serde(default)]
    pub pde: PdeBlock,
    #[serde(default)]
    pub scaling: Option<ScalingBlock>,
    #[serde(default)]
    pub compare: Option<CompareBlock>,
    #[serde(default)]
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CheckBlock {
    pub mass_cap: f64,
    pub grid: HypothesisGrid,
}

impl Default for CheckBlock {
    fn default() -> Self {
        Self { mass_cap: 10.0, grid: HypothesisGrid::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KernelBlock {
    /// Coupling grid; derived from the mass pairs when absent.
    pub a_grid: Option<AGridSpec>,
    /// Masses of the `n, m` pair table; 20 log-spaced points over the
    /// initial mass support when empty.
    pub masses: Vec<f64>,
    pub support_cells: usize,
}

impl Default for KernelBlock {
    fn default() -> Self {
        Self { a_grid: None, masses: Vec::new(), support_cells: crate::kernel::DEFAULT_CELLS }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimBlock {
    pub dt_factor: f64,
    pub horizon: f64,
    pub snapshots: Vec<f64>,
    pub sampling: SamplingMode,
    pub moment_exponent: f64,
    pub heavy_threshold: f64,
}

impl Default for SimBlock {
    fn default() -> Self {
        Self {
            dt_factor: 0.1,
            horizon: 0.1,
            snapshots: vec![0.0, 0.1],
            sampling: SamplingMode::Deterministic,
            moment_exponent: 2.0,
            heavy_threshold: 10.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MassGridSpec {
    Geometric { lo: f64, hi: f64, bins: usize },
    Multiples { base: f64, count: usize },
}

impl MassGridSpec {
    pub fn build(&self) -> Result<MassGrid> {
        match *self {
            MassGridSpec::Geometric { lo, hi, bins } => MassGrid::geometric(lo, hi, bins),
            MassGridSpec::Multiples { base, count } => MassGrid::multiples(base, count),
        }
    }
}

impl Default for MassGridSpec {
    fn default() -> Self {
        MassGridSpec::Geometric { lo: 1e-2, hi: 50.0, bins: 400 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PdeBlock {
    pub mass_grid: MassGridSpec,
    /// Mesh points per axis, a power of two; 1 for homogeneous runs.
    pub cells: usize,
    pub dt: f64,
    pub horizon: f64,
    /// Steps between recorded frames.
    pub record_every: usize,
    pub moment_exponent: f64,
    /// Constant kernel `B` in place of the effective kernel.
    pub constant_kernel: Option<f64>,
    /// `c` in `beta(n, m) = alpha I(c alpha / (d(n) + d(m)))`. The default 1
    /// is the standard kernel; 2 matches the survival problem of a pair
    /// killed at the ordered-pair rate `2 eps^-2 V alpha` of the simulator.
    pub coupling_scale: f64,
    pub weak_test: Option<WeakTestFunction>,
}

impl Default for PdeBlock {
    fn default() -> Self {
        Self {
            mass_grid: MassGridSpec::default(),
            cells: 32,
            dt: 1e-3,
            horizon: 1.0,
            record_every: 100,
            moment_exponent: 2.0,
            constant_kernel: None,
            coupling_scale: 1.0,
            weak_test: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScalingBlock {
    pub phi: f64,
    pub eta: f64,
    #[serde(default = "default_scaling_dim")]
    pub dim: usize,
    #[serde(default)]
    pub blowup: bool,
}

fn default_scaling_dim() -> usize {
    3
}

/// Separable test function for the kinetic-limit comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompareTest {
    pub id: String,
    /// Spatial factor; constant when absent.
    #[serde(default)]
    pub spatial: Option<SpatialBump>,
    pub mass: MassWeight,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompareBlock {
    /// Strictly decreasing ladder of interaction ranges.
    pub epsilons: Vec<f64>,
    pub delta: f64,
    pub times: Vec<f64>,
    pub tests: Vec<CompareTest>,
    #[serde(default = "default_dt_factor")]
    pub dt_factor: f64,
    /// Settings for the pair-sum gap diagnostic; skipped when absent.
    #[serde(default)]
    pub gap: Option<GapBlock>,
}

fn default_dt_factor() -> f64 {
    0.1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GapBlock {
    pub test: SpatialBump,
    pub mass: MassWeight,
    pub horizon: f64,
    pub edges: Vec<f64>,
    pub mass_cap: f64,
    #[serde(default = "default_every")]
    pub sample_every: u64,
}

fn default_every() -> u64 {
    10
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        if cfg.schema_version != SCHEMA_VERSION {
            return Err(Error::Config(format!(
                "schema_version {} is not supported (expected {SCHEMA_VERSION})",
                cfg.schema_version
            )));
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serialises")
    }

    pub fn model(&self) -> Result<&ModelConfig> {
        self.model.as_ref().ok_or_else(|| Error::Config("this run needs a model block".into()))
    }

    /// Checks the declared run kind against the requested one and the seed
    /// list for stochastic runs.
    pub fn validate_for(&self, kind: RunKind) -> Result<()> {
        if let Some(declared) = self.run {
            if declared != kind {
                return Err(Error::Config(format!("config declares run {declared:?}, asked for {kind:?}")));
            }
        }
        if kind.is_stochastic() && self.seeds.is_empty() {
            return Err(Error::Config("stochastic runs need a non-empty seed list".into()));
        }
        match kind {
            RunKind::Scaling => Ok(()),
            RunKind::Compare => {
                self.model()?;
                self.compare.as_ref().map(|_| ()).ok_or_else(|| Error::Config("compare needs a compare block".into()))
            }
            _ => self.model().map(|_| ()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "schema_version": 1,
        "model": {
            "box_side": 1.0,
            "epsilon": 0.05,
            "diffusion": {"kind": "constant", "value": 1.0},
            "alpha": {"kind": "constant", "value": 1.0},
            "initial": {"kind": "monodisperse_band", "total": 1.0, "mass": 1.0}
        },
        "seeds": [1, 2]
    }"#;

    #[test]
    fn round_trip_is_identity() {
        let cfg = ExperimentConfig::from_json(MINIMAL).unwrap();
        let again = ExperimentConfig::from_json(&cfg.to_json()).unwrap();
        assert_eq!(cfg, again);
    }

    #[test]
    fn unknown_fields_and_versions_are_rejected() {
        let extra = MINIMAL.replacen("\"seeds\"", "\"sedes\": [], \"seeds\"", 1);
        assert!(matches!(ExperimentConfig::from_json(&extra), Err(Error::Config(_))));
        let old = MINIMAL.replacen("\"schema_version\": 1", "\"schema_version\": 0", 1);
        assert!(matches!(ExperimentConfig::from_json(&old), Err(Error::Config(_))));
    }

    #[test]
    fn stochastic_runs_need_seeds() {
        let mut cfg = ExperimentConfig::from_json(MINIMAL).unwrap();
        cfg.seeds.clear();
        assert!(cfg.validate_for(RunKind::Sim).is_err());
        assert!(cfg.validate_for(RunKind::Kernel).is_ok());
    }
}
