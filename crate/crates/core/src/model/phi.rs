//! The auxiliary weight phi(m) with phi and phi*d both non-increasing.

use serde::{Deserialize, Serialize};

use super::presets::DiffusionCoefficient;
use crate::error::{Error, Result};

/// Samples per partition cell used to classify the monotonicity of d.
const MONOTONE_SAMPLES: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PhiRule {
    /// phi = value.
    Constant { value: f64 },
    /// phi = scale / d(m).
    OverDiffusion { scale: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhiSegment {
    pub lo: f64,
    pub hi: f64,
    pub rule: PhiRule,
}

/// Piecewise phi. Masses below the first segment or above the last use the
/// nearest segment's rule.
#[derive(Debug, Clone, PartialEq)]
pub struct PhiFunction {
    segments: Vec<PhiSegment>,
    diffusion: DiffusionCoefficient,
}

impl PhiFunction {
    pub fn constant(value: f64, diffusion: DiffusionCoefficient) -> Self {
        Self {
            segments: vec![PhiSegment {
                lo: 0.0,
                hi: f64::INFINITY,
                rule: PhiRule::Constant { value },
            }],
            diffusion,
        }
    }

    pub fn segments(&self) -> &[PhiSegment] {
        &self.segments
    }

    pub fn eval(&self, m: f64) -> f64 {
        let k = self
            .segments
            .partition_point(|s| s.hi < m)
            .min(self.segments.len() - 1);
        match self.segments[k].rule {
            PhiRule::Constant { value } => value,
            PhiRule::OverDiffusion { scale } => scale / self.diffusion.eval(m),
        }
    }

    /// Checks both monotonicity conditions on `grid` (sorted ascending),
    /// with relative slack `tol`.
    pub fn is_admissible_on(&self, grid: &[f64], tol: f64) -> bool {
        let vals: Vec<(f64, f64)> = grid
            .iter()
            .map(|&m| {
                let p = self.eval(m);
                (p, p * self.diffusion.eval(m))
            })
            .collect();
        vals.iter().all(|&(p, _)| p > 0.0)
            && vals.windows(2).all(|w| {
                w[1].0 <= w[0].0 * (1.0 + tol) && w[1].1 <= w[0].1 * (1.0 + tol)
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Trend {
    Increasing,
    NonIncreasing,
}

fn classify(d: &DiffusionCoefficient, lo: f64, hi: f64) -> Result<Trend> {
    let samples: Vec<f64> = (0..=MONOTONE_SAMPLES)
        .map(|i| d.eval(lo + (hi - lo) * i as f64 / MONOTONE_SAMPLES as f64))
        .collect();
    let scale = samples.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
    let slack = 1e-12 * scale;
    let up = samples.windows(2).all(|w| w[1] >= w[0] - slack);
    let down = samples.windows(2).all(|w| w[1] <= w[0] + slack);
    match (up, down) {
        (_, true) => Ok(Trend::NonIncreasing),
        (true, false) => Ok(Trend::Increasing),
        (false, false) => Err(Error::InvalidPartition(format!(
            "d is not monotone on [{lo}, {hi}]"
        ))),
    }
}

/// Builds phi from a partition `a = p_0 < ... < p_l = b` of the mass range
/// into stretches where d is monotone.
///
/// The first stretch gets phi = A/d when d increases and phi = A when it does
/// not; later stretches keep phi continuous at the break points. On
/// increasing stretches phi*d is constant, on the others phi is constant, so
/// both phi and phi*d are non-increasing throughout.
pub fn construct_phi(d: &DiffusionCoefficient, partition: &[f64], scale: f64) -> Result<PhiFunction> {
    if partition.len() < 2 {
        return Err(Error::InvalidPartition("need at least two partition points".into()));
    }
    if partition.windows(2).any(|w| !(w[1] > w[0])) || !(partition[0] > 0.0) {
        return Err(Error::InvalidPartition("partition must be positive and strictly increasing".into()));
    }
    if !(scale > 0.0) {
        return Err(Error::InvalidParameter(format!("phi scale {scale} must be > 0")));
    }
    let mut segments = Vec::with_capacity(partition.len() - 1);
    let mut left_value: Option<f64> = None;
    for w in partition.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        let trend = classify(d, lo, hi)?;
        let rule = match (trend, left_value) {
            (Trend::Increasing, None) => PhiRule::OverDiffusion { scale },
            (Trend::NonIncreasing, None) => PhiRule::Constant { value: scale },
            (Trend::Increasing, Some(v)) => PhiRule::OverDiffusion { scale: v * d.eval(lo) },
            (Trend::NonIncreasing, Some(v)) => PhiRule::Constant { value: v },
        };
        left_value = Some(match rule {
            PhiRule::Constant { value } => value,
            PhiRule::OverDiffusion { scale } => scale / d.eval(hi),
        });
        segments.push(PhiSegment { lo, hi, rule });
    }
    Ok(PhiFunction {
        segments,
        diffusion: d.clone(),
    })
}
