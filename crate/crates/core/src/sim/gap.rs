//! The coagulation gap between the microscopic pair sum and its mollified
//! macroscopic counterpart.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::cells::min_image;
use super::config::SimConfig;
use super::correlation::SpatialBump;
use super::dynamics::simulate;
use super::functionals::{empirical_measure, mollified_grid, Estimate};
use crate::error::{Error, Result};
use crate::fft::unravel;
use crate::kernel::EffectiveKernelTable;
use crate::model::{sample_initial, InitialDensity, InteractionProfile, ModelParams, SamplingMode};

/// Mass dependence of a separable test function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MassWeight {
    One,
    Mass,
    /// Smoothed indicator of `[lo, hi]` with logistic edges of the given width.
    Band { lo: f64, hi: f64, width: f64 },
}

impl MassWeight {
    pub fn eval(&self, n: f64) -> f64 {
        match *self {
            MassWeight::One => 1.0,
            MassWeight::Mass => n,
            MassWeight::Band { lo, hi, width } => {
                let s = |z: f64| 1.0 / (1.0 + (-z / width).exp());
                s(n - lo) * s(hi - n)
            }
        }
    }
}

/// `J(x, n) = b(x) g(n)` on `[0, horizon]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TestFunction {
    pub spatial: SpatialBump,
    pub mass: MassWeight,
}

impl TestFunction {
    pub fn eval(&self, x: &[f64], n: f64) -> f64 {
        let b = self.spatial.eval(x);
        if b == 0.0 {
            0.0
        } else {
            b * self.mass.eval(n)
        }
    }

    /// `J(x, m + n) - J(x, m) - J(x, n)`.
    pub fn tilde(&self, x: &[f64], m: f64, n: f64) -> f64 {
        let b = self.spatial.eval(x);
        if b == 0.0 {
            return 0.0;
        }
        b * (self.mass.eval(m + n) - self.mass.eval(m) - self.mass.eval(n))
    }

    /// `m/M J(x, M) + n/M J(y, M) - J(x, m) - J(y, n)` with `M = m + n`, the
    /// change of `sum J` when the pair merges.
    pub fn hat(&self, x: &[f64], m: f64, y: &[f64], n: f64) -> f64 {
        let total = m + n;
        m / total * self.eval(x, total) + n / total * self.eval(y, total) - self.eval(x, m) - self.eval(y, n)
    }
}

/// Mass truncation: contributions vanish when `m + n < 1/L` or `max(m, n) > L`.
fn inside_cap(m: f64, n: f64, cap: f64) -> bool {
    m + n >= 1.0 / cap && m.max(n) <= cap
}

/// Discretisation of the mollified term.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GapConfig {
    pub delta: f64,
    /// Mass bin edges; bins are represented by their midpoints.
    pub edges: Vec<f64>,
    pub mass_cap: f64,
    /// Steps between evaluations of the mollified term.
    #[serde(default = "default_every")]
    pub sample_every: u64,
}

fn default_every() -> u64 {
    10
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GapSample {
    /// `int_0^T Gamma dt`.
    pub micro: f64,
    /// `int_0^T Gamma-hat^delta dt`.
    pub macro_: f64,
}

impl GapSample {
    pub fn gap(&self) -> f64 {
        (self.micro - self.macro_).abs()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GapReport {
    pub epsilon: f64,
    pub delta: f64,
    pub per_seed: Vec<GapSample>,
    /// Seed average of the per-seed gaps.
    pub gap: Estimate,
    pub micro: Estimate,
    pub macro_: Estimate,
}

/// `sum_{b, b'} beta J-tilde (F_b F_b' - [b = b'] S_b)` integrated over the
/// grid, i.e. the mollified pair sum with the diagonal `i = j` removed.
fn mollified_term(
    density: &[f64],
    squares: &[f64],
    cells: usize,
    side: f64,
    dim: usize,
    mids: &[f64],
    beta: &[f64],
    test: &TestFunction,
    cap: f64,
) -> f64 {
    let bins = mids.len();
    let total = cells.pow(dim as u32);
    let h = side / cells as f64;
    let shape = vec![cells; dim];
    let mut idx = vec![0usize; dim];
    let mut x = vec![0.0; dim];
    let mut sum = 0.0;
    for c in 0..total {
        unravel(c, &shape, &mut idx);
        for a in 0..dim {
            x[a] = (idx[a] as f64 + 0.5) * h;
        }
        if test.spatial.eval(&x) == 0.0 {
            continue;
        }
        for b in 0..bins {
            let fb = density[b * total + c];
            if fb == 0.0 {
                continue;
            }
            for b2 in 0..bins {
                if !inside_cap(mids[b], mids[b2], cap) {
                    continue;
                }
                let mut prod = fb * density[b2 * total + c];
                if b == b2 {
                    prod -= squares[b * total + c];
                }
                sum += beta[b * bins + b2] * test.tilde(&x, mids[b], mids[b2]) * prod;
            }
        }
    }
    sum * h.powi(dim as i32)
}

/// Runs each seed to `config.horizon`, accumulating
/// `Gamma = eps^{d-2} sum_{pairs} lambda_ij J-hat` every step and
/// `Gamma-hat^delta` on a grid of spacing delta/4 every `sample_every` steps.
pub fn pair_sum_gap(
    model: &ModelParams,
    h: &InitialDensity,
    table: &EffectiveKernelTable,
    test: &TestFunction,
    config: &SimConfig,
    gap: &GapConfig,
    seeds: &[u64],
) -> Result<GapReport> {
    if gap.delta <= 2.0 * model.epsilon {
        return Err(Error::Resolution(format!(
            "delta = {} must exceed 2 eps = {}",
            gap.delta,
            2.0 * model.epsilon
        )));
    }
    if seeds.is_empty() {
        return Err(Error::InvalidParameter("no seeds".into()));
    }
    if gap.edges.len() < 2 || gap.edges.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParameter("mass edges must be strictly increasing".into()));
    }
    let dim = model.dim;
    let side = model.box_side;
    let xi = InteractionProfile::bump(dim, 1.0)?;
    let cells = (side / (0.25 * gap.delta)).ceil() as usize;
    let mids: Vec<f64> = gap.edges.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
    let bins = mids.len();
    let mut beta = vec![0.0; bins * bins];
    for b in 0..bins {
        for b2 in 0..bins {
            if inside_cap(mids[b], mids[b2], gap.mass_cap) {
                beta[b * bins + b2] = table.beta(mids[b], mids[b2])?;
            }
        }
    }
    let weight = model.particle_weight();
    let every = gap.sample_every.max(1);
    let runs: Vec<Result<GapSample>> = seeds
        .par_iter()
        .map(|&seed| {
            let state = sample_initial(h, model, SamplingMode::Deterministic, seed)?;
            let mut micro = 0.0;
            let mut macro_ = 0.0;
            let mut count = 0u64;
            let mut disp = vec![0.0; dim];
            let mut y = vec![0.0; dim];
            if !model.alpha.is_zero() {
                simulate(state, config, model, |s, pairs, dt| {
                    for p in pairs {
                        let (mi, mj) = (s.mass(p.slot_i), s.mass(p.slot_j));
                        if !inside_cap(mi, mj, gap.mass_cap) {
                            continue;
                        }
                        // Unwrap x_j next to x_i so the spatial bump sees the pair together.
                        let xi_pos = s.position(p.slot_i);
                        min_image(s.position(p.slot_j), xi_pos, side, &mut disp);
                        for a in 0..dim {
                            y[a] = xi_pos[a] + disp[a];
                        }
                        micro += weight * dt * p.rate * test.hat(xi_pos, mi, &y, mj);
                    }
                    if count.is_multiple_of(every) {
                        let snap = empirical_measure(s, weight);
                        let (density, squares) = mollified_grid(&snap, gap.delta, &xi, cells, &gap.edges);
                        let term = mollified_term(&density, &squares, cells, side, dim, &mids, &beta, test, gap.mass_cap);
                        macro_ += term * dt * every as f64;
                    }
                    count += 1;
                })?;
            }
            Ok(GapSample { micro, macro_ })
        })
        .collect();
    let per_seed: Vec<GapSample> = runs.into_iter().collect::<Result<_>>()?;
    let gaps: Vec<f64> = per_seed.iter().map(GapSample::gap).collect();
    let micro: Vec<f64> = per_seed.iter().map(|s| s.micro).collect();
    let macro_: Vec<f64> = per_seed.iter().map(|s| s.macro_).collect();
    Ok(GapReport {
        epsilon: model.epsilon,
        delta: gap.delta,
        gap: Estimate::from_samples(&gaps),
        micro: Estimate::from_samples(&micro),
        macro_: Estimate::from_samples(&macro_),
        per_seed,
    })
}

/// Edges `(k + 1/2) base` for `k = 0..=count`, one bin per multiple of `base`.
pub fn multiple_edges(base: f64, count: usize) -> Vec<f64> {
    (0..=count).map(|k| (k as f64 + 0.5) * base).collect()
}
