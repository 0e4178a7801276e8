//! Empirical measures and the observables built from them.

use rayon::prelude::*;
use serde::Serialize;

use super::cells::min_image;
use super::config::SimConfig;
use super::dynamics::simulate;
use crate::error::{Error, Result};
use crate::fft::unravel;
use crate::model::{sample_initial, InitialDensity, InteractionProfile, ModelParams, ParticleSystem, SamplingMode};

/// `g^eps = eps^{d-2} sum_i delta_{(x_i, m_i)}` at one time.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EmpiricalSnapshot {
    pub time: f64,
    pub weight: f64,
    pub dim: usize,
    pub box_side: f64,
    pub ids: Vec<u64>,
    /// Row-major `[particle][axis]`.
    pub positions: Vec<f64>,
    pub masses: Vec<f64>,
}

impl EmpiricalSnapshot {
    pub fn count(&self) -> usize {
        self.masses.len()
    }

    pub fn position(&self, i: usize) -> &[f64] {
        &self.positions[i * self.dim..(i + 1) * self.dim]
    }

    /// `int dg^eps = eps^{d-2} * count`.
    pub fn total_measure(&self) -> f64 {
        self.weight * self.count() as f64
    }

    /// `int n dg^eps`, summed in particle order.
    pub fn total_mass(&self) -> f64 {
        self.weight * self.masses.iter().sum::<f64>()
    }

    /// `int J dg^eps`.
    pub fn integrate(&self, j: impl Fn(&[f64], f64) -> f64) -> f64 {
        self.weight * (0..self.count()).map(|i| j(self.position(i), self.masses[i])).sum::<f64>()
    }
}

/// Snapshot of the alive particles with weight `weight` each.
pub fn empirical_measure(state: &ParticleSystem, weight: f64) -> EmpiricalSnapshot {
    let dim = state.dim();
    let slots: Vec<usize> = state.alive_slots().collect();
    let mut positions = Vec::with_capacity(slots.len() * dim);
    for &s in &slots {
        positions.extend_from_slice(state.position(s));
    }
    EmpiricalSnapshot {
        time: state.time(),
        weight,
        dim,
        box_side: state.box_side(),
        ids: slots.iter().map(|&s| state.id(s)).collect(),
        positions,
        masses: slots.iter().map(|&s| state.mass(s)).collect(),
    }
}

/// Index of the mass bin `[edges[b], edges[b+1])` holding `m`.
pub fn mass_bin(edges: &[f64], m: f64) -> Option<usize> {
    if m < edges[0] || m >= edges[edges.len() - 1] {
        return None;
    }
    Some(edges.partition_point(|&e| e <= m) - 1)
}

/// Mollified density values `[query][bin]`.
#[derive(Debug, Clone, PartialEq)]
pub struct MollifiedDensity {
    pub bins: usize,
    pub values: Vec<f64>,
    /// Set when delta < 5 eps, where the mollifier does not average over
    /// many interaction ranges.
    pub under_resolved: bool,
}

impl MollifiedDensity {
    pub fn at(&self, query: usize, bin: usize) -> f64 {
        self.values[query * self.bins + bin]
    }
}

/// `f^delta(x, bin) = eps^{d-2} sum_{m_i in bin} delta^{-d} xi((x_i - x)/delta)`
/// at each query point (row-major `[query][axis]`), with periodic images.
pub fn mollified_density(
    snap: &EmpiricalSnapshot,
    epsilon: f64,
    delta: f64,
    xi: &InteractionProfile,
    queries: &[f64],
    edges: &[f64],
) -> MollifiedDensity {
    let dim = snap.dim;
    let bins = edges.len() - 1;
    let nq = queries.len() / dim;
    let scale = delta.powi(-(dim as i32));
    let reach = xi.support_radius() * delta;
    let mut values = vec![0.0; nq * bins];
    let mut disp = vec![0.0; dim];
    for q in 0..nq {
        let x = &queries[q * dim..(q + 1) * dim];
        for i in 0..snap.count() {
            let Some(b) = mass_bin(edges, snap.masses[i]) else { continue };
            let r2 = min_image(snap.position(i), x, snap.box_side, &mut disp);
            if r2 < reach * reach {
                values[q * bins + b] += snap.weight * scale * xi.eval_r2(r2 / (delta * delta));
            }
        }
    }
    MollifiedDensity {
        bins,
        values,
        under_resolved: delta < 5.0 * epsilon,
    }
}

/// Mollified density on the periodic grid of `cells^d` points `(k + 1/2) h`,
/// stamped particle by particle. Layout `[bin][cell]`. Also returns the
/// per-cell sums of squared single-particle contributions, which are the
/// self terms of products of two such densities.
pub fn mollified_grid(
    snap: &EmpiricalSnapshot,
    delta: f64,
    xi: &InteractionProfile,
    cells: usize,
    edges: &[f64],
) -> (Vec<f64>, Vec<f64>) {
    let dim = snap.dim;
    let bins = edges.len() - 1;
    let total = cells.pow(dim as u32);
    let h = snap.box_side / cells as f64;
    let scale = delta.powi(-(dim as i32));
    let reach = xi.support_radius() * delta;
    let span = (reach / h).ceil() as i64 + 1;
    let width = (2 * span + 1) as usize;
    let stencil = width.pow(dim as u32);
    let mut density = vec![0.0; bins * total];
    let mut squares = vec![0.0; bins * total];
    let mut off = vec![0usize; dim];
    let mut base = vec![0i64; dim];
    for i in 0..snap.count() {
        let Some(b) = mass_bin(edges, snap.masses[i]) else { continue };
        let x = snap.position(i);
        for a in 0..dim {
            base[a] = (x[a] / h).floor() as i64;
        }
        for s in 0..stencil {
            unravel(s, &vec![width; dim], &mut off);
            let mut r2 = 0.0;
            let mut flat = 0usize;
            for a in 0..dim {
                let k = base[a] + off[a] as i64 - span;
                let centre = (k as f64 + 0.5) * h;
                let d = centre - x[a];
                r2 += d * d;
                flat = flat * cells + k.rem_euclid(cells as i64) as usize;
            }
            if r2 >= reach * reach {
                continue;
            }
            let v = snap.weight * scale * xi.eval_r2(r2 / (delta * delta));
            density[b * total + flat] += v;
            squares[b * total + flat] += v * v;
        }
    }
    (density, squares)
}

/// Number, mass and moment statistics of a snapshot.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MassMoments {
    pub count: usize,
    /// `eps^{d-2} * count`.
    pub number: f64,
    /// `int n dg^eps`.
    pub mass: f64,
    /// `int n^r dg^eps`.
    pub moment: f64,
    /// Fraction of the mass carried by particles heavier than the threshold.
    pub heavy_fraction: f64,
}

pub fn mass_moments(snap: &EmpiricalSnapshot, r: f64, threshold: f64) -> MassMoments {
    let w = snap.weight;
    let mass = snap.total_mass();
    let heavy: f64 = w * snap.masses.iter().filter(|&&m| m > threshold).sum::<f64>();
    MassMoments {
        count: snap.count(),
        number: snap.total_measure(),
        mass,
        moment: w * snap.masses.iter().map(|m| m.powf(r)).sum::<f64>(),
        heavy_fraction: if mass > 0.0 { heavy / mass } else { 0.0 },
    }
}

/// Sample mean and its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub mean: f64,
    pub se: f64,
}

impl Estimate {
    pub fn from_samples(samples: &[f64]) -> Self {
        let n = samples.len() as f64;
        let mean = samples.iter().sum::<f64>() / n;
        let se = if samples.len() > 1 {
            let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
            (var / n).sqrt()
        } else {
            0.0
        };
        Self { mean, se }
    }
}

/// The collision functional `eps^{d-2} int_0^T sum_{i != j} alpha V_eps dt`
/// over seeds.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CollisionEstimate {
    pub total: Estimate,
    pub per_seed: Vec<f64>,
    /// Seed averages at the configured snapshot times.
    pub at_snapshots: Vec<Estimate>,
}

pub fn collision_functional(
    model: &ModelParams,
    h: &InitialDensity,
    config: &SimConfig,
    seeds: &[u64],
) -> Result<CollisionEstimate> {
    if seeds.is_empty() {
        return Err(Error::InvalidParameter("no seeds".into()));
    }
    let runs: Vec<Result<(f64, Vec<f64>)>> = seeds
        .par_iter()
        .map(|&seed| {
            let state = sample_initial(h, model, SamplingMode::Deterministic, seed)?;
            let traj = simulate(state, config, model, |_, _, _| {})?;
            Ok((traj.collision_total, traj.collision_at_snapshots))
        })
        .collect();
    let runs: Vec<(f64, Vec<f64>)> = runs.into_iter().collect::<Result<_>>()?;
    let per_seed: Vec<f64> = runs.iter().map(|r| r.0).collect();
    let at_snapshots = (0..config.snapshots.len())
        .map(|k| Estimate::from_samples(&runs.iter().map(|r| r.1[k]).collect::<Vec<_>>()))
        .collect();
    Ok(CollisionEstimate {
        total: Estimate::from_samples(&per_seed),
        per_seed,
        at_snapshots,
    })
}
