//! Particle configurations and initial sampling.

use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use super::density::InitialDensity;
use super::params::ModelParams;
use crate::error::{Error, Result};
use crate::rng::{CounterRng, TAG_COUNT, TAG_INIT};

/// Proposals allowed per particle before spatial rejection gives up.
const MAX_REJECTIONS: usize = 1_000_000;

/// How the initial particle number is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SamplingMode {
    /// Exactly N = round(k_eps Z) particles.
    #[default]
    Deterministic,
    /// Poisson(N) particles.
    Poisson,
}

/// Live particle configuration. Slots of coagulated particles stay in the
/// arrays, flagged dead, until [`ParticleSystem::compact`].
#[derive(Debug, Clone, PartialEq)]
pub struct ParticleSystem {
    dim: usize,
    box_side: f64,
    epsilon: f64,
    seed: u64,
    pub(crate) time: f64,
    pub(crate) step: u64,
    pub(crate) ids: Vec<u64>,
    /// Row-major `[slot][axis]`, wrapped into `[0, box_side)`.
    pub(crate) positions: Vec<f64>,
    /// Unwrapped Brownian displacement since creation of the slot's particle.
    pub(crate) travel: Vec<f64>,
    pub(crate) masses: Vec<f64>,
    pub(crate) alive: Vec<bool>,
    pub(crate) next_id: u64,
}

impl ParticleSystem {
    /// A system with explicit particles; ids are assigned 0, 1, ...
    pub fn from_particles(
        dim: usize,
        box_side: f64,
        epsilon: f64,
        seed: u64,
        positions: Vec<f64>,
        masses: Vec<f64>,
    ) -> Result<Self> {
        let n = masses.len();
        if positions.len() != n * dim {
            return Err(Error::InvalidParameter("positions do not match masses and dimension".into()));
        }
        if masses.iter().any(|&m| !(m > 0.0)) {
            return Err(Error::InvalidParameter("particle masses must be positive".into()));
        }
        let positions = positions.into_iter().map(|x| x.rem_euclid(box_side)).collect();
        Ok(Self {
            dim,
            box_side,
            epsilon,
            seed,
            time: 0.0,
            step: 0,
            ids: (0..n as u64).collect(),
            positions,
            travel: vec![0.0; n * dim],
            masses,
            alive: vec![true; n],
            next_id: n as u64,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn box_side(&self) -> f64 {
        self.box_side
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn step_index(&self) -> u64 {
        self.step
    }

    /// Number of slots, alive or not.
    pub fn slots(&self) -> usize {
        self.masses.len()
    }

    pub fn alive_count(&self) -> usize {
        self.alive.iter().filter(|&&a| a).count()
    }

    pub fn is_alive(&self, slot: usize) -> bool {
        self.alive[slot]
    }

    pub fn id(&self, slot: usize) -> u64 {
        self.ids[slot]
    }

    pub fn mass(&self, slot: usize) -> f64 {
        self.masses[slot]
    }

    pub fn position(&self, slot: usize) -> &[f64] {
        &self.positions[slot * self.dim..(slot + 1) * self.dim]
    }

    pub fn travel(&self, slot: usize) -> &[f64] {
        &self.travel[slot * self.dim..(slot + 1) * self.dim]
    }

    /// Alive slots in slot order.
    pub fn alive_slots(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.slots()).filter(move |&s| self.alive[s])
    }

    /// Sum of alive masses in slot order.
    pub fn total_mass(&self) -> f64 {
        self.alive_slots().map(|s| self.masses[s]).sum()
    }

    /// Drops dead slots, keeping the relative order of the survivors.
    pub fn compact(&mut self) {
        let dim = self.dim;
        let mut w = 0;
        for r in 0..self.slots() {
            if !self.alive[r] {
                continue;
            }
            if w != r {
                self.ids[w] = self.ids[r];
                self.masses[w] = self.masses[r];
                self.positions.copy_within(r * dim..(r + 1) * dim, w * dim);
                self.travel.copy_within(r * dim..(r + 1) * dim, w * dim);
            }
            self.alive[w] = true;
            w += 1;
        }
        self.ids.truncate(w);
        self.masses.truncate(w);
        self.alive.truncate(w);
        self.positions.truncate(w * dim);
        self.travel.truncate(w * dim);
    }
}

/// Draws the initial configuration: masses by the tabulated inverse CDF of
/// the mass marginal, positions by rejection against the spatial profile.
/// Particle `i` uses its own random stream, so the first `k` particles do
/// not depend on how many are drawn in total.
pub fn sample_initial(h: &InitialDensity, params: &ModelParams, mode: SamplingMode, seed: u64) -> Result<ParticleSystem> {
    if !(h.total() > 0.0 && h.total().is_finite()) {
        return Err(Error::Sampling(format!("initial density has total {} and cannot be normalised", h.total())));
    }
    if h.dim() != params.dim || h.box_side() != params.box_side {
        return Err(Error::Sampling("initial density and model disagree on the domain".into()));
    }
    let expected = params.particle_count();
    if expected < 1 {
        return Err(Error::Sampling("k_eps Z rounds to zero particles".into()));
    }
    let count = match mode {
        SamplingMode::Deterministic => expected,
        SamplingMode::Poisson => {
            let mut rng = CounterRng::new(seed, TAG_COUNT, 0);
            let dist = Poisson::new(expected as f64).map_err(|e| Error::Sampling(e.to_string()))?;
            dist.sample(&mut rng) as usize
        }
    };
    let dim = params.dim;
    let side = params.box_side;
    let peak = h.spatial_peak();
    let inverse = h.inverse_cdf();
    let mut positions = Vec::with_capacity(count * dim);
    let mut masses = Vec::with_capacity(count);
    let mut x = vec![0.0; dim];
    for i in 0..count {
        let mut rng = CounterRng::new(seed, TAG_INIT | i as u64, 0);
        masses.push(inverse.sample(rng.uniform()));
        let mut accepted = false;
        for _ in 0..MAX_REJECTIONS {
            for v in x.iter_mut() {
                *v = side * (rng.uniform() - 0.5 / (1u64 << 53) as f64).max(0.0);
            }
            if rng.uniform() * peak <= h.spatial_density(&x) {
                accepted = true;
                break;
            }
        }
        if !accepted {
            return Err(Error::Sampling("spatial rejection sampling did not accept a proposal".into()));
        }
        positions.extend_from_slice(&x);
    }
    ParticleSystem::from_particles(dim, side, params.epsilon, seed, positions, masses)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::density::{InitialPreset, MassProfile, SpatialProfile};

    fn band(total: f64) -> InitialDensity {
        InitialDensity::from_preset(
            &InitialPreset::MonodisperseBand { total, mass: 1.0, width: 0.01, sigma: None, center: None },
            3,
            1.0,
        )
        .unwrap()
    }

    #[test]
    fn deterministic_count_and_band() {
        let params = ModelParams::standard(3, 0.1, 1.0, 1.0).unwrap();
        let ps = sample_initial(&band(1.0), &params, SamplingMode::Deterministic, 3).unwrap();
        assert_eq!(ps.alive_count(), 10);
        for s in ps.alive_slots() {
            assert!((0.99..=1.01).contains(&ps.mass(s)));
            assert!(ps.position(s).iter().all(|&v| (0.0..1.0).contains(&v)));
        }
    }

    #[test]
    fn same_seed_same_particles() {
        let params = ModelParams::standard(3, 0.05, 1.0, 1.0).unwrap();
        let a = sample_initial(&band(1.0), &params, SamplingMode::Poisson, 42).unwrap();
        let b = sample_initial(&band(1.0), &params, SamplingMode::Poisson, 42).unwrap();
        assert_eq!(a, b);
        let c = sample_initial(&band(1.0), &params, SamplingMode::Poisson, 43).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn poisson_count_mean() {
        // eps chosen so that N = k_eps Z = 1000.
        let params = ModelParams::standard(3, 0.001, 1.0, 1.0).unwrap();
        let h = band(1.0);
        let seeds = 200;
        let mut sum = 0.0;
        for seed in 0..seeds {
            let mut rng = CounterRng::new(seed, TAG_COUNT, 0);
            let n = Poisson::new(params.particle_count() as f64).unwrap().sample(&mut rng);
            sum += n;
        }
        let mean = sum / seeds as f64;
        assert!((mean - 1000.0).abs() <= 3.0 * (1000.0f64 / seeds as f64).sqrt(), "{mean}");
        // The full sampler uses the same count stream.
        let ps = sample_initial(&h, &params, SamplingMode::Poisson, 0).unwrap();
        let mut rng = CounterRng::new(0, TAG_COUNT, 0);
        let n0 = Poisson::new(1000.0).unwrap().sample(&mut rng) as usize;
        assert_eq!(ps.alive_count(), n0);
    }

    #[test]
    fn zero_density_cannot_be_sampled() {
        let params = ModelParams::standard(3, 0.1, 1.0, 1.0).unwrap();
        let h = InitialDensity::new(3, 1.0, 0.0, SpatialProfile::Uniform, MassProfile::Exponential { scale: 1.0 }).unwrap();
        assert!(matches!(
            sample_initial(&h, &params, SamplingMode::Deterministic, 0),
            Err(Error::Sampling(_))
        ));
    }

    #[test]
    fn compact_keeps_order() {
        let mut ps = ParticleSystem::from_particles(1, 1.0, 0.1, 0, vec![0.1, 0.2, 0.3], vec![1.0, 2.0, 3.0]).unwrap();
        ps.alive[1] = false;
        ps.compact();
        assert_eq!(ps.ids, vec![0, 2]);
        assert_eq!(ps.masses, vec![1.0, 3.0]);
        assert_eq!(ps.positions, vec![0.1, 0.3]);
    }
}
