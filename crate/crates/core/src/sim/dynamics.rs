//! One tau-leaping step: Brownian moves, pair detection, thinned
//! coagulation.

use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use super::cells::{min_image, pairs_within};
use super::config::SimConfig;
use super::functionals::{empirical_measure, EmpiricalSnapshot};
use crate::error::{Error, Result};
use crate::model::{ModelParams, ParticleSystem};
use crate::rng::{CounterRng, TAG_DIFFUSION};

/// Which of the two parents' positions the merged particle takes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    I,
    J,
}

/// One coagulation. `id_i < id_j`; the merged particle gets `new_id`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EventRecord {
    pub time: f64,
    pub id_i: u64,
    pub id_j: u64,
    pub mass_i: f64,
    pub mass_j: f64,
    pub side: Side,
    pub new_id: u64,
}

/// A pair within the interaction range with its coagulation rate
/// `eps^-2 [V(dx/eps) + V(-dx/eps)] alpha(m_i, m_j)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairRate {
    pub slot_i: usize,
    pub slot_j: usize,
    pub id_i: u64,
    pub id_j: u64,
    pub rate: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct StepReport {
    pub dt: f64,
    /// Sum of pair rates before coagulation.
    pub rate_sum: f64,
    pub events: Vec<EventRecord>,
}

fn diffuse(state: &mut ParticleSystem, model: &ModelParams, dt: f64) -> Result<()> {
    let dim = state.dim();
    let side = state.box_side();
    let seed = state.seed();
    let step = state.step;
    let ParticleSystem { positions, travel, ids, masses, alive, .. } = state;
    positions
        .par_chunks_mut(dim)
        .zip(travel.par_chunks_mut(dim))
        .zip(ids.par_iter().zip(masses.par_iter()).zip(alive.par_iter()))
        .for_each(|((x, tr), ((&id, &m), &live))| {
            if !live {
                return;
            }
            let sd = (2.0 * model.diffusion.eval(m) * dt).sqrt();
            let mut rng = CounterRng::new(seed, TAG_DIFFUSION | id, step);
            for (xk, tk) in x.iter_mut().zip(tr.iter_mut()) {
                let g: f64 = StandardNormal.sample(&mut rng);
                let dx = sd * g;
                *tk += dx;
                *xk = (*xk + dx).rem_euclid(side);
                // rem_euclid can round up to `side` itself.
                if *xk >= side {
                    *xk = 0.0;
                }
            }
        });
    if state.positions.iter().any(|v| !v.is_finite()) {
        return Err(Error::NumericalFault(format!("non-finite position at step {}", state.step)));
    }
    Ok(())
}

/// Pairs within C0 eps with their rates, ordered by id pair.
pub fn pair_rates(state: &ParticleSystem, config: &SimConfig, model: &ModelParams) -> Vec<PairRate> {
    if model.alpha.is_zero() {
        return Vec::new();
    }
    let eps = model.epsilon;
    let inv_eps2 = 1.0 / (eps * eps);
    let mut disp = vec![0.0; state.dim()];
    let mut out: Vec<PairRate> = pairs_within(state, config.cell_side(model), model.interaction_range())
        .into_iter()
        .filter_map(|(a, b)| {
            let (slot_i, slot_j) = if state.id(a) < state.id(b) { (a, b) } else { (b, a) };
            let r2 = min_image(state.position(slot_i), state.position(slot_j), state.box_side(), &mut disp);
            // V depends on |x| only, so V(dx/eps) = V(-dx/eps).
            let v = 2.0 * model.potential.eval_r2(r2 * inv_eps2);
            let rate = inv_eps2 * v * model.alpha.eval(state.mass(slot_i), state.mass(slot_j));
            (rate > 0.0).then_some(PairRate {
                slot_i,
                slot_j,
                id_i: state.id(slot_i),
                id_j: state.id(slot_j),
                rate,
            })
        })
        .collect();
    out.sort_unstable_by_key(|p| (p.id_i, p.id_j));
    out
}

/// Fires pairs with probability `1 - exp(-rate dt)`; fired pairs are
/// processed in the order of a per-pair random priority and a particle
/// merges at most once per step.
fn coagulate(state: &mut ParticleSystem, pairs: &[PairRate], dt: f64, time: f64) -> Vec<EventRecord> {
    let seed = state.seed();
    let step = state.step;
    let mut fired: Vec<(f64, PairRate, bool)> = pairs
        .iter()
        .filter_map(|p| {
            let mut rng = CounterRng::new(seed, CounterRng::pair_stream(p.id_i, p.id_j), step);
            let u = rng.uniform();
            if u >= -(-p.rate * dt).exp_m1() {
                return None;
            }
            let priority = rng.uniform();
            let (mi, mj) = (state.mass(p.slot_i), state.mass(p.slot_j));
            let i_side = rng.uniform() * (mi + mj) < mi;
            Some((priority, *p, i_side))
        })
        .collect();
    fired.sort_by(|a, b| a.0.total_cmp(&b.0).then((a.1.id_i, a.1.id_j).cmp(&(b.1.id_i, b.1.id_j))));
    let dim = state.dim();
    let mut events = Vec::new();
    for (_, p, i_side) in fired {
        let (i, j) = (p.slot_i, p.slot_j);
        if !state.alive[i] || !state.alive[j] || state.ids[i] != p.id_i || state.ids[j] != p.id_j {
            continue;
        }
        let (mi, mj) = (state.masses[i], state.masses[j]);
        let new_id = state.next_id;
        state.next_id += 1;
        if !i_side {
            state.positions.copy_within(j * dim..(j + 1) * dim, i * dim);
            state.travel.copy_within(j * dim..(j + 1) * dim, i * dim);
        }
        state.masses[i] = mi + mj;
        state.ids[i] = new_id;
        state.alive[j] = false;
        events.push(EventRecord {
            time,
            id_i: p.id_i,
            id_j: p.id_j,
            mass_i: mi,
            mass_j: mj,
            side: if i_side { Side::I } else { Side::J },
            new_id,
        });
    }
    events
}

/// Advances the system by one step. `observe` sees the state after the
/// Brownian move together with the pair rates, before any coagulation.
pub fn step_with(
    state: &mut ParticleSystem,
    config: &SimConfig,
    model: &ModelParams,
    mut observe: impl FnMut(&ParticleSystem, &[PairRate]),
) -> Result<StepReport> {
    let dt = config.dt(model)?;
    diffuse(state, model, dt)?;
    let pairs = pair_rates(state, config, model);
    observe(state, &pairs);
    let rate_sum = pairs.iter().map(|p| p.rate).sum();
    let time = state.time + dt;
    let events = coagulate(state, &pairs, dt, time);
    if !events.is_empty() {
        state.compact();
    }
    state.time = time;
    state.step += 1;
    Ok(StepReport { dt, rate_sum, events })
}

pub fn step(state: &mut ParticleSystem, config: &SimConfig, model: &ModelParams) -> Result<StepReport> {
    step_with(state, config, model, |_, _| {})
}

/// Output of a full run.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub snapshots: Vec<EmpiricalSnapshot>,
    pub events: Vec<EventRecord>,
    /// `eps^{d-2} int_0^t sum_pairs rate dt` at each snapshot.
    pub collision_at_snapshots: Vec<f64>,
    pub collision_total: f64,
    pub final_state: ParticleSystem,
}

/// Runs to the horizon, taking snapshots at the steps nearest to the
/// requested times. `observe` is called once per step as in [`step_with`]
/// with the step's dt.
pub fn simulate(
    mut state: ParticleSystem,
    config: &SimConfig,
    model: &ModelParams,
    mut observe: impl FnMut(&ParticleSystem, &[PairRate], f64),
) -> Result<Trajectory> {
    config.validate(model)?;
    let dt = config.dt(model)?;
    let steps = config.steps(model)?;
    let weight = model.particle_weight();
    let mut schedule: Vec<(u64, usize)> = config
        .snapshots
        .iter()
        .enumerate()
        .map(|(k, &t)| ((t / dt).round() as u64, k))
        .collect();
    schedule.sort();
    let mut snapshots = vec![None; config.snapshots.len()];
    let mut collision_at = vec![0.0; config.snapshots.len()];
    let mut events = Vec::new();
    let mut collision = 0.0;
    let mut next = 0;
    for n in 0..=steps {
        while next < schedule.len() && schedule[next].0 == n {
            let k = schedule[next].1;
            snapshots[k] = Some(empirical_measure(&state, weight));
            collision_at[k] = collision;
            next += 1;
        }
        if n == steps {
            break;
        }
        let report = step_with(&mut state, config, model, |s, p| observe(s, p, dt))?;
        collision += weight * dt * report.rate_sum;
        events.extend(report.events);
    }
    Ok(Trajectory {
        snapshots: snapshots.into_iter().map(|s| s.expect("every snapshot scheduled")).collect(),
        events,
        collision_at_snapshots: collision_at,
        collision_total: collision,
        final_state: state,
    })
}
