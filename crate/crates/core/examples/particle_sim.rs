//! Runs the particle system from a monodisperse start and prints the
//! number density, mass and events along the way.

use smoluchowski::model::{sample_initial, InitialDensity, InitialPreset, ModelParams, SamplingMode};
use smoluchowski::sim::{mass_moments, simulate, SimConfig};

fn main() -> smoluchowski::Result<()> {
    let total = 4.0;
    let model = ModelParams::standard(3, 0.05, total, 1.0)?;
    let preset = InitialPreset::MonodisperseBand { total, mass: 1.0, width: 0.01, sigma: None, center: None };
    let h = InitialDensity::from_preset(&preset, 3, 1.0)?;
    let state = sample_initial(&h, &model, SamplingMode::Deterministic, 7)?;
    println!("N = {} particles of weight {}", state.alive_count(), model.particle_weight());

    let config = SimConfig { snapshots: vec![0.0, 0.05, 0.1, 0.2], ..SimConfig::new(0.2) };
    let traj = simulate(state, &config, &model, |_, _, _| {})?;
    println!("{:>6} {:>6} {:>10} {:>10} {:>10}", "t", "count", "M0", "mass", "M2");
    for (snap, t) in traj.snapshots.iter().zip(&config.snapshots) {
        let m = mass_moments(snap, 2.0, 10.0);
        println!("{t:>6} {:>6} {:>10.4} {:>10.4} {:>10.4}", m.count, m.number, m.mass, m.moment);
    }
    println!("{} coagulations, collision functional {:.4}", traj.events.len(), traj.collision_total);
    for e in traj.events.iter().take(5) {
        println!("  t = {:.4}: {} + {} -> {} (masses {:.3} + {:.3})", e.time, e.id_i, e.id_j, e.new_id, e.mass_i, e.mass_j);
    }
    Ok(())
}
