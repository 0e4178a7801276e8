//! Particle system against the PDE along an eps ladder, using the shipped
//! `configs/kinetic_limit.json` with a handful of seeds.

use std::path::Path;

use smoluchowski::harness::{run_compare, ExperimentConfig};

fn main() -> smoluchowski::Result<()> {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/kinetic_limit.json");
    let mut cfg = ExperimentConfig::load(&path)?;
    cfg.seeds = (0..8).collect();
    let (report, _) = run_compare(&cfg)?;
    for v in &report.verdicts {
        let gaps: Vec<String> = v.gaps.iter().map(|g| format!("{:.4} +- {:.4}", g.mean, g.se)).collect();
        println!("{:<14} {}  decreasing: {}", v.test_id, gaps.join("  "), v.decreasing);
    }
    if let Some(gaps) = &report.pair_gaps {
        let g: Vec<String> = gaps.iter().map(|r| format!("{:.4} +- {:.4}", r.gap.mean, r.gap.se)).collect();
        println!("{:<14} {}", "pair-sum gap", g.join("  "));
    }
    println!("eps = {:?}, monotone: {}", report.epsilons, report.monotone);
    Ok(())
}
