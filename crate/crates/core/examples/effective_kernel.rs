//! Solves the correction problem for a few couplings and tabulates
//! beta(n, m) for a mass-dependent propensity.

use smoluchowski::kernel::{build_kernel_table_on, coupling_range, solve_w, AGridSpec, SupportGrid, DEFAULT_CELLS};
use smoluchowski::model::{CoagulationPropensity, DiffusionCoefficient, InteractionProfile};

fn main() -> smoluchowski::Result<()> {
    let potential = InteractionProfile::bump(3, 1.0)?;
    let grid = SupportGrid::new(&potential, DEFAULT_CELLS)?;
    println!("{:>8} {:>12} {:>12}", "a", "I(a)", "a I(a)");
    for a in [0.1, 1.0, 10.0, 100.0] {
        let w = solve_w(a, &grid)?;
        println!("{a:>8} {:>12.6} {:>12.6}", w.integral(), a * w.integral());
    }

    let alpha = CoagulationPropensity::SumEta { eta: 0.5, scale: 1.0 };
    let diffusion = DiffusionCoefficient::Power { phi: 0.5, cap: Some(10.0) };
    let masses = [0.5, 1.0, 2.0, 4.0, 8.0];
    let (lo, hi) = coupling_range(&alpha, &diffusion, &masses).expect("alpha is positive");
    let table = build_kernel_table_on(&grid, &alpha, &diffusion, &AGridSpec::covering(lo, hi, 32))?;
    println!("\nbeta(n, m) for alpha = n^1/2 + m^1/2, d = m^-1/2");
    for &n in &masses {
        let row: Vec<String> = masses.iter().map(|&m| format!("{:8.4}", table.beta(n, m).unwrap())).collect();
        println!("n = {n:<4} {}", row.join(" "));
    }
    Ok(())
}
