//! Builds phi for a non-monotone diffusivity and checks the model
//! hypotheses for two initial densities.

use smoluchowski::model::{
    check_hypotheses, construct_phi, CoagulationPropensity, DiffusionCoefficient, HypothesisGrid, InitialDensity,
    InitialPreset, ModelParams,
};

fn main() -> smoluchowski::Result<()> {
    let d = DiffusionCoefficient::Tabulated { masses: vec![0.1, 1.0, 10.0], values: vec![1.0, 2.0, 0.5] };
    let phi = construct_phi(&d, &[0.1, 1.0, 10.0], 1.0)?;
    for m in [0.1, 0.5, 1.0, 3.0, 10.0] {
        println!("m = {m:<5} d = {:<8.4} phi = {:<8.4} phi d = {:.4}", d.eval(m), phi.eval(m), phi.eval(m) * d.eval(m));
    }

    let model = ModelParams::standard(3, 0.05, 1.0, 1.0)?.with_alpha(CoagulationPropensity::SumEta { eta: 0.5, scale: 1.0 });
    let presets = [
        ("monodisperse band", InitialPreset::MonodisperseBand { total: 1.0, mass: 1.0, width: 0.01, sigma: None, center: None }),
        ("gaussian x exp(-n)", InitialPreset::GaussianExp { total: 1.0, sigma: 0.2, center: None, mass_scale: 1.0 }),
    ];
    for (name, preset) in presets {
        let h = InitialDensity::from_preset(&preset, 3, 1.0)?;
        let report = check_hypotheses(&model, &h, 10.0, &HypothesisGrid::default());
        println!("\n{name}: all pass = {}", report.all_pass());
        for c in &report.conditions {
            println!("  {:<16} {:>5} {:?}", c.name, c.pass, c.estimate);
        }
    }
    Ok(())
}
