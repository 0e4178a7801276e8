//! Critical and blow-up scaling exponents for d = m^-phi, alpha ~ m^eta.

use smoluchowski::scaling::{blowup_exponents, check_scaling_conditions, critical_exponents, mass_exponent, ScalingInput};

fn main() -> smoluchowski::Result<()> {
    println!("{:>5} {:>5} {:>8} {:>8} {:>8} {:>10} {:>26}", "phi", "eta", "gamma", "alpha", "tau", "conditions", "blow-up regime");
    for (phi, eta) in [(0.25, 0.25), (0.5, 0.4), (1.0 / 3.0, 2.0 / 3.0), (0.5, 1.0), (1.0, 1.0)] {
        let inp = ScalingInput::new(phi, eta, 3)?;
        let c = critical_exponents(&inp)?;
        let holds = check_scaling_conditions(&c.exponents(), &inp).all();
        let regime = blowup_exponents(phi, eta)?.regime;
        println!(
            "{phi:>5.3} {eta:>5.3} {:>8.4} {:>8.4} {:>8.4} {:>10} {:>26}",
            c.gamma,
            c.alpha,
            c.tau,
            holds,
            format!("{regime:?}")
        );
        assert!(mass_exponent(&c.exponents(), 3).abs() < 1e-12);
    }
    let two = critical_exponents(&ScalingInput::new(0.3, 0.4, 2)?)?;
    println!("d = 2: (gamma, alpha, tau) = ({}, {}, {})", two.gamma, two.alpha, two.tau);
    Ok(())
}
