//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Run all criteria with `cargo test --test acceptance`, or a subset with
//! `cargo test --test acceptance -- 4 5`.

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use smoluchowski::harness::{run_compare, Artifact, ExperimentConfig};
use smoluchowski::kernel::{build_kernel_table_on, dw_da, gamma_nodes, solve_w, AGridSpec, SupportGrid, DEFAULT_CELLS};
use smoluchowski::model::{
    sample_initial, CoagulationPropensity, DiffusionCoefficient, InitialDensity, InitialPreset, InteractionProfile,
    ModelParams, SamplingMode,
};
use smoluchowski::pde::{
    exact_constant_kernel, exponential_initial, mass_weighted_l1, run, weak_residual, CoagulationOperator, MassGrid,
    PivotKernel, SpatialFactor, SpatialMesh, TimeFactor, WeakTestFunction,
};
use smoluchowski::scaling::{
    blowup_exponents, check_scaling_conditions, critical_exponents, mass_exponent, Regime, ScalingInput,
};
use smoluchowski::sim::{
    collision_functional, correlation_check, free_motion_oracle, simulate, MassWeight, ProductTest, SimConfig,
    SpatialBump,
};

type Outcome = Result<(bool, String), smoluchowski::Error>;

struct Criterion {
    id: u32,
    name: &'static str,
    limit: Duration,
    run: fn() -> Outcome,
}

fn config_path() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs/kinetic_limit.json")
}

fn support_grid() -> SupportGrid {
    SupportGrid::new(&InteractionProfile::bump(3, 1.0).unwrap(), DEFAULT_CELLS).unwrap()
}

fn sup(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

fn kernel_limits() -> Outcome {
    let grid = support_grid();
    let zero = solve_w(0.0, &grid)?;
    let mut ok = zero.values().iter().all(|&v| v == 0.0);
    let mut notes = vec![format!("w^0 == 0: {ok}")];
    let mut previous: Option<Vec<f64>> = None;
    for a in [0.1, 1.0, 10.0, 100.0] {
        let w = solve_w(a, &grid)?;
        let wv = w.values();
        let bounded = wv.iter().all(|&x| (-1.0..=0.0).contains(&x));
        let monotone = previous.as_ref().is_none_or(|p| wv.iter().zip(p).all(|(now, before)| now <= before));
        let v = dw_da(a, &grid, &w)?;
        let derivative = v.iter().zip(wv).all(|(&vi, &wi)| wi / a <= vi && vi <= 0.0);
        // Forward differences at h and h/2: first-order agreement.
        let fd_error = |h: f64| -> Result<f64, smoluchowski::Error> {
            let wh = solve_w(a + h, &grid)?;
            Ok(wh.values().iter().zip(wv).zip(&v).fold(0.0f64, |m, ((p, q), d)| m.max(((p - q) / h - d).abs())))
        };
        let h = 1e-2 * a;
        let (e1, e2) = (fd_error(h)?, fd_error(h / 2.0)?);
        let first_order = e1 <= sup(&v) * h / a * 4.0 && e2 <= 0.6 * e1;
        ok &= bounded && monotone && derivative && first_order;
        notes.push(format!(
            "a={a}: [-1,0] {bounded}, monotone {monotone}, a^-1 w <= dw/da <= 0 {derivative}, fd err {e1:.1e}->{e2:.1e}"
        ));
        previous = Some(wv.to_vec());
    }
    Ok((ok, notes.join("; ")))
}

fn kernel_perturbative() -> Outcome {
    let grid = support_grid();
    let a = 0.1;
    let w = solve_w(a, &grid)?;
    let gamma = gamma_nodes(&grid);
    let f = |x: &[f64]| {
        let vx: Vec<f64> = x.iter().zip(grid.v()).map(|(p, q)| p * q).collect();
        grid.apply_kernel(&vx)
    };
    let fg = f(&gamma);
    let ffg = f(&fg);
    let a_gamma = a * sup(&gamma);
    // |F| on L-infinity is sup Gamma.
    let f_norm = sup(&gamma);
    let first: Vec<f64> = w.values().iter().zip(&gamma).map(|(wi, g)| wi + a * g).collect();
    let tail_bound = a * f_norm / (1.0 - a * f_norm) * a_gamma;
    let oracle: Vec<f64> = (0..grid.len())
        .map(|i| w.values()[i] - (-a * gamma[i] + a * a * fg[i] - a * a * a * ffg[i]))
        .collect();
    let pass = sup(&first) <= tail_bound && sup(&oracle) <= 1e-3 * a_gamma;
    Ok((
        pass,
        format!(
            "|w + a Gamma| = {:.3e} <= {tail_bound:.3e}; |w - 3-term oracle| = {:.3e} <= {:.3e}",
            sup(&first),
            sup(&oracle),
            1e-3 * a_gamma
        ),
    ))
}

fn beta_properties() -> Outcome {
    let slack = 1e-10;
    let grid = support_grid();
    let alpha = CoagulationPropensity::constant(1.0);
    let diffusion = DiffusionCoefficient::constant(1.0);
    let table = build_kernel_table_on(&grid, &alpha, &diffusion, &AGridSpec { min: 1e-2, max: 1e2, per_decade: 16 })?;
    let masses: Vec<f64> = (0..20).map(|i| 0.1 * 100f64.powf(i as f64 / 19.0)).collect();
    let mut symmetric = true;
    let mut bounded = true;
    for &n in &masses {
        for &m in &masses {
            let b = table.beta(n, m)?;
            symmetric &= b == table.beta(m, n)?;
            bounded &= b > 0.0 && b <= 1.0 + slack;
        }
    }
    let (a, i) = (table.couplings(), table.integrals());
    let decreasing = i.windows(2).all(|w| w[1] <= w[0] + slack);
    let a_i_up = (1..a.len()).all(|k| a[k] * i[k] >= a[k - 1] * i[k - 1] - slack);
    Ok((
        symmetric && bounded && decreasing && a_i_up,
        format!(
            "symmetric {symmetric}, 0 < beta <= 1 {bounded}, I decreasing {decreasing}, a I non-decreasing {a_i_up} over {} couplings",
            a.len()
        ),
    ))
}

struct ExactRun {
    l1: f64,
    m0: f64,
    drift_rate: f64,
    weak_gap: f64,
}

fn exact_run() -> Result<ExactRun, smoluchowski::Error> {
    let grid = MassGrid::geometric(1e-2, 50.0, 400)?;
    let kernel = PivotKernel::constant(&grid, 1.0);
    let op = CoagulationOperator::new(&grid, &kernel)?;
    let f0 = exponential_initial(grid, SpatialMesh::homogeneous(3, 1.0));
    let mass0 = f0.mass();
    let horizon = 5.0;
    let d = DiffusionCoefficient::constant(0.0);
    let traj = run(f0, &op, &d, 1e-3, horizon, 100, 2.0)?;
    let mut out = ExactRun { l1: 0.0, m0: 0.0, drift_rate: 0.0, weak_gap: 0.0 };
    for (frame, row) in traj.frames.iter().zip(&traj.moments) {
        out.l1 = out.l1.max(mass_weighted_l1(frame, |n| exact_constant_kernel(n, frame.time, 1.0)));
        out.m0 = out.m0.max((row.number - 1.0 / (1.0 + row.time)).abs());
        if row.time > 0.0 {
            out.drift_rate = out.drift_rate.max(((row.mass + row.flux_mass - mass0) / mass0).abs() / row.time);
        }
    }
    let j = WeakTestFunction::new(SpatialFactor::Constant, MassWeight::Mass, TimeFactor::Constant);
    let weak = weak_residual(&traj.frames, &j, &kernel, &d)?;
    let drift = traj.final_state.field.mass() - mass0;
    out.weak_gap = (weak.residual - drift).abs();
    Ok(out)
}

fn pde_exact() -> Outcome {
    let r = exact_run()?;
    Ok((
        r.l1 <= 2e-2 && r.m0 <= 1e-3,
        format!("sup L1 error {:.3e} <= 2e-2, sup |M0 - 1/(1+t)| {:.3e} <= 1e-3", r.l1, r.m0),
    ))
}

fn pde_conservation() -> Outcome {
    let r = exact_run()?;
    Ok((
        r.drift_rate <= 1e-8 && r.weak_gap <= 1e-10,
        format!(
            "(mass + flux) drift {:.3e} per unit time <= 1e-8, |weak residual - mass drift| {:.3e} <= 1e-10",
            r.drift_rate, r.weak_gap
        ),
    ))
}

fn diffusion_oracle() -> Outcome {
    // k_eps = 10 at eps = 0.1, so Z = 1000 gives 10^4 particles.
    let total = 1000.0;
    let model = ModelParams::standard(3, 0.1, total, 1.0)?.with_alpha(CoagulationPropensity::constant(0.0));
    let preset = InitialPreset::MonodisperseBand { total, mass: 1.0, width: 0.01, sigma: None, center: None };
    let h = InitialDensity::from_preset(&preset, 3, 1.0)?;
    let state = sample_initial(&h, &model, SamplingMode::Deterministic, 11)?;
    let count = state.alive_count();
    let t = 1.0;
    let config = SimConfig { dt_factor: 0.5, snapshots: vec![t], ..SimConfig::new(t) };
    let traj = simulate(state, &config, &model, |_, _, _| {})?;
    let fin = &traj.final_state;
    let msd: f64 = fin.alive_slots().map(|s| fin.travel(s).iter().map(|x| x * x).sum::<f64>()).sum::<f64>() / count as f64;
    let ratio = msd / (2.0 * 3.0 * t);
    Ok(((0.97..=1.03).contains(&ratio) && count == 10_000, format!("N = {count}, MSD/(6t) = {ratio:.4} in [0.97, 1.03]")))
}

fn inequality_suite() -> Outcome {
    let seeds: Vec<u64> = (0..8).collect();
    let z = 1.0;
    let model = ModelParams::standard(3, 0.05, z, 1.0)?;
    let h = InitialDensity::from_preset(
        &InitialPreset::GaussianExp { total: z, sigma: 0.15, center: None, mass_scale: 1.0 },
        3,
        1.0,
    )?;
    let collisions = collision_functional(&model, &h, &SimConfig::new(1.0), &seeds)?;
    let collision_bound = collisions.total.mean <= z * (1.0 + 3.0 * collisions.total.se);

    let bump = |x: f64| SpatialBump { center: vec![x, 0.5, 0.5], radius: 0.25, height: 1.0 };
    let test = ProductTest { factors: vec![bump(0.4), bump(0.6)] };
    let corr = correlation_check(&model, &h, &test, &SimConfig::new(0.2), &seeds, 32)?;
    let correlation_bound = corr.lhs.mean <= corr.rhs * (1.0 + 3.0 * corr.lhs.se / corr.rhs);

    let free = model.clone().with_alpha(CoagulationPropensity::constant(0.0));
    let horizon = 0.05;
    let lhs0 = correlation_check(&free, &h, &test, &SimConfig::new(horizon), &seeds, 32)?;
    let oracle = free_motion_oracle(&free, &h, &test, horizon, 32)?;
    let equality = (lhs0.lhs.mean - oracle).abs() <= 3.0 * lhs0.lhs.se;
    Ok((
        collision_bound && correlation_bound && equality,
        format!(
            "collision {:.4} +- {:.4} <= Z(1+3 SE); k=2 LHS {:.4e} +- {:.1e} vs RHS {:.4e}; alpha=0 LHS {:.4e} +- {:.1e} vs oracle {:.4e}",
            collisions.total.mean,
            collisions.total.se,
            corr.lhs.mean,
            corr.lhs.se,
            corr.rhs,
            lhs0.lhs.mean,
            lhs0.lhs.se,
            oracle
        ),
    ))
}

fn kinetic_trend() -> Outcome {
    let cfg = ExperimentConfig::load(&config_path())?;
    let block = cfg.compare.as_ref().expect("compare block");
    let (report, _) = run_compare(&cfg)?;
    let fmt = |v: &[f64]| v.iter().map(|g| format!("{g:.4}")).collect::<Vec<_>>().join(" > ");
    let mut notes: Vec<String> = report
        .verdicts
        .iter()
        .map(|v| format!("{}: {} ({})", v.test_id, fmt(&v.gaps.iter().map(|g| g.mean).collect::<Vec<_>>()), v.decreasing))
        .collect();
    let pair = report.pair_gaps.as_ref().map(|g| g.iter().map(|r| r.gap.mean).collect::<Vec<_>>());
    if let Some(p) = &pair {
        notes.push(format!("pair-sum gap: {} ({})", fmt(p), report.pair_gap_decreasing.unwrap_or(false)));
    }
    let pass = cfg.seeds.len() >= 8
        && block.epsilons == [0.12, 0.08, 0.05]
        && block.delta == 0.25
        && report.verdicts.len() >= 2
        && pair.is_some()
        && report.monotone;
    Ok((pass, format!("{} seeds; {}", cfg.seeds.len(), notes.join("; "))))
}

fn scaling_algebra() -> Outcome {
    let mut conditions = true;
    let mut regimes = true;
    for i in 0..20 {
        for j in 0..20 {
            let phi = 0.03 + 0.1 * i as f64;
            let eta = 0.07 + 0.1 * j as f64;
            let inp = ScalingInput::new(phi, eta, 3)?;
            let c = critical_exponents(&inp)?;
            let e = c.exponents();
            conditions &= check_scaling_conditions(&e, &inp).all() && mass_exponent(&e, 3).abs() <= 1e-12;
            let b = blowup_exponents(phi, eta)?;
            regimes &= (b.regime == Regime::ScalingPermitsHeavyMass) == (phi + eta >= 1.0);
        }
    }
    // Exactly on the boundary phi + eta = 1 (dyadic, so the sum is exact).
    for k in 1..8 {
        let phi = k as f64 / 8.0;
        let b = blowup_exponents(phi, 1.0 - phi)?;
        regimes &= b.regime == Regime::ScalingPermitsHeavyMass && b.mass_exponent == 0.0;
        let below = blowup_exponents(phi, (1.0 - phi) * (1.0 - 1e-12))?;
        regimes &= below.regime == Regime::MassConserving && below.mass_exponent < 0.0;
    }
    let two = critical_exponents(&ScalingInput::new(0.4, 0.3, 2)?)?;
    let d2 = (two.gamma, two.alpha, two.tau) == (0.0, 1.0, 0.5);
    Ok((
        conditions && regimes && d2,
        format!("20x20 conditions to 1e-12 {conditions}, blow-up boundary at phi + eta = 1 {regimes}, d=2 gives (0, 1, 1/2) {d2}"),
    ))
}

fn determinism() -> Outcome {
    let mut cfg = ExperimentConfig::load(&config_path())?;
    cfg.seeds = (0..4).collect();
    let run_in = |threads: usize| -> Result<Vec<Artifact>, smoluchowski::Error> {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().expect("thread pool");
        pool.install(|| run_compare(&cfg)).map(|(_, a)| a)
    };
    let first = run_in(1)?;
    let second = run_in(1)?;
    let threaded = run_in(3)?;
    let csv = |a: &[Artifact]| a.iter().filter(|x| x.name.ends_with(".csv")).cloned().collect::<Vec<_>>();
    let same = csv(&first) == csv(&second);
    let thread_free = csv(&first) == csv(&threaded);
    let files = csv(&first).iter().map(|a| a.name.clone()).collect::<Vec<_>>().join(", ");
    Ok((same && thread_free && !files.is_empty(), format!("repeat identical {same}, 1 vs 3 threads identical {thread_free} ({files})")))
}

fn main() -> ExitCode {
    let criteria = [
        Criterion { id: 1, name: "kernel limits", limit: Duration::from_secs(30), run: kernel_limits },
        Criterion { id: 2, name: "perturbative kernel", limit: Duration::from_secs(5), run: kernel_perturbative },
        Criterion { id: 3, name: "beta properties", limit: Duration::MAX, run: beta_properties },
        Criterion { id: 4, name: "homogeneous PDE vs exact", limit: Duration::from_secs(10), run: pde_exact },
        Criterion { id: 5, name: "PDE conservation", limit: Duration::MAX, run: pde_conservation },
        Criterion { id: 6, name: "diffusion oracle", limit: Duration::from_secs(20), run: diffusion_oracle },
        Criterion { id: 7, name: "simulator inequalities", limit: Duration::from_secs(300), run: inequality_suite },
        Criterion { id: 8, name: "kinetic-limit trend", limit: Duration::from_secs(1800), run: kinetic_trend },
        Criterion { id: 9, name: "scaling algebra", limit: Duration::from_secs(1), run: scaling_algebra },
        Criterion { id: 10, name: "determinism", limit: Duration::MAX, run: determinism },
    ];
    let wanted: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    for c in criteria.iter().filter(|c| wanted.is_empty() || wanted.contains(&c.id)) {
        let start = Instant::now();
        let outcome = (c.run)();
        let elapsed = start.elapsed();
        let (pass, detail) = match outcome {
            Ok((pass, detail)) => (pass && elapsed <= c.limit, detail),
            Err(e) => (false, format!("error: {e}")),
        };
        let budget = if c.limit == Duration::MAX { String::new() } else { format!(" / {}s", c.limit.as_secs()) };
        println!(
            "criterion {:>2} {} {}: {detail} [{:.1}s{budget}]",
            c.id,
            if pass { "PASS" } else { "FAIL" },
            c.name,
            elapsed.as_secs_f64()
        );
        failed += usize::from(!pass);
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
