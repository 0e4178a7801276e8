//! Run orchestration for each subcommand.

use rayon::prelude::*;
use serde::Serialize;

use super::config::{CompareBlock, CompareTest, ExperimentConfig, RunKind, ScalingBlock};
use super::output::{num, Artifact, Csv};
use crate::error::{Error, Result};
use crate::kernel::{build_kernel_table_on, coupling_range, AGridSpec, EffectiveKernelTable, SupportGrid};
use crate::model::{check_hypotheses, sample_initial, HypothesisReport, InitialDensity, InteractionProfile, ModelConfig, ModelParams};
use crate::pde::{
    entropy, weak_residual, CoagulationOperator, DensityField, Diffuser, MassGrid, PdeState, PivotKernel, SpatialMesh,
    WeakReport,
};
use crate::quadrature::gauss_legendre;
use crate::scaling::{
    blowup_exponents, check_scaling_conditions, critical_exponents, BlowupExponents, CriticalExponents, Regime,
    ScalingConditions, ScalingInput,
};
use crate::sim::{
    mass_moments, simulate, pair_sum_gap, EmpiricalSnapshot, Estimate, GapConfig, GapReport, SimConfig, SpatialBump,
    TestFunction,
};

/// Points per decade of the coupling grid when none is configured.
pub const DEFAULT_PER_DECADE: usize = 64;

fn log_points(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 || lo == hi {
        return vec![lo];
    }
    (0..n).map(|i| lo * (hi / lo).powf(i as f64 / (n - 1) as f64)).collect()
}

/// Effective kernel table covering every coupling induced by `masses`;
/// `None` when alpha vanishes on all of them.
pub fn kernel_table_for(
    model: &ModelParams,
    masses: &[f64],
    spec: Option<AGridSpec>,
    cells: usize,
) -> Result<Option<EffectiveKernelTable>> {
    let Some((lo, hi)) = coupling_range(&model.alpha, &model.diffusion, masses) else {
        return Ok(None);
    };
    let spec = spec.unwrap_or_else(|| AGridSpec::covering(lo, hi, DEFAULT_PER_DECADE));
    let grid = SupportGrid::new(&model.potential, cells)?;
    build_kernel_table_on(&grid, &model.alpha, &model.diffusion, &spec).map(Some)
}

/// Pivot kernel for the PDE: the configured constant, or
/// `alpha I(scale alpha / (d(n) + d(m)))` from the effective kernel table.
pub fn pivot_kernel(
    model: &ModelParams,
    grid: &MassGrid,
    constant: Option<f64>,
    coupling_scale: f64,
    cells: usize,
) -> Result<PivotKernel> {
    if let Some(b) = constant {
        return Ok(PivotKernel::constant(grid, b));
    }
    if !(coupling_scale > 0.0 && coupling_scale.is_finite()) {
        return Err(Error::Config(format!("coupling_scale {coupling_scale} must be finite and > 0")));
    }
    let Some((lo, hi)) = coupling_range(&model.alpha, &model.diffusion, grid.pivots()) else {
        return Ok(PivotKernel::constant(grid, 0.0));
    };
    let spec = AGridSpec::covering(coupling_scale * lo, coupling_scale * hi, DEFAULT_PER_DECADE);
    let support = SupportGrid::new(&model.potential, cells)?;
    let table = build_kernel_table_on(&support, &model.alpha, &model.diffusion, &spec)?;
    if coupling_scale == 1.0 {
        return PivotKernel::from_table(grid, &table);
    }
    let beta = |n: f64, m: f64| -> Result<f64> {
        let al = model.alpha.eval(n, m);
        if al == 0.0 {
            return Ok(0.0);
        }
        Ok(al * table.integral(coupling_scale * al / (model.diffusion.eval(n) + model.diffusion.eval(m)))?)
    };
    for &n in grid.pivots() {
        for &m in grid.pivots() {
            beta(n, m)?;
        }
    }
    Ok(PivotKernel::from_fn(grid, |n, m| beta(n, m).expect("coverage checked")))
}

// check

pub fn run_check(cfg: &ExperimentConfig) -> Result<(HypothesisReport, Vec<Artifact>)> {
    cfg.validate_for(RunKind::Check)?;
    let (model, h) = cfg.model()?.build()?;
    let report = check_hypotheses(&model, &h, cfg.check.mass_cap, &cfg.check.grid);
    let art = Artifact::json("check.json", &report);
    Ok((report, vec![art]))
}

// kernel

#[derive(Debug, Clone, Serialize)]
pub struct KernelSummary {
    pub points: usize,
    pub a_min: f64,
    pub a_max: f64,
    pub max_residual: f64,
}

pub fn run_kernel(cfg: &ExperimentConfig) -> Result<(EffectiveKernelTable, Vec<Artifact>)> {
    cfg.validate_for(RunKind::Kernel)?;
    let (model, h) = cfg.model()?.build()?;
    let masses = if cfg.kernel.masses.is_empty() {
        let (lo, hi) = h.mass().support();
        log_points(lo.max(1e-3 * hi), hi, 20)
    } else {
        cfg.kernel.masses.clone()
    };
    let table = kernel_table_for(&model, &masses, cfg.kernel.a_grid, cfg.kernel.support_cells)?
        .ok_or_else(|| Error::InvalidParameter("alpha vanishes on every mass pair; nothing to tabulate".into()))?;
    let mut curve = Csv::new(&["a", "I"]);
    for (a, i) in table.couplings().iter().zip(table.integrals()) {
        curve.row(&[num(*a), num(*i)]);
    }
    let mut pairs = Csv::new(&["n", "m", "alpha", "beta"]);
    for &n in &masses {
        for &m in &masses {
            pairs.row(&[num(n), num(m), num(model.alpha.eval(n, m)), num(table.beta(n, m)?)]);
        }
    }
    let (a_min, a_max) = table.range();
    let summary = KernelSummary {
        points: table.couplings().len(),
        a_min,
        a_max,
        max_residual: table.max_residual(),
    };
    Ok((
        table,
        vec![curve.finish("kernel.csv"), pairs.finish("kernel_pairs.csv"), Artifact::json("kernel.json", &summary)],
    ))
}

// sim

#[derive(Debug, Clone, Serialize)]
pub struct SimSummary {
    pub seed: u64,
    pub initial_count: usize,
    pub final_count: usize,
    pub events: usize,
    pub collision_functional: f64,
}

pub fn run_sim(cfg: &ExperimentConfig) -> Result<(Vec<SimSummary>, Vec<Artifact>)> {
    cfg.validate_for(RunKind::Sim)?;
    let (model, h) = cfg.model()?.build()?;
    let block = &cfg.sim;
    let config = SimConfig {
        dt_factor: block.dt_factor,
        horizon: block.horizon,
        snapshots: block.snapshots.clone(),
        cell_size: None,
    };
    let runs: Vec<Result<(SimSummary, Vec<Artifact>)>> = cfg
        .seeds
        .par_iter()
        .map(|&seed| {
            let state = sample_initial(&h, &model, block.sampling, seed)?;
            let initial_count = state.alive_count();
            let traj = simulate(state, &config, &model, |_, _, _| {})?;
            let mut events = Csv::new(&["t", "i", "j", "m_i", "m_j", "side"]);
            for e in &traj.events {
                let side = match e.side {
                    crate::sim::Side::I => "i",
                    crate::sim::Side::J => "j",
                };
                events.row(&[num(e.time), e.id_i.to_string(), e.id_j.to_string(), num(e.mass_i), num(e.mass_j), side.into()]);
            }
            let mut header = vec!["t".to_string(), "id".to_string()];
            header.extend((0..model.dim).map(|a| format!("x{a}")));
            header.push("m".into());
            let header: Vec<&str> = header.iter().map(String::as_str).collect();
            let mut snaps = Csv::new(&header);
            let mut moments = Csv::new(&["t", "count", "number", "mass", "moment", "heavy_fraction"]);
            for (snap, &t) in traj.snapshots.iter().zip(&config.snapshots) {
                write_snapshot(&mut snaps, snap, t);
                let mm = mass_moments(snap, block.moment_exponent, block.heavy_threshold);
                moments.row(&[
                    num(t),
                    mm.count.to_string(),
                    num(mm.number),
                    num(mm.mass),
                    num(mm.moment),
                    num(mm.heavy_fraction),
                ]);
            }
            let summary = SimSummary {
                seed,
                initial_count,
                final_count: traj.final_state.alive_count(),
                events: traj.events.len(),
                collision_functional: traj.collision_total,
            };
            Ok((
                summary,
                vec![
                    events.finish(format!("events_seed{seed}.csv")),
                    snaps.finish(format!("snapshots_seed{seed}.csv")),
                    moments.finish(format!("moments_seed{seed}.csv")),
                ],
            ))
        })
        .collect();
    let mut summaries = Vec::new();
    let mut artifacts = Vec::new();
    for r in runs {
        let (s, a) = r?;
        summaries.push(s);
        artifacts.extend(a);
    }
    artifacts.push(Artifact::json("sim.json", &summaries));
    Ok((summaries, artifacts))
}

fn write_snapshot(csv: &mut Csv, snap: &EmpiricalSnapshot, t: f64) {
    for i in 0..snap.count() {
        let mut row = vec![num(t), snap.ids[i].to_string()];
        row.extend(snap.position(i).iter().map(|&x| num(x)));
        row.push(num(snap.masses[i]));
        csv.row(&row);
    }
}

// pde

#[derive(Debug, Clone, Serialize)]
pub struct PdeSummary {
    pub steps: usize,
    pub final_time: f64,
    pub initial_mass: f64,
    pub final_mass: f64,
    pub flux_mass: f64,
    pub weak: Option<WeakReport>,
}

/// Little-endian dump: magic `SMOLF64\0`, then `u32` dim, cells, bins,
/// `f64` side and time, the pivots, the bin widths and `f[bin][cell]`.
pub fn field_dump(f: &DensityField) -> Vec<u8> {
    let mut out = Vec::with_capacity(48 + 8 * (2 * f.bins() + f.values.len()));
    out.extend_from_slice(b"SMOLF64\0");
    for v in [f.mesh.dim as u32, f.mesh.cells as u32, f.bins() as u32] {
        out.extend_from_slice(&v.to_le_bytes());
    }
    for v in [f.mesh.side, f.time] {
        out.extend_from_slice(&v.to_le_bytes());
    }
    for v in f.grid.pivots().iter().chain(&f.grid.widths()).chain(&f.values) {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn run_pde(cfg: &ExperimentConfig) -> Result<(PdeSummary, Vec<Artifact>)> {
    cfg.validate_for(RunKind::Pde)?;
    let mcfg = cfg.model()?;
    let (model, h) = mcfg.build()?;
    let block = &cfg.pde;
    let grid = block.mass_grid.build()?;
    let mesh = if block.cells == 1 {
        SpatialMesh::homogeneous(model.dim, model.box_side)
    } else {
        SpatialMesh::new(model.dim, block.cells, model.box_side)?
    };
    let kernel = pivot_kernel(&model, &grid, block.constant_kernel, block.coupling_scale, crate::kernel::DEFAULT_CELLS)?;
    let op = CoagulationOperator::new(&grid, &kernel)?;
    let initial = DensityField::from_initial(&h, grid, mesh)?;
    let initial_mass = initial.mass();
    let steps = (block.horizon / block.dt).round() as usize;
    let every = block.record_every.max(1);
    let diffuser = Diffuser::new(mesh);
    let mut state = PdeState::new(initial);
    let keep_frames = block.weak_test.is_some();
    let mut frames = Vec::new();
    let mut moments = Csv::new(&["t", "number", "mass", "moment", "flux_mass", "flux_number", "entropy"]);
    let mut marginals = Csv::new(&["t", "n", "density"]);
    let mut record = |state: &PdeState, frames: &mut Vec<DensityField>| {
        let f = &state.field;
        moments.row(&[
            num(f.time),
            num(f.number()),
            num(f.mass()),
            num(f.moment(block.moment_exponent)),
            num(state.flux.mass),
            num(state.flux.number),
            num(entropy(f, &model.tau)),
        ]);
        for (j, v) in f.marginal().iter().enumerate() {
            marginals.row(&[num(f.time), num(f.grid.pivot(j)), num(*v)]);
        }
        if keep_frames {
            frames.push(f.clone());
        }
    };
    record(&state, &mut frames);
    for n in 1..=steps {
        crate::pde::step(&mut state, block.dt, &op, &model.diffusion, &diffuser)?;
        state.field.time = n as f64 * block.dt;
        if n % every == 0 || n == steps {
            record(&state, &mut frames);
        }
    }
    let weak = match &block.weak_test {
        Some(j) => Some(weak_residual(&frames, j, &kernel, &model.diffusion)?),
        None => None,
    };
    let summary = PdeSummary {
        steps,
        final_time: state.field.time,
        initial_mass,
        final_mass: state.field.mass(),
        flux_mass: state.flux.mass,
        weak,
    };
    let mut artifacts = vec![
        moments.finish("pde_moments.csv"),
        marginals.finish("pde_marginals.csv"),
        Artifact::binary("pde_field.bin", field_dump(&state.field)),
    ];
    if let Some(w) = &summary.weak {
        artifacts.push(Artifact::json("pde_weak.json", w));
    }
    artifacts.push(Artifact::json("pde.json", &summary));
    Ok((summary, artifacts))
}

// scaling

#[derive(Debug, Clone, Serialize)]
pub struct ScalingReport {
    pub gamma: f64,
    pub alpha: f64,
    pub tau: f64,
    pub conditions: ScalingConditions,
    pub regime: Option<Regime>,
    pub critical: Option<CriticalExponents>,
    pub blowup: Option<BlowupExponents>,
}

pub fn run_scaling(block: &ScalingBlock) -> Result<(ScalingReport, Vec<Artifact>)> {
    let inp = ScalingInput::new(block.phi, block.eta, block.dim)?;
    let report = if block.blowup {
        let b = blowup_exponents(block.phi, block.eta)?;
        let e = crate::scaling::Exponents { gamma: b.gamma, alpha: b.alpha, tau: b.tau };
        ScalingReport {
            gamma: b.gamma,
            alpha: b.alpha,
            tau: b.tau,
            conditions: check_scaling_conditions(&e, &inp),
            regime: Some(b.regime),
            critical: None,
            blowup: Some(b),
        }
    } else {
        let c = critical_exponents(&inp)?;
        ScalingReport {
            gamma: c.gamma,
            alpha: c.alpha,
            tau: c.tau,
            conditions: check_scaling_conditions(&c.exponents(), &inp),
            regime: None,
            critical: Some(c),
            blowup: None,
        }
    };
    let art = Artifact::json("scaling.json", &report);
    Ok((report, vec![art]))
}

// compare

/// `J_delta(y, n) = g(n) int b(x) xi_delta(x - y) dx`, the test function
/// seen through the mollifier.
struct SmoothedTest<'a> {
    test: &'a CompareTest,
    nodes: Vec<(Vec<f64>, f64)>,
}

impl<'a> SmoothedTest<'a> {
    fn new(test: &'a CompareTest, dim: usize, delta: f64) -> Result<Self> {
        let xi = InteractionProfile::bump(dim, 1.0)?;
        let rule = gauss_legendre(12);
        let count = rule.len().pow(dim as u32);
        let mut nodes = Vec::new();
        if test.spatial.is_some() {
            for flat in 0..count {
                let mut rem = flat;
                let mut y = vec![0.0; dim];
                let mut w = 1.0;
                for a in 0..dim {
                    let (t, wt) = rule[rem % rule.len()];
                    rem /= rule.len();
                    y[a] = t * delta;
                    w *= wt * delta;
                }
                let r2 = y.iter().map(|v| v * v).sum::<f64>() / (delta * delta);
                let weight = w * xi.eval_r2(r2) * delta.powi(-(dim as i32));
                if weight > 0.0 {
                    nodes.push((y, weight));
                }
            }
        }
        Ok(Self { test, nodes })
    }

    fn spatial(&self, x: &[f64], side: f64) -> f64 {
        let Some(b) = &self.test.spatial else { return 1.0 };
        let mut p = vec![0.0; x.len()];
        self.nodes
            .iter()
            .map(|(y, w)| {
                for a in 0..x.len() {
                    p[a] = (x[a] + y[a]).rem_euclid(side);
                }
                w * b.eval(&p)
            })
            .sum()
    }

    fn on_snapshot(&self, snap: &EmpiricalSnapshot) -> f64 {
        (0..snap.count())
            .map(|i| {
                let g = self.test.mass.eval(snap.masses[i]);
                if g == 0.0 {
                    0.0
                } else {
                    snap.weight * g * self.spatial(snap.position(i), snap.box_side)
                }
            })
            .sum()
    }

    fn on_field(&self, f: &DensityField) -> f64 {
        let cells = f.cells();
        let vol = f.mesh.cell_volume();
        let mut x = vec![0.0; f.mesh.dim];
        let g: Vec<f64> = f.grid.pivots().iter().map(|&n| self.test.mass.eval(n)).collect();
        let widths = f.grid.widths();
        let mut total = 0.0;
        for c in 0..cells {
            f.mesh.point(c, &mut x);
            let b = if cells == 1 && self.test.spatial.is_some() {
                // A single cell stands for a spatially constant field.
                self.test.spatial.as_ref().map(|b| b.integral()).unwrap_or(1.0) / f.mesh.side.powi(f.mesh.dim as i32)
            } else {
                self.spatial(&x, f.mesh.side)
            };
            let s: f64 = (0..f.bins()).map(|j| g[j] * f.values[j * cells + c] * widths[j]).sum();
            total += b * s;
        }
        total * vol
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ComparisonRow {
    pub epsilon: f64,
    pub seed_count: usize,
    pub test_id: String,
    pub time: f64,
    pub gap: Estimate,
    pub particle: Estimate,
    pub pde: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct TestVerdict {
    pub test_id: String,
    /// Seed averages of the time-averaged gap, one per epsilon.
    pub gaps: Vec<Estimate>,
    pub decreasing: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct ComparisonReport {
    pub model_hash: String,
    pub epsilons: Vec<f64>,
    pub delta: f64,
    pub rows: Vec<ComparisonRow>,
    pub verdicts: Vec<TestVerdict>,
    pub pair_gaps: Option<Vec<GapReport>>,
    pub pair_gap_decreasing: Option<bool>,
    /// Every verdict (and the pair-gap trend when run) is strictly decreasing.
    pub monotone: bool,
}

fn strictly_decreasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] < w[0])
}

fn validate_compare(block: &CompareBlock, seeds: &[u64]) -> Result<()> {
    if seeds.is_empty() {
        return Err(Error::Config("compare needs a non-empty seed list".into()));
    }
    if block.epsilons.is_empty() || !strictly_decreasing(&block.epsilons) {
        return Err(Error::Config("epsilons must be non-empty and strictly decreasing".into()));
    }
    if block.tests.is_empty() || block.times.is_empty() {
        return Err(Error::Config("compare needs test functions and times".into()));
    }
    if block.times.windows(2).any(|w| w[1] <= w[0]) || block.times[0] < 0.0 {
        return Err(Error::Config("compare times must be non-negative and increasing".into()));
    }
    Ok(())
}

/// PDE values of every test at every requested time.
fn pde_values(
    cfg: &ExperimentConfig,
    model: &ModelParams,
    h: &InitialDensity,
    block: &CompareBlock,
    tests: &[SmoothedTest],
) -> Result<Vec<Vec<f64>>> {
    let pblock = &cfg.pde;
    let grid = pblock.mass_grid.build()?;
    let mesh = if pblock.cells == 1 {
        SpatialMesh::homogeneous(model.dim, model.box_side)
    } else {
        SpatialMesh::new(model.dim, pblock.cells, model.box_side)?
    };
    let kernel = pivot_kernel(model, &grid, pblock.constant_kernel, pblock.coupling_scale, crate::kernel::DEFAULT_CELLS)?;
    let op = CoagulationOperator::new(&grid, &kernel)?;
    let diffuser = Diffuser::new(mesh);
    let mut state = PdeState::new(DensityField::from_initial(h, grid, mesh)?);
    let mut values = vec![vec![0.0; block.times.len()]; tests.len()];
    let mut n = 0usize;
    for (k, &t) in block.times.iter().enumerate() {
        let target = (t / pblock.dt).round() as usize;
        while n < target {
            crate::pde::step(&mut state, pblock.dt, &op, &model.diffusion, &diffuser)?;
            n += 1;
            state.field.time = n as f64 * pblock.dt;
        }
        for (l, test) in tests.iter().enumerate() {
            values[l][k] = test.on_field(&state.field);
        }
    }
    Ok(values)
}

/// Particle values `[seed][test][time]` for one rung of the ladder.
fn particle_values(
    model: &ModelParams,
    h: &InitialDensity,
    block: &CompareBlock,
    seeds: &[u64],
    tests: &[SmoothedTest],
    sampling: crate::model::SamplingMode,
) -> Result<Vec<Vec<Vec<f64>>>> {
    let config = SimConfig {
        dt_factor: block.dt_factor,
        horizon: *block.times.last().expect("validated"),
        snapshots: block.times.clone(),
        cell_size: None,
    };
    seeds
        .par_iter()
        .map(|&seed| {
            let state = sample_initial(h, model, sampling, seed)?;
            let traj = simulate(state, &config, model, |_, _, _| {})?;
            Ok(tests
                .iter()
                .map(|t| traj.snapshots.iter().map(|s| t.on_snapshot(s)).collect())
                .collect())
        })
        .collect()
}

pub fn run_compare(cfg: &ExperimentConfig) -> Result<(ComparisonReport, Vec<Artifact>)> {
    cfg.validate_for(RunKind::Compare)?;
    let base: &ModelConfig = cfg.model()?;
    let block = cfg.compare.as_ref().expect("validated");
    validate_compare(block, &cfg.seeds)?;
    let hash = base.physics_hash();
    let mut rungs = Vec::with_capacity(block.epsilons.len());
    for &eps in &block.epsilons {
        let mut m = base.clone();
        m.epsilon = eps;
        if m.physics_hash() != hash {
            return Err(Error::Consistency(format!("model hash changed at eps = {eps}")));
        }
        rungs.push(m.build()?);
    }
    let (model0, h0) = &rungs[0];
    if block.delta <= 2.0 * model0.epsilon {
        return Err(Error::Resolution(format!(
            "delta = {} must exceed twice the largest eps {}",
            block.delta, model0.epsilon
        )));
    }
    let tests: Vec<SmoothedTest> = block
        .tests
        .iter()
        .map(|t| SmoothedTest::new(t, model0.dim, block.delta))
        .collect::<Result<_>>()?;
    let pde = pde_values(cfg, model0, h0, block, &tests)?;

    let mut rows = Vec::new();
    let mut time_avg: Vec<Vec<Estimate>> = vec![Vec::new(); tests.len()];
    for (model, h) in &rungs {
        let values = particle_values(model, h, block, &cfg.seeds, &tests, cfg.sim.sampling)?;
        for (l, test) in block.tests.iter().enumerate() {
            for (k, &t) in block.times.iter().enumerate() {
                let samples: Vec<f64> = values.iter().map(|v| v[l][k]).collect();
                let gaps: Vec<f64> = samples.iter().map(|s| (s - pde[l][k]).abs()).collect();
                rows.push(ComparisonRow {
                    epsilon: model.epsilon,
                    seed_count: cfg.seeds.len(),
                    test_id: test.id.clone(),
                    time: t,
                    gap: Estimate::from_samples(&gaps),
                    particle: Estimate::from_samples(&samples),
                    pde: pde[l][k],
                });
            }
            let per_seed: Vec<f64> = values
                .iter()
                .map(|v| v[l].iter().zip(&pde[l]).map(|(s, p)| (s - p).abs()).sum::<f64>() / block.times.len() as f64)
                .collect();
            time_avg[l].push(Estimate::from_samples(&per_seed));
        }
    }
    let verdicts: Vec<TestVerdict> = block
        .tests
        .iter()
        .zip(time_avg)
        .map(|(t, gaps)| TestVerdict {
            test_id: t.id.clone(),
            decreasing: strictly_decreasing(&gaps.iter().map(|g| g.mean).collect::<Vec<_>>()),
            gaps,
        })
        .collect();

    let (pair_gaps, pair_gap_decreasing) = match &block.gap {
        Some(g) => {
            let reports = pair_gap_ladder(&rungs, block, g, &cfg.seeds)?;
            let dec = strictly_decreasing(&reports.iter().map(|r| r.gap.mean).collect::<Vec<_>>());
            (Some(reports), Some(dec))
        }
        None => (None, None),
    };
    let monotone = verdicts.iter().all(|v| v.decreasing) && pair_gap_decreasing.unwrap_or(true);
    let report = ComparisonReport {
        model_hash: hash,
        epsilons: block.epsilons.clone(),
        delta: block.delta,
        rows,
        verdicts,
        pair_gaps,
        pair_gap_decreasing,
        monotone,
    };
    let artifacts = compare_artifacts(&report);
    Ok((report, artifacts))
}

fn pair_gap_ladder(
    rungs: &[(ModelParams, InitialDensity)],
    block: &CompareBlock,
    g: &super::config::GapBlock,
    seeds: &[u64],
) -> Result<Vec<GapReport>> {
    let mids: Vec<f64> = g.edges.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
    let (model0, _) = &rungs[0];
    let table = kernel_table_for(model0, &mids, None, crate::kernel::DEFAULT_CELLS)?;
    let test = TestFunction { spatial: g.test.clone(), mass: g.mass.clone() };
    let gap_cfg = GapConfig {
        delta: block.delta,
        edges: g.edges.clone(),
        mass_cap: g.mass_cap,
        sample_every: g.sample_every,
    };
    rungs
        .iter()
        .map(|(model, h)| {
            let config = SimConfig::new(g.horizon);
            let config = SimConfig { dt_factor: block.dt_factor, ..config };
            match &table {
                Some(t) => pair_sum_gap(model, h, t, &test, &config, &gap_cfg, seeds),
                None => Ok(GapReport {
                    epsilon: model.epsilon,
                    delta: block.delta,
                    per_seed: Vec::new(),
                    gap: Estimate { mean: 0.0, se: 0.0 },
                    micro: Estimate { mean: 0.0, se: 0.0 },
                    macro_: Estimate { mean: 0.0, se: 0.0 },
                }),
            }
        })
        .collect()
}

pub fn compare_artifacts(report: &ComparisonReport) -> Vec<Artifact> {
    let mut csv = Csv::new(&["epsilon", "seed_count", "J_id", "t", "gap", "se"]);
    for r in &report.rows {
        csv.row(&[
            num(r.epsilon),
            r.seed_count.to_string(),
            r.test_id.clone(),
            num(r.time),
            num(r.gap.mean),
            num(r.gap.se),
        ]);
    }
    let mut values = Csv::new(&["epsilon", "J_id", "t", "particle_mean", "particle_se", "pde"]);
    for r in &report.rows {
        values.row(&[
            num(r.epsilon),
            r.test_id.clone(),
            num(r.time),
            num(r.particle.mean),
            num(r.particle.se),
            num(r.pde),
        ]);
    }
    let mut out = vec![csv.finish("compare.csv"), values.finish("compare_values.csv")];
    if let Some(gaps) = &report.pair_gaps {
        let mut g = Csv::new(&["epsilon", "delta", "seed_count", "gap", "se", "micro", "macro"]);
        for r in gaps {
            g.row(&[
                num(r.epsilon),
                num(r.delta),
                r.per_seed.len().to_string(),
                num(r.gap.mean),
                num(r.gap.se),
                num(r.micro.mean),
                num(r.macro_.mean),
            ]);
        }
        out.push(g.finish("pair_gap.csv"));
    }
    out.push(Artifact::json("compare.json", report));
    out
}

/// The spatial bump used by the default comparison.
pub fn centred_bump(dim: usize, side: f64, radius: f64) -> SpatialBump {
    SpatialBump { center: vec![0.5 * side; dim], radius, height: 1.0 }
}
