//! Strang-split time stepping: exact spectral diffusion around an SSP-RK2
//! coagulation step.

use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use serde::Serialize;

use super::coag::{rhs_cells, CoagulationOperator, Flux};
use super::grid::{DensityField, MassGrid, SpatialMesh};
use crate::error::{Error, Result};
use crate::fft::{unravel, wavenumber, NdFft};
use crate::model::DiffusionCoefficient;

/// Negative values at most this fraction of `max f` are rounding and get
/// clipped; anything larger means the step was too long.
pub const CLIP_TOLERANCE: f64 = 1e-14;
/// `dt B_max M_0` must stay below this.
pub const STABILITY_LIMIT: f64 = 0.25;

/// Spectral heat propagator on a periodic mesh.
#[derive(Debug)]
pub struct Diffuser {
    mesh: SpatialMesh,
    fft: Option<NdFft>,
    k2: Vec<f64>,
}

impl Diffuser {
    pub fn new(mesh: SpatialMesh) -> Self {
        if mesh.len() == 1 {
            return Self { mesh, fft: None, k2: vec![0.0] };
        }
        let shape = mesh.shape();
        let mut idx = vec![0usize; mesh.dim];
        let k2 = (0..mesh.len())
            .map(|flat| {
                unravel(flat, &shape, &mut idx);
                idx.iter().map(|&i| wavenumber(i, mesh.cells, mesh.side).powi(2)).sum()
            })
            .collect();
        Self { mesh, fft: Some(NdFft::new(&shape)), k2 }
    }

    /// Multiplies the Fourier modes of each bin by `exp(-d(n_j) |k|^2 dt)`.
    pub fn apply(&self, f: &mut DensityField, dt: f64, d: &DiffusionCoefficient) {
        assert_eq!(f.mesh, self.mesh);
        let Some(fft) = &self.fft else { return };
        let cells = f.cells();
        let pivots = f.grid.pivots().to_vec();
        f.values.par_chunks_mut(cells).enumerate().for_each(|(j, bin)| {
            let dn = d.eval(pivots[j]);
            if dn == 0.0 || bin.iter().all(|&v| v == 0.0) {
                return;
            }
            let mut buf: Vec<Complex64> = bin.iter().map(|&v| Complex64::new(v, 0.0)).collect();
            fft.forward(&mut buf);
            for (b, &k2) in buf.iter_mut().zip(&self.k2) {
                *b *= (-dn * k2 * dt).exp();
            }
            fft.inverse(&mut buf);
            for (v, b) in bin.iter_mut().zip(&buf) {
                *v = b.re;
            }
        });
    }
}

/// One exact diffusion step of length `dt`.
pub fn diffusion_step(f: &DensityField, dt: f64, d: &DiffusionCoefficient) -> DensityField {
    let mut out = f.clone();
    Diffuser::new(f.mesh).apply(&mut out, dt, d);
    out.time += dt;
    out
}

/// Field plus the mass and number that have left through the top of the
/// mass grid.
#[derive(Debug, Clone)]
pub struct PdeState {
    pub field: DensityField,
    pub flux: Flux,
}

impl PdeState {
    pub fn new(field: DensityField) -> Self {
        Self { field, flux: Flux::default() }
    }
}

/// Largest per-cell number density.
fn peak_number(f: &DensityField) -> f64 {
    let cells = f.cells();
    let widths = f.grid.widths();
    (0..cells)
        .map(|c| (0..f.bins()).map(|j| f.values[j * cells + c] * widths[j]).sum::<f64>())
        .fold(0.0, f64::max)
}

fn coagulation_substep(state: &mut PdeState, op: &CoagulationOperator, dt: f64) -> Result<()> {
    let f = &state.field;
    let bins = f.bins();
    let cells = f.cells();
    let widths = f.grid.widths();
    let (k1, flux1) = rhs_cells(f, op, &f.values);
    let mut stage = f.values.clone();
    for j in 0..bins {
        for c in 0..cells {
            stage[j * cells + c] += dt * k1[c * bins + j] / widths[j];
        }
    }
    let (k2, flux2) = rhs_cells(f, op, &stage);
    let values = &mut state.field.values;
    for j in 0..bins {
        for c in 0..cells {
            let idx = j * cells + c;
            values[idx] = 0.5 * values[idx] + 0.5 * (stage[idx] + dt * k2[c * bins + j] / widths[j]);
        }
    }
    state.flux.mass += 0.5 * dt * (flux1.mass + flux2.mass);
    state.flux.number += 0.5 * dt * (flux1.number + flux2.number);
    Ok(())
}

fn clip_negatives(f: &mut DensityField) -> Result<()> {
    let scale = f.max();
    for v in f.values.iter_mut() {
        if *v < 0.0 {
            if -*v <= CLIP_TOLERANCE * scale {
                *v = 0.0;
            } else {
                return Err(Error::Stability(format!(
                    "density {v} below zero at t = {}; reduce dt",
                    f.time
                )));
            }
        }
    }
    Ok(())
}

/// Half diffusion, SSP-RK2 coagulation over `dt`, half diffusion.
pub fn step(
    state: &mut PdeState,
    dt: f64,
    op: &CoagulationOperator,
    d: &DiffusionCoefficient,
    diffuser: &Diffuser,
) -> Result<()> {
    if op.grid() != &state.field.grid {
        return Err(Error::TableCoverage("operator and field use different mass grids".into()));
    }
    let load = dt * op.max_beta() * peak_number(&state.field);
    if load > STABILITY_LIMIT {
        return Err(Error::Stability(format!(
            "dt B_max M0 = {load:.3} exceeds {STABILITY_LIMIT}"
        )));
    }
    diffuser.apply(&mut state.field, 0.5 * dt, d);
    coagulation_substep(state, op, dt)?;
    diffuser.apply(&mut state.field, 0.5 * dt, d);
    state.field.time += dt;
    clip_negatives(&mut state.field)
}

/// `(1 + Bt)^{-2} exp(-n/(1 + Bt))`, the constant-kernel solution from
/// `f(n, 0) = exp(-n)`.
pub fn exact_constant_kernel(n: f64, t: f64, b: f64) -> f64 {
    let s = 1.0 + b * t;
    (-n / s).exp() / (s * s)
}

/// Homogeneous `exp(-n)` initial data; the first bin also takes the number
/// below its lower edge.
pub fn exponential_initial(grid: MassGrid, mesh: SpatialMesh) -> DensityField {
    let first = grid.edges()[0];
    DensityField::homogeneous(grid, mesh, move |a, b| {
        let a = if a <= first { 0.0 } else { a };
        (-a).exp() - (-b).exp()
    })
}

/// Bookkeeping at a recorded frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MomentRow {
    pub time: f64,
    pub number: f64,
    pub mass: f64,
    pub moment: f64,
    pub flux_mass: f64,
    pub flux_number: f64,
}

#[derive(Debug, Clone)]
pub struct PdeTrajectory {
    /// Fields at steps `0, every, 2 every, ...` and at the final step.
    pub frames: Vec<DensityField>,
    pub moments: Vec<MomentRow>,
    pub final_state: PdeState,
}

impl PdeTrajectory {
    /// Frame closest to time `t`.
    pub fn frame_at(&self, t: f64) -> &DensityField {
        self.frames
            .iter()
            .min_by(|a, b| (a.time - t).abs().total_cmp(&(b.time - t).abs()))
            .expect("at least the initial frame")
    }
}

fn row(state: &PdeState, r: f64) -> MomentRow {
    MomentRow {
        time: state.field.time,
        number: state.field.number(),
        mass: state.field.mass(),
        moment: state.field.moment(r),
        flux_mass: state.flux.mass,
        flux_number: state.flux.number,
    }
}

/// Advances `round(horizon/dt)` steps, recording every `every` steps.
pub fn run(
    initial: DensityField,
    op: &CoagulationOperator,
    d: &DiffusionCoefficient,
    dt: f64,
    horizon: f64,
    every: usize,
    moment_exponent: f64,
) -> Result<PdeTrajectory> {
    if !(dt > 0.0) || !(horizon >= 0.0) {
        return Err(Error::InvalidParameter(format!("dt = {dt}, horizon = {horizon}")));
    }
    let steps = (horizon / dt).round() as usize;
    let every = every.max(1);
    let diffuser = Diffuser::new(initial.mesh);
    let mut state = PdeState::new(initial);
    let t0 = state.field.time;
    let mut frames = vec![state.field.clone()];
    let mut moments = vec![row(&state, moment_exponent)];
    for n in 1..=steps {
        step(&mut state, dt, op, d, &diffuser)?;
        // Times from the step count, not accumulated sums.
        state.field.time = t0 + n as f64 * dt;
        if n % every == 0 || n == steps {
            frames.push(state.field.clone());
            moments.push(row(&state, moment_exponent));
        }
    }
    Ok(PdeTrajectory { frames, moments, final_state: state })
}

/// `sum_j n_j |f_j - g(n_j)| w_j` for a homogeneous field.
pub fn mass_weighted_l1(f: &DensityField, exact: impl Fn(f64) -> f64) -> f64 {
    let marginal = f.marginal();
    let vol = f.mesh.side.powi(f.mesh.dim as i32);
    (0..f.bins())
        .map(|j| {
            let n = f.grid.pivot(j);
            n * (marginal[j] / vol - exact(n)).abs() * f.grid.width(j)
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pde::coag::PivotKernel;
    use std::f64::consts::PI;

    #[test]
    fn constant_field_is_unchanged_by_diffusion() {
        let g = MassGrid::geometric(0.1, 10.0, 8).unwrap();
        let mesh = SpatialMesh::new(3, 8, 1.0).unwrap();
        let f = DensityField::homogeneous(g, mesh, |a, b| b - a);
        let out = diffusion_step(&f, 0.3, &DiffusionCoefficient::constant(2.0));
        for (a, b) in f.values.iter().zip(&out.values) {
            assert!((a - b).abs() < 1e-13);
        }
    }

    #[test]
    fn fourier_mode_decays_exactly() {
        let g = MassGrid::geometric(0.5, 2.0, 2).unwrap();
        let mesh = SpatialMesh::new(2, 16, 2.0).unwrap();
        let mut f = DensityField::zeros(g, mesh);
        let mut x = [0.0; 2];
        for c in 0..mesh.len() {
            mesh.point(c, &mut x);
            let v = 1.0 + 0.5 * (2.0 * PI * x[0] / 2.0 * 3.0).cos();
            f.values[c] = v;
            f.values[mesh.len() + c] = v;
        }
        let d = DiffusionCoefficient::power(1.0);
        let dt = 0.01;
        let out = diffusion_step(&f, dt, &d);
        let k2 = (3.0 * PI).powi(2);
        for j in 0..2 {
            let decay = (-d.eval(f.grid.pivot(j)) * k2 * dt).exp();
            for c in 0..mesh.len() {
                mesh.point(c, &mut x);
                let expect = 1.0 + 0.5 * decay * (3.0 * PI * x[0]).cos();
                assert!((out.at(j, c) - expect).abs() < 1e-13);
            }
            let before: f64 = f.bin(j).iter().sum();
            let after: f64 = out.bin(j).iter().sum();
            assert!((before - after).abs() < 1e-12);
        }
    }

    #[test]
    fn exact_solution_values() {
        assert!((exact_constant_kernel(0.0, 1.0, 1.0) - 0.25).abs() < 1e-15);
        assert!((exact_constant_kernel(2.0, 0.0, 1.0) - (-2.0f64).exp()).abs() < 1e-15);
        for t in [0.0, 0.5, 3.0] {
            let mass = crate::quadrature::integrate(|n| n * exact_constant_kernel(n, t, 1.0), 0.0, 400.0, 1e-12, 1e-14);
            assert!((mass - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn exact_solution_matches_fine_ode_reference() {
        // 2000 uniform bins, midpoint-rule Smoluchowski ODE integrated by RK4.
        let bins = 2000;
        let h = 0.02;
        let n: Vec<f64> = (0..bins).map(|i| (i as f64 + 1.0) * h).collect();
        let rhs = |f: &[f64]| -> Vec<f64> {
            let total: f64 = f.iter().sum::<f64>() * h;
            (0..bins)
                .map(|i| {
                    // n_i = (i+1)h = sum of n_a and n_b with a + b = i - 1.
                    let gain: f64 = (0..i).map(|a| f[a] * f[i - 1 - a]).sum::<f64>() * h;
                    gain - 2.0 * f[i] * total
                })
                .collect()
        };
        let mut f: Vec<f64> = n.iter().map(|&x| (-x).exp()).collect();
        let dt = 0.01;
        for _ in 0..100 {
            let k1 = rhs(&f);
            let a: Vec<f64> = f.iter().zip(&k1).map(|(x, k)| x + 0.5 * dt * k).collect();
            let k2 = rhs(&a);
            let b: Vec<f64> = f.iter().zip(&k2).map(|(x, k)| x + 0.5 * dt * k).collect();
            let k3 = rhs(&b);
            let c: Vec<f64> = f.iter().zip(&k3).map(|(x, k)| x + dt * k).collect();
            let k4 = rhs(&c);
            for i in 0..bins {
                f[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            }
        }
        for (i, &x) in n.iter().enumerate().filter(|(i, _)| i % 50 == 0) {
            let e = exact_constant_kernel(x, 1.0, 1.0);
            assert!((f[i] - e).abs() < 0.03 * e + 1e-8, "n = {x}: {} vs {e}", f[i]);
        }
    }

    #[test]
    fn zero_kernel_is_pure_diffusion() {
        let g = MassGrid::geometric(0.1, 10.0, 6).unwrap();
        let mesh = SpatialMesh::new(2, 8, 1.0).unwrap();
        let mut f = DensityField::zeros(g.clone(), mesh);
        for (i, v) in f.values.iter_mut().enumerate() {
            *v = 1.0 + ((i * 7) % 5) as f64;
        }
        let d = DiffusionCoefficient::constant(0.7);
        let op = CoagulationOperator::new(&g, &PivotKernel::constant(&g, 0.0)).unwrap();
        let traj = run(f.clone(), &op, &d, 0.01, 0.05, 1, 2.0).unwrap();
        let mut reference = f;
        for _ in 0..5 {
            reference = diffusion_step(&diffusion_step(&reference, 0.005, &d), 0.005, &d);
        }
        for (a, b) in traj.final_state.field.values.iter().zip(&reference.values) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn homogeneous_run_tracks_exact_solution_and_conserves_mass() {
        let g = MassGrid::geometric(1e-2, 50.0, 200).unwrap();
        let mesh = SpatialMesh::homogeneous(3, 1.0);
        let op = CoagulationOperator::new(&g, &PivotKernel::constant(&g, 1.0)).unwrap();
        let f0 = exponential_initial(g, mesh);
        let m_start = f0.mass();
        let traj = run(f0, &op, &DiffusionCoefficient::constant(0.0), 1e-3, 1.0, 100, 2.0).unwrap();
        for r in &traj.moments {
            assert!((r.number - 1.0 / (1.0 + r.time)).abs() < 1e-3, "{r:?}");
            assert!((r.mass + r.flux_mass - m_start).abs() < 1e-12);
        }
        let last = &traj.final_state.field;
        assert!(mass_weighted_l1(last, |n| exact_constant_kernel(n, 1.0, 1.0)) < 2e-2);
    }

    #[test]
    fn oversized_step_is_rejected() {
        let g = MassGrid::geometric(1e-2, 50.0, 50).unwrap();
        let mesh = SpatialMesh::homogeneous(3, 1.0);
        let op = CoagulationOperator::new(&g, &PivotKernel::constant(&g, 1.0)).unwrap();
        let f0 = exponential_initial(g, mesh);
        assert!(matches!(
            run(f0, &op, &DiffusionCoefficient::constant(0.0), 0.5, 1.0, 1, 2.0),
            Err(Error::Stability(_))
        ));
    }
}
