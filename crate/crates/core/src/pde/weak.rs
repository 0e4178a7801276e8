//! The weak formulation residual and the entropy functional.

use serde::{Deserialize, Serialize};

use super::coag::PivotKernel;
use super::grid::DensityField;
use crate::error::{Error, Result};
use crate::fft::unravel;
use crate::model::{DiffusionCoefficient, EntropyReference};
use crate::sim::{MassWeight, SpatialBump};

/// Spatial factor of a weak test function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SpatialFactor {
    Constant,
    Bump(SpatialBump),
}

/// Time factor `chi(t)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TimeFactor {
    Constant,
    /// `exp(-rate t)`.
    Decay { rate: f64 },
}

impl TimeFactor {
    pub fn eval(&self, t: f64) -> f64 {
        match *self {
            TimeFactor::Constant => 1.0,
            TimeFactor::Decay { rate } => (-rate * t).exp(),
        }
    }
}

/// `J(x, n, t) = chi(t) b(x) g(n)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeakTestFunction {
    pub spatial: SpatialFactor,
    pub mass: MassWeight,
    pub time: TimeFactor,
}

impl WeakTestFunction {
    pub fn new(spatial: SpatialFactor, mass: MassWeight, time: TimeFactor) -> Self {
        Self { spatial, mass, time }
    }

    pub fn spatial_eval(&self, x: &[f64]) -> f64 {
        match &self.spatial {
            SpatialFactor::Constant => 1.0,
            SpatialFactor::Bump(b) => b.eval(x),
        }
    }

    pub fn eval(&self, x: &[f64], n: f64, t: f64) -> f64 {
        self.time.eval(t) * self.spatial_eval(x) * self.mass.eval(n)
    }

    /// `J(x, m + n, t) - J(x, m, t) - J(x, n, t)`.
    pub fn tilde(&self, x: &[f64], m: f64, n: f64, t: f64) -> f64 {
        self.time.eval(t) * self.spatial_eval(x) * (self.mass.eval(m + n) - self.mass.eval(m) - self.mass.eval(n))
    }

    /// The spatial support must sit inside the box and any mass band below
    /// the mass cap.
    pub fn check_support(&self, box_side: f64, mass_cap: f64) -> Result<()> {
        if let SpatialFactor::Bump(b) = &self.spatial {
            if b.center.iter().any(|&c| c - b.radius < 0.0 || c + b.radius > box_side) {
                return Err(Error::Domain(format!("spatial support of J leaves the box [0, {box_side}]")));
            }
        }
        if let MassWeight::Band { hi, width, .. } = self.mass {
            if hi + 30.0 * width > mass_cap {
                return Err(Error::Domain(format!("mass band of J reaches the cap {mass_cap}")));
            }
        }
        Ok(())
    }
}

/// Spatial factor and its periodic five-point Laplacian at the mesh points.
fn spatial_tables(j: &WeakTestFunction, f: &DensityField) -> (Vec<f64>, Vec<f64>) {
    let mesh = f.mesh;
    let cells = mesh.len();
    let mut x = vec![0.0; mesh.dim];
    let b: Vec<f64> = (0..cells)
        .map(|c| {
            mesh.point(c, &mut x);
            j.spatial_eval(&x)
        })
        .collect();
    if cells == 1 || matches!(j.spatial, SpatialFactor::Constant) {
        return (b, vec![0.0; cells]);
    }
    let shape = mesh.shape();
    let n = mesh.cells;
    let h2 = mesh.spacing().powi(2);
    let mut idx = vec![0usize; mesh.dim];
    let lap = (0..cells)
        .map(|c| {
            unravel(c, &shape, &mut idx);
            let mut s = -2.0 * mesh.dim as f64 * b[c];
            for a in 0..mesh.dim {
                let stride = n.pow((mesh.dim - 1 - a) as u32);
                let up = if idx[a] + 1 == n { c + stride - n * stride } else { c + stride };
                let down = if idx[a] == 0 { c + n * stride - stride } else { c - stride };
                s += b[up] + b[down];
            }
            s / h2
        })
        .collect();
    (b, lap)
}

/// Bulk integrands of the weak form at one frame:
/// `(int J f, int (dJ/dt + d(n) Lap J) f, int int int beta J-tilde f f)`.
fn frame_terms(
    j: &WeakTestFunction,
    f: &DensityField,
    kernel: &PivotKernel,
    d: &DiffusionCoefficient,
    b: &[f64],
    lap: &[f64],
) -> (f64, f64, f64) {
    let t = f.time;
    let chi = j.time.eval(t);
    let dt = 1e-5 * (1.0 + t);
    let dchi = (j.time.eval(t + dt) - j.time.eval(t - dt)) / (2.0 * dt);
    let cells = f.cells();
    let bins = f.bins();
    let vol = f.mesh.cell_volume();
    let widths = f.grid.widths();
    let g: Vec<f64> = f.grid.pivots().iter().map(|&n| j.mass.eval(n)).collect();
    let dn: Vec<f64> = f.grid.pivots().iter().map(|&n| d.eval(n)).collect();
    let mut tilde = vec![0.0; bins * bins];
    for i in 0..bins {
        for k in 0..bins {
            let (m, n) = (f.grid.pivot(i), f.grid.pivot(k));
            tilde[i * bins + k] = kernel.get(i, k) * (j.mass.eval(m + n) - g[i] - g[k]);
        }
    }
    let mut value = 0.0;
    let mut linear = 0.0;
    let mut coag = 0.0;
    let mut num = vec![0.0; bins];
    for c in 0..cells {
        for jj in 0..bins {
            num[jj] = f.values[jj * cells + c] * widths[jj];
        }
        let mut s_val = 0.0;
        let mut s_lin = 0.0;
        for jj in 0..bins {
            s_val += g[jj] * num[jj];
            s_lin += g[jj] * num[jj] * (dchi * b[c] + chi * dn[jj] * lap[c]);
        }
        value += chi * b[c] * s_val;
        linear += s_lin;
        if b[c] != 0.0 {
            let mut s = 0.0;
            for i in 0..bins {
                if num[i] == 0.0 {
                    continue;
                }
                let row = &tilde[i * bins..(i + 1) * bins];
                s += num[i] * row.iter().zip(&num).map(|(t, n)| t * n).sum::<f64>();
            }
            coag += chi * b[c] * s;
        }
    }
    (value * vol, linear * vol, coag * vol)
}

/// Terms of the weak form over a trajectory of frames.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WeakReport {
    /// `int J(T) f(T)`.
    pub final_value: f64,
    /// `int J(0) f(0)`.
    pub initial_value: f64,
    /// `int_0^T int (dJ/dt + d Lap J) f`.
    pub linear: f64,
    /// `int_0^T int int int beta J-tilde f f`.
    pub coagulation: f64,
    /// `final - initial - linear - coagulation`.
    pub residual: f64,
}

/// Residual of the weak formulation with the time integrals done by the
/// trapezoid rule over the frames; the first frame stands in for `h`.
pub fn weak_residual(
    frames: &[DensityField],
    j: &WeakTestFunction,
    kernel: &PivotKernel,
    d: &DiffusionCoefficient,
) -> Result<WeakReport> {
    let first = frames.first().ok_or_else(|| Error::InvalidParameter("empty trajectory".into()))?;
    j.check_support(first.mesh.side, first.grid.cap())?;
    if kernel.len() != first.bins() {
        return Err(Error::TableCoverage("kernel and field use different mass grids".into()));
    }
    let (b, lap) = spatial_tables(j, first);
    let terms: Vec<(f64, f64, f64)> = frames.iter().map(|f| frame_terms(j, f, kernel, d, &b, &lap)).collect();
    let mut linear = 0.0;
    let mut coagulation = 0.0;
    for w in 0..frames.len().saturating_sub(1) {
        let h = frames[w + 1].time - frames[w].time;
        linear += 0.5 * h * (terms[w].1 + terms[w + 1].1);
        coagulation += 0.5 * h * (terms[w].2 + terms[w + 1].2);
    }
    let initial_value = terms[0].0;
    let final_value = terms[terms.len() - 1].0;
    Ok(WeakReport {
        final_value,
        initial_value,
        linear,
        coagulation,
        residual: final_value - initial_value - linear - coagulation,
    })
}

/// `int int psi(f/r) r dx dn` with `psi(z) = z log z - z + 1` and
/// `r(x, n) = G(x) tau(n)`, `G` the standard Gaussian centred in the box and
/// renormalised to unit mass over it.
pub fn entropy(f: &DensityField, tau: &EntropyReference) -> f64 {
    let mesh = f.mesh;
    let cells = mesh.len();
    let centre = 0.5 * mesh.side;
    let mut x = vec![0.0; mesh.dim];
    let gauss: Vec<f64> = (0..cells)
        .map(|c| {
            mesh.point(c, &mut x);
            (-0.5 * x.iter().map(|v| (v - centre).powi(2)).sum::<f64>()).exp()
        })
        .collect();
    let norm = gauss.iter().sum::<f64>() * mesh.cell_volume();
    let vol = mesh.cell_volume();
    let mut total = 0.0;
    for j in 0..f.bins() {
        let t = tau.eval(f.grid.pivot(j));
        let w = f.grid.width(j);
        for c in 0..cells {
            let r = gauss[c] / norm * t;
            let v = f.values[j * cells + c];
            let integrand = if v > 0.0 { v * (v / r).ln() - v + r } else { r };
            total += integrand * w * vol;
        }
    }
    total
}

/// The reference density `r` on the field's grid.
pub fn entropy_reference_field(template: &DensityField, tau: &EntropyReference) -> DensityField {
    let mut out = DensityField::zeros(template.grid.clone(), template.mesh);
    let mesh = template.mesh;
    let cells = mesh.len();
    let centre = 0.5 * mesh.side;
    let mut x = vec![0.0; mesh.dim];
    let gauss: Vec<f64> = (0..cells)
        .map(|c| {
            mesh.point(c, &mut x);
            (-0.5 * x.iter().map(|v| (v - centre).powi(2)).sum::<f64>()).exp()
        })
        .collect();
    let norm = gauss.iter().sum::<f64>() * mesh.cell_volume();
    for j in 0..template.bins() {
        let t = tau.eval(template.grid.pivot(j));
        for c in 0..cells {
            out.values[j * cells + c] = gauss[c] / norm * t;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pde::coag::CoagulationOperator;
    use crate::pde::grid::{MassGrid, SpatialMesh};
    use crate::pde::solver::{exact_constant_kernel, exponential_initial, run};

    fn mass_test() -> WeakTestFunction {
        WeakTestFunction::new(SpatialFactor::Constant, MassWeight::Mass, TimeFactor::Constant)
    }

    #[test]
    fn mass_test_function_measures_mass_drift() {
        let g = MassGrid::geometric(1e-2, 50.0, 100).unwrap();
        let mesh = SpatialMesh::homogeneous(3, 1.0);
        let kernel = PivotKernel::constant(&g, 1.0);
        let op = CoagulationOperator::new(&g, &kernel).unwrap();
        let d = DiffusionCoefficient::constant(0.0);
        let traj = run(exponential_initial(g, mesh), &op, &d, 1e-3, 0.5, 50, 2.0).unwrap();
        let rep = weak_residual(&traj.frames, &mass_test(), &kernel, &d).unwrap();
        let drift = traj.final_state.field.mass() - traj.frames[0].mass();
        assert!((rep.residual - drift).abs() < 1e-10);
        assert!(rep.coagulation.abs() < 1e-10);
    }

    #[test]
    fn zero_test_function_zero_residual() {
        let g = MassGrid::geometric(0.1, 10.0, 10).unwrap();
        let mesh = SpatialMesh::homogeneous(3, 1.0);
        let f = exponential_initial(g.clone(), mesh);
        let mut zero = mass_test();
        zero.spatial = SpatialFactor::Bump(SpatialBump { center: vec![0.5; 3], radius: 0.2, height: 0.0 });
        let rep = weak_residual(&[f.clone(), f], &zero, &PivotKernel::constant(&g, 1.0), &DiffusionCoefficient::constant(1.0)).unwrap();
        assert_eq!(rep.residual, 0.0);
    }

    #[test]
    fn exact_solution_residual_converges() {
        let j = WeakTestFunction::new(
            SpatialFactor::Constant,
            MassWeight::Band { lo: 0.5, hi: 2.0, width: 0.2 },
            TimeFactor::Decay { rate: 0.7 },
        );
        let residual = |bins: usize, frames: usize| {
            let g = MassGrid::geometric(1e-3, 100.0, bins).unwrap();
            let mesh = SpatialMesh::homogeneous(3, 1.0);
            let fields: Vec<DensityField> = (0..=frames)
                .map(|k| {
                    let t = k as f64 / frames as f64;
                    let mut f = DensityField::zeros(g.clone(), mesh);
                    for jj in 0..g.len() {
                        f.values[jj] = exact_constant_kernel(g.pivot(jj), t, 1.0);
                    }
                    f.time = t;
                    f
                })
                .collect();
            weak_residual(&fields, &j, &PivotKernel::constant(&g, 1.0), &DiffusionCoefficient::constant(0.0))
                .unwrap()
                .residual
                .abs()
        };
        let coarse = residual(100, 10);
        let fine = residual(200, 20);
        assert!(fine * 3.0 <= coarse, "{coarse} -> {fine}");
    }

    #[test]
    fn support_outside_box_is_rejected() {
        let g = MassGrid::geometric(0.1, 10.0, 10).unwrap();
        let f = DensityField::zeros(g.clone(), SpatialMesh::new(3, 4, 1.0).unwrap());
        let mut j = mass_test();
        j.spatial = SpatialFactor::Bump(SpatialBump { center: vec![0.1, 0.5, 0.5], radius: 0.2, height: 1.0 });
        assert!(matches!(
            weak_residual(&[f], &j, &PivotKernel::constant(&g, 1.0), &DiffusionCoefficient::constant(1.0)),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn entropy_of_reference_is_zero_and_entropy_nonnegative() {
        let g = MassGrid::geometric(0.1, 10.0, 12).unwrap();
        let mesh = SpatialMesh::new(3, 8, 2.0).unwrap();
        let tau = EntropyReference::default();
        let r = entropy_reference_field(&DensityField::zeros(g.clone(), mesh), &tau);
        assert!(entropy(&r, &tau).abs() < 1e-12);
        let f = exponential_initial(g, mesh);
        assert!(entropy(&f, &tau) >= 0.0);
        let zero = DensityField::zeros(f.grid.clone(), mesh);
        assert!(entropy(&zero, &tau) > 0.0);
    }
}
