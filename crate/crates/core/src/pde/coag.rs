//! Fixed-pivot discretisation of the coagulation operator.

use rayon::prelude::*;

use super::grid::{DensityField, MassGrid};
use crate::error::{Error, Result};
use crate::kernel::EffectiveKernelTable;

/// `beta(n_i, n_k)` on the pivots, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct PivotKernel {
    bins: usize,
    values: Vec<f64>,
}

impl PivotKernel {
    pub fn from_fn(grid: &MassGrid, beta: impl Fn(f64, f64) -> f64) -> Self {
        let bins = grid.len();
        let mut values = vec![0.0; bins * bins];
        for i in 0..bins {
            for k in 0..bins {
                values[i * bins + k] = beta(grid.pivot(i), grid.pivot(k));
            }
        }
        Self { bins, values }
    }

    pub fn constant(grid: &MassGrid, b: f64) -> Self {
        Self::from_fn(grid, |_, _| b)
    }

    /// Kernel from the effective table; couplings outside the table are a
    /// coverage error.
    pub fn from_table(grid: &MassGrid, table: &EffectiveKernelTable) -> Result<Self> {
        let bins = grid.len();
        let mut values = vec![0.0; bins * bins];
        for i in 0..bins {
            for k in i..bins {
                let b = table.beta(grid.pivot(i), grid.pivot(k)).map_err(|e| match e {
                    Error::Extrapolation { a, min, max } => Error::TableCoverage(format!(
                        "pivots ({}, {}) need a = {a}, table covers [{min}, {max}]",
                        grid.pivot(i),
                        grid.pivot(k)
                    )),
                    other => other,
                })?;
                values[i * bins + k] = b;
                values[k * bins + i] = b;
            }
        }
        Ok(Self { bins, values })
    }

    pub fn get(&self, i: usize, k: usize) -> f64 {
        self.values[i * self.bins + k]
    }

    pub fn max(&self) -> f64 {
        self.values.iter().fold(0.0, |a, &b| a.max(b))
    }

    pub fn len(&self) -> usize {
        self.bins
    }

    pub fn is_empty(&self) -> bool {
        self.bins == 0
    }
}

#[derive(Debug, Clone, Copy)]
struct PairTerm {
    i: u32,
    k: u32,
    /// Lower bracketing pivot of `n_i + n_k`; `u32::MAX` when it leaves the grid.
    target: u32,
    /// Share of the product assigned to `target`; the rest goes to `target + 1`.
    share: f64,
    /// `beta(n_i, n_k)`, doubled for `i != k` (ordered pairs).
    rate: f64,
    product: f64,
}

/// Precomputed pair list for `dN_j/dt` where `N_j = f_j w_j`.
///
/// Every ordered pair `(i, k)` removes `beta N_i N_k` from both bins and
/// deposits it at the two pivots bracketing `n_i + n_k` with weights that
/// conserve number and mass; products beyond the last pivot are counted as
/// truncation flux.
#[derive(Debug, Clone)]
pub struct CoagulationOperator {
    grid: MassGrid,
    pairs: Vec<PairTerm>,
    max_beta: f64,
}

/// Mass and number leaving the grid per unit time and volume.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Flux {
    pub mass: f64,
    pub number: f64,
}

impl CoagulationOperator {
    pub fn new(grid: &MassGrid, kernel: &PivotKernel) -> Result<Self> {
        if kernel.len() != grid.len() {
            return Err(Error::TableCoverage(format!(
                "kernel has {} pivots, grid has {}",
                kernel.len(),
                grid.len()
            )));
        }
        let bins = grid.len();
        let mut pairs = Vec::with_capacity(bins * (bins + 1) / 2);
        for i in 0..bins {
            for k in i..bins {
                let b = kernel.get(i, k);
                if b == 0.0 {
                    continue;
                }
                let v = grid.pivot(i) + grid.pivot(k);
                let (target, share) = match grid.bracket(v) {
                    Some(j) => {
                        let (lo, hi) = (grid.pivot(j), grid.pivot(j + 1));
                        (j as u32, (hi - v) / (hi - lo))
                    }
                    None if v == grid.cap() => (bins as u32 - 1, 1.0),
                    None => (u32::MAX, 0.0),
                };
                pairs.push(PairTerm {
                    i: i as u32,
                    k: k as u32,
                    target,
                    share,
                    rate: if i == k { b } else { 2.0 * b },
                    product: v,
                });
            }
        }
        Ok(Self {
            grid: grid.clone(),
            pairs,
            max_beta: kernel.max(),
        })
    }

    pub fn grid(&self) -> &MassGrid {
        &self.grid
    }

    pub fn max_beta(&self) -> f64 {
        self.max_beta
    }

    /// `dN/dt` for one cell's bin numbers, plus the truncation flux.
    pub fn rhs_numbers(&self, n: &[f64], out: &mut [f64]) -> Flux {
        out.fill(0.0);
        let mut flux = Flux::default();
        for p in &self.pairs {
            let (i, k) = (p.i as usize, p.k as usize);
            let r = p.rate * n[i] * n[k];
            if r == 0.0 {
                continue;
            }
            out[i] -= r;
            out[k] -= r;
            if p.target == u32::MAX {
                flux.mass += r * p.product;
                flux.number += r;
            } else {
                let j = p.target as usize;
                out[j] += p.share * r;
                if p.share < 1.0 {
                    out[j + 1] += (1.0 - p.share) * r;
                }
            }
        }
        flux
    }
}

/// `Q_+ - Q_-` as a density field (per unit mass), with the truncation flux
/// integrated over the box.
pub fn coagulation_rhs(f: &DensityField, op: &CoagulationOperator) -> Result<(DensityField, Flux)> {
    if op.grid() != &f.grid {
        return Err(Error::TableCoverage("operator and field use different mass grids".into()));
    }
    let (numbers, flux) = rhs_cells(f, op, &f.values);
    let mut out = DensityField::zeros(f.grid.clone(), f.mesh);
    out.time = f.time;
    let cells = f.cells();
    for j in 0..f.bins() {
        let w = f.grid.width(j);
        for c in 0..cells {
            out.values[j * cells + c] = numbers[c * f.bins() + j] / w;
        }
    }
    Ok((out, flux))
}

/// Per-cell `dN/dt` laid out `[cell][bin]` from densities laid out `[bin][cell]`.
pub(crate) fn rhs_cells(f: &DensityField, op: &CoagulationOperator, values: &[f64]) -> (Vec<f64>, Flux) {
    let bins = f.bins();
    let cells = f.cells();
    let widths = f.grid.widths();
    let mut out = vec![0.0; bins * cells];
    let fluxes: Vec<Flux> = out
        .par_chunks_mut(bins)
        .enumerate()
        .map(|(c, dn)| {
            let n: Vec<f64> = (0..bins).map(|j| values[j * cells + c] * widths[j]).collect();
            op.rhs_numbers(&n, dn)
        })
        .collect();
    let vol = f.mesh.cell_volume();
    let flux = fluxes.iter().fold(Flux::default(), |acc, x| Flux {
        mass: acc.mass + x.mass * vol,
        number: acc.number + x.number * vol,
    });
    (out, flux)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pde::grid::SpatialMesh;

    #[test]
    fn single_bin_products_land_next_to_twice_the_mass() {
        let g = MassGrid::geometric(0.1, 10.0, 40).unwrap();
        let mesh = SpatialMesh::homogeneous(3, 1.0);
        let mut f = DensityField::zeros(g.clone(), mesh);
        let j0 = 5;
        f.values[j0] = 3.0;
        let op = CoagulationOperator::new(&g, &PivotKernel::constant(&g, 1.5)).unwrap();
        let (q, flux) = coagulation_rhs(&f, &op).unwrap();
        let target = g.bracket(2.0 * g.pivot(j0)).unwrap();
        for j in 0..g.len() {
            if j != j0 && j != target && j != target + 1 {
                assert_eq!(q.values[j], 0.0);
            }
        }
        let mass_rate: f64 = (0..g.len()).map(|j| g.pivot(j) * q.values[j] * g.width(j)).sum();
        assert!((mass_rate + flux.mass).abs() < 1e-14, "{mass_rate}");
    }

    #[test]
    fn constant_kernel_number_rate() {
        let g = MassGrid::geometric(1e-2, 50.0, 200).unwrap();
        let f = DensityField::homogeneous(g.clone(), SpatialMesh::homogeneous(3, 1.0), |a, b| (-a).exp() - (-b).exp());
        let op = CoagulationOperator::new(&g, &PivotKernel::constant(&g, 2.0)).unwrap();
        let (q, flux) = coagulation_rhs(&f, &op).unwrap();
        let m0 = f.number();
        // Products leaving the grid take their number with them.
        let lhs = q.number() + flux.number;
        assert!((lhs + 2.0 * m0 * m0).abs() < 1e-12, "{lhs}");
    }

    #[test]
    fn zero_field_zero_rhs() {
        let g = MassGrid::geometric(0.1, 10.0, 10).unwrap();
        let f = DensityField::zeros(g.clone(), SpatialMesh::new(2, 4, 1.0).unwrap());
        let op = CoagulationOperator::new(&g, &PivotKernel::constant(&g, 1.0)).unwrap();
        let (q, flux) = coagulation_rhs(&f, &op).unwrap();
        assert!(q.values.iter().all(|&v| v == 0.0));
        assert_eq!(flux, Flux::default());
    }
}
