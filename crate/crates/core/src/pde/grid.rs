//! Mass grid, spatial mesh and the discretised density.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fft::unravel;
use crate::model::InitialDensity;

/// Pivots `n_j` with bins `[e_j, e_{j+1})` around them.
#[derive(Debug, Clone, PartialEq)]
pub struct MassGrid {
    pivots: Vec<f64>,
    edges: Vec<f64>,
}

impl MassGrid {
    /// `bins` geometric bins over `(lo, hi]`; pivots are the geometric bin
    /// centres, so the ratio is `(hi/lo)^{1/bins}`.
    pub fn geometric(lo: f64, hi: f64, bins: usize) -> Result<Self> {
        if !(lo > 0.0 && hi > lo) || bins < 2 {
            return Err(Error::InvalidParameter(format!("geometric mass grid ({lo}, {hi}] with {bins} bins")));
        }
        let r = (hi / lo).powf(1.0 / bins as f64);
        let edges: Vec<f64> = (0..=bins).map(|j| lo * r.powi(j as i32)).collect();
        let pivots = edges.windows(2).map(|w| (w[0] * w[1]).sqrt()).collect();
        Ok(Self { pivots, edges })
    }

    /// Pivots at the given masses, edges at the midpoints between them; the
    /// outer edges mirror the first and last gaps.
    pub fn from_pivots(pivots: Vec<f64>) -> Result<Self> {
        if pivots.len() < 2 || pivots[0] <= 0.0 || pivots.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidParameter("pivots must be positive and strictly increasing".into()));
        }
        let j = pivots.len();
        let mut edges = Vec::with_capacity(j + 1);
        edges.push((pivots[0] - 0.5 * (pivots[1] - pivots[0])).max(0.5 * pivots[0]));
        edges.extend(pivots.windows(2).map(|w| 0.5 * (w[0] + w[1])));
        edges.push(pivots[j - 1] + 0.5 * (pivots[j - 1] - pivots[j - 2]));
        Ok(Self { pivots, edges })
    }

    /// Pivots at `base, 2 base, ..., count base`; sums of pivots land on pivots.
    pub fn multiples(base: f64, count: usize) -> Result<Self> {
        Self::from_pivots((1..=count).map(|k| k as f64 * base).collect())
    }

    /// The same grid with every mass multiplied by `c`.
    pub fn scaled(&self, c: f64) -> Self {
        Self {
            pivots: self.pivots.iter().map(|n| n * c).collect(),
            edges: self.edges.iter().map(|n| n * c).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.pivots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pivots.is_empty()
    }

    pub fn pivots(&self) -> &[f64] {
        &self.pivots
    }

    pub fn edges(&self) -> &[f64] {
        &self.edges
    }

    pub fn pivot(&self, j: usize) -> f64 {
        self.pivots[j]
    }

    pub fn width(&self, j: usize) -> f64 {
        self.edges[j + 1] - self.edges[j]
    }

    pub fn widths(&self) -> Vec<f64> {
        self.edges.windows(2).map(|w| w[1] - w[0]).collect()
    }

    /// Largest pivot; heavier products leave the grid.
    pub fn cap(&self) -> f64 {
        *self.pivots.last().expect("non-empty grid")
    }

    /// Index `j` with `n_j <= v < n_{j+1}`, or `None` outside `[n_0, n_max)`.
    pub fn bracket(&self, v: f64) -> Option<usize> {
        if v < self.pivots[0] || v >= self.cap() {
            return None;
        }
        Some(self.pivots.partition_point(|&p| p <= v) - 1)
    }
}

/// Periodic grid of `cells^d` points `(k + 1/2) h`, `h = side / cells`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpatialMesh {
    pub dim: usize,
    pub cells: usize,
    pub side: f64,
}

impl SpatialMesh {
    pub fn new(dim: usize, cells: usize, side: f64) -> Result<Self> {
        if !cells.is_power_of_two() {
            return Err(Error::InvalidParameter(format!("mesh size {cells} is not a power of two")));
        }
        if !(side > 0.0) || dim == 0 {
            return Err(Error::InvalidParameter("mesh needs a positive side and dimension".into()));
        }
        Ok(Self { dim, cells, side })
    }

    /// A single cell: spatially homogeneous problems.
    pub fn homogeneous(dim: usize, side: f64) -> Self {
        Self { dim, cells: 1, side }
    }

    pub fn len(&self) -> usize {
        self.cells.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn spacing(&self) -> f64 {
        self.side / self.cells as f64
    }

    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.dim as i32)
    }

    pub fn shape(&self) -> Vec<usize> {
        vec![self.cells; self.dim]
    }

    pub fn point(&self, flat: usize, out: &mut [f64]) {
        let mut idx = vec![0usize; self.dim];
        unravel(flat, &self.shape(), &mut idx);
        let h = self.spacing();
        for (o, i) in out.iter_mut().zip(idx) {
            *o = (i as f64 + 0.5) * h;
        }
    }
}

/// `f[j][cell]`, number density per unit mass per unit volume.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityField {
    pub grid: MassGrid,
    pub mesh: SpatialMesh,
    pub values: Vec<f64>,
    pub time: f64,
}

impl DensityField {
    pub fn zeros(grid: MassGrid, mesh: SpatialMesh) -> Self {
        let values = vec![0.0; grid.len() * mesh.len()];
        Self { grid, mesh, values, time: 0.0 }
    }

    /// Spatially constant field with `number(lo, hi)` particles per unit
    /// volume in each bin.
    pub fn homogeneous(grid: MassGrid, mesh: SpatialMesh, number: impl Fn(f64, f64) -> f64) -> Self {
        let mut f = Self::zeros(grid, mesh);
        let cells = mesh.len();
        for j in 0..f.grid.len() {
            let e = f.grid.edges();
            let v = number(e[j], e[j + 1]) / f.grid.width(j);
            f.values[j * cells..(j + 1) * cells].fill(v);
        }
        f
    }

    /// Projection of `h`: cell averages in space, bin integrals in mass with
    /// the first bin extended down to 0 and the last up to infinity.
    pub fn from_initial(h: &InitialDensity, grid: MassGrid, mesh: SpatialMesh) -> Result<Self> {
        if h.dim() != mesh.dim || (h.box_side() - mesh.side).abs() > 1e-12 * mesh.side {
            return Err(Error::Consistency("initial density and mesh disagree on the box".into()));
        }
        let mut f = Self::zeros(grid, mesh);
        let cells = mesh.len();
        let hsp = mesh.spacing();
        let mut lo = vec![0.0; mesh.dim];
        let spatial: Vec<f64> = (0..cells)
            .map(|c| {
                mesh.point(c, &mut lo);
                lo.iter_mut().for_each(|v| *v -= 0.5 * hsp);
                h.spatial_cell_average(&lo, hsp)
            })
            .collect();
        let bins = f.grid.len();
        let mass = h.mass();
        for j in 0..bins {
            let e = f.grid.edges();
            let a = if j == 0 { 0.0 } else { mass.cdf(e[j]) };
            let b = if j + 1 == bins { 1.0 } else { mass.cdf(e[j + 1]) };
            let per_mass = h.total() * (b - a) / f.grid.width(j);
            for c in 0..cells {
                f.values[j * cells + c] = per_mass * spatial[c];
            }
        }
        Ok(f)
    }

    pub fn bins(&self) -> usize {
        self.grid.len()
    }

    pub fn cells(&self) -> usize {
        self.mesh.len()
    }

    pub fn at(&self, bin: usize, cell: usize) -> f64 {
        self.values[bin * self.cells() + cell]
    }

    pub fn bin(&self, j: usize) -> &[f64] {
        let c = self.cells();
        &self.values[j * c..(j + 1) * c]
    }

    /// `int f_n dx` per bin (number per unit mass).
    pub fn marginal(&self) -> Vec<f64> {
        let vol = self.mesh.cell_volume();
        (0..self.bins()).map(|j| self.bin(j).iter().sum::<f64>() * vol).collect()
    }

    /// `int int n^r f dx dn`.
    pub fn moment(&self, r: f64) -> f64 {
        self.marginal()
            .iter()
            .enumerate()
            .map(|(j, m)| self.grid.pivot(j).powf(r) * m * self.grid.width(j))
            .sum()
    }

    pub fn number(&self) -> f64 {
        self.moment(0.0)
    }

    pub fn mass(&self) -> f64 {
        self.moment(1.0)
    }

    /// `int int J f dx dn` with `J` evaluated at cell centres and pivots.
    pub fn integrate(&self, j_fn: impl Fn(&[f64], f64) -> f64) -> f64 {
        let cells = self.cells();
        let vol = self.mesh.cell_volume();
        let mut x = vec![0.0; self.mesh.dim];
        let mut total = 0.0;
        for c in 0..cells {
            self.mesh.point(c, &mut x);
            for j in 0..self.bins() {
                let v = self.values[j * cells + c];
                if v != 0.0 {
                    total += j_fn(&x, self.grid.pivot(j)) * v * self.grid.width(j);
                }
            }
        }
        total * vol
    }

    pub fn max(&self) -> f64 {
        self.values.iter().fold(0.0, |a, &b| a.max(b))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn geometric_grid_ratio_and_brackets() {
        let g = MassGrid::geometric(1e-2, 50.0, 400).unwrap();
        let r = g.pivot(1) / g.pivot(0);
        assert!((r - 1.02152).abs() < 1e-4, "{r}");
        assert!((g.edges()[400] - 50.0).abs() < 1e-10);
        assert_eq!(g.bracket(g.pivot(7)), Some(7));
        assert_eq!(g.bracket(0.5 * (g.pivot(7) + g.pivot(8))), Some(7));
        assert_eq!(g.bracket(g.cap()), None);
        assert_eq!(g.bracket(1e-3), None);
    }

    #[test]
    fn multiples_grid_has_unit_bins() {
        let g = MassGrid::multiples(1.0, 5).unwrap();
        assert_eq!(g.edges(), &[0.5, 1.5, 2.5, 3.5, 4.5, 5.5]);
        assert!(g.widths().iter().all(|&w| (w - 1.0).abs() < 1e-15));
    }

    #[test]
    fn homogeneous_projection_of_exponential() {
        let g = MassGrid::geometric(1e-2, 50.0, 400).unwrap();
        let f = DensityField::homogeneous(g, SpatialMesh::homogeneous(3, 1.0), |a, b| (-a).exp() - (-b).exp());
        assert!((f.number() - ((-0.01f64).exp() - (-50f64).exp())).abs() < 1e-12);
        assert!((f.mass() - 1.0).abs() < 1e-3);
    }

    #[test]
    fn mesh_requires_power_of_two() {
        assert!(SpatialMesh::new(3, 12, 1.0).is_err());
        assert_eq!(SpatialMesh::new(3, 16, 1.0).unwrap().len(), 4096);
    }
}
