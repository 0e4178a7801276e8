//! Cartesian cells covering the support of V.

use crate::convolution::PowerConvolver;
use crate::error::{Error, Result};
use crate::fft::unravel;
use crate::model::InteractionProfile;
use crate::quadrature::{box_power_integral, newton_constant};

pub const DEFAULT_CELLS: usize = 24;

/// Cells within this many widths of a point use the exact cell integral in
/// point evaluations.
const NEAR_CELLS: f64 = 3.5;
const NEAR_ORDER: usize = 8;

/// Uniform cells of side `spacing` across `[-C0, C0]^d`, keeping those whose
/// centre lies in the open ball `|x| < C0`.
///
/// Node values of V are rescaled so the discrete integral is exactly one;
/// the raw sum is kept as a quadrature certificate.
#[derive(Debug)]
pub struct SupportGrid {
    dim: usize,
    cells: usize,
    radius: f64,
    spacing: f64,
    c0: f64,
    nodes: Vec<f64>,
    lattice: Vec<usize>,
    v: Vec<f64>,
    sqrt_v: Vec<f64>,
    raw_mass: f64,
    conv: PowerConvolver,
}

impl SupportGrid {
    pub fn new(potential: &InteractionProfile, cells: usize) -> Result<Self> {
        let dim = potential.dim();
        if dim < 3 {
            return Err(Error::UnsupportedDimension { dim, reason: "the Newtonian kernel needs d >= 3" });
        }
        if cells < 4 {
            return Err(Error::InvalidParameter(format!("support grid needs >= 4 cells per axis, got {cells}")));
        }
        let radius = potential.support_radius();
        let spacing = 2.0 * radius / cells as f64;
        let shape = vec![cells; dim];
        let total: usize = shape.iter().product();
        let mut idx = vec![0usize; dim];
        let mut x = vec![0.0; dim];
        let mut nodes = Vec::new();
        let mut lattice = Vec::new();
        let mut v = Vec::new();
        for flat in 0..total {
            unravel(flat, &shape, &mut idx);
            for a in 0..dim {
                x[a] = (idx[a] as f64 + 0.5) * spacing - radius;
            }
            let r2: f64 = x.iter().map(|c| c * c).sum();
            if r2 < radius * radius {
                nodes.extend_from_slice(&x);
                lattice.push(flat);
                v.push(potential.eval_r2(r2));
            }
        }
        let cell_volume = spacing.powi(dim as i32);
        let raw_mass: f64 = v.iter().sum::<f64>() * cell_volume;
        for value in v.iter_mut() {
            *value /= raw_mass;
        }
        let sqrt_v = v.iter().map(|x| x.sqrt()).collect();
        Ok(Self {
            dim,
            cells,
            radius,
            spacing,
            c0: newton_constant(dim),
            nodes,
            lattice,
            v,
            sqrt_v,
            raw_mass,
            conv: PowerConvolver::new(&shape, spacing, 2.0 - dim as f64),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.v.len()
    }

    pub fn is_empty(&self) -> bool {
        self.v.is_empty()
    }

    pub fn cells(&self) -> usize {
        self.cells
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    /// c0(d) = 1 / ((d - 2) omega_d).
    pub fn newton_constant(&self) -> f64 {
        self.c0
    }

    pub fn cell_volume(&self) -> f64 {
        self.spacing.powi(self.dim as i32)
    }

    pub fn weights_sum(&self) -> f64 {
        self.len() as f64 * self.cell_volume()
    }

    pub fn node(&self, i: usize) -> &[f64] {
        &self.nodes[i * self.dim..(i + 1) * self.dim]
    }

    /// Normalised V at the nodes.
    pub fn v(&self) -> &[f64] {
        &self.v
    }

    pub(crate) fn sqrt_v(&self) -> &[f64] {
        &self.sqrt_v
    }

    /// Riemann sum of V before normalisation.
    pub fn quadrature_certificate(&self) -> f64 {
        self.raw_mass
    }

    /// `(K u)_i = c0 sum_j u_j int_{cell j} |x_i - y|^{2-d} dy`.
    pub fn apply_kernel(&self, u: &[f64]) -> Vec<f64> {
        let total = self.cells.pow(self.dim as u32);
        let mut full = vec![0.0; total];
        for (&flat, &val) in self.lattice.iter().zip(u) {
            full[flat] = val;
        }
        let out = self.conv.apply(&full);
        self.lattice.iter().map(|&flat| self.c0 * out[flat]).collect()
    }

    /// Dense kernel matrix; only for small grids.
    pub fn kernel_matrix(&self) -> Vec<Vec<f64>> {
        let n = self.len();
        let dim = self.dim;
        let mut mat = vec![vec![0.0; n]; n];
        let shape = vec![self.cells; dim];
        let mut ii = vec![0usize; dim];
        let mut jj = vec![0usize; dim];
        let mut offset = vec![0.0; dim];
        let origin = vec![0.0; dim];
        let mut cache = std::collections::HashMap::new();
        for i in 0..n {
            unravel(self.lattice[i], &shape, &mut ii);
            for j in 0..n {
                unravel(self.lattice[j], &shape, &mut jj);
                let key: Vec<i64> = (0..dim).map(|a| (jj[a] as i64 - ii[a] as i64).abs()).collect();
                let value = *cache.entry(key.clone()).or_insert_with(|| {
                    for a in 0..dim {
                        offset[a] = key[a] as f64 * self.spacing;
                    }
                    if key.iter().all(|&k| k <= 3) {
                        box_power_integral(&origin, &offset, self.spacing, 2.0 - dim as f64, NEAR_ORDER)
                    } else {
                        let r2: f64 = offset.iter().map(|v| v * v).sum();
                        self.cell_volume() * r2.powf(1.0 - 0.5 * dim as f64)
                    }
                });
                mat[i][j] = self.c0 * value;
            }
        }
        mat
    }

    /// `c0 sum_j weight_j int_{cell j} |x - y|^{2-d} dy` at an arbitrary point.
    pub fn potential_at(&self, x: &[f64], weight: &[f64]) -> f64 {
        let dim = self.dim;
        let p = 2.0 - dim as f64;
        let vol = self.cell_volume();
        let near = NEAR_CELLS * self.spacing;
        let mut sum = 0.0;
        for (j, &wj) in weight.iter().enumerate() {
            if wj == 0.0 {
                continue;
            }
            let y = self.node(j);
            let mut far = 0.0f64;
            let mut r2 = 0.0;
            for a in 0..dim {
                let d = x[a] - y[a];
                far = far.max(d.abs());
                r2 += d * d;
            }
            let k = if far <= near {
                box_power_integral(x, y, self.spacing, p, NEAR_ORDER)
            } else {
                vol * r2.powf(0.5 * p)
            };
            sum += wj * k;
        }
        self.c0 * sum
    }
}
