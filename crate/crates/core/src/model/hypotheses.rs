//! Numerical surrogates for the standing hypotheses on the model and the
//! initial data. Finiteness conditions become grid suprema compared against
//! a declared threshold.

use serde::{Deserialize, Serialize};

use super::density::InitialDensity;
use super::params::{rho_of_n, ModelParams};
use crate::convolution::PowerConvolver;
use crate::fft::unravel;

/// Grid used by [`check_hypotheses`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HypothesisGrid {
    pub mass_points: usize,
    pub spatial_cells: usize,
    /// Estimates at or above this count as infinite.
    pub threshold: f64,
    /// Mass-marginal quantile at which the mass grid starts.
    pub lower_quantile: f64,
}

impl Default for HypothesisGrid {
    fn default() -> Self {
        Self {
            mass_points: 200,
            spatial_cells: 32,
            threshold: 1e8,
            lower_quantile: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionReport {
    pub name: String,
    pub estimate: f64,
    pub threshold: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HypothesisReport {
    /// False when Z is not in (0, inf).
    pub valid_total: bool,
    pub conditions: Vec<ConditionReport>,
    pub riesz_energy: f64,
}

impl HypothesisReport {
    pub fn all_pass(&self) -> bool {
        self.valid_total && self.conditions.iter().all(|c| c.pass)
    }

    pub fn condition(&self, name: &str) -> Option<&ConditionReport> {
        self.conditions.iter().find(|c| c.name == name)
    }
}

fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n < 2 || hi <= lo {
        return vec![lo];
    }
    let r = (hi / lo).ln() / (n - 1) as f64;
    (0..n).map(|i| lo * (r * i as f64).exp()).collect()
}

fn finite_condition(name: &str, estimate: f64, threshold: f64) -> ConditionReport {
    ConditionReport {
        name: name.to_string(),
        estimate,
        threshold,
        pass: estimate.is_finite() && estimate.abs() < threshold,
    }
}

/// Evaluates every hypothesis on the given grids. Never fails: unbounded
/// or undefined estimates are reported as failed conditions.
pub fn check_hypotheses(params: &ModelParams, h: &InitialDensity, mass_cap: f64, grid: &HypothesisGrid) -> HypothesisReport {
    let thr = grid.threshold;
    let z = h.total();
    let valid_total = z > 0.0 && z.is_finite();
    let dim = params.dim;
    let df = dim as f64;
    let mut conditions = vec![finite_condition("initial_total", z, thr)];
    conditions[0].pass &= valid_total;

    let profile = h.mass();
    let m_lo = profile.quantile(grid.lower_quantile).max(f64::MIN_POSITIVE);
    let m_hi = profile.quantile(1.0 - grid.lower_quantile).max(mass_cap);
    let masses = log_grid(m_lo, m_hi, grid.mass_points);

    // d bounded and phi, phi*d non-increasing.
    let d_sup = masses.iter().map(|&m| params.diffusion.eval(m)).fold(0.0, f64::max);
    let bound = params.diffusion.upper_bound().unwrap_or(f64::INFINITY);
    conditions.push(finite_condition("diffusion_bound", bound.max(d_sup), thr));
    let admissible = params.phi.is_admissible_on(&masses, 1e-12);
    conditions.push(ConditionReport {
        name: "phi_monotone".into(),
        estimate: if admissible { 0.0 } else { 1.0 },
        threshold: 0.5,
        pass: admissible,
    });

    // sup_{n <= L} sup_m alpha(n,m) / (m d(m)^{d/2} phi(m)^{d-1}).
    let ns = log_grid(m_lo.min(mass_cap), mass_cap, grid.mass_points);
    let mut ratio = 0.0f64;
    for &m in &masses {
        let denom = m * params.diffusion.eval(m).powf(0.5 * df) * params.phi.eval(m).powf(df - 1.0);
        for &n in &ns {
            let r = params.alpha.eval(n, m) / denom;
            ratio = if r.is_nan() { f64::INFINITY } else { ratio.max(r) };
        }
    }
    conditions.push(finite_condition("alpha_ratio", ratio, thr));

    // h-bar_k * lambda_k on the box, k = 2, 3, 4.
    let cells = grid.spatial_cells;
    let side = h.box_side() / cells as f64;
    let shape = vec![cells; dim];
    let total_cells = cells.pow(dim as u32);
    let mut idx = vec![0usize; dim];
    let mut lo = vec![0.0; dim];
    let s: Vec<f64> = (0..total_cells)
        .map(|flat| {
            unravel(flat, &shape, &mut idx);
            for a in 0..dim {
                lo[a] = idx[a] as f64 * side;
            }
            h.spatial_cell_average(&lo, side)
        })
        .collect();
    for k in [2usize, 3, 4] {
        let factor = h.bar_factor(k, |n| params.diffusion.eval(n), |n| params.phi.eval(n));
        let conv = PowerConvolver::new(&shape, side, 2.0 / k as f64 - df);
        let field: Vec<f64> = s.iter().map(|v| v * factor).collect();
        let sup = conv.apply(&field).into_iter().fold(0.0, f64::max);
        conditions.push(finite_condition(&format!("hbar{k}_lambda{k}"), sup, thr));
    }

    // Riesz energy of h-hat.
    let hat_factor = z * (profile.mean() + 1.0);
    let hat: Vec<f64> = s.iter().map(|v| v * hat_factor).collect();
    let conv = PowerConvolver::new(&shape, side, 2.0 - df);
    let pot = conv.apply(&hat);
    let cell_volume = side.powi(dim as i32);
    let riesz_energy: f64 = hat.iter().zip(&pot).map(|(a, b)| a * b).sum::<f64>() * cell_volume;
    conditions.push(finite_condition("riesz_energy", riesz_energy, thr));

    // int rho(n) h_n dx dn.
    let rho_moment = z * profile.expectation(|n| rho_of_n(&params.alpha, &params.tau, n).unwrap_or(f64::INFINITY));
    conditions.push(finite_condition("rho_moment", rho_moment, thr));

    HypothesisReport {
        valid_total,
        conditions,
        riesz_energy,
    }
}
