//! The k-point space-time correlation bound.

use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::config::SimConfig;
use super::dynamics::simulate;
use super::functionals::Estimate;
use crate::convolution::PowerConvolver;
use crate::error::{Error, Result};
use crate::fft::{unravel, wavenumber, NdFft};
use crate::model::{sample_initial, InitialDensity, ModelParams, ParticleSystem, SamplingMode};
use crate::quadrature::{bump_mass, bump_profile, gauss_legendre, newton_constant};

/// Non-negative bump `height * exp(-1/(1 - |x - c|^2/r^2))`, used without
/// periodic images; keep it away from the box faces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpatialBump {
    pub center: Vec<f64>,
    pub radius: f64,
    pub height: f64,
}

impl SpatialBump {
    pub fn eval(&self, x: &[f64]) -> f64 {
        let r2: f64 = x.iter().zip(&self.center).map(|(a, b)| (a - b) * (a - b)).sum();
        self.height * bump_profile(r2 / (self.radius * self.radius))
    }

    /// `int b dx`.
    pub fn integral(&self) -> f64 {
        self.height * self.radius.powi(self.center.len() as i32) * bump_mass(self.center.len())
    }
}

/// `K(x_1, ..., x_k) = prod_l b_l(x_l)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProductTest {
    pub factors: Vec<SpatialBump>,
}

impl ProductTest {
    pub fn k(&self) -> usize {
        self.factors.len()
    }

    pub fn is_zero(&self) -> bool {
        self.factors.iter().any(|b| b.height == 0.0)
    }
}

/// `gamma_k(m) = m d(m)^{d/2} phi(m)^{kd/2 - 1}`.
pub fn gamma_weight(model: &ModelParams, k: usize, m: f64) -> f64 {
    let d = model.dim as f64;
    m * model.diffusion.eval(m).powf(0.5 * d) * model.phi.eval(m).powf(0.5 * k as f64 * d - 1.0)
}

/// `sum over distinct i_1..i_k of prod_l b_l(x_{i_l}) gamma(m_{i_l})` by
/// inclusion-exclusion over coincident indices.
pub fn distinct_sum(state: &ParticleSystem, test: &ProductTest, model: &ModelParams) -> f64 {
    let k = test.k();
    let mut single = vec![0.0; k];
    let mut pair = [[0.0; 3]; 3];
    let mut triple = 0.0;
    let mut vals = vec![0.0; k];
    for s in state.alive_slots() {
        let g = gamma_weight(model, k, state.mass(s));
        for l in 0..k {
            vals[l] = test.factors[l].eval(state.position(s)) * g;
            single[l] += vals[l];
        }
        if k >= 2 {
            for a in 0..k {
                for b in a + 1..k {
                    pair[a][b] += vals[a] * vals[b];
                }
            }
        }
        if k == 3 {
            triple += vals[0] * vals[1] * vals[2];
        }
    }
    match k {
        2 => single[0] * single[1] - pair[0][1],
        3 => {
            single[0] * single[1] * single[2] - pair[0][1] * single[2] - pair[0][2] * single[1] - pair[1][2] * single[0]
                + 2.0 * triple
        }
        _ => unreachable!("k checked by the caller"),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorrelationReport {
    pub k: usize,
    pub horizon: f64,
    /// Seed average of `eps^{k(d-2)} int_0^T sum K prod gamma_k dt`.
    pub lhs: Estimate,
    pub per_seed: Vec<f64>,
    /// `c0(kd) int K prod (h-bar_k * lambda_k)`.
    pub rhs: f64,
    /// Free-motion bound on the part of the time integral beyond the horizon.
    pub tail_bound: f64,
}

fn check_k(k: usize, model: &ModelParams) -> Result<()> {
    if model.dim < 3 {
        return Err(Error::UnsupportedDimension { dim: model.dim, reason: "the correlation kernel needs d >= 3" });
    }
    if !(k == 2 || k == 3) {
        return Err(Error::Unsupported(format!("correlation bound for k = {k}")));
    }
    Ok(())
}

/// Monte Carlo estimate of the left side over `seeds` and quadrature of the
/// right side on `cells^d` grid cells.
pub fn correlation_check(
    model: &ModelParams,
    h: &InitialDensity,
    test: &ProductTest,
    config: &SimConfig,
    seeds: &[u64],
    cells: usize,
) -> Result<CorrelationReport> {
    let k = test.k();
    check_k(k, model)?;
    if seeds.is_empty() {
        return Err(Error::InvalidParameter("no seeds".into()));
    }
    let d = model.dim;
    let weight = model.particle_weight().powi(k as i32);
    let runs: Vec<Result<f64>> = seeds
        .par_iter()
        .map(|&seed| {
            let state = sample_initial(h, model, SamplingMode::Deterministic, seed)?;
            let mut acc = 0.0;
            if !test.is_zero() {
                simulate(state, config, model, |s, _, dt| acc += dt * distinct_sum(s, test, model))?;
            }
            Ok(weight * acc)
        })
        .collect();
    let per_seed: Vec<f64> = runs.into_iter().collect::<Result<_>>()?;

    let rhs = if test.is_zero() {
        0.0
    } else {
        let factor = h.bar_factor(k, |n| model.diffusion.eval(n), |n| model.phi.eval(n));
        let grid = BoxGrid::new(h, cells);
        let conv = PowerConvolver::new(&grid.shape, grid.spacing, 2.0 / k as f64 - d as f64);
        let field: Vec<f64> = grid.s.iter().map(|v| v * factor).collect();
        let pot = conv.apply(&field);
        let mut prod = newton_constant(k * d);
        for b in &test.factors {
            prod *= grid.integrate_against(b, &pot);
        }
        prod
    };

    // Free motion from the horizon on: E b(X_t) <= |b|_1 (4 pi d_min t)^{-d/2}.
    let (lo, hi) = h.mass().support();
    let d_min = (0..=64)
        .map(|i| model.diffusion.eval(lo.max(1e-12 * hi) + (hi - lo) * i as f64 / 64.0))
        .fold(f64::INFINITY, f64::min);
    let mass_factor = h.bar_factor(k, |n| model.diffusion.eval(n), |n| model.phi.eval(n)) / h.total();
    let amplitude = (model.particle_weight() * model.particle_count() as f64 * mass_factor).powi(k as i32);
    let kd2 = 0.5 * (k * d) as f64;
    let tail_bound = if config.horizon > 0.0 {
        amplitude
            * test.factors.iter().map(|b| b.integral()).product::<f64>()
            * (4.0 * std::f64::consts::PI * d_min).powf(-kd2)
            * config.horizon.powf(1.0 - kd2)
            / (kd2 - 1.0)
    } else {
        f64::INFINITY
    };

    Ok(CorrelationReport {
        k,
        horizon: config.horizon,
        lhs: Estimate::from_samples(&per_seed),
        per_seed,
        rhs,
        tail_bound,
    })
}

/// Cell centres of the box and the spatial profile sampled there.
struct BoxGrid {
    shape: Vec<usize>,
    spacing: f64,
    s: Vec<f64>,
    centres: Vec<f64>,
}

impl BoxGrid {
    fn new(h: &InitialDensity, cells: usize) -> Self {
        let dim = h.dim();
        let shape = vec![cells; dim];
        let spacing = h.box_side() / cells as f64;
        let total = cells.pow(dim as u32);
        let mut idx = vec![0usize; dim];
        let mut lo = vec![0.0; dim];
        let mut centres = Vec::with_capacity(total * dim);
        let mut s = Vec::with_capacity(total);
        for flat in 0..total {
            unravel(flat, &shape, &mut idx);
            for a in 0..dim {
                lo[a] = idx[a] as f64 * spacing;
                centres.push(lo[a] + 0.5 * spacing);
            }
            s.push(h.spatial_cell_average(&lo, spacing));
        }
        Self { shape, spacing, s, centres }
    }

    fn centre(&self, flat: usize) -> &[f64] {
        let d = self.shape.len();
        &self.centres[flat * d..(flat + 1) * d]
    }

    fn integrate_against(&self, b: &SpatialBump, f: &[f64]) -> f64 {
        let vol = self.spacing.powi(self.shape.len() as i32);
        f.iter().enumerate().map(|(i, v)| b.eval(self.centre(i)) * v).sum::<f64>() * vol
    }
}

/// Exact mean of the left side for k = 2 without coagulation and with
/// constant diffusion: independent particles, so the two-point sum factorises
/// into `N(N-1) E[gamma]^2 int_0^T A_1(t) A_2(t) dt` with
/// `A_l(t) = int (P_t b_l) s` on the periodic box.
pub fn free_motion_oracle(model: &ModelParams, h: &InitialDensity, test: &ProductTest, horizon: f64, cells: usize) -> Result<f64> {
    if test.k() != 2 {
        return Err(Error::Unsupported("the free-motion oracle covers k = 2".into()));
    }
    let diffusion = match model.diffusion {
        crate::model::DiffusionCoefficient::Constant { value } => value,
        _ => return Err(Error::Unsupported("the free-motion oracle needs constant diffusion".into())),
    };
    let d = model.dim;
    let grid = BoxGrid::new(h, cells);
    let fft = NdFft::new(&grid.shape);
    let n_total = fft.len();
    let transform = |vals: Vec<f64>| {
        let mut buf: Vec<Complex64> = vals.into_iter().map(|v| Complex64::new(v, 0.0)).collect();
        fft.forward(&mut buf);
        buf
    };
    let s_hat = transform(grid.s.clone());
    let b_hat: Vec<Vec<Complex64>> = test
        .factors
        .iter()
        .map(|b| transform((0..n_total).map(|i| b.eval(grid.centre(i))).collect()))
        .collect();
    let mut idx = vec![0usize; d];
    let k2: Vec<f64> = (0..n_total)
        .map(|flat| {
            unravel(flat, &grid.shape, &mut idx);
            idx.iter().map(|&i| wavenumber(i, cells, h.box_side()).powi(2)).sum()
        })
        .collect();
    let vol = grid.spacing.powi(d as i32);
    let a = |l: usize, t: f64| -> f64 {
        let sum: f64 = (0..n_total)
            .map(|i| (b_hat[l][i] * s_hat[i].conj()).re * (-diffusion * k2[i] * t).exp())
            .sum();
        vol * sum / n_total as f64
    };
    // Composite Gauss-Legendre in time, panels refined towards t = 0.
    let rule = gauss_legendre(16);
    let mut edges = vec![0.0];
    let mut e = horizon * 1e-4;
    while e < horizon {
        edges.push(e);
        e *= 2.0;
    }
    edges.push(horizon);
    let mut integral = 0.0;
    for w in edges.windows(2) {
        let (t0, t1) = (w[0], w[1]);
        for &(x, wt) in &rule {
            let t = 0.5 * (t0 + t1) + 0.5 * (t1 - t0) * x;
            integral += 0.5 * (t1 - t0) * wt * a(0, t) * a(1, t);
        }
    }
    let n = model.particle_count() as f64;
    let mean_gamma = h.mass().expectation(|m| gamma_weight(model, 2, m));
    Ok(model.particle_weight().powi(2) * n * (n - 1.0) * mean_gamma * mean_gamma * integral)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{CoagulationPropensity, InitialPreset};

    fn setup(alpha: f64) -> (ModelParams, InitialDensity, ProductTest) {
        let model = ModelParams::standard(3, 0.05, 1.0, 1.0).unwrap().with_alpha(CoagulationPropensity::constant(alpha));
        let h = InitialDensity::from_preset(
            &InitialPreset::GaussianExp { total: 1.0, sigma: 0.15, center: None, mass_scale: 1.0 },
            3,
            1.0,
        )
        .unwrap();
        let bump = |x: f64| SpatialBump { center: vec![x, 0.5, 0.5], radius: 0.25, height: 1.0 };
        (model, h, ProductTest { factors: vec![bump(0.4), bump(0.6)] })
    }

    #[test]
    fn distinct_sum_matches_brute_force() {
        let (model, h, two) = setup(1.0);
        let state = sample_initial(&h, &model, SamplingMode::Deterministic, 3).unwrap();
        let mut three = two.clone();
        three.factors.push(SpatialBump { center: vec![0.5; 3], radius: 0.3, height: 2.0 });
        for test in [&two, &three] {
            let k = test.k();
            let slots: Vec<usize> = state.alive_slots().collect();
            let term = |s: usize, l: usize| test.factors[l].eval(state.position(s)) * gamma_weight(&model, k, state.mass(s));
            let mut brute = 0.0;
            for &a in &slots {
                for &b in &slots {
                    if a == b {
                        continue;
                    }
                    if k == 2 {
                        brute += term(a, 0) * term(b, 1);
                    } else {
                        for &c in &slots {
                            if c != a && c != b {
                                brute += term(a, 0) * term(b, 1) * term(c, 2);
                            }
                        }
                    }
                }
            }
            let fast = distinct_sum(&state, test, &model);
            assert!((fast - brute).abs() <= 1e-10 * brute.abs().max(1.0), "k={k}: {fast} vs {brute}");
        }
    }

    #[test]
    fn zero_test_function_gives_zero_on_both_sides() {
        let (model, h, mut test) = setup(1.0);
        for b in &mut test.factors {
            b.height = 0.0;
        }
        let r = correlation_check(&model, &h, &test, &SimConfig::new(0.01), &[1, 2], 16).unwrap();
        assert_eq!(r.lhs.mean, 0.0);
        assert_eq!(r.rhs, 0.0);
    }

    #[test]
    fn unsupported_orders() {
        let (model, h, test) = setup(1.0);
        let one = ProductTest { factors: test.factors[..1].to_vec() };
        assert!(matches!(
            correlation_check(&model, &h, &one, &SimConfig::new(0.01), &[1], 16),
            Err(Error::Unsupported(_))
        ));
    }

    #[test]
    fn free_motion_matches_oracle() {
        let (model, h, test) = setup(0.0);
        let seeds: Vec<u64> = (0..48).collect();
        let r = correlation_check(&model, &h, &test, &SimConfig::new(0.05), &seeds, 32).unwrap();
        let oracle = free_motion_oracle(&model, &h, &test, 0.05, 32).unwrap();
        assert!((r.lhs.mean - oracle).abs() <= 3.0 * r.lhs.se, "{:?} vs {oracle}", r.lhs);
        assert!(r.tail_bound.is_finite() && r.tail_bound > 0.0);
    }
}
