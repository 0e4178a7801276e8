//! Tabulated I(a) and the effective kernel beta(n, m) = alpha I(alpha/(d(n)+d(m))).

use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::grid::{SupportGrid, DEFAULT_CELLS};
use super::solve::{solution_from_u, SOLVER_TOLERANCE};
use crate::error::{Error, Result};
use crate::model::{CoagulationPropensity, DiffusionCoefficient, InteractionProfile};

pub const DEFAULT_POINTS_PER_DECADE: usize = 64;
const MAX_LANCZOS: usize = 2000;

/// Log-spaced coupling grid `min:max:points-per-decade`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AGridSpec {
    pub min: f64,
    pub max: f64,
    pub per_decade: usize,
}

impl AGridSpec {
    /// Smallest grid of whole decades containing `[lo, hi]`.
    pub fn covering(lo: f64, hi: f64, per_decade: usize) -> Self {
        Self {
            min: 10f64.powf(lo.log10().floor()),
            max: 10f64.powf(hi.log10().ceil().max(lo.log10().floor() + 1.0)),
            per_decade,
        }
    }

    pub fn points(&self) -> Vec<f64> {
        let decades = (self.max / self.min).log10();
        let n = ((decades * self.per_decade as f64).round() as usize).max(1);
        let step = (self.max / self.min).ln() / n as f64;
        let mut pts: Vec<f64> = (0..=n).map(|i| self.min * (step * i as f64).exp()).collect();
        pts[n] = self.max;
        pts
    }

    fn validate(&self) -> Result<()> {
        if !(self.min > 0.0 && self.max > self.min && self.per_decade >= 1) {
            return Err(Error::InvalidParameter(format!("invalid coupling grid {self:?}")));
        }
        Ok(())
    }
}

impl FromStr for AGridSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        let bad = || Error::InvalidParameter(format!("coupling grid '{s}' is not min:max:points-per-decade"));
        if parts.len() != 3 {
            return Err(bad());
        }
        let spec = Self {
            min: parts[0].trim().parse().map_err(|_| bad())?,
            max: parts[1].trim().parse().map_err(|_| bad())?,
            per_decade: parts[2].trim().parse().map_err(|_| bad())?,
        };
        spec.validate()?;
        Ok(spec)
    }
}

/// Range of `alpha(n,m) / (d(n) + d(m))` over pairs of the given masses,
/// ignoring pairs with alpha = 0. None when alpha vanishes on all pairs.
pub fn coupling_range(alpha: &CoagulationPropensity, d: &DiffusionCoefficient, masses: &[f64]) -> Option<(f64, f64)> {
    let mut lo = f64::INFINITY;
    let mut hi = 0.0f64;
    for (i, &n) in masses.iter().enumerate() {
        for &m in &masses[i..] {
            let al = alpha.eval(n, m);
            if al > 0.0 {
                let a = al / (d.eval(n) + d.eval(m));
                lo = lo.min(a);
                hi = hi.max(a);
            }
        }
    }
    (hi > 0.0).then_some((lo, hi))
}

/// I(a) on a log grid with monotone cubic interpolation in log a.
#[derive(Debug, Clone, PartialEq)]
pub struct EffectiveKernelTable {
    a: Vec<f64>,
    log_a: Vec<f64>,
    values: Vec<f64>,
    slopes: Vec<f64>,
    max_residual: f64,
    alpha: CoagulationPropensity,
    diffusion: DiffusionCoefficient,
}

/// Fritsch-Carlson slopes: the Hermite interpolant is monotone wherever the
/// data are.
fn monotone_slopes(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len();
    if n < 2 {
        return vec![0.0; n];
    }
    let delta: Vec<f64> = (0..n - 1).map(|k| (y[k + 1] - y[k]) / (x[k + 1] - x[k])).collect();
    let mut m = vec![0.0; n];
    m[0] = delta[0];
    m[n - 1] = delta[n - 2];
    for k in 1..n - 1 {
        m[k] = if delta[k - 1] * delta[k] <= 0.0 {
            0.0
        } else {
            0.5 * (delta[k - 1] + delta[k])
        };
    }
    for k in 0..n - 1 {
        if delta[k] == 0.0 {
            m[k] = 0.0;
            m[k + 1] = 0.0;
            continue;
        }
        let a = m[k] / delta[k];
        let b = m[k + 1] / delta[k];
        let s = a * a + b * b;
        if s > 9.0 {
            let t = 3.0 / s.sqrt();
            m[k] = t * a * delta[k];
            m[k + 1] = t * b * delta[k];
        }
    }
    m
}

impl EffectiveKernelTable {
    pub fn from_values(
        a: Vec<f64>,
        values: Vec<f64>,
        max_residual: f64,
        alpha: CoagulationPropensity,
        diffusion: DiffusionCoefficient,
    ) -> Result<Self> {
        if a.is_empty() || a.len() != values.len() || a.windows(2).any(|w| !(w[1] > w[0])) || !(a[0] > 0.0) {
            return Err(Error::InvalidParameter("coupling grid must be positive and increasing".into()));
        }
        let log_a: Vec<f64> = a.iter().map(|v| v.ln()).collect();
        let slopes = monotone_slopes(&log_a, &values);
        Ok(Self { a, log_a, values, slopes, max_residual, alpha, diffusion })
    }

    pub fn couplings(&self) -> &[f64] {
        &self.a
    }

    pub fn integrals(&self) -> &[f64] {
        &self.values
    }

    pub fn max_residual(&self) -> f64 {
        self.max_residual
    }

    pub fn range(&self) -> (f64, f64) {
        (self.a[0], self.a[self.a.len() - 1])
    }

    pub fn alpha(&self) -> &CoagulationPropensity {
        &self.alpha
    }

    pub fn diffusion(&self) -> &DiffusionCoefficient {
        &self.diffusion
    }

    /// Interpolated I(a); I(0) = 1.
    pub fn integral(&self, a: f64) -> Result<f64> {
        if a == 0.0 {
            return Ok(1.0);
        }
        let (lo, hi) = self.range();
        let slack = 1e-12;
        if !(a >= lo * (1.0 - slack) && a <= hi * (1.0 + slack)) {
            return Err(Error::Extrapolation { a, min: lo, max: hi });
        }
        let n = self.a.len();
        if n == 1 {
            return Ok(self.values[0]);
        }
        let x = a.ln().clamp(self.log_a[0], self.log_a[n - 1]);
        let k = (self.log_a.partition_point(|&v| v <= x).max(1) - 1).min(n - 2);
        let h = self.log_a[k + 1] - self.log_a[k];
        let t = (x - self.log_a[k]) / h;
        let (t2, t3) = (t * t, t * t * t);
        let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
        let h10 = t3 - 2.0 * t2 + t;
        let h01 = -2.0 * t3 + 3.0 * t2;
        let h11 = t3 - t2;
        Ok(h00 * self.values[k] + h10 * h * self.slopes[k] + h01 * self.values[k + 1] + h11 * h * self.slopes[k + 1])
    }

    /// beta(n, m) = alpha(n, m) I(alpha(n, m) / (d(n) + d(m))).
    pub fn beta(&self, n: f64, m: f64) -> Result<f64> {
        let al = self.alpha.eval(n, m);
        if al == 0.0 {
            return Ok(0.0);
        }
        let a = al / (self.diffusion.eval(n) + self.diffusion.eval(m));
        Ok(al * self.integral(a)?)
    }
}

/// Lanczos basis for the Krylov space of M started at `b`, with full
/// reorthogonalisation.
struct Lanczos {
    q: Vec<Vec<f64>>,
    alpha: Vec<f64>,
    beta: Vec<f64>,
    b_norm: f64,
}

/// Solves the tridiagonal system `(I + a T) y = e1` by the Thomas algorithm.
fn shifted_tridiagonal(alpha: &[f64], beta: &[f64], a: f64) -> Vec<f64> {
    let k = alpha.len();
    let mut c = vec![0.0; k];
    let mut d = vec![0.0; k];
    let mut denom = 1.0 + a * alpha[0];
    c[0] = if k > 1 { a * beta[0] / denom } else { 0.0 };
    d[0] = 1.0 / denom;
    for i in 1..k {
        let sub = a * beta[i - 1];
        denom = 1.0 + a * alpha[i] - sub * c[i - 1];
        c[i] = if i + 1 < k { a * beta[i] / denom } else { 0.0 };
        d[i] = -sub * d[i - 1] / denom;
    }
    let mut y = d;
    for i in (0..k - 1).rev() {
        y[i] -= c[i] * y[i + 1];
    }
    y
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn lanczos(grid: &SupportGrid, b: &[f64], a_max: f64) -> Result<Lanczos> {
    let b_norm = dot(b, b).sqrt();
    let mut q = vec![b.iter().map(|v| v / b_norm).collect::<Vec<f64>>()];
    let mut alpha = Vec::new();
    let mut beta: Vec<f64> = Vec::new();
    for j in 0..MAX_LANCZOS {
        let mut r = grid.apply_m(&q[j]);
        let aj = dot(&r, &q[j]);
        alpha.push(aj);
        // Two passes of classical Gram-Schmidt against the whole basis.
        for _ in 0..2 {
            for qi in &q {
                let c = dot(&r, qi);
                for (ri, qv) in r.iter_mut().zip(qi) {
                    *ri -= c * qv;
                }
            }
        }
        let bj = dot(&r, &r).sqrt();
        // Residual of the hardest shifted system: a_max * b_j * |y_j| / |b|.
        let y = shifted_tridiagonal(&alpha, &beta, a_max);
        let rel = bj * a_max * y[j].abs();
        if rel <= 0.1 * SOLVER_TOLERANCE || bj <= 1e-300 {
            return Ok(Lanczos { q, alpha, beta, b_norm });
        }
        beta.push(bj);
        q.push(r.into_iter().map(|v| v / bj).collect());
    }
    Err(Error::SolverFailure("Lanczos iteration did not converge".into()))
}

/// Builds the I(a) table on the given support grid. All couplings share one
/// Krylov space, since every system is `(I + a M) u = -a M s`.
pub fn build_kernel_table_on(
    grid: &SupportGrid,
    alpha: &CoagulationPropensity,
    diffusion: &DiffusionCoefficient,
    spec: &AGridSpec,
) -> Result<EffectiveKernelTable> {
    spec.validate()?;
    let a_grid = spec.points();
    let b = grid.apply_m(grid.sqrt_v());
    let a_max = a_grid[a_grid.len() - 1];
    let basis = lanczos(grid, &b, a_max)?;
    let k = basis.alpha.len();
    let n = grid.len();
    let mut values = Vec::with_capacity(a_grid.len());
    let mut max_residual = 0.0f64;
    for &a in &a_grid {
        let y = shifted_tridiagonal(&basis.alpha, &basis.beta, a);
        let mut u = vec![0.0; n];
        for (qi, &yi) in basis.q.iter().take(k).zip(&y) {
            for (uj, qv) in u.iter_mut().zip(qi) {
                *uj -= a * basis.b_norm * yi * qv;
            }
        }
        // True relative residual of (I + a M) u = -a b.
        let lhs = grid.apply_shifted(a, &u);
        let res: f64 = lhs.iter().zip(&b).map(|(l, bi)| (l + a * bi).powi(2)).sum::<f64>().sqrt();
        let rel = res / (a * basis.b_norm);
        if !(rel <= 1e-10) {
            return Err(Error::SolverFailure(format!("table solve at a = {a} has residual {rel:e}")));
        }
        max_residual = max_residual.max(rel);
        values.push(solution_from_u(grid, a, &u, rel)?.integral());
    }
    EffectiveKernelTable::from_values(a_grid, values, max_residual, alpha.clone(), diffusion.clone())
}

/// Builds the table on the default support grid for `potential`.
pub fn build_kernel_table(
    alpha: &CoagulationPropensity,
    diffusion: &DiffusionCoefficient,
    potential: &InteractionProfile,
    spec: &AGridSpec,
) -> Result<EffectiveKernelTable> {
    let grid = SupportGrid::new(potential, DEFAULT_CELLS)?;
    build_kernel_table_on(&grid, alpha, diffusion, spec)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::solve::solve_w;

    fn grid() -> SupportGrid {
        SupportGrid::new(&InteractionProfile::bump(3, 1.0).unwrap(), 12).unwrap()
    }

    #[test]
    fn spec_parsing() {
        let s: AGridSpec = "0.01:100:8".parse().unwrap();
        assert_eq!(s.points().len(), 33);
        assert!("1:0.1:4".parse::<AGridSpec>().is_err());
        assert!("1:2".parse::<AGridSpec>().is_err());
        let c = AGridSpec::covering(0.3, 4.0, 16);
        assert_eq!((c.min, c.max), (0.1, 10.0));
    }

    #[test]
    fn lanczos_table_matches_direct_solves() {
        let g = grid();
        let spec = AGridSpec { min: 0.1, max: 100.0, per_decade: 4 };
        let t = build_kernel_table_on(&g, &CoagulationPropensity::constant(1.0), &DiffusionCoefficient::constant(1.0), &spec).unwrap();
        for (&a, &v) in t.couplings().iter().zip(t.integrals()) {
            let direct = solve_w(a, &g).unwrap().integral();
            assert!((v - direct).abs() < 1e-10, "a = {a}: {v} vs {direct}");
        }
        assert!(t.max_residual() <= 1e-10);
    }

    #[test]
    fn table_properties_and_extrapolation() {
        let g = grid();
        let spec = AGridSpec { min: 0.01, max: 10.0, per_decade: 8 };
        let t = build_kernel_table_on(&g, &CoagulationPropensity::constant(1.0), &DiffusionCoefficient::constant(1.0), &spec).unwrap();
        let v = t.integrals();
        for w in v.windows(2) {
            assert!(w[1] < w[0]);
        }
        for (w, a) in v.windows(2).zip(t.couplings().windows(2)) {
            assert!(a[1] * w[1] >= a[0] * w[0]);
        }
        assert_eq!(t.integral(0.0).unwrap(), 1.0);
        assert!(matches!(t.integral(20.0), Err(Error::Extrapolation { .. })));
        let b = t.beta(1.0, 2.0).unwrap();
        assert!(b > 0.0 && b <= 1.0);
        assert_eq!(b, t.beta(2.0, 1.0).unwrap());
    }

    #[test]
    fn zero_alpha_gives_zero_beta() {
        let t = EffectiveKernelTable::from_values(
            vec![1.0],
            vec![0.5],
            0.0,
            CoagulationPropensity::constant(0.0),
            DiffusionCoefficient::constant(1.0),
        )
        .unwrap();
        assert_eq!(t.beta(3.0, 0.1).unwrap(), 0.0);
    }
}
