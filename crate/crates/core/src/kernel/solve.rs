//! The correction potential w^a and its a-derivative on the support grid.
//!
//! With S = diag(sqrt V) and M = S K S (symmetric positive semidefinite),
//! `(id + a F) w = -a Gamma` is equivalent to
//! `(I + a M) u = -a M s`, `u = S w`, `s = S 1`, and w is recovered at every
//! node as `w = -a K V (1 + w) = -a K S (s + u)`.

use super::grid::SupportGrid;
use crate::error::{Error, Result};

/// Relative residual at which the iterative solves stop.
pub const SOLVER_TOLERANCE: f64 = 1e-12;
/// Allowed excursion of w outside [-1, 0].
pub const BOUND_SLACK: f64 = 1e-8;
const MAX_ITERATIONS: usize = 5000;

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Conjugate gradients for an SPD operator. Returns the solution and the
/// final relative residual.
pub(crate) fn conjugate_gradient(
    apply: impl Fn(&[f64]) -> Vec<f64>,
    rhs: &[f64],
    tol: f64,
) -> Result<(Vec<f64>, f64)> {
    let n = rhs.len();
    let b_norm = norm(rhs);
    let mut x = vec![0.0; n];
    if b_norm == 0.0 {
        return Ok((x, 0.0));
    }
    let mut r = rhs.to_vec();
    let mut p = r.clone();
    let mut rr = dot(&r, &r);
    for _ in 0..MAX_ITERATIONS {
        if rr.sqrt() <= tol * b_norm {
            break;
        }
        let ap = apply(&p);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            return Err(Error::SolverFailure("operator is not positive definite".into()));
        }
        let alpha = rr / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        let rr_new = dot(&r, &r);
        let beta = rr_new / rr;
        rr = rr_new;
        for i in 0..n {
            p[i] = r[i] + beta * p[i];
        }
    }
    // True residual, not the recursively updated one.
    let ax = apply(&x);
    let res: Vec<f64> = rhs.iter().zip(&ax).map(|(b, v)| b - v).collect();
    let rel = norm(&res) / b_norm;
    if !(rel <= 100.0 * tol) {
        return Err(Error::SolverFailure(format!("conjugate gradients stalled at relative residual {rel:e}")));
    }
    Ok((x, rel))
}

impl SupportGrid {
    /// `M x = S K S x`.
    pub(crate) fn apply_m(&self, x: &[f64]) -> Vec<f64> {
        let s = self.sqrt_v();
        let sx: Vec<f64> = x.iter().zip(s).map(|(a, b)| a * b).collect();
        let k = self.apply_kernel(&sx);
        k.iter().zip(s).map(|(a, b)| a * b).collect()
    }

    /// `(I + a M) x`.
    pub(crate) fn apply_shifted(&self, a: f64, x: &[f64]) -> Vec<f64> {
        let m = self.apply_m(x);
        x.iter().zip(&m).map(|(xi, mi)| xi + a * mi).collect()
    }
}

/// Gamma(x) = c0 int |x - y|^{2-d} V(y) dy at an arbitrary point.
pub fn gamma_potential(grid: &SupportGrid, x: &[f64]) -> f64 {
    grid.potential_at(x, grid.v())
}

/// Gamma at the grid nodes.
pub fn gamma_nodes(grid: &SupportGrid) -> Vec<f64> {
    grid.apply_kernel(grid.v())
}

/// w^a at the support nodes together with its source density V(1 + w).
#[derive(Debug, Clone, PartialEq)]
pub struct PotentialSolution {
    a: f64,
    w: Vec<f64>,
    source: Vec<f64>,
    residual: f64,
    integral: f64,
}

impl PotentialSolution {
    pub fn coupling(&self) -> f64 {
        self.a
    }

    pub fn values(&self) -> &[f64] {
        &self.w
    }

    /// Relative residual of the linear solve.
    pub fn residual(&self) -> f64 {
        self.residual
    }

    /// I(a) = int V (1 + w^a).
    pub fn integral(&self) -> f64 {
        self.integral
    }

    /// w^a(x) = -a c0 int |x - y|^{2-d} V(y) (1 + w^a(y)) dy anywhere.
    pub fn eval(&self, grid: &SupportGrid, x: &[f64]) -> f64 {
        if self.a == 0.0 {
            return 0.0;
        }
        -self.a * grid.potential_at(x, &self.source)
    }
}

fn finish(grid: &SupportGrid, a: f64, u: &[f64], residual: f64) -> Result<PotentialSolution> {
    let s = grid.sqrt_v();
    let src: Vec<f64> = s.iter().zip(u).map(|(si, ui)| si * (si + ui)).collect();
    let w: Vec<f64> = grid.apply_kernel(&src).into_iter().map(|k| -a * k).collect();
    if let Some((i, &bad)) = w
        .iter()
        .enumerate()
        .find(|(_, &x)| !(-1.0 - BOUND_SLACK..=BOUND_SLACK).contains(&x))
    {
        return Err(Error::SolverFailure(format!(
            "w^a = {bad} at node {i} leaves [-1, 0] for a = {a}; the support grid is too coarse"
        )));
    }
    let source: Vec<f64> = grid.v().iter().zip(&w).map(|(v, wi)| v * (1.0 + wi)).collect();
    let integral = source.iter().sum::<f64>() * grid.cell_volume();
    Ok(PotentialSolution { a, w, source, residual, integral })
}

/// Solves `(id + a F) w = -a Gamma` on the support grid.
pub fn solve_w(a: f64, grid: &SupportGrid) -> Result<PotentialSolution> {
    if !(a >= 0.0 && a.is_finite()) {
        return Err(Error::InvalidParameter(format!("coupling a = {a} must be finite and >= 0")));
    }
    if a == 0.0 {
        let n = grid.len();
        return Ok(PotentialSolution {
            a,
            w: vec![0.0; n],
            source: grid.v().to_vec(),
            residual: 0.0,
            integral: grid.v().iter().sum::<f64>() * grid.cell_volume(),
        });
    }
    let ms = grid.apply_m(grid.sqrt_v());
    let rhs: Vec<f64> = ms.iter().map(|v| -a * v).collect();
    let (u, residual) = conjugate_gradient(|x| grid.apply_shifted(a, x), &rhs, SOLVER_TOLERANCE)?;
    finish(grid, a, &u, residual)
}

/// Builds a solution from an externally computed `u = S w` (used by the
/// table builder).
pub(crate) fn solution_from_u(grid: &SupportGrid, a: f64, u: &[f64], residual: f64) -> Result<PotentialSolution> {
    finish(grid, a, u, residual)
}

/// v^a = dw^a/da, from `(id + a F) v = w / a`.
pub fn dw_da(a: f64, grid: &SupportGrid, w: &PotentialSolution) -> Result<Vec<f64>> {
    if !(a > 0.0) {
        return Err(Error::InvalidParameter(format!("dw/da needs a > 0, got {a}")));
    }
    if w.coupling() != a {
        return Err(Error::InvalidParameter("potential solved at a different coupling".into()));
    }
    let s = grid.sqrt_v();
    let rhs: Vec<f64> = s.iter().zip(w.values()).map(|(si, wi)| si * wi / a).collect();
    let (q, _) = conjugate_gradient(|x| grid.apply_shifted(a, x), &rhs, SOLVER_TOLERANCE)?;
    let sq: Vec<f64> = s.iter().zip(&q).map(|(si, qi)| si * qi).collect();
    let kq = grid.apply_kernel(&sq);
    Ok(w.values().iter().zip(&kq).map(|(wi, k)| wi / a - a * k).collect())
}

/// u^eps(x) = eps^{2-d} w(x / eps).
pub fn u_epsilon(w: &PotentialSolution, grid: &SupportGrid, x: &[f64], epsilon: f64) -> f64 {
    let y: Vec<f64> = x.iter().map(|v| v / epsilon).collect();
    epsilon.powi(2 - grid.dim() as i32) * w.eval(grid, &y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::InteractionProfile;

    fn grid(cells: usize) -> SupportGrid {
        SupportGrid::new(&InteractionProfile::bump(3, 1.0).unwrap(), cells).unwrap()
    }

    #[test]
    fn zero_coupling_is_zero() {
        let g = grid(12);
        let s = solve_w(0.0, &g).unwrap();
        assert!(s.values().iter().all(|&v| v == 0.0));
        assert!((s.integral() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn cg_matches_dense_lu() {
        let g = grid(8);
        let a = 3.0;
        let sol = solve_w(a, &g).unwrap();
        let n = g.len();
        let k = g.kernel_matrix();
        let gamma = gamma_nodes(&g);
        // (I + a K V) w = -a Gamma, solved densely.
        let mat = nalgebra::DMatrix::from_fn(n, n, |i, j| (i == j) as u8 as f64 + a * k[i][j] * g.v()[j]);
        let rhs = nalgebra::DVector::from_iterator(n, gamma.iter().map(|v| -a * v));
        let dense = mat.lu().solve(&rhs).unwrap();
        for i in 0..n {
            assert!((sol.values()[i] - dense[i]).abs() < 1e-10, "{i}");
        }
    }

    #[test]
    fn neumann_series_at_small_coupling() {
        let g = grid(12);
        let a = 0.1;
        let sol = solve_w(a, &g).unwrap();
        let gamma = gamma_nodes(&g);
        let f = |x: &[f64]| {
            let vx: Vec<f64> = x.iter().zip(g.v()).map(|(a, b)| a * b).collect();
            g.apply_kernel(&vx)
        };
        let fg = f(&gamma);
        let ffg = f(&fg);
        let scale = gamma.iter().fold(0.0f64, |m, v| m.max(a * v.abs()));
        for i in 0..g.len() {
            let oracle = -a * gamma[i] + a * a * fg[i] - a * a * a * ffg[i];
            assert!((sol.values()[i] - oracle).abs() <= 1e-3 * scale);
        }
    }

    #[test]
    fn derivative_bounds_and_zero_limit() {
        let g = grid(12);
        for a in [1e-6, 0.5, 5.0] {
            let sol = solve_w(a, &g).unwrap();
            let v = dw_da(a, &g, &sol).unwrap();
            for (vi, wi) in v.iter().zip(sol.values()) {
                assert!(*vi <= 1e-12 && wi / a <= vi + 1e-12);
            }
            if a < 1e-3 {
                let gamma = gamma_nodes(&g);
                for (vi, gi) in v.iter().zip(&gamma) {
                    assert!((vi + gi).abs() < 1e-4 * gi);
                }
            }
        }
        assert!(dw_da(0.0, &g, &solve_w(0.0, &g).unwrap()).is_err());
    }

    #[test]
    fn far_field_is_point_mass() {
        let g = grid(12);
        let x = [10.0, 0.0, 0.0];
        let gamma = gamma_potential(&g, &x);
        let point = g.newton_constant() / 10.0;
        assert!((gamma / point - 1.0).abs() < 0.01);
        assert!(gamma_potential(&g, &[0.0; 3]) > 0.0);
    }
}
