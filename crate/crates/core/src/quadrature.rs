//! Quadrature helpers shared by the kernel solver, the hypothesis checks and
//! the particle diagnostics.

use std::f64::consts::PI;
use std::num::NonZeroUsize;
use std::sync::OnceLock;

use gauss_quad::legendre::GaussLegendre;

const ADAPTIVE_ORDER: usize = 15;
const ADAPTIVE_MAX_DEPTH: u32 = 48;

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(order: usize) -> Vec<(f64, f64)> {
    let order = NonZeroUsize::new(order.max(1)).expect("order >= 1");
    GaussLegendre::new(order).as_node_weight_pairs().to_vec()
}

fn adaptive_rule() -> &'static [(f64, f64)] {
    static RULE: OnceLock<Vec<(f64, f64)>> = OnceLock::new();
    RULE.get_or_init(|| gauss_legendre(ADAPTIVE_ORDER))
}

fn fixed(rule: &[(f64, f64)], f: &mut impl FnMut(f64) -> f64, a: f64, b: f64) -> f64 {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (b + a);
    rule.iter().map(|&(x, w)| w * f(mid + half * x)).sum::<f64>() * half
}

/// Adaptive bisection quadrature of `f` over `[a, b]`.
///
/// Each panel is accepted once a 15-point Gauss-Legendre estimate agrees with
/// the sum over its two halves to `max(abs_tol, rel_tol * |I|)`.
pub fn integrate(mut f: impl FnMut(f64) -> f64, a: f64, b: f64, rel_tol: f64, abs_tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let rule = adaptive_rule();
    let whole = fixed(rule, &mut f, a, b);
    recurse(rule, &mut f, a, b, whole, rel_tol, abs_tol, 0)
}

#[allow(clippy::too_many_arguments)]
fn recurse(
    rule: &[(f64, f64)],
    f: &mut impl FnMut(f64) -> f64,
    a: f64,
    b: f64,
    whole: f64,
    rel_tol: f64,
    abs_tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let left = fixed(rule, f, a, m);
    let right = fixed(rule, f, m, b);
    let refined = left + right;
    if (refined - whole).abs() <= abs_tol.max(rel_tol * refined.abs()) || depth >= ADAPTIVE_MAX_DEPTH {
        return refined;
    }
    recurse(rule, f, a, m, left, rel_tol, 0.5 * abs_tol, depth + 1)
        + recurse(rule, f, m, b, right, rel_tol, 0.5 * abs_tol, depth + 1)
}

/// Surface area of the unit sphere in R^d, `2 pi^{d/2} / Gamma(d/2)`.
pub fn unit_sphere_area(dim: usize) -> f64 {
    let half = dim as f64 / 2.0;
    2.0 * PI.powf(half) / statrs::function::gamma::gamma(half)
}

/// Newtonian constant `c0(d) = 1 / ((d - 2) omega_d)`, so that
/// `-c0 |x|^{2-d}` is the fundamental solution of the Laplacian.
pub fn newton_constant(dim: usize) -> f64 {
    assert!(dim >= 3, "Newtonian constant requires d >= 3");
    1.0 / ((dim as f64 - 2.0) * unit_sphere_area(dim))
}

/// Unnormalised C-infinity bump profile `exp(-1/(1-r^2))` on `r < 1`.
pub fn bump_profile(r2: f64) -> f64 {
    if r2 >= 1.0 {
        0.0
    } else {
        (-1.0 / (1.0 - r2)).exp()
    }
}

/// Integral of `bump_profile(|x|^2)` over the unit ball in R^d.
pub fn bump_mass(dim: usize) -> f64 {
    let radial = integrate(
        |r| r.powi(dim as i32 - 1) * bump_profile(r * r),
        0.0,
        1.0,
        1e-13,
        1e-16,
    );
    unit_sphere_area(dim) * radial
}

/// Integral of `|y - x|^p` over the axis-aligned cube with the given centre
/// and side, for `p > -d`.
///
/// Uses the identity `div_y((y - x)|y - x|^p) = (d + p)|y - x|^p`, which
/// turns the (possibly singular) volume integral into smooth face integrals
/// weighted by the signed distance from `x` to each face plane.
pub fn box_power_integral(x: &[f64], center: &[f64], side: f64, p: f64, order: usize) -> f64 {
    let dim = x.len();
    assert_eq!(dim, center.len());
    assert!(dim as f64 + p > 0.0, "box_power_integral requires p > -d");
    let rule = gauss_legendre(order);
    let half = 0.5 * side;
    let mut total = 0.0;
    let mut q = vec![0.0; dim];
    for axis in 0..dim {
        for sign in [-1.0, 1.0] {
            let h = sign * (center[axis] - x[axis]) + half;
            if h.abs() < 1e-300 {
                continue;
            }
            // Composite panels when x sits close to the face plane.
            let pieces = if h.abs() < 0.25 * side { 4 } else { 1 };
            let face = face_integral(x, center, side, axis, center[axis] + sign * half, p, &rule, pieces, &mut q);
            total += h * face;
        }
    }
    total / (dim as f64 + p)
}

#[allow(clippy::too_many_arguments)]
fn face_integral(
    x: &[f64],
    center: &[f64],
    side: f64,
    axis: usize,
    plane: f64,
    p: f64,
    rule: &[(f64, f64)],
    pieces: usize,
    q: &mut [f64],
) -> f64 {
    let dim = x.len();
    let free = dim - 1;
    let panel = side / pieces as f64;
    let per_axis = pieces * rule.len();
    let count = per_axis.pow(free as u32);
    let mut total = 0.0;
    q[axis] = plane;
    for flat in 0..count {
        let mut rem = flat;
        let mut weight = 1.0;
        let mut k = 0;
        for j in 0..dim {
            if j == axis {
                continue;
            }
            let idx = rem % per_axis;
            rem /= per_axis;
            let (piece, node) = (idx / rule.len(), idx % rule.len());
            let (t, w) = rule[node];
            let lo = center[j] - 0.5 * side + piece as f64 * panel;
            q[j] = lo + 0.5 * panel * (t + 1.0);
            weight *= 0.5 * panel * w;
            k += 1;
        }
        debug_assert_eq!(k, free);
        let r2: f64 = q.iter().zip(x).map(|(a, b)| (a - b) * (a - b)).sum();
        total += weight * r2.powf(0.5 * p);
    }
    total
}
