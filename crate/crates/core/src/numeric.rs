//! Grids, finite differences and quadrature.

use crate::error::{Error, Result};
use crate::linalg::{DenseOperator, C64};

/// Central-difference step for ∂/∂s of schedule entries of order one.
pub const FD_STEP: f64 = 1e-5;

pub const DEFAULT_GRID_POINTS: usize = 201;

/// `points` uniformly spaced values on [a, b], endpoints included.
pub fn uniform_grid(a: f64, b: f64, points: usize) -> Vec<f64> {
    match points {
        0 => Vec::new(),
        1 => vec![a],
        _ => {
            let h = (b - a) / (points - 1) as f64;
            (0..points)
                .map(|k| if k == points - 1 { b } else { a + h * k as f64 })
                .collect()
        }
    }
}

/// Uniform grid on the normalized-time interval [0, 1].
pub fn unit_grid(points: usize) -> Vec<f64> {
    uniform_grid(0.0, 1.0, points)
}

/// Result of a Richardson-checked central difference.
#[derive(Clone, Debug)]
pub struct Derivative {
    pub value: DenseOperator,
    /// max |D(h) − D(h/2)|, an estimate of the truncation error of D(h).
    pub richardson_gap: f64,
}

/// Central difference at step h and h/2, combined by Richardson
/// extrapolation (4·D(h/2) − D(h))/3.
pub fn operator_derivative<F>(f: F, s: f64, h: f64) -> Derivative
where
    F: Fn(f64) -> DenseOperator,
{
    let coarse = central(&f, s, h);
    let fine = central(&f, s, h / 2.0);
    let richardson_gap = coarse.max_abs_diff(&fine);
    let value = &fine.scale_real(4.0 / 3.0) - &coarse.scale_real(1.0 / 3.0);
    Derivative {
        value,
        richardson_gap,
    }
}

fn central<F>(f: &F, s: f64, h: f64) -> DenseOperator
where
    F: Fn(f64) -> DenseOperator,
{
    (&f(s + h) - &f(s - h)).scale(C64::new(0.5 / h, 0.0))
}

/// Scalar counterpart of [`operator_derivative`].
pub fn scalar_derivative<F>(f: F, s: f64, h: f64) -> f64
where
    F: Fn(f64) -> f64,
{
    let d = |h: f64| (f(s + h) - f(s - h)) / (2.0 * h);
    (4.0 * d(h / 2.0) - d(h)) / 3.0
}

/// Adaptive Simpson quadrature of `f` on [a, b] to absolute tolerance `tol`.
pub fn adaptive_simpson<F>(f: F, a: f64, b: f64, tol: f64) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    const MAX_DEPTH: u32 = 50;
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    let mut worst = 0.0f64;
    let value = simpson_step(&f, a, b, fa, fm, fb, whole, tol, MAX_DEPTH, &mut worst);
    if worst > tol {
        return Err(Error::QuadratureFailed { estimate: worst });
    }
    Ok(value)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step<F>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
    worst: &mut f64,
) -> f64
where
    F: Fn(f64) -> f64,
{
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    if depth == 0 {
        *worst = worst.max(delta.abs() / 15.0);
        return left + right + delta / 15.0;
    }
    simpson_step(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1, worst)
        + simpson_step(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1, worst)
}

/// ∫ over sampled values on a grid: composite Simpson for uniform grids
/// with an even number of intervals, trapezoid otherwise.
pub fn integrate_samples(grid: &[f64], values: &[f64]) -> f64 {
    assert_eq!(grid.len(), values.len());
    let intervals = grid.len().saturating_sub(1);
    if intervals == 0 {
        return 0.0;
    }
    let h = (grid[intervals] - grid[0]) / intervals as f64;
    let uniform = grid
        .windows(2)
        .all(|w| ((w[1] - w[0]) - h).abs() <= 1e-12 * h.abs().max(1.0));
    if uniform && intervals % 2 == 0 {
        let mut acc = values[0] + values[intervals];
        for (k, v) in values.iter().enumerate().take(intervals).skip(1) {
            acc += if k % 2 == 1 { 4.0 * v } else { 2.0 * v };
        }
        acc * h / 3.0
    } else {
        grid.windows(2)
            .zip(values.windows(2))
            .map(|(g, v)| 0.5 * (g[1] - g[0]) * (v[0] + v[1]))
            .sum()
    }
}

/// Wraps an angle into (−π, π].
pub fn wrap_angle(theta: f64) -> f64 {
    use std::f64::consts::{PI, TAU};
    let mut t = theta.rem_euclid(TAU);
    if t > PI {
        t -= TAU;
    }
    t
}

/// |a − b| on the circle.
pub fn angle_distance(a: f64, b: f64) -> f64 {
    wrap_angle(a - b).abs()
}
