//! Gauss–Weierstrass diffusion metric on `ℝⁿ`, the convolution baseline.
//!
//! `d_t(x, y)² = ∫ |W_t(x - z) - W_t(y - z)|² dz` depends only on `r = |x - y|`
//! through `ρ_t²(r) = 2 (8πt)^{-n/2} (1 - e^{-r²/(8t)})`. The closed form is
//! checked here against direct quadrature of the defining integral.

// negated comparisons are deliberate: NaN must fail every guard
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::error::{range_err, Error, Result};
use crate::quadrature::{integrate, QuadratureOptions};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianParams {
    pub t: f64,
    pub n: usize,
}

impl GaussianParams {
    pub fn new(t: f64, n: usize) -> Result<Self> {
        if !(t.is_finite() && t > 0.0) {
            return range_err("t", format!("time must be positive, got {t}"));
        }
        if n == 0 {
            return range_err("n", "dimension must be at least 1");
        }
        Ok(GaussianParams { t, n })
    }
}

/// `W_t(x) = (4πt)^{-n/2} e^{-|x|²/(4t)}`.
pub fn weierstrass(x: &[f64], p: &GaussianParams) -> f64 {
    debug_assert_eq!(x.len(), p.n);
    let r2: f64 = x.iter().map(|v| v * v).sum();
    (4.0 * PI * p.t).powf(-(p.n as f64) / 2.0) * (-r2 / (4.0 * p.t)).exp()
}

/// `ρ_t²(r) = 2 (8πt)^{-n/2} (1 - e^{-r²/(8t)})`.
pub fn rho_sq_closed(r: f64, p: &GaussianParams) -> f64 {
    2.0 * (8.0 * PI * p.t).powf(-(p.n as f64) / 2.0) * -(-r * r / (8.0 * p.t)).exp_m1()
}

/// `dρ_t²/dr = 4 (8πt)^{-n/2} e^{-r²/(8t)} r / (8t)`.
pub fn rho_sq_derivative(r: f64, p: &GaussianParams) -> f64 {
    4.0 * (8.0 * PI * p.t).powf(-(p.n as f64) / 2.0) * (-r * r / (8.0 * p.t)).exp() * r / (8.0 * p.t)
}

/// `sup_r ρ_t(r) = sqrt(2 (8πt)^{-n/2})`.
pub fn rho_sup(p: &GaussianParams) -> f64 {
    (2.0 * (8.0 * PI * p.t).powf(-(p.n as f64) / 2.0)).sqrt()
}

/// Solves `ρ_t(r) = value` by bisection on the closed form.
pub fn rho_inverse(value: f64, p: &GaussianParams) -> Result<f64> {
    if !(value >= 0.0 && value < rho_sup(p)) {
        return range_err("value", format!("must lie in [0, {})", rho_sup(p)));
    }
    let target = value * value;
    let mut hi = 1.0;
    while rho_sq_closed(hi, p) < target {
        hi *= 2.0;
    }
    let mut lo = 0.0;
    while hi - lo > 1e-12 * hi.max(1.0) {
        let mid = 0.5 * (lo + hi);
        if rho_sq_closed(mid, p) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// The radius at time `t2` whose ball equals the radius-`r1` ball at time `t1`.
pub fn ball_radius_transfer(r1: f64, t1: f64, t2: f64, n: usize) -> Result<f64> {
    let p1 = GaussianParams::new(t1, n)?;
    let p2 = GaussianParams::new(t2, n)?;
    let euclid = rho_inverse(r1, &p1)?;
    Ok(rho_sq_closed(euclid, &p2).sqrt())
}

/// Analytic bound on the part of the integral discarded outside the box
/// `Π [lo_i - R, hi_i + R]`, using `|a - b|² <= 2a² + 2b²`.
fn gaussian_tail_bound(radius: f64, p: &GaussianParams) -> f64 {
    let one_dim = (4.0 * PI * p.t).recip() * (2.0 * PI * p.t).sqrt();
    let outside = one_dim * erfc(radius / (2.0 * p.t).sqrt());
    let per_point = p.n as f64 * outside * one_dim.powi(p.n as i32 - 1);
    4.0 * per_point
}

/// `d_t(x, y)²` by adaptive quadrature of the defining integral (`n ∈ {1, 2}`).
pub fn distance_sq_quadrature(x: &[f64], y: &[f64], p: &GaussianParams, quad_tol: f64) -> Result<f64> {
    if x.len() != p.n || y.len() != p.n {
        return range_err("point", format!("expected {} coordinates", p.n));
    }
    if !(quad_tol > 0.0) {
        return range_err("quad_tol", "must be positive");
    }
    let mut radius = 12.0 * (2.0 * p.t).sqrt();
    while gaussian_tail_bound(radius, p) > 0.1 * quad_tol {
        radius *= 1.25;
    }
    let lo: Vec<f64> = x.iter().zip(y).map(|(a, b)| a.min(*b) - radius).collect();
    let hi: Vec<f64> = x.iter().zip(y).map(|(a, b)| a.max(*b) + radius).collect();
    let diff_sq = |z: &[f64]| {
        let dx: Vec<f64> = x.iter().zip(z).map(|(a, b)| a - b).collect();
        let dy: Vec<f64> = y.iter().zip(z).map(|(a, b)| a - b).collect();
        let d = weierstrass(&dx, p) - weierstrass(&dy, p);
        d * d
    };
    match p.n {
        1 => {
            let opts = QuadratureOptions::absolute(0.5 * quad_tol);
            Ok(integrate(|z| diff_sq(&[z]), lo[0], hi[0], opts)?.value)
        }
        2 => {
            let width = hi[0] - lo[0];
            let inner_opts = QuadratureOptions::absolute(0.1 * quad_tol / (hi[1] - lo[1]));
            let outer_opts = QuadratureOptions::absolute(0.4 * quad_tol);
            let failure = std::cell::Cell::new(None);
            let outer = integrate(
                |z2| match integrate(|z1| diff_sq(&[z1, z2]), lo[0], lo[0] + width, inner_opts) {
                    Ok(r) => r.value,
                    Err(e) => {
                        failure.set(Some(e));
                        0.0
                    }
                },
                lo[1],
                hi[1],
                outer_opts,
            )?;
            match failure.take() {
                Some(e) => Err(e),
                None => Ok(outer.value),
            }
        }
        n => Err(Error::UnsupportedDimension(n)),
    }
}

/// `ρ_t²(r) = d_t(r e₁, 0)²` by quadrature.
pub fn rho_sq_quadrature(r: f64, p: &GaussianParams, quad_tol: f64) -> Result<f64> {
    if !(r >= 0.0) {
        return range_err("r", format!("must be nonnegative, got {r}"));
    }
    let mut x = vec![0.0; p.n];
    x[0] = r;
    distance_sq_quadrature(&x, &vec![0.0; p.n], p, quad_tol)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioLimitReport {
    /// `(r, ρ²_{t1}(r) / ρ²_{t2}(r))` along the grid.
    pub values: Vec<(f64, f64)>,
    /// Richardson extrapolation in `r²` from the two smallest radii.
    pub limit: f64,
    /// `(t2/t1)^{n/2 + 1}`.
    pub expected: f64,
    /// Relative error of the ratio at the smallest radius.
    pub relative_error: f64,
}

/// Relative accuracy expected of the squared ratio at the smallest radius.
pub const RATIO_LIMIT_TOL: f64 = 1e-3;

/// Evaluates `ρ²_{t1}(r) / ρ²_{t2}(r)` on a decreasing grid and extrapolates `r → 0`.
pub fn ratio_limit_check(t1: f64, t2: f64, n: usize, r_grid: &[f64]) -> Result<RatioLimitReport> {
    let p1 = GaussianParams::new(t1, n)?;
    let p2 = GaussianParams::new(t2, n)?;
    if r_grid.len() < 2 {
        return range_err("r_grid", "needs at least two radii");
    }
    if r_grid.windows(2).any(|w| !(w[1] < w[0])) || r_grid.iter().any(|r| !(*r > 0.0)) {
        return range_err("r_grid", "radii must be positive and strictly decreasing");
    }
    let values: Vec<(f64, f64)> = r_grid
        .iter()
        .map(|&r| (r, rho_sq_closed(r, &p1) / rho_sq_closed(r, &p2)))
        .collect();
    let steps: Vec<f64> = values.windows(2).map(|w| (w[1].1 - w[0].1).abs()).collect();
    let noise = 1e-13 * values[0].1.abs();
    if steps.windows(2).any(|w| w[1] > w[0] + noise) {
        return Err(Error::NonConvergence(format!(
            "ratio increments do not shrink along the grid: {steps:?}"
        )));
    }
    let (ra, va) = values[values.len() - 2];
    let (rb, vb) = values[values.len() - 1];
    let limit = (vb * ra * ra - va * rb * rb) / (ra * ra - rb * rb);
    let expected = (t2 / t1).powf(n as f64 / 2.0 + 1.0);
    Ok(RatioLimitReport {
        relative_error: ((vb - expected) / expected).abs(),
        values,
        limit,
        expected,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InvarianceReport {
    pub trials: usize,
    pub max_translation_gap: f64,
    pub max_rotation_gap: f64,
    pub max_closed_form_gap: f64,
    pub violations: Vec<String>,
}

pub const INVARIANCE_TOL: f64 = 1e-6;

/// Random translations (and rotations for `n = 2`) leave `d_t` unchanged.
pub fn translation_rotation_invariance_check(p: &GaussianParams, trials: usize, seed: u64) -> Result<InvarianceReport> {
    if !(1..=2).contains(&p.n) {
        return Err(Error::UnsupportedDimension(p.n));
    }
    let quad_tol = 1e-10;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = InvarianceReport {
        trials,
        max_translation_gap: 0.0,
        max_rotation_gap: 0.0,
        max_closed_form_gap: 0.0,
        violations: Vec::new(),
    };
    let d = |a: &[f64], b: &[f64]| distance_sq_quadrature(a, b, p, quad_tol).map(|v| v.max(0.0).sqrt());
    for trial in 0..trials {
        let mut draw = || -> Vec<f64> { (0..p.n).map(|_| rng.gen_range(-2.0..2.0)).collect() };
        let x = draw();
        let y = draw();
        let v: Vec<f64> = draw().iter().map(|c| 1.5 * c).collect();
        let base = d(&x, &y)?;
        let xs: Vec<f64> = x.iter().zip(&v).map(|(a, b)| a + b).collect();
        let ys: Vec<f64> = y.iter().zip(&v).map(|(a, b)| a + b).collect();
        let shifted = d(&xs, &ys)?;
        let gap = (base - shifted).abs();
        report.max_translation_gap = report.max_translation_gap.max(gap);
        if gap > INVARIANCE_TOL {
            report
                .violations
                .push(format!("trial {trial}: translation gap {gap:e}"));
        }
        let r: f64 = x.iter().zip(&y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
        let closed_gap = (base - rho_sq_closed(r, p).sqrt()).abs();
        report.max_closed_form_gap = report.max_closed_form_gap.max(closed_gap);
        if closed_gap > INVARIANCE_TOL {
            report
                .violations
                .push(format!("trial {trial}: closed-form gap {closed_gap:e}"));
        }
        if p.n == 2 {
            let theta = rng.gen_range(0.0..2.0 * PI);
            let rotate = |u: &[f64]| {
                vec![
                    theta.cos() * u[0] - theta.sin() * u[1],
                    theta.sin() * u[0] + theta.cos() * u[1],
                ]
            };
            let rotated = d(&rotate(&x), &rotate(&y))?;
            let gap = (base - rotated).abs();
            report.max_rotation_gap = report.max_rotation_gap.max(gap);
            if gap > INVARIANCE_TOL {
                report.violations.push(format!("trial {trial}: rotation gap {gap:e}"));
            }
        }
    }
    Ok(report)
}
