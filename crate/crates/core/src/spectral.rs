//! Haar heat kernel, the profile functions `η_t` and `ψ_t`, and the fractional
//! dyadic diffusion distance computed both in closed form and as a Haar
//! spectral sum.
//!
//! Every infinite series is truncated with a certified tail bound: summation
//! stops only once a geometric envelope of the remaining terms falls below
//! the tolerance of the active [`TruncationPolicy`].

use std::f64::consts::LN_2;

use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use crate::dyadic::{haar_eval, smallest_common_interval, DyadicInterval, DyadicPoint, DEFAULT_MAX_LEVEL};
use crate::error::{range_err, Error, Result};
use crate::numeric::{pow2, CompensatedSum};
use crate::quadrature::{integrate_to_infinity, QuadratureOptions};

/// Tail bounds are also held below this fraction of the running sum.
const RELATIVE_TAIL: f64 = f64::EPSILON / 4.0;

/// Order `s > 0` and time `t > 0` of the fractional diffusion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiffusionParams {
    pub s: f64,
    pub t: f64,
}

impl DiffusionParams {
    pub fn new(s: f64, t: f64) -> Result<Self> {
        if !(s.is_finite() && s > 0.0) {
            return range_err("s", format!("order must be positive and finite, got {s}"));
        }
        if !(t.is_finite() && t > 0.0) {
            return range_err("t", format!("time must be positive and finite, got {t}"));
        }
        Ok(DiffusionParams { s, t })
    }

    pub fn with_time(self, t: f64) -> Result<Self> {
        DiffusionParams::new(self.s, t)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TruncationPolicy {
    /// Absolute bound on every discarded series tail.
    pub tail_tol: f64,
    pub max_terms: usize,
    /// Finest number of levels enumerated below a starting interval.
    pub max_depth: usize,
}

impl Default for TruncationPolicy {
    fn default() -> Self {
        TruncationPolicy {
            tail_tol: 1e-12,
            max_terms: 100_000,
            max_depth: 200,
        }
    }
}

impl TruncationPolicy {
    pub fn new(tail_tol: f64, max_terms: usize, max_depth: usize) -> Result<Self> {
        if !(tail_tol.is_finite() && tail_tol > 0.0) {
            return range_err("tail_tol", format!("must be positive, got {tail_tol}"));
        }
        if max_terms == 0 || max_depth == 0 {
            return range_err("caps", "max_terms and max_depth must be at least 1");
        }
        Ok(TruncationPolicy {
            tail_tol,
            max_terms,
            max_depth,
        })
    }
}

/// A diffusion ball: either a dyadic interval or all of `[0, ∞)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Ball {
    Interval(DyadicInterval),
    WholeSpace,
}

impl Ball {
    pub fn contains(&self, y: &DyadicPoint) -> bool {
        match self {
            Ball::Interval(i) => i.contains(y),
            Ball::WholeSpace => true,
        }
    }

    pub fn interval(&self) -> Option<&DyadicInterval> {
        match self {
            Ball::Interval(i) => Some(i),
            Ball::WholeSpace => None,
        }
    }

    /// Set inclusion.
    pub fn is_subset_of(&self, other: &Ball) -> bool {
        match (self, other) {
            (_, Ball::WholeSpace) => true,
            (Ball::WholeSpace, Ball::Interval(_)) => false,
            (Ball::Interval(a), Ball::Interval(b)) => b.contains_interval(a),
        }
    }
}

/// `e^{ln_scale} η_t(σ)` with `σ = 2^{log2_sigma}`; the tail bound applies to the scaled sum.
///
/// Terms for `ℓ >= 1` have ratio `2 exp(-2tσ 2^{sℓ}(2^s - 1))`, decreasing in `ℓ`,
/// so once it drops to 1/2 the rest is dominated by a geometric series.
fn scaled_eta(params: &DiffusionParams, log2_sigma: f64, ln_scale: f64, trunc: &TruncationPolicy) -> Result<f64> {
    let two_t = 2.0 * params.t;
    let growth = params.s.exp2() - 1.0;
    let mut acc = CompensatedSum::new();
    acc.add((ln_scale + LN_2 - two_t * log2_sigma.exp2()).exp());
    for l in 1..=trunc.max_terms {
        let l = l as f64;
        let x = (log2_sigma + params.s * l).exp2();
        let term = (ln_scale + l * LN_2 - two_t * x).exp();
        acc.add(term);
        let q = 2.0 * (-two_t * x * growth).exp();
        if q <= 0.5 {
            let tail = term * q / (1.0 - q);
            if tail <= 0.5 * trunc.tail_tol && tail <= RELATIVE_TAIL * acc.value() {
                return Ok(acc.value());
            }
        }
    }
    Err(Error::CapExceeded {
        what: "eta series",
        limit: trunc.max_terms,
    })
}

/// `η_t(σ) = 2e^{-2tσ} + Σ_{ℓ>=1} 2^ℓ e^{-2t 2^{sℓ} σ}`.
pub fn eta(params: &DiffusionParams, sigma: f64, trunc: &TruncationPolicy) -> Result<f64> {
    if !(sigma.is_finite() && sigma > 0.0) {
        return range_err("sigma", format!("must be positive and finite, got {sigma}"));
    }
    scaled_eta(params, sigma.log2(), 0.0, trunc)
}

/// `ln η_t(σ)`, for arguments where `η_t(σ)` itself underflows.
pub fn eta_ln(params: &DiffusionParams, sigma: f64, trunc: &TruncationPolicy) -> Result<f64> {
    if !(sigma.is_finite() && sigma > 0.0) {
        return range_err("sigma", format!("must be positive and finite, got {sigma}"));
    }
    eta_ln_log2(params, sigma.log2(), trunc)
}

fn eta_ln_log2(params: &DiffusionParams, log2_sigma: f64, trunc: &TruncationPolicy) -> Result<f64> {
    // factor out the largest term; the exponents are concave in ℓ
    let exponent = |l: f64| l * LN_2 - 2.0 * params.t * (log2_sigma + params.s * l).exp2();
    let mut peak = LN_2 - 2.0 * params.t * log2_sigma.exp2();
    for l in 1..=trunc.max_terms {
        let e = exponent(l as f64);
        if e < peak {
            break;
        }
        peak = e;
    }
    scaled_eta(params, log2_sigma, -peak, trunc).map(|v| v.ln() + peak)
}

/// `ψ_t(λ) = sqrt((2/λ) η_t(λ^{-s}))` with `ψ_t(0) = 0`.
///
/// Only powers of two occur as dyadic distances; other arguments are off-lattice.
pub fn psi(params: &DiffusionParams, lambda: f64, trunc: &TruncationPolicy) -> Result<f64> {
    if !(lambda.is_finite() && lambda >= 0.0) {
        return range_err("lambda", format!("must be nonnegative and finite, got {lambda}"));
    }
    if lambda == 0.0 {
        return Ok(0.0);
    }
    let log2_lambda = lambda.log2();
    scaled_eta(params, -params.s * log2_lambda, LN_2 - lambda.ln(), trunc).map(f64::sqrt)
}

/// `ψ_t(2^i)`, evaluated without forming `2^i` so any integer `i` is safe.
pub fn psi_pow2(params: &DiffusionParams, i: i64, trunc: &TruncationPolicy) -> Result<f64> {
    psi_sq_pow2(params, i, trunc).map(f64::sqrt)
}

fn psi_sq_pow2(params: &DiffusionParams, i: i64, trunc: &TruncationPolicy) -> Result<f64> {
    scaled_eta(params, -params.s * i as f64, (1 - i) as f64 * LN_2, trunc)
}

/// `ln ψ_t(2^i)²`, finite where `ψ_t(2^i)` underflows.
pub fn psi_sq_ln_pow2(params: &DiffusionParams, i: i64, trunc: &TruncationPolicy) -> Result<f64> {
    eta_ln_log2(params, -params.s * i as f64, trunc).map(|v| v + (1 - i) as f64 * LN_2)
}

/// `ψ_t(+∞)² - ψ_t(2^i)²`, resolved where `ψ_t(2^i)` agrees with `ψ_t(+∞)` to
/// every bit.
///
/// With `e_k = e^{-2t 2^{sk}}` the gap is `2^{1-i} Σ_{m>=1} 2^{-m} (e_{-i-m} - e_{-i})`;
/// each difference is formed with `expm1` and the tail after `M` terms is at
/// most `2^{1-i-M} (1 - e_{-i})`.
pub fn psi_deficit_pow2(params: &DiffusionParams, i: i64, trunc: &TruncationPolicy) -> Result<f64> {
    let (s, t) = (params.s, params.t);
    let b = 2.0 * t * (-s * i as f64).exp2();
    let one_minus_top = -(-b).exp_m1();
    let scale = pow2(1 - i);
    let mut acc = CompensatedSum::new();
    for m in 1..=trunc.max_terms as i64 {
        let a = 2.0 * t * (-s * (i + m) as f64).exp2();
        let gap = b * -(-s * m as f64 * LN_2).exp_m1();
        acc.add(pow2(-m) * (-a).exp() * -(-gap).exp_m1());
        let tail = pow2(-m) * one_minus_top;
        if scale * tail <= 0.5 * trunc.tail_tol && tail <= RELATIVE_TAIL * acc.value() {
            return Ok(scale * acc.value());
        }
    }
    Err(Error::CapExceeded {
        what: "profile deficit series",
        limit: trunc.max_terms,
    })
}

/// `Σ_{k∈ℤ} 2^k e^{-c 2^{ks}}`, both tails certified.
///
/// The left tail is bounded by `Σ_{k<K} 2^k = 2^K`, the right tail by the
/// same ratio argument as in [`eta`].
pub(crate) fn bilateral_sum(s: f64, c: f64, trunc: &TruncationPolicy) -> Result<f64> {
    let growth = s.exp2() - 1.0;
    let mut acc = CompensatedSum::new();
    let mut right_done = false;
    for k in 0..trunc.max_terms {
        let k = k as f64;
        let x = (s * k).exp2();
        let term = (k * LN_2 - c * x).exp();
        acc.add(term);
        let q = 2.0 * (-c * x * growth).exp();
        if q <= 0.5 {
            let tail = term * q / (1.0 - q);
            if tail <= 0.25 * trunc.tail_tol && tail <= RELATIVE_TAIL * acc.value() {
                right_done = true;
                break;
            }
        }
    }
    if !right_done {
        return Err(Error::CapExceeded {
            what: "bilateral series (right tail)",
            limit: trunc.max_terms,
        });
    }
    for k in 1..=trunc.max_terms as i64 {
        let kf = -(k as f64);
        acc.add((kf * LN_2 - c * (s * kf).exp2()).exp());
        let tail = pow2(-k);
        if tail <= 0.25 * trunc.tail_tol && tail <= RELATIVE_TAIL * acc.value() {
            return Ok(acc.value());
        }
    }
    Err(Error::CapExceeded {
        what: "bilateral series (left tail)",
        limit: trunc.max_terms,
    })
}

/// `ψ_t(+∞) = sqrt(2 Σ_{k∈ℤ} 2^k e^{-2t 2^{ks}})`.
pub fn psi_infinity(params: &DiffusionParams, trunc: &TruncationPolicy) -> Result<f64> {
    let halved = TruncationPolicy {
        tail_tol: 0.5 * trunc.tail_tol,
        ..*trunc
    };
    bilateral_sum(params.s, 2.0 * params.t, &halved).map(|v| (2.0 * v).sqrt())
}

/// Both evaluations of `∫_0^∞ e^{-2x^s} dx` behind `c_t(s)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CtsReport {
    /// `c_t(s)` built from the quadrature value.
    pub value: f64,
    pub integral_quadrature: f64,
    pub integral_gamma: f64,
    pub relative_discrepancy: f64,
}

/// Maximum relative gap tolerated between quadrature and `Γ(1 + 1/s) 2^{-1/s}`.
pub const CTS_CROSS_CHECK_TOL: f64 = 1e-8;

/// `c_t(s) = t^{-1/(2s)} sqrt(∫_0^∞ e^{-2x^s} dx)`.
pub fn c_t_s(params: &DiffusionParams, trunc: &TruncationPolicy) -> Result<f64> {
    c_t_s_report(params, trunc).map(|r| r.value)
}

pub fn c_t_s_report(params: &DiffusionParams, trunc: &TruncationPolicy) -> Result<CtsReport> {
    let s = params.s;
    let opts = QuadratureOptions {
        abs_tol: trunc.tail_tol,
        rel_tol: trunc.tail_tol,
        max_subdivisions: 20_000,
    };
    let integrand = |x: f64| (-2.0 * x.powf(s)).exp();
    // split at 1 so the cusp at the origin and the stretched tail are refined separately
    let head = crate::quadrature::integrate(integrand, 0.0, 1.0, opts)?;
    let tail = integrate_to_infinity(integrand, 1.0, opts)?;
    let integral_quadrature = head.value + tail.value;
    let integral_gamma = gamma(1.0 + 1.0 / s) * (-1.0 / s).exp2();
    let relative_discrepancy = ((integral_quadrature - integral_gamma) / integral_gamma).abs();
    if relative_discrepancy > CTS_CROSS_CHECK_TOL {
        return Err(Error::QuadratureMismatch(relative_discrepancy));
    }
    Ok(CtsReport {
        value: params.t.powf(-0.5 / s) * integral_quadrature.sqrt(),
        integral_quadrature,
        integral_gamma,
        relative_discrepancy,
    })
}

/// `K_s(x, y; t) = Σ_h e^{-t|I(h)|^{-s}} h(x) h(y)`.
///
/// For `x != y` only the ancestors of `I(x, y)` contribute and their terms are
/// bounded by `|I|^{-1}`, halving at each step. For `x == y` the sum runs over
/// every interval containing `x`, coarse terms bounded by `|I|^{-1}` and fine
/// terms decaying super-exponentially.
pub fn kernel_k(x: &DyadicPoint, y: &DyadicPoint, params: &DiffusionParams, trunc: &TruncationPolicy) -> Result<f64> {
    let multiplier = |i: &DyadicInterval| (-params.t * (params.s * i.level() as f64).exp2()).exp();
    match smallest_common_interval(x, y) {
        Some(base) => {
            let mut acc = CompensatedSum::new();
            let mut interval = base;
            for _ in 0..trunc.max_terms {
                acc.add(multiplier(&interval) * haar_eval(&interval, x) * haar_eval(&interval, y));
                // remaining ancestors contribute at most Σ_{m>=1} 1/(2^m |I|) = 1/|I|
                if pow2(interval.level() - 1) <= 0.5 * trunc.tail_tol {
                    return Ok(acc.value());
                }
                interval = interval.parent();
            }
            Err(Error::CapExceeded {
                what: "kernel ancestor chain",
                limit: trunc.max_terms,
            })
        }
        None => {
            let mut acc = CompensatedSum::new();
            let mut up = DyadicInterval::containing(x, 0);
            let mut certified = false;
            for _ in 0..trunc.max_terms {
                let h = haar_eval(&up, x);
                acc.add(multiplier(&up) * h * h);
                if pow2(up.level() - 1) <= 0.25 * trunc.tail_tol {
                    certified = true;
                    break;
                }
                up = up.parent();
            }
            if !certified {
                return Err(Error::CapExceeded {
                    what: "kernel ancestor chain",
                    limit: trunc.max_terms,
                });
            }
            let growth = params.s.exp2() - 1.0;
            for depth in 1..=trunc.max_depth as i64 {
                let down = DyadicInterval::containing(x, depth);
                let h = haar_eval(&down, x);
                let term = multiplier(&down) * h * h;
                acc.add(term);
                let q = 2.0 * (-params.t * (params.s * depth as f64).exp2() * growth).exp();
                if q <= 0.5 && term * q / (1.0 - q) <= 0.25 * trunc.tail_tol {
                    return Ok(acc.value());
                }
            }
            Err(Error::CapExceeded {
                what: "kernel descendant chain",
                limit: trunc.max_depth,
            })
        }
    }
}

/// `d_t(x, y) = ψ_t(δ(x, y))`.
pub fn distance_closed(
    x: &DyadicPoint,
    y: &DyadicPoint,
    params: &DiffusionParams,
    trunc: &TruncationPolicy,
) -> Result<f64> {
    match crate::dyadic::dyadic_distance_log2(x, y) {
        None => Ok(0.0),
        Some(i) => psi_pow2(params, i, trunc),
    }
}

/// `d_t(x, y)` from the Haar expansion `Σ_h e^{-2t|I(h)|^{-s}} |h(x) - h(y)|^2`.
///
/// Three groups contribute: the wavelet on `I(x, y)` itself, and the two chains
/// of strict descendants containing exactly one of the points. Wavelets above
/// `I(x, y)` take equal values at both points and are skipped.
pub fn distance_spectral(
    x: &DyadicPoint,
    y: &DyadicPoint,
    params: &DiffusionParams,
    trunc: &TruncationPolicy,
) -> Result<f64> {
    let base = match smallest_common_interval(x, y) {
        None => return Ok(0.0),
        Some(i) => i,
    };
    let weight = |i: &DyadicInterval| (-2.0 * params.t * (params.s * i.level() as f64).exp2()).exp();
    let mut acc = CompensatedSum::new();
    let diff = haar_eval(&base, x) - haar_eval(&base, y);
    acc.add(weight(&base) * diff * diff);

    let growth = params.s.exp2() - 1.0;
    // each chain's tail gets a quarter of the budget
    let budget = 0.25 * trunc.tail_tol;
    let mut certified = [false, false];
    for (side, (near, far)) in [(x, y), (y, x)].into_iter().enumerate() {
        for depth in 1..=trunc.max_depth as i64 {
            let interval = DyadicInterval::containing(near, base.level() + depth);
            let diff = haar_eval(&interval, near) - haar_eval(&interval, far);
            let term = weight(&interval) * diff * diff;
            acc.add(term);
            // envelope e^{-2t|I|^{-s}}/|I| has ratio 2 exp(-2t|I|^{-s}(2^s - 1)) to the next level
            let q = 2.0 * (-2.0 * params.t * (params.s * interval.level() as f64).exp2() * growth).exp();
            if q <= 0.5 {
                let tail = term * q / (1.0 - q);
                if tail <= budget && tail <= RELATIVE_TAIL * acc.value() {
                    certified[side] = true;
                    break;
                }
            }
        }
    }
    if certified.iter().all(|&c| c) {
        Ok(acc.value().sqrt())
    } else {
        Err(Error::CapExceeded {
            what: "spectral descendant chain",
            limit: trunc.max_depth,
        })
    }
}

/// `B_t(x, r) = {y : d_t(x, y) < r}`.
///
/// The ball is the largest dyadic interval `I ∋ x` with `ψ_t(|I|) < r`, or the
/// whole half line once `r >= ψ_t(+∞)`.
pub fn ball(x: &DyadicPoint, r: f64, params: &DiffusionParams, trunc: &TruncationPolicy) -> Result<Ball> {
    if !(r.is_finite() && r > 0.0) {
        if r == f64::INFINITY {
            return Ok(Ball::WholeSpace);
        }
        return range_err("r", format!("radius must be positive, got {r}"));
    }
    if r >= psi_infinity(params, trunc)? {
        return Ok(Ball::WholeSpace);
    }
    let below = |i: i64| psi_pow2(params, i, trunc).map(|v| v < r);
    // i is log2 of the candidate length
    let mut i = 0i64;
    if below(i)? {
        while below(i + 1)? {
            i += 1;
            if i >= DEFAULT_MAX_LEVEL {
                // r sits within rounding of ψ_∞
                return Ok(Ball::WholeSpace);
            }
        }
    } else {
        let mut steps = 0usize;
        while !below(i)? {
            i -= 1;
            steps += 1;
            if steps > trunc.max_depth {
                return Err(Error::CapExceeded {
                    what: "ball descent",
                    limit: trunc.max_depth,
                });
            }
        }
    }
    Ok(Ball::Interval(DyadicInterval::containing(x, -i)))
}

/// A radius `r2` with `B_{t2}(x, r2) = B_{t1}(x, r1)`: the midpoint of the gap
/// `(ψ_{t2}(|I|), ψ_{t2}(2|I|)]` for the ball `I` at time `t1`.
pub fn ball_radius_transfer(
    x: &DyadicPoint,
    r1: f64,
    t1: f64,
    t2: f64,
    s: f64,
    trunc: &TruncationPolicy,
) -> Result<f64> {
    let p1 = DiffusionParams::new(s, t1)?;
    let p2 = DiffusionParams::new(s, t2)?;
    if r1 >= psi_infinity(&p1, trunc)? {
        return range_err("r1", "radius must be below ψ_t1(+∞)");
    }
    match ball(x, r1, &p1, trunc)? {
        Ball::WholeSpace => psi_infinity(&p2, trunc),
        Ball::Interval(i) => {
            let l = i.log2_length();
            let lo = psi_pow2(&p2, l, trunc)?;
            let hi = psi_pow2(&p2, l + 1, trunc)?;
            Ok(0.5 * (lo + hi))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn p(v: f64) -> DyadicPoint {
        DyadicPoint::from_f64(v).unwrap()
    }

    fn params(s: f64, t: f64) -> DiffusionParams {
        DiffusionParams::new(s, t).unwrap()
    }

    fn tr() -> TruncationPolicy {
        TruncationPolicy::default()
    }

    // Plain partial sum over the first `terms` terms of η, no tail logic.
    fn eta_oracle(s: f64, t: f64, sigma: f64, terms: usize) -> f64 {
        let mut v = 2.0 * (-2.0 * t * sigma).exp();
        for l in 1..terms {
            let l = l as f64;
            v += l.exp2() * (-2.0 * t * (s * l).exp2() * sigma).exp();
        }
        v
    }

    #[test]
    fn params_validation() {
        assert!(DiffusionParams::new(0.0, 1.0).is_err());
        assert!(DiffusionParams::new(1.0, -1.0).is_err());
        assert!(DiffusionParams::new(f64::NAN, 1.0).is_err());
        assert!(TruncationPolicy::new(0.0, 10, 10).is_err());
        assert!(TruncationPolicy::new(1e-12, 0, 10).is_err());
    }

    #[test]
    fn eta_matches_partial_sum() {
        let v = eta(&params(1.0, 1.0), 1.0, &tr()).unwrap();
        let oracle = eta_oracle(1.0, 1.0, 1.0, 200);
        assert!((v - oracle).abs() < 1e-15, "{v} vs {oracle}");
        // 40-digit mpmath partial sum of the same series
        assert!((v - 0.308_644_595_043_904_2).abs() < 1e-15);
    }

    #[test]
    fn eta_decays() {
        let v = eta(&params(1.0, 1.0), 1e6, &tr()).unwrap();
        assert!(v < 1e-30);
        // both underflow in f64; compare logarithms
        let a = eta_ln(&params(1.0, 1.0), 1024.0, &tr()).unwrap();
        let b = eta_ln(&params(1.0, 1.0), 512.0, &tr()).unwrap();
        assert!(a < b);
        assert!((a - (2f64.ln() - 2048.0)).abs() < 1e-12);
        let direct = eta(&params(0.5, 0.3), 2.0, &tr()).unwrap();
        assert!((eta_ln(&params(0.5, 0.3), 2.0, &tr()).unwrap() - direct.ln()).abs() < 1e-14);
        assert!(eta(&params(1.0, 1.0), 0.0, &tr()).is_err());
    }

    #[test]
    fn eta_cap_is_reported() {
        let tight = TruncationPolicy::new(1e-12, 3, 200).unwrap();
        assert!(matches!(
            eta(&params(0.1, 1.0), 1e-6, &tight),
            Err(Error::CapExceeded { .. })
        ));
    }

    #[test]
    fn psi_examples() {
        let pr = params(1.0, 1.0);
        assert_eq!(psi(&pr, 0.0, &tr()).unwrap(), 0.0);
        let v = psi(&pr, 1.0, &tr()).unwrap();
        assert!((v - (2.0 * eta_oracle(1.0, 1.0, 1.0, 200)).sqrt()).abs() < 1e-15);
        let mut prev = 0.0;
        for i in -3..=3 {
            let cur = psi_pow2(&pr, i, &tr()).unwrap();
            assert!(cur > prev);
            assert!((cur - psi(&pr, pow2(i), &tr()).unwrap()).abs() < 1e-14);
            prev = cur;
        }
    }

    #[test]
    fn log_and_deficit_forms_agree_with_direct() {
        let tight = TruncationPolicy::new(1e-15, 100_000, 200).unwrap();
        for (sv, t) in [(0.25, 0.1), (1.0, 1.0), (2.0, 10.0)] {
            let pr = params(sv, t);
            let inf = psi_infinity(&pr, &tight).unwrap();
            for i in -3..=3 {
                let direct = psi_pow2(&pr, i, &tight).unwrap().powi(2);
                let ln = psi_sq_ln_pow2(&pr, i, &tight).unwrap();
                assert!(
                    (ln.exp() - direct).abs() < 1e-13 * direct.max(1e-300),
                    "i = {i} s = {sv}: {} vs {direct}",
                    ln.exp()
                );
                let deficit = psi_deficit_pow2(&pr, i, &tight).unwrap();
                assert!(
                    (inf * inf - direct - deficit).abs() < 1e-15 * inf * inf,
                    "i = {i} s = {sv}: {} vs {deficit}",
                    inf * inf - direct
                );
            }
        }
        // s = 1, t = 1, i = 40: 2^{-39} Σ_m 2^{-m} (e^{-2·2^{-40-m}} - e^{-2·2^{-40}})
        // ≈ 2^{-39} · 2^{-39} · Σ_m 2^{-m} (1 - 2^{-m}) = 2^{-78} · 2/3
        let d = psi_deficit_pow2(&params(1.0, 1.0), 40, &tr()).unwrap();
        assert!((d / (pow2(-78) * 2.0 / 3.0) - 1.0).abs() < 1e-9, "{d}");
    }

    #[test]
    fn psi_infinity_matches_bilateral_oracle() {
        let mut oracle = 0.0;
        for k in -120..=40 {
            oracle += 2f64.powi(k) * (-2.0 * 2f64.powi(k)).exp();
        }
        let oracle = (2.0 * oracle).sqrt();
        let v = psi_infinity(&params(1.0, 1.0), &tr()).unwrap();
        assert!((v - oracle).abs() < 1e-14, "{v} vs {oracle}");
    }

    #[test]
    fn psi_infinity_sandwich_and_scaling() {
        let mut ratios = Vec::new();
        for t in [0.1, 1.0, 10.0] {
            let pr = params(1.0, t);
            let inf = psi_infinity(&pr, &tr()).unwrap();
            let c = c_t_s(&pr, &tr()).unwrap();
            assert!(2f64.sqrt() * c < inf && inf < 2.0 * c);
            ratios.push(inf / t.powf(-0.5));
        }
        let (lo, hi) = ratios.iter().fold((f64::MAX, 0f64), |(a, b), &r| (a.min(r), b.max(r)));
        assert!(hi / lo < 2f64.sqrt());
    }

    #[test]
    fn c_t_s_examples() {
        let v = c_t_s(&params(1.0, 1.0), &tr()).unwrap();
        assert!((v - 0.5f64.sqrt()).abs() < 1e-12);
        let v = c_t_s(&params(1.0, 4.0), &tr()).unwrap();
        assert!((v - 0.5 * 0.5f64.sqrt()).abs() < 1e-12);
        let r = c_t_s_report(&params(2.0, 1.0), &tr()).unwrap();
        let expected = (gamma(1.5) * 2f64.powf(-0.5)).sqrt();
        assert!((r.value - expected).abs() < 1e-10);
        let r = c_t_s_report(&params(0.25, 1.0), &tr()).unwrap();
        assert!((r.integral_quadrature - 1.5).abs() < 1e-9);
    }

    #[test]
    fn kernel_matches_exhaustive_wavelet_sum() {
        let (x, y) = (p(0.25), p(0.75));
        let pr = params(1.0, 1.0);
        let v = kernel_k(&x, &y, &pr, &tr()).unwrap();
        // every wavelet with level -40..=12 whose support meets [0,1); finer
        // supports inside [0,1) cannot hold both points
        let mut oracle = 0.0;
        for j in -40i64..=12 {
            let count = if j <= 0 { 1u64 } else { 1u64 << j };
            for k in 0..count {
                let i = DyadicInterval::new(j, k);
                let m = (-(2f64.powi(j as i32))).exp();
                oracle += m * haar_eval(&i, &x) * haar_eval(&i, &y);
            }
        }
        assert!((v - oracle).abs() < 2e-12, "{v} vs {oracle}");
        let closed = -(-1f64).exp() + (1..200).map(|m| 2f64.powi(-m) * (-(2f64.powi(-m))).exp()).sum::<f64>();
        assert!((v - closed).abs() < 2e-12);
    }

    #[test]
    fn kernel_diagonal_is_finite_and_positive() {
        let v = kernel_k(&p(0.3), &p(0.3), &params(1.0, 1.0), &tr()).unwrap();
        let oracle: f64 = (-60..60).map(|j| 2f64.powi(j) * (-(2f64.powi(j))).exp()).sum();
        assert!((v - oracle).abs() < 1e-12);
    }

    #[test]
    fn distance_examples() {
        let pr = params(1.0, 1.0);
        assert_eq!(distance_closed(&p(0.4), &p(0.4), &pr, &tr()).unwrap(), 0.0);
        assert_eq!(distance_spectral(&p(0.4), &p(0.4), &pr, &tr()).unwrap(), 0.0);
        let closed = distance_closed(&p(0.25), &p(0.75), &pr, &tr()).unwrap();
        assert_eq!(closed, psi(&pr, 1.0, &tr()).unwrap());
        let spectral = distance_spectral(&p(0.25), &p(0.75), &pr, &tr()).unwrap();
        assert!(spectral * spectral >= 4.0 * (-2f64).exp());
        for (a, b) in [(0.25, 0.75), (0.1, 0.9), (0.9, 1.1), (3.2, 3.7)] {
            for s in [0.5, 1.0, 2.0] {
                for t in [0.1, 1.0, 10.0] {
                    let pr = params(s, t);
                    let c = distance_closed(&p(a), &p(b), &pr, &tr()).unwrap();
                    let d = distance_spectral(&p(a), &p(b), &pr, &tr()).unwrap();
                    let d2 = distance_spectral(&p(b), &p(a), &pr, &tr()).unwrap();
                    assert!((c - d).abs() <= 1e-12, "({a},{b}) s={s} t={t}: {c} vs {d}");
                    assert_eq!(d, d2);
                }
            }
        }
    }

    #[test]
    fn ball_examples() {
        let pr = params(1.0, 1.0);
        assert_eq!(ball(&p(0.3), 1e9, &pr, &tr()).unwrap(), Ball::WholeSpace);
        let r = psi(&pr, 1.0, &tr()).unwrap() * 1.01;
        let b = ball(&p(0.3), r, &pr, &tr()).unwrap();
        assert_eq!(b, Ball::Interval(DyadicInterval::unit()));
        // strict sublevel set: r equal to ψ(1) excludes [0,1)
        let r_eq = psi(&pr, 1.0, &tr()).unwrap();
        assert_eq!(
            ball(&p(0.3), r_eq, &pr, &tr()).unwrap(),
            Ball::Interval(DyadicInterval::new(1, 0u32))
        );
        assert!(ball(&p(0.3), 0.0, &pr, &tr()).is_err());
    }

    #[test]
    fn ball_membership_brute_force() {
        let pr = params(1.0, 1.0);
        let x = p(0.3);
        let r = psi(&pr, 0.25, &tr()).unwrap() * 1.5;
        let b = ball(&x, r, &pr, &tr()).unwrap();
        for m in 0..10_000u32 {
            let y = DyadicPoint::new(m, 12);
            let inside = distance_closed(&x, &y, &pr, &tr()).unwrap() < r;
            assert_eq!(inside, b.contains(&y), "y = {}", y.to_f64());
        }
    }

    #[test]
    fn radius_transfer_reproduces_balls() {
        let x = p(0.3);
        let r1 = psi(&params(1.0, 1.0), 1.0, &tr()).unwrap() * 1.01;
        let r2 = ball_radius_transfer(&x, r1, 1.0, 2.0, 1.0, &tr()).unwrap();
        assert_eq!(
            ball(&x, r1, &params(1.0, 1.0), &tr()).unwrap(),
            ball(&x, r2, &params(1.0, 2.0), &tr()).unwrap()
        );
        let same = ball_radius_transfer(&x, r1, 1.0, 1.0, 1.0, &tr()).unwrap();
        assert_eq!(
            ball(&x, same, &params(1.0, 1.0), &tr()).unwrap(),
            ball(&x, r1, &params(1.0, 1.0), &tr()).unwrap()
        );
        assert!(ball_radius_transfer(&x, 1e9, 1.0, 2.0, 1.0, &tr()).is_err());
    }

    fn arb_point() -> impl Strategy<Value = DyadicPoint> {
        (0u64..1 << 16, 0u64..14).prop_map(|(m, e)| DyadicPoint::new(m, e))
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn routes_agree(x in arb_point(), y in arb_point(), s in 0.25f64..2.0, t in 0.1f64..10.0) {
            let pr = params(s, t);
            let c = distance_closed(&x, &y, &pr, &tr()).unwrap();
            let d = distance_spectral(&x, &y, &pr, &tr()).unwrap();
            prop_assert!((c - d).abs() <= 2.0 * tr().tail_tol, "{} vs {}", c, d);
        }

        #[test]
        fn ultrametric_distance(x in arb_point(), y in arb_point(), z in arb_point()) {
            let pr = params(0.7, 0.5);
            let d = |a: &DyadicPoint, b: &DyadicPoint| distance_closed(a, b, &pr, &tr()).unwrap();
            prop_assert!(d(&x, &z) <= d(&x, &y).max(d(&y, &z)));
            prop_assert_eq!(d(&x, &y), d(&y, &x));
            prop_assert_eq!(d(&x, &y) == 0.0, x == y);
        }

        #[test]
        fn time_ratio_bound(x in arb_point(), y in arb_point(), t1 in 0.1f64..5.0, dt in 0.01f64..5.0) {
            prop_assume!(x != y);
            let s = 1.0;
            let a = distance_closed(&x, &y, &params(s, t1), &tr()).unwrap();
            let b = distance_closed(&x, &y, &params(s, t1 + dt), &tr()).unwrap();
            let delta = crate::dyadic::dyadic_distance(&x, &y);
            prop_assert!(b <= a);
            if a > 0.0 {
                let bound = (-2.0 * dt * delta.powf(-s)).exp();
                prop_assert!(b * b / (a * a) <= bound * (1.0 + 1e-12));
            }
        }

        #[test]
        fn kernel_bound(x in arb_point(), y in arb_point(), s in 0.25f64..2.0, t in 0.1f64..10.0) {
            prop_assume!(x != y);
            let k = kernel_k(&x, &y, &params(s, t), &tr()).unwrap();
            let k2 = kernel_k(&y, &x, &params(s, t), &tr()).unwrap();
            prop_assert!(k.abs() <= 2.0 / crate::dyadic::dyadic_distance(&x, &y));
            prop_assert_eq!(k, k2);
        }

        #[test]
        fn balls_nest(x in arb_point(), r1 in 0.01f64..2.0, dr in 0.0f64..2.0) {
            let pr = params(1.0, 1.0);
            let a = ball(&x, r1, &pr, &tr()).unwrap();
            let b = ball(&x, r1 + dr, &pr, &tr()).unwrap();
            prop_assert!(a.is_subset_of(&b));
            prop_assert!(a.contains(&x));
        }
    }
}
