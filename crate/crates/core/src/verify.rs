//! Property suites behind `dyadic verify`.
//!
//! Every check draws from its own fixed-seed generator, so a report is
//! reproducible bit for bit given the truncation policy.

use std::fmt;

use num_bigint::BigUint;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::dyadic::{dyadic_distance, dyadic_distance_log2, smallest_common_interval, DyadicInterval, DyadicPoint};
use crate::error::{Error, Result};
use crate::euclidean::{self, GaussianParams};
use crate::laplacian::{self, HaarExpansion, EIGEN_RESIDUAL_TOL};
use crate::spectral::{self, Ball, DiffusionParams, TruncationPolicy, CTS_CROSS_CHECK_TOL};

/// Orders of the spectral grid.
pub const S_GRID: [f64; 4] = [0.25, 0.5, 1.0, 2.0];
/// Times of the spectral grid.
pub const T_GRID: [f64; 3] = [0.1, 1.0, 10.0];
/// Orders used for the Laplacian eigenrelation.
pub const LAPLACIAN_ORDERS: [f64; 3] = [0.25, 0.5, 0.75];
/// Largest `|d_spectral - d_closed|` accepted.
pub const EQUIVALENCE_TOL: f64 = 2e-10;
/// Largest gap accepted between the two evolution routes.
pub const EVOLUTION_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    All,
    Dyadic,
    Spectral,
    Laplacian,
    Euclidean,
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Suite::All => "all",
            Suite::Dyadic => "dyadic",
            Suite::Spectral => "spectral",
            Suite::Laplacian => "laplacian",
            Suite::Euclidean => "euclidean",
        };
        f.write_str(name)
    }
}

/// One property with its measured value and the threshold it must not exceed.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub suite: Suite,
    pub name: &'static str,
    pub passed: bool,
    pub measured: f64,
    pub threshold: f64,
    pub detail: String,
}

impl Check {
    fn at_most(suite: Suite, name: &'static str, measured: f64, threshold: f64, detail: impl Into<String>) -> Self {
        Check {
            suite,
            name,
            passed: measured <= threshold,
            measured,
            threshold,
            detail: detail.into(),
        }
    }

    fn failed(suite: Suite, name: &'static str, threshold: f64, err: &Error) -> Self {
        Check {
            suite,
            name,
            passed: false,
            measured: f64::NAN,
            threshold,
            detail: format!("error: {err}"),
        }
    }

    fn from_result(suite: Suite, name: &'static str, threshold: f64, r: Result<Check>) -> Self {
        r.unwrap_or_else(|e| Check::failed(suite, name, threshold, &e))
    }
}

/// Runs `suite`; `All` runs the four suites on separate threads.
pub fn run(suite: Suite, trunc: &TruncationPolicy) -> Vec<Check> {
    match suite {
        Suite::Dyadic => dyadic_suite(),
        Suite::Spectral => spectral_suite(trunc),
        Suite::Laplacian => laplacian_suite(trunc),
        Suite::Euclidean => euclidean_suite(),
        Suite::All => std::thread::scope(|scope| {
            let handles = [
                scope.spawn(dyadic_suite),
                scope.spawn(|| spectral_suite(trunc)),
                scope.spawn(|| laplacian_suite(trunc)),
                scope.spawn(euclidean_suite),
            ];
            handles
                .into_iter()
                .flat_map(|h| h.join().expect("verification thread panicked"))
                .collect()
        }),
    }
}

// ---------------------------------------------------------------------------
// random inputs

/// `mantissa · 2^{-level}` for any integer level.
pub fn point_at(mantissa: BigUint, level: i64) -> DyadicPoint {
    if level >= 0 {
        DyadicPoint::new(mantissa, level as u64)
    } else {
        DyadicPoint::new(mantissa << (-level) as u64, 0)
    }
}

/// A point of `[0, 2^24)` with at most 20 fractional bits.
pub fn random_point(rng: &mut impl Rng) -> DyadicPoint {
    let level = rng.gen_range(0i64..=20);
    point_at(
        BigUint::from(rng.gen_range(0u64..1 << 44)) >> (20 - level) as u64,
        level,
    )
}

/// A point of `I` resolved to `extra_bits` levels below it.
pub fn random_point_in(rng: &mut impl Rng, interval: &DyadicInterval, extra_bits: u32) -> DyadicPoint {
    let offset = rng.gen_range(0u64..1u64 << extra_bits);
    point_at(
        (interval.index() << extra_bits) + offset,
        interval.level() + extra_bits as i64,
    )
}

/// Half independent pairs, half pairs sharing an ancestor of random size,
/// so that dyadic distances from about `2^{-40}` to `2^{24}` all occur.
pub fn random_pair(rng: &mut impl Rng) -> (DyadicPoint, DyadicPoint) {
    let x = random_point(rng);
    let y = if rng.gen_bool(0.5) {
        random_point(rng)
    } else {
        let around = DyadicInterval::containing(&x, rng.gen_range(-4i64..=30));
        random_point_in(rng, &around, 12)
    };
    (x, y)
}

fn grid() -> impl Iterator<Item = DiffusionParams> {
    S_GRID
        .into_iter()
        .flat_map(|s| T_GRID.into_iter().map(move |t| DiffusionParams { s, t }))
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

// ---------------------------------------------------------------------------
// dyadic

pub fn dyadic_suite() -> Vec<Check> {
    vec![
        euclidean_lower_bound(),
        ultrametric_inequality(),
        nested_or_disjoint(),
        minimal_common_interval(),
        delta_examples(),
    ]
}

/// `|x - y| <= δ(x, y)`, compared exactly.
pub fn euclidean_lower_bound() -> Check {
    let mut g = rng(11);
    let mut violations = 0;
    for _ in 0..1000 {
        let (x, y) = random_pair(&mut g);
        if let Some(l) = dyadic_distance_log2(&x, &y) {
            if x.abs_diff(&y) > DyadicPoint::power_of_two(l) {
                violations += 1;
            }
        }
    }
    Check::at_most(
        Suite::Dyadic,
        "euclidean_lower_bound",
        violations as f64,
        0.0,
        "1000 pairs, exact comparison",
    )
}

pub fn ultrametric_inequality() -> Check {
    let mut g = rng(12);
    let mut violations = 0;
    for _ in 0..1000 {
        let (x, y) = random_pair(&mut g);
        let around = DyadicInterval::containing(&y, g.gen_range(-4i64..=20));
        let z = random_point_in(&mut g, &around, 8);
        let d = |a: &DyadicPoint, b: &DyadicPoint| dyadic_distance_log2(a, b);
        if d(&x, &z) > d(&x, &y).max(d(&y, &z)) || d(&x, &y) != d(&y, &x) {
            violations += 1;
        }
    }
    Check::at_most(
        Suite::Dyadic,
        "ultrametric_inequality",
        violations as f64,
        0.0,
        "1000 triples",
    )
}

pub fn nested_or_disjoint() -> Check {
    let mut g = rng(13);
    let mut violations = 0;
    for _ in 0..1000 {
        let (x, y) = random_pair(&mut g);
        let a = DyadicInterval::containing(&x, g.gen_range(-4i64..=24));
        let b = DyadicInterval::containing(&y, g.gen_range(-4i64..=24));
        let nested = a.contains_interval(&b) || b.contains_interval(&a);
        if nested == a.is_disjoint(&b) {
            violations += 1;
        }
    }
    Check::at_most(
        Suite::Dyadic,
        "nested_or_disjoint",
        violations as f64,
        0.0,
        "1000 interval pairs",
    )
}

pub fn minimal_common_interval() -> Check {
    let mut g = rng(14);
    let mut violations = 0;
    for _ in 0..1000 {
        let (x, y) = random_pair(&mut g);
        let ok = match smallest_common_interval(&x, &y) {
            None => x == y,
            Some(i) => {
                i.contains(&x)
                    && i.contains(&y)
                    && i.children().iter().all(|c| !(c.contains(&x) && c.contains(&y)))
                    && dyadic_distance(&x, &y) == i.length()
            }
        };
        if !ok {
            violations += 1;
        }
    }
    Check::at_most(
        Suite::Dyadic,
        "minimal_common_interval",
        violations as f64,
        0.0,
        "1000 pairs",
    )
}

pub fn delta_examples() -> Check {
    let parse = |s: &str| DyadicPoint::from_decimal_str(s, 53).map(|(p, _)| p);
    let cases = [("0.25", "0.75", 1.0), ("0.5", "0.5", 0.0), ("0.9", "1.1", 2.0)];
    let mut worst: f64 = 0.0;
    let mut detail = Vec::new();
    for (a, b, expected) in cases {
        match (parse(a), parse(b)) {
            (Ok(x), Ok(y)) => {
                let d = dyadic_distance(&x, &y);
                worst = worst.max((d - expected).abs());
                detail.push(format!("δ({a}, {b}) = {d}"));
            }
            _ => worst = f64::INFINITY,
        }
    }
    Check::at_most(Suite::Dyadic, "delta_examples", worst, 0.0, detail.join(", "))
}

// ---------------------------------------------------------------------------
// spectral

pub fn spectral_suite(trunc: &TruncationPolicy) -> Vec<Check> {
    let mut out = vec![
        distance_equivalence(trunc),
        profile_monotone(trunc),
        profile_vanishes(trunc),
        profile_sandwich(trunc),
        c_t_s_cross_check(trunc),
        kernel_bound(trunc),
        time_ratio_bound(trunc),
        non_equivalence_witness(trunc),
    ];
    out.extend(ball_checks(trunc));
    out
}

/// `|d_spectral - ψ_t(δ)|` over 200 pairs and the full `(s, t)` grid.
pub fn distance_equivalence(trunc: &TruncationPolicy) -> Check {
    distance_equivalence_with(trunc, spectral::distance_closed)
}

/// [`distance_equivalence`] against an arbitrary closed-form route.
pub fn distance_equivalence_with<F>(trunc: &TruncationPolicy, closed: F) -> Check
where
    F: Fn(&DyadicPoint, &DyadicPoint, &DiffusionParams, &TruncationPolicy) -> Result<f64>,
{
    let name = "distance_equivalence";
    let run = || -> Result<Check> {
        let mut g = rng(21);
        let pairs: Vec<_> = (0..200).map(|_| random_pair(&mut g)).collect();
        let mut worst: f64 = 0.0;
        let mut evaluations = 0;
        for p in grid() {
            for (x, y) in &pairs {
                let a = spectral::distance_spectral(x, y, &p, trunc)?;
                let b = closed(x, y, &p, trunc)?;
                worst = worst.max((a - b).abs());
                evaluations += 1;
            }
        }
        Ok(Check::at_most(
            Suite::Spectral,
            name,
            worst,
            EQUIVALENCE_TOL,
            format!("{evaluations} evaluations, max_depth {}", trunc.max_depth),
        ))
    };
    Check::from_result(Suite::Spectral, name, EQUIVALENCE_TOL, run())
}

/// Strict increase of `ψ_t(2^i)` for `i ∈ [-40, 40]`.
///
/// Consecutive values are compared through `ln ψ²` while `ψ² < ψ_∞² / 2` and
/// through the deficit `ψ_∞² - ψ²` above that, so neither underflow nor
/// saturation at `ψ_∞` can hide an increment.
pub fn profile_monotone(trunc: &TruncationPolicy) -> Check {
    let name = "profile_monotone";
    let run = || -> Result<Check> {
        let mut violations = 0;
        let mut comparisons = 0;
        for p in grid() {
            let half_ln = (0.5 * spectral::psi_infinity(&p, trunc)?.powi(2)).ln();
            for i in -40..40 {
                let upper_ln = spectral::psi_sq_ln_pow2(&p, i + 1, trunc)?;
                let increasing = if upper_ln < half_ln {
                    spectral::psi_sq_ln_pow2(&p, i, trunc)? < upper_ln
                } else {
                    spectral::psi_deficit_pow2(&p, i, trunc)? > spectral::psi_deficit_pow2(&p, i + 1, trunc)?
                };
                comparisons += 1;
                if !increasing {
                    violations += 1;
                }
            }
        }
        Ok(Check::at_most(
            Suite::Spectral,
            name,
            violations as f64,
            0.0,
            format!("{comparisons} consecutive levels"),
        ))
    };
    Check::from_result(Suite::Spectral, name, 0.0, run())
}

/// `ψ_1(2^{-60}) < 10^{-8}` at `s = 1`.
pub fn profile_vanishes(trunc: &TruncationPolicy) -> Check {
    let name = "profile_vanishes";
    let r = spectral::psi_pow2(&DiffusionParams { s: 1.0, t: 1.0 }, -60, trunc)
        .map(|v| Check::at_most(Suite::Spectral, name, v, 1e-8, "ψ_t(2^-60), s = 1, t = 1"));
    Check::from_result(Suite::Spectral, name, 1e-8, r)
}

/// `√2 c_t(s) < ψ_∞ < 2 c_t(s)` on the grid.
pub fn profile_sandwich(trunc: &TruncationPolicy) -> Check {
    let name = "profile_sandwich";
    let run = || -> Result<Check> {
        let mut violations = 0;
        let mut closest: f64 = f64::INFINITY;
        for p in grid() {
            let inf = spectral::psi_infinity(&p, trunc)?;
            let c = spectral::c_t_s(&p, trunc)?;
            let lo = std::f64::consts::SQRT_2 * c;
            let hi = 2.0 * c;
            if !(lo < inf && inf < hi) {
                violations += 1;
            }
            closest = closest.min(((inf - lo) / c).min((hi - inf) / c));
        }
        Ok(Check::at_most(
            Suite::Spectral,
            name,
            violations as f64,
            0.0,
            format!("12 (s, t); smallest margin {closest:.3e} c_t(s)"),
        ))
    };
    Check::from_result(Suite::Spectral, name, 0.0, run())
}

/// Quadrature of `∫ e^{-2x^s}` against `Γ(1 + 1/s) 2^{-1/s}`.
pub fn c_t_s_cross_check(trunc: &TruncationPolicy) -> Check {
    let name = "c_t_s_gamma_cross_check";
    let mut worst: f64 = 0.0;
    for s in S_GRID {
        match spectral::c_t_s_report(&DiffusionParams { s, t: 1.0 }, trunc) {
            Ok(r) => worst = worst.max(r.relative_discrepancy),
            Err(Error::QuadratureMismatch(rel)) => worst = worst.max(rel),
            Err(e) => return Check::failed(Suite::Spectral, name, CTS_CROSS_CHECK_TOL, &e),
        }
    }
    Check::at_most(
        Suite::Spectral,
        name,
        worst,
        CTS_CROSS_CHECK_TOL,
        "relative, s ∈ {0.25, 0.5, 1, 2}",
    )
}

/// `|K_s(x, y; t)| <= 2 / δ(x, y)`.
pub fn kernel_bound(trunc: &TruncationPolicy) -> Check {
    let name = "kernel_bound";
    let run = || -> Result<Check> {
        let mut g = rng(22);
        let mut violations = 0;
        let mut worst: f64 = 0.0;
        let mut n = 0;
        while n < 1000 {
            let (x, y) = random_pair(&mut g);
            if x == y {
                continue;
            }
            let p = DiffusionParams {
                s: S_GRID[g.gen_range(0..S_GRID.len())],
                t: T_GRID[g.gen_range(0..T_GRID.len())],
            };
            let k = spectral::kernel_k(&x, &y, &p, trunc)?;
            let ratio = k.abs() * dyadic_distance(&x, &y) / 2.0;
            worst = worst.max(ratio);
            if ratio > 1.0 {
                violations += 1;
            }
            n += 1;
        }
        Ok(Check::at_most(
            Suite::Spectral,
            name,
            violations as f64,
            0.0,
            format!("1000 pairs; max |K| δ / 2 = {worst:.6}"),
        ))
    };
    Check::from_result(Suite::Spectral, name, 0.0, run())
}

/// `d_{t2}² / d_{t1}² <= e^{-2(t2 - t1) δ^{-s}}`, compared as logarithms.
pub fn time_ratio_bound(trunc: &TruncationPolicy) -> Check {
    let name = "time_ratio_bound";
    let run = || -> Result<Check> {
        let mut g = rng(23);
        let mut violations = 0;
        let mut n = 0;
        while n < 1000 {
            let (x, y) = random_pair(&mut g);
            let l = match dyadic_distance_log2(&x, &y) {
                Some(l) => l,
                None => continue,
            };
            let s = S_GRID[g.gen_range(0..S_GRID.len())];
            let t1 = T_GRID[g.gen_range(0..T_GRID.len())];
            let t2 = t1 * g.gen_range(1.1..4.0);
            let a = spectral::psi_sq_ln_pow2(&DiffusionParams { s, t: t1 }, l, trunc)?;
            let b = spectral::psi_sq_ln_pow2(&DiffusionParams { s, t: t2 }, l, trunc)?;
            let bound = -2.0 * (t2 - t1) * (-s * l as f64).exp2();
            let slack = 1e-12 * (1.0 + a.abs().max(b.abs()));
            if b - a > bound + slack {
                violations += 1;
            }
            n += 1;
        }
        Ok(Check::at_most(
            Suite::Spectral,
            name,
            violations as f64,
            0.0,
            "1000 pairs, t1 < t2",
        ))
    };
    Check::from_result(Suite::Spectral, name, 0.0, run())
}

/// A pair `(0, 2^{-k})` with `d_{t1} > 10^6 d_{t2}` at `s = 1`, `t1 = 1`, `t2 = 2`.
pub fn non_equivalence_witness(trunc: &TruncationPolicy) -> Check {
    let name = "non_equivalence_witness";
    let run = || -> Result<Check> {
        let p1 = DiffusionParams { s: 1.0, t: 1.0 };
        let p2 = DiffusionParams { s: 1.0, t: 2.0 };
        for k in 1..=40 {
            let x = DyadicPoint::zero();
            let y = DyadicPoint::power_of_two(-k);
            let d1 = spectral::distance_closed(&x, &y, &p1, trunc)?;
            let d2 = spectral::distance_closed(&x, &y, &p2, trunc)?;
            if d2 > 0.0 && d1 > 1e6 * d2 {
                // pass when the ratio exceeds 1e6, i.e. 1e6 / ratio < 1
                return Ok(Check::at_most(
                    Suite::Spectral,
                    name,
                    1e6 * d2 / d1,
                    1.0,
                    format!(
                        "x = 0, y = 2^-{k}: d_1 = {d1:.6e}, d_2 = {d2:.6e}, ratio {:.3e}",
                        d1 / d2
                    ),
                ));
            }
        }
        Err(Error::NonConvergence("no witness among y = 2^-k, k <= 40".into()))
    };
    Check::from_result(Suite::Spectral, name, 1.0, run())
}

/// Ball shape and membership against sampling, then radius transfer across times.
pub fn ball_checks(trunc: &TruncationPolicy) -> Vec<Check> {
    let membership = "ball_membership";
    let transfer = "ball_radius_transfer";
    let run = || -> Result<(Check, Check)> {
        let mut g = rng(24);
        let mut mismatches = 0;
        let mut transfer_mismatches = 0;
        let mut samples = 0;
        for _ in 0..100 {
            let x = random_point(&mut g);
            let p = DiffusionParams {
                s: S_GRID[g.gen_range(0..S_GRID.len())],
                t: T_GRID[g.gen_range(0..T_GRID.len())],
            };
            let inf = spectral::psi_infinity(&p, trunc)?;
            let r = inf * 10f64.powf(-g.gen_range(0.0..3.0)) * 0.999;
            let b = spectral::ball(&x, r, &p, trunc)?;
            let interval = match &b {
                Ball::Interval(i) if i.contains(&x) => i.clone(),
                _ => {
                    mismatches += 1;
                    continue;
                }
            };
            let region = interval.ancestor_at(interval.level() - 3);
            for n in 0..1000 {
                let from = if n % 2 == 0 { &interval } else { &region };
                let y = random_point_in(&mut g, from, 16);
                let inside = spectral::distance_closed(&x, &y, &p, trunc)? < r;
                if inside != b.contains(&y) {
                    mismatches += 1;
                }
                samples += 1;
            }
            let t2 = p.t * [0.5, 2.0, 3.0][g.gen_range(0..3)];
            let r2 = spectral::ball_radius_transfer(&x, r, p.t, t2, p.s, trunc)?;
            if spectral::ball(&x, r2, &p.with_time(t2)?, trunc)? != b {
                transfer_mismatches += 1;
            }
        }
        Ok((
            Check::at_most(
                Suite::Spectral,
                membership,
                mismatches as f64,
                0.0,
                format!("100 balls, {samples} sampled points"),
            ),
            Check::at_most(
                Suite::Spectral,
                transfer,
                transfer_mismatches as f64,
                0.0,
                "100 balls, t2 ≠ t1",
            ),
        ))
    };
    match run() {
        Ok((a, b)) => vec![a, b],
        Err(e) => vec![
            Check::failed(Suite::Spectral, membership, 0.0, &e),
            Check::failed(Suite::Spectral, transfer, 0.0, &e),
        ],
    }
}

// ---------------------------------------------------------------------------
// laplacian

pub fn laplacian_suite(trunc: &TruncationPolicy) -> Vec<Check> {
    let mut out = eigen_checks(trunc);
    out.push(evolution_routes(trunc));
    out.push(semigroup_law());
    out
}

/// Pointwise eigenrelation on `[k 2^{-j}, (k+1) 2^{-j})` for `j ∈ [-5, 5]`,
/// the constancy of `λ_I |I|^s` across levels, and `λ_{[0,1)} = 1 + 1/(2(2^s - 1))`.
pub fn eigen_checks(trunc: &TruncationPolicy) -> Vec<Check> {
    let names = ["eigen_residual", "eigen_scaling", "eigen_constant"];
    let run = || -> Result<Vec<Check>> {
        let mut g = rng(31);
        let mut residual: f64 = 0.0;
        let mut spread: f64 = 0.0;
        let mut constant_gap: f64 = 0.0;
        for s in LAPLACIAN_ORDERS {
            let (unit, _) = laplacian::eigenpair(&DyadicInterval::unit(), s, trunc)?;
            let expected = 1.0 + 0.5 / (s.exp2() - 1.0);
            constant_gap = constant_gap.max(((unit - expected) / expected).abs());
            for j in -5i64..=5 {
                let k = g.gen_range(0u64..64);
                let interval = DyadicInterval::new(j, k);
                let (lambda, res) = laplacian::eigenpair(&interval, s, trunc)?;
                residual = residual.max(res);
                let normalized = lambda * (-s * j as f64).exp2();
                spread = spread.max(((normalized - unit) / unit).abs());
            }
        }
        Ok(vec![
            Check::at_most(
                Suite::Laplacian,
                names[0],
                residual,
                EIGEN_RESIDUAL_TOL,
                "16 interior points, j ∈ [-5, 5], s ∈ {0.25, 0.5, 0.75}",
            ),
            Check::at_most(
                Suite::Laplacian,
                names[1],
                spread,
                EIGEN_RESIDUAL_TOL,
                "relative spread of λ_I |I|^s",
            ),
            Check::at_most(
                Suite::Laplacian,
                names[2],
                constant_gap,
                EIGEN_RESIDUAL_TOL,
                "λ_[0,1) against 1 + 1/(2(2^s - 1))",
            ),
        ])
    };
    run().unwrap_or_else(|e| {
        names
            .iter()
            .map(|n| Check::failed(Suite::Laplacian, n, EIGEN_RESIDUAL_TOL, &e))
            .collect()
    })
}

/// A finite Haar expansion with up to six coefficients on levels `-2..=5` inside `[0, 4)`.
pub fn random_expansion(rng: &mut impl Rng) -> HaarExpansion {
    let count = rng.gen_range(1..=6);
    HaarExpansion::from_coefficients((0..count).map(|_| {
        let j = rng.gen_range(-2i64..=5);
        let k = rng.gen_range(0u64..1u64 << (j + 2));
        (DyadicInterval::new(j, k), rng.gen_range(-2.0..2.0))
    }))
}

/// Spectral multipliers against the kernel shell integral on 50 expansions.
pub fn evolution_routes(trunc: &TruncationPolicy) -> Check {
    let name = "evolution_routes";
    let run = || -> Result<Check> {
        let mut g = rng(32);
        let mut worst: f64 = 0.0;
        let mut points = 0;
        for _ in 0..50 {
            let e = random_expansion(&mut g);
            let f = e.to_piecewise()?;
            let p = DiffusionParams {
                s: g.gen_range(0.3..1.5),
                t: g.gen_range(0.05..2.0),
            };
            let evolved = laplacian::evolve_spectral(&e, p.s, p.t);
            let support = e
                .coefficients
                .keys()
                .next()
                .cloned()
                .unwrap_or_else(DyadicInterval::unit);
            let mut queries: Vec<DyadicPoint> = (0..4)
                .map(|_| random_point_in(&mut g, &DyadicInterval::new(-5, 0u32), 24))
                .collect();
            queries.push(random_point_in(&mut g, &support, 12));
            for x in &queries {
                let a = evolved.evaluate(x, trunc)?;
                let b = laplacian::evolve_pointwise(&f, x, &p, trunc)?;
                worst = worst.max((a - b).abs());
                points += 1;
            }
        }
        Ok(Check::at_most(
            Suite::Laplacian,
            name,
            worst,
            EVOLUTION_TOL,
            format!("50 expansions, {points} query points"),
        ))
    };
    Check::from_result(Suite::Laplacian, name, EVOLUTION_TOL, run())
}

/// `e^{t2 D} e^{t1 D} = e^{(t1 + t2) D}` coefficientwise, in units of the
/// roundoff `ε (1 + (t1 + t2) |I|^{-s})` of one exponential.
pub fn semigroup_law() -> Check {
    let mut g = rng(33);
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let e = random_expansion(&mut g);
        let s = g.gen_range(0.3..1.5);
        let (t1, t2) = (g.gen_range(0.0..2.0), g.gen_range(0.0..2.0));
        let twice = laplacian::evolve_spectral(&laplacian::evolve_spectral(&e, s, t1), s, t2);
        let once = laplacian::evolve_spectral(&e, s, t1 + t2);
        for (i, c) in &once.coefficients {
            let scale = f64::EPSILON * (1.0 + (t1 + t2) * (s * i.level() as f64).exp2()) * c.abs();
            if scale > 0.0 {
                worst = worst.max((twice.coefficients[i] - c).abs() / scale);
            }
        }
    }
    Check::at_most(
        Suite::Laplacian,
        "semigroup_law",
        worst,
        4.0,
        "50 expansions, error in units of roundoff",
    )
}

// ---------------------------------------------------------------------------
// euclidean

pub fn euclidean_suite() -> Vec<Check> {
    vec![
        euclidean_quadrature(),
        euclidean_derivative(),
        euclidean_ratio_limit(),
        euclidean_invariance(),
    ]
}

const QUADRATURE_TOL: f64 = 1e-8;
const DERIVATIVE_TOL: f64 = 1e-6;

/// Quadrature of `∫ |W_t(x - z) - W_t(y - z)|² dz` against the closed form, `n = 1, 2`.
pub fn euclidean_quadrature() -> Check {
    let name = "quadrature_closed_form";
    let run = || -> Result<Check> {
        let mut worst: f64 = 0.0;
        for n in [1, 2] {
            for t in [0.5, 1.0, 2.0] {
                let p = GaussianParams::new(t, n)?;
                for r in [0.1, 1.0, 3.0] {
                    let q = euclidean::rho_sq_quadrature(r, &p, 1e-10)?;
                    worst = worst.max((q - euclidean::rho_sq_closed(r, &p)).abs());
                }
            }
        }
        Ok(Check::at_most(
            Suite::Euclidean,
            name,
            worst,
            QUADRATURE_TOL,
            "n ∈ {1, 2}, 9 (t, r) each",
        ))
    };
    Check::from_result(Suite::Euclidean, name, QUADRATURE_TOL, run())
}

/// Central differences of `ρ_t²` against the derivative formula.
pub fn euclidean_derivative() -> Check {
    let mut worst: f64 = 0.0;
    for n in [1usize, 2] {
        for t in [0.5, 1.0, 2.0] {
            let p = GaussianParams { t, n };
            for r in [0.1, 0.5, 1.0, 3.0] {
                let h = 1e-4 * r;
                let fd = (euclidean::rho_sq_closed(r + h, &p) - euclidean::rho_sq_closed(r - h, &p)) / (2.0 * h);
                let exact = euclidean::rho_sq_derivative(r, &p);
                worst = worst.max(((fd - exact) / exact).abs());
            }
        }
    }
    Check::at_most(
        Suite::Euclidean,
        "derivative_formula",
        worst,
        DERIVATIVE_TOL,
        "relative, central differences",
    )
}

/// `ρ²_{t1}(r) / ρ²_{t2}(r) → (t2/t1)^{n/2 + 1}` as `r → 0`, read off at `r = 10^{-4}`.
pub fn euclidean_ratio_limit() -> Check {
    let name = "ratio_limit";
    let run = || -> Result<Check> {
        let mut worst: f64 = 0.0;
        let mut detail = Vec::new();
        for n in [1, 2] {
            for (t1, t2) in [(1.0, 2.0), (1.0, 4.0)] {
                let rep = euclidean::ratio_limit_check(t1, t2, n, &[1e-1, 1e-2, 1e-3, 1e-4])?;
                worst = worst.max(rep.relative_error);
                let last = rep.values.last().map(|v| v.1).unwrap_or(f64::NAN);
                detail.push(format!(
                    "n={n} ({t1},{t2}): ratio(1e-4)={last:.16e} extrapolated={:.16e} expected={:.16e}",
                    rep.limit, rep.expected
                ));
            }
        }
        Ok(Check::at_most(
            Suite::Euclidean,
            name,
            worst,
            euclidean::RATIO_LIMIT_TOL,
            detail.join("; "),
        ))
    };
    Check::from_result(Suite::Euclidean, name, euclidean::RATIO_LIMIT_TOL, run())
}

/// Translations (and rotations in the plane) over 20 random trials.
pub fn euclidean_invariance() -> Check {
    let name = "translation_rotation_invariance";
    let run = || -> Result<Check> {
        let mut worst: f64 = 0.0;
        for (n, seed) in [(1, 41), (2, 42)] {
            let rep = euclidean::translation_rotation_invariance_check(&GaussianParams::new(0.7, n)?, 20, seed)?;
            worst = worst
                .max(rep.max_translation_gap)
                .max(rep.max_rotation_gap)
                .max(rep.max_closed_form_gap);
        }
        Ok(Check::at_most(
            Suite::Euclidean,
            name,
            worst,
            euclidean::INVARIANCE_TOL,
            "n ∈ {1, 2}, 20 trials each",
        ))
    };
    Check::from_result(Suite::Euclidean, name, euclidean::INVARIANCE_TOL, run())
}
