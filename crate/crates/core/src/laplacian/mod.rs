//! The dyadic fractional Laplacian and the heat semigroup it generates.
//!
//! Fix `x` and let `J_j` be the level-`j` dyadic interval containing it. On
//! the shell `S_j = J_j \ J_{j+1}` the dyadic distance `δ(x, ·)` equals
//! `|J_j| = 2^{-j}`, so against a piecewise-constant `f` every integral with
//! a kernel in `δ(x, y)` collapses to a finite sum over shells plus a
//! closed-form or certified geometric tail.

mod function;

pub use function::{HaarExpansion, MeanPart, PiecewiseDyadicFunction};

use crate::dyadic::{DyadicInterval, DyadicPoint};
use crate::error::{Error, Result};
use crate::numeric::{pow2, CompensatedSum};
use crate::spectral::{bilateral_sum, DiffusionParams, TruncationPolicy};

/// Pointwise residual allowed in the Haar eigenrelation.
pub const EIGEN_RESIDUAL_TOL: f64 = 1e-10;

fn check_order(s: f64) -> Result<()> {
    if s > 0.0 && s < 1.0 {
        Ok(())
    } else {
        Err(Error::OrderOutOfRange(s))
    }
}

/// Levels `[top, bottom)` of the shells around `x` that can meet the support
/// of `f` nontrivially; `None` when `f` vanishes identically.
fn shell_range(f: &PiecewiseDyadicFunction, x: &DyadicPoint) -> Option<(i64, i64)> {
    let hull = f.hull()?;
    let bottom = f.finest_level()?;
    let around_x = DyadicInterval::containing(x, hull.level());
    let top = hull.common_ancestor(&around_x).level();
    Some((top, bottom.max(top)))
}

/// `∫_{S_j} f` for the shell at level `j` around `x`.
fn shell_integral(f: &PiecewiseDyadicFunction, x: &DyadicPoint, level: i64) -> f64 {
    let outer = DyadicInterval::containing(x, level);
    let inner = DyadicInterval::containing(x, level + 1);
    f.integral_over(&outer) - f.integral_over(&inner)
}

/// `D^s f(x) = ∫ (f(y) - f(x)) δ(x, y)^{-1-s} dy` for `0 < s < 1`.
///
/// Shells finer than every piece see `f ≡ f(x)` and vanish. Shells coarser
/// than the common ancestor of `x` and the support see `f ≡ 0` and sum to
/// `-f(x)/2 · Σ_{j<top} 2^{js} = -f(x)/2 · 2^{(top-1)s} / (1 - 2^{-s})`.
pub fn apply_laplacian(f: &PiecewiseDyadicFunction, x: &DyadicPoint, s: f64, trunc: &TruncationPolicy) -> Result<f64> {
    check_order(s)?;
    let (top, bottom) = match shell_range(f, x) {
        Some(r) => r,
        None => return Ok(0.0),
    };
    if (bottom - top) as usize > trunc.max_depth {
        return Err(Error::CapExceeded {
            what: "laplacian shell count",
            limit: trunc.max_depth,
        });
    }
    let fx = f.eval(x);
    let mut acc = CompensatedSum::new();
    for j in top..bottom {
        let shell_len = pow2(-j - 1);
        let weight = ((1.0 + s) * j as f64).exp2();
        acc.add(weight * (shell_integral(f, x, j) - fx * shell_len));
    }
    let coarse = -0.5 * fx * (s * (top - 1) as f64).exp2() / (1.0 - (-s).exp2());
    acc.add(coarse);
    Ok(acc.value())
}

/// `m_s`, the eigenvalue of the integral operator on `h_{[0,1)}`, measured
/// through [`apply_laplacian`].
pub fn laplacian_constant(s: f64, trunc: &TruncationPolicy) -> Result<f64> {
    eigenpair(&DyadicInterval::unit(), s, trunc).map(|(l, _)| l)
}

/// Sixteen midpoints of the sixteenths of `I`.
pub fn interior_samples(interval: &DyadicInterval) -> Vec<DyadicPoint> {
    let base = interval.index() << 5u32;
    (0..16u32)
        .map(|m| {
            let mantissa = &base + (2 * m + 1);
            let level = interval.level() + 5;
            if level >= 0 {
                DyadicPoint::new(mantissa, level as u64)
            } else {
                DyadicPoint::new(mantissa << (-level) as u64, 0)
            }
        })
        .collect()
}

/// `(λ, max residual)` with `D^s h_I ≈ -λ h_I` over [`interior_samples`].
pub fn eigenpair(interval: &DyadicInterval, s: f64, trunc: &TruncationPolicy) -> Result<(f64, f64)> {
    check_order(s)?;
    let h = PiecewiseDyadicFunction::haar(interval);
    let samples = interior_samples(interval);
    let values: Vec<(f64, f64)> = samples
        .iter()
        .map(|x| Ok((apply_laplacian(&h, x, s, trunc)?, h.eval(x))))
        .collect::<Result<_>>()?;
    let (d0, h0) = values[0];
    let lambda = -d0 / h0;
    let residual = values.iter().map(|(d, hv)| (d + lambda * hv).abs()).fold(0.0, f64::max);
    Ok((lambda, residual))
}

/// The eigenvalue `λ_I` of `h_I`; checks the eigenrelation pointwise and the
/// scaling law `λ_I = λ_{[0,1)} |I|^{-s}`.
pub fn haar_eigenvalue(interval: &DyadicInterval, s: f64, trunc: &TruncationPolicy) -> Result<f64> {
    let (lambda, residual) = eigenpair(interval, s, trunc)?;
    if residual > EIGEN_RESIDUAL_TOL {
        return Err(Error::ResidualTooLarge {
            residual,
            tolerance: EIGEN_RESIDUAL_TOL,
        });
    }
    if *interval != DyadicInterval::unit() {
        let (unit, _) = eigenpair(&DyadicInterval::unit(), s, trunc)?;
        let scaled = unit * (s * interval.level() as f64).exp2();
        let rel = ((lambda - scaled) / scaled).abs();
        if rel > EIGEN_RESIDUAL_TOL {
            return Err(Error::ResidualTooLarge {
                residual: rel,
                tolerance: EIGEN_RESIDUAL_TOL,
            });
        }
    }
    Ok(lambda)
}

/// Heat multiplier `e^{-t|I|^{-s}}`.
pub fn heat_multiplier(interval: &DyadicInterval, s: f64, t: f64) -> f64 {
    (-t * (s * interval.level() as f64).exp2()).exp()
}

/// Multiplies every coefficient by `e^{-t|I|^{-s}}`; `t = 0` is the identity.
///
/// # Panics
/// If `s <= 0` or `t < 0`.
pub fn evolve_spectral(f: &HaarExpansion, s: f64, t: f64) -> HaarExpansion {
    assert!(s > 0.0 && t >= 0.0, "evolution needs s > 0 and t >= 0");
    if t == 0.0 {
        return f.clone();
    }
    let coefficients = f
        .coefficients
        .iter()
        .map(|(i, c)| (i.clone(), c * heat_multiplier(i, s, t)))
        .collect();
    let mean_part = f.mean_part.clone().map(|mut m| {
        match m.evolution.iter_mut().find(|p| p.s == s) {
            Some(p) => p.t += t,
            None => m.evolution.push(DiffusionParams { s, t }),
        }
        m
    });
    HaarExpansion {
        coefficients,
        mean_part,
    }
}

/// `u(x, t) = ∫ K_s(x, y; t) f(y) dy` integrated shell by shell.
///
/// On `S_j` the kernel is `κ_j = A_j - 2^j e^{-t 2^{js}}` with
/// `A_j = Σ_{i<j} 2^i e^{-t 2^{is}}`. Shells outside the support hull carry no
/// mass; shells finer than every piece carry `f(x) |S_j|` and are summed
/// until `|f(x)| (A_∞ 2^{-j-1} + e^{-t 2^{(j+1)s}})` certifies the tail.
pub fn evolve_pointwise(
    f: &PiecewiseDyadicFunction,
    x: &DyadicPoint,
    params: &DiffusionParams,
    trunc: &TruncationPolicy,
) -> Result<f64> {
    let (top, bottom) = match shell_range(f, x) {
        Some(r) => r,
        None => return Ok(0.0),
    };
    let (s, t) = (params.s, params.t);
    let fx = f.eval(x);
    let tol = 0.25 * trunc.tail_tol;
    let weighted = |i: i64| (i as f64 * std::f64::consts::LN_2 - t * (s * i as f64).exp2()).exp();

    // A_top from the left tail, bounded by Σ_{i<K} 2^i = 2^K
    let mut a = CompensatedSum::new();
    let mut i = top - 1;
    let mut terms = 0usize;
    loop {
        a.add(weighted(i));
        if pow2(i) <= tol && pow2(i) <= f64::EPSILON * a.value() {
            break;
        }
        i -= 1;
        terms += 1;
        if terms > trunc.max_terms {
            return Err(Error::CapExceeded {
                what: "kernel prefix sum",
                limit: trunc.max_terms,
            });
        }
    }
    let a_total = bilateral_sum(
        s,
        t,
        &TruncationPolicy {
            tail_tol: tol,
            ..*trunc
        },
    )?;

    let mut u = CompensatedSum::new();
    let growth = s.exp2() - 1.0;
    for j in top..top + trunc.max_depth as i64 {
        let e_j = weighted(j);
        let kappa = a.value() - e_j;
        let mass = if j < bottom {
            shell_integral(f, x, j)
        } else {
            fx * pow2(-j - 1)
        };
        u.add(kappa * mass);
        a.add(e_j);
        if j >= bottom {
            let q = (-t * (s * j as f64).exp2() * growth).exp();
            let next = (-t * (s * (j + 1) as f64).exp2()).exp();
            let tail = fx.abs() * (a_total * pow2(-j - 1) + 2.0 * next);
            if q <= 0.5 && tail <= tol {
                return Ok(u.value());
            }
        }
    }
    Err(Error::CapExceeded {
        what: "kernel shell sum",
        limit: trunc.max_depth,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn p(v: f64) -> DyadicPoint {
        DyadicPoint::from_f64(v).unwrap()
    }

    fn iv(j: i64, k: u64) -> DyadicInterval {
        DyadicInterval::new(j, k)
    }

    fn tr() -> TruncationPolicy {
        TruncationPolicy::default()
    }

    /// Brute-force shell sum: levels `-depth..depth` around `x`, each shell
    /// integral computed from piece overlaps, plus the outer geometric tail.
    fn shell_oracle(f: &PiecewiseDyadicFunction, x: &DyadicPoint, s: f64, depth: i64) -> f64 {
        let fx = f.eval(x);
        let mut total = 0.0;
        for j in -depth..depth {
            let outer = DyadicInterval::containing(x, j);
            let inner = DyadicInterval::containing(x, j + 1);
            let shell: f64 = f
                .pieces()
                .iter()
                .map(|(piece, v)| v * (piece.overlap_length(&outer) - piece.overlap_length(&inner)))
                .sum();
            total += 2f64.powf((1.0 + s) * j as f64) * (shell - fx * 2f64.powi(-(j as i32) - 1));
        }
        let tail: f64 = -0.5 * fx * 2f64.powf(-s * (depth + 1) as f64) / (1.0 - 2f64.powf(-s));
        total + tail
    }

    #[test]
    fn constants_are_annihilated() {
        let f = PiecewiseDyadicFunction::default();
        assert_eq!(apply_laplacian(&f, &p(0.3), 0.5, &tr()).unwrap(), 0.0);
    }

    #[test]
    fn order_must_be_in_unit_interval() {
        let f = PiecewiseDyadicFunction::haar(&iv(0, 0));
        assert_eq!(
            apply_laplacian(&f, &p(0.3), 1.0, &tr()),
            Err(Error::OrderOutOfRange(1.0))
        );
        assert!(haar_eigenvalue(&iv(0, 0), 0.0, &tr()).is_err());
    }

    #[test]
    fn matches_shell_oracle() {
        let f = PiecewiseDyadicFunction::haar(&iv(0, 0));
        let x = p(0.25);
        let v = apply_laplacian(&f, &x, 0.5, &tr()).unwrap();
        let oracle = shell_oracle(&f, &x, 0.5, 100);
        assert!((v - oracle).abs() < 1e-12, "{v} vs {oracle}");
        let lambda = haar_eigenvalue(&iv(0, 0), 0.5, &tr()).unwrap();
        assert!((v + lambda * f.eval(&x)).abs() < 1e-12);

        let g = PiecewiseDyadicFunction::new(vec![(iv(2, 1), 3.0), (iv(0, 2), -1.5), (iv(4, 3), 0.25)]).unwrap();
        for x in [0.0, 0.3, 0.2, 2.5, 5.0, 0.21] {
            let v = apply_laplacian(&g, &p(x), 0.3, &tr()).unwrap();
            let oracle = shell_oracle(&g, &p(x), 0.3, 100);
            assert!((v - oracle).abs() < 1e-11, "x = {x}: {v} vs {oracle}");
        }
    }

    #[test]
    fn eigenvalue_has_hand_derived_constant() {
        // shell at the parent level contributes -1, coarser shells -1/(2(2^s - 1))
        for s in [0.25, 0.5, 0.75] {
            let m = laplacian_constant(s, &tr()).unwrap();
            let expected = 1.0 + 0.5 / (2f64.powf(s) - 1.0);
            assert!((m - expected).abs() < 1e-12, "s = {s}");
        }
    }

    #[test]
    fn eigenvalue_scaling() {
        for s in [0.25, 0.5, 0.75] {
            let a = haar_eigenvalue(&iv(0, 0), s, &tr()).unwrap();
            let b = haar_eigenvalue(&iv(1, 0), s, &tr()).unwrap();
            assert!(((a / b) - 0.5f64.powf(s)).abs() < 1e-12);
            assert!(a > 0.0);
        }
    }

    #[test]
    fn linearity() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let f = random_piecewise(&mut rng);
            let g = random_piecewise(&mut rng);
            let (alpha, beta) = (rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
            let combo = f.scaled(alpha).add(&g.scaled(beta));
            let x = DyadicPoint::new(rng.gen_range(0u32..1 << 10), 8);
            let lhs = apply_laplacian(&combo, &x, 0.4, &tr()).unwrap();
            let rhs = alpha * apply_laplacian(&f, &x, 0.4, &tr()).unwrap()
                + beta * apply_laplacian(&g, &x, 0.4, &tr()).unwrap();
            assert!((lhs - rhs).abs() < 1e-10 * (1.0 + lhs.abs()), "{lhs} vs {rhs}");
        }
    }

    fn random_piecewise(rng: &mut ChaCha8Rng) -> PiecewiseDyadicFunction {
        let mut pieces: Vec<(DyadicInterval, f64)> = Vec::new();
        for _ in 0..4 {
            let j = rng.gen_range(0i64..5);
            let k = rng.gen_range(0u64..(4u64 << j));
            let cand = DyadicInterval::new(j, k);
            if pieces.iter().all(|(q, _)| q.is_disjoint(&cand)) {
                pieces.push((cand, rng.gen_range(-3.0..3.0)));
            }
        }
        PiecewiseDyadicFunction::new(pieces).unwrap()
    }

    #[test]
    fn evolve_spectral_examples() {
        let e = HaarExpansion::from_coefficients([(iv(0, 0), 2.0), (iv(3, 5), -1.0)]);
        assert_eq!(evolve_spectral(&e, 1.0, 0.0), e);
        let one = evolve_spectral(&HaarExpansion::from_coefficients([(iv(0, 0), 1.0)]), 1.0, 1.0);
        assert!((one.coefficients[&iv(0, 0)] - (-1f64).exp()).abs() < 1e-16);
        let twice = evolve_spectral(&evolve_spectral(&e, 0.5, 0.3), 0.5, 0.9);
        let once = evolve_spectral(&e, 0.5, 1.2);
        for (i, c) in &once.coefficients {
            assert!((twice.coefficients[i] - c).abs() <= 4.0 * f64::EPSILON * c.abs());
        }
    }

    #[test]
    fn evolve_pointwise_of_a_wavelet() {
        let f = PiecewiseDyadicFunction::haar(&iv(0, 0));
        let pr = DiffusionParams::new(1.0, 1.0).unwrap();
        let u = evolve_pointwise(&f, &p(0.25), &pr, &tr()).unwrap();
        assert!((u - (-1f64).exp()).abs() < 1e-12, "{u}");
        let late = evolve_pointwise(&f, &p(0.25), &DiffusionParams::new(1.0, 1e3).unwrap(), &tr()).unwrap();
        assert!(late.abs() < 1e-6);
    }

    #[test]
    fn routes_agree_for_indicator() {
        let f = PiecewiseDyadicFunction::indicator(iv(0, 0), 1.0);
        let pr = DiffusionParams::new(0.7, 0.5).unwrap();
        let spectral = evolve_spectral(&f.to_haar(), pr.s, pr.t);
        for x in [0.1, 0.5, 0.99, 1.0, 3.0, 100.0] {
            let a = evolve_pointwise(&f, &p(x), &pr, &tr()).unwrap();
            let b = spectral.evaluate(&p(x), &tr()).unwrap();
            assert!((a - b).abs() < 1e-10, "x = {x}: {a} vs {b}");
        }
    }

    #[test]
    fn finer_scales_decay_faster() {
        let mut prev = 0.0;
        for level in -5..=5 {
            let m = heat_multiplier(&iv(level, 0), 0.5, 1.0);
            assert!(level == -5 || m < prev);
            prev = m;
        }
    }
}
