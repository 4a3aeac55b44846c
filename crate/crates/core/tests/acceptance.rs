//! Acceptance criteria, one PASS/FAIL line each. Exits nonzero if any fails.

use std::process::Command;
use std::time::{Duration, Instant};

use dyadic_diffusion::spectral::TruncationPolicy;
use dyadic_diffusion::verify::{self, Check};

type Criterion<'a> = (&'static str, Box<dyn Fn() -> Outcome + 'a>);

struct Outcome {
    passed: bool,
    summary: String,
}

fn from_checks(checks: &[Check], elapsed: Duration, budget: Option<Duration>) -> Outcome {
    let mut parts: Vec<String> = checks
        .iter()
        .map(|c| {
            format!(
                "{}{} {:.3e} <= {:.1e}",
                if c.passed { "" } else { "!" },
                c.name,
                c.measured,
                c.threshold
            )
        })
        .collect();
    let in_time = budget.is_none_or(|b| elapsed <= b);
    match budget {
        Some(b) => parts.push(format!("{:.2}s of {}s", elapsed.as_secs_f64(), b.as_secs())),
        None => parts.push(format!("{:.2}s", elapsed.as_secs_f64())),
    }
    Outcome {
        passed: in_time && checks.iter().all(|c| c.passed),
        summary: parts.join("; "),
    }
}

fn timed(budget: Option<Duration>, f: impl FnOnce() -> Vec<Check>) -> Outcome {
    let start = Instant::now();
    let checks = f();
    from_checks(&checks, start.elapsed(), budget)
}

fn verify_all_binary() -> Outcome {
    let start = Instant::now();
    let status = Command::new(env!("CARGO_BIN_EXE_dyadic"))
        .args(["verify", "all"])
        .env_remove("DYADIC_TAIL_TOL")
        .env_remove("DYADIC_MAX_DEPTH")
        .output();
    let elapsed = start.elapsed();
    match status {
        Ok(out) => {
            let code = out.status.code();
            Outcome {
                passed: code == Some(0) && elapsed <= Duration::from_secs(180),
                summary: format!("exit {code:?}; {:.2}s of 180s", elapsed.as_secs_f64()),
            }
        }
        Err(e) => Outcome {
            passed: false,
            summary: format!("could not run binary: {e}"),
        },
    }
}

fn main() {
    let trunc = TruncationPolicy::default();
    let t = &trunc;
    let criteria: Vec<Criterion> = vec![
        (
            "spectral distance equals the closed profile",
            Box::new(move || timed(Some(Duration::from_secs(30)), || vec![verify::distance_equivalence(t)])),
        ),
        (
            "profile strictly increasing on powers of two",
            Box::new(move || timed(None, || vec![verify::profile_monotone(t)])),
        ),
        (
            "profile vanishes at 0 and is sandwiched at infinity",
            Box::new(move || {
                timed(None, || {
                    vec![
                        verify::profile_vanishes(t),
                        verify::profile_sandwich(t),
                        verify::c_t_s_cross_check(t),
                    ]
                })
            }),
        ),
        (
            "heat kernel bound",
            Box::new(move || timed(None, || vec![verify::kernel_bound(t)])),
        ),
        (
            "time-ratio bound and non-equivalence witness",
            Box::new(move || {
                timed(None, || {
                    vec![verify::time_ratio_bound(t), verify::non_equivalence_witness(t)]
                })
            }),
        ),
        (
            "balls are dyadic intervals, stable across time",
            Box::new(move || timed(None, || verify::ball_checks(t))),
        ),
        (
            "Haar eigenstructure of the Laplacian",
            Box::new(move || timed(None, || verify::eigen_checks(t))),
        ),
        (
            "evolution routes agree, semigroup law",
            Box::new(move || timed(None, || vec![verify::evolution_routes(t), verify::semigroup_law()])),
        ),
        (
            "Euclidean Gaussian baseline",
            Box::new(|| timed(Some(Duration::from_secs(60)), verify::euclidean_suite)),
        ),
        ("`verify all` exits 0 in time", Box::new(verify_all_binary)),
    ];

    let mut failures = 0;
    for (n, (label, run)) in criteria.iter().enumerate() {
        let o = run();
        if !o.passed {
            failures += 1;
        }
        println!(
            "criterion {:>2} {} {label}: {}",
            n + 1,
            if o.passed { "PASS" } else { "FAIL" },
            o.summary
        );
    }
    println!(
        "acceptance: {} of {} criteria pass",
        criteria.len() - failures,
        criteria.len()
    );
    if failures > 0 {
        std::process::exit(1);
    }
}
