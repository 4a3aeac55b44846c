//! The `dyadic` command-line front end.
//!
//! Exit status: 0 success, 2 parse error, 3 range error, 4 cap exceeded,
//! 5 verification failure, 1 anything else.

mod table;

use std::fs;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::dyadic::{smallest_common_interval, DyadicInterval, DyadicPoint, Rounding};
use crate::error::{Error, Result};
use crate::laplacian::{self, HaarExpansion};
use crate::numeric::pow2;
use crate::spectral::{self, Ball, DiffusionParams, TruncationPolicy};
use crate::verify::{self, Suite};

pub use table::{Cell, Output, Table};

pub const EXIT_OK: i32 = 0;
pub const EXIT_OTHER: i32 = 1;
pub const EXIT_PARSE: i32 = 2;
pub const EXIT_RANGE: i32 = 3;
pub const EXIT_CAP: i32 = 4;
pub const EXIT_VERIFY: i32 = 5;

/// Exit status for a library error.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Parse(_) | Error::ParseLine { .. } => EXIT_PARSE,
        Error::Range { .. }
        | Error::NegativeInput(_)
        | Error::LevelOutOfRange { .. }
        | Error::OrderOutOfRange(_)
        | Error::UnsupportedDimension(_)
        | Error::OverlappingPieces(_) => EXIT_RANGE,
        Error::CapExceeded { .. } | Error::QuadratureNonConvergence { .. } | Error::NonConvergence(_) => EXIT_CAP,
        Error::QuadratureMismatch(_) | Error::ResidualTooLarge { .. } | Error::Io(_) => EXIT_OTHER,
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "dyadic",
    version,
    about = "Dyadic distance, Haar heat kernels and diffusion metrics on [0, ∞)"
)]
pub struct RunConfig {
    #[command(flatten)]
    pub global: GlobalOptions,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct GlobalOptions {
    /// Absolute bound on every discarded series tail.
    #[arg(long, global = true, env = "DYADIC_TAIL_TOL", default_value_t = 1e-12)]
    pub tail_tol: f64,
    /// Levels enumerated below a starting interval.
    #[arg(long, global = true, env = "DYADIC_MAX_DEPTH", default_value_t = 200)]
    pub max_depth: usize,
    /// Terms summed in any one series.
    #[arg(long, global = true, default_value_t = 100_000)]
    pub max_terms: usize,
    /// Significant binary digits kept when rounding decimal inputs.
    #[arg(long, global = true, default_value_t = 53)]
    pub digits: u32,
    /// Largest admissible |level| of an input point or interval.
    #[arg(long, global = true, default_value_t = crate::dyadic::DEFAULT_MAX_LEVEL)]
    pub max_level: i64,
    #[arg(long, global = true, value_enum, default_value_t = Format::Records)]
    pub format: Format,
    /// Write to this file instead of standard output.
    #[arg(long, short, global = true)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    /// `#` header lines, then whitespace-separated rows.
    Records,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    Closed,
    Spectral,
    Both,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Dyadic distance and the smallest dyadic interval holding both points.
    Delta {
        #[arg(allow_hyphen_values = true)]
        x: String,
        #[arg(allow_hyphen_values = true)]
        y: String,
    },
    /// Diffusion distance d_t(x, y).
    Distance {
        #[arg(allow_hyphen_values = true)]
        x: String,
        #[arg(allow_hyphen_values = true)]
        y: String,
        #[arg(long)]
        s: f64,
        #[arg(long)]
        t: f64,
        #[arg(long, value_enum, default_value_t = Method::Both)]
        method: Method,
    },
    /// The diffusion ball {y : d_t(x, y) < r}.
    Ball {
        #[arg(allow_hyphen_values = true)]
        x: String,
        #[arg(allow_hyphen_values = true)]
        r: f64,
        #[arg(long)]
        s: f64,
        #[arg(long)]
        t: f64,
    },
    /// ψ_t(2^i) for i_min <= i <= i_max, with ψ_∞ and the c_t(s) bounds.
    Profile {
        #[arg(long)]
        s: f64,
        #[arg(long)]
        t: f64,
        #[arg(long, allow_hyphen_values = true, default_value_t = -20)]
        i_min: i64,
        #[arg(long, allow_hyphen_values = true, default_value_t = 20)]
        i_max: i64,
        /// Off-lattice points inserted between consecutive powers of two.
        #[arg(long, default_value_t = 0)]
        subdivide: u32,
    },
    /// Heat evolution of a Haar expansion read from `j k coefficient` records.
    Evolve {
        input: PathBuf,
        #[arg(long)]
        s: f64,
        #[arg(long)]
        t: f64,
        /// Query points for u(x, t).
        #[arg(long, num_args = 1..)]
        at: Vec<String>,
        /// Write the evolved expansion here instead of into the report.
        #[arg(long)]
        expansion_out: Option<PathBuf>,
    },
    /// Run property suites with fixed seeds.
    Verify {
        #[arg(value_enum, default_value_t = Suite::All)]
        suite: Suite,
    },
}

impl GlobalOptions {
    pub fn truncation(&self) -> Result<TruncationPolicy> {
        TruncationPolicy::new(self.tail_tol, self.max_terms, self.max_depth)
    }

    fn point(&self, text: &str) -> Result<(DyadicPoint, Rounding)> {
        let (p, r) = DyadicPoint::from_decimal_str(text, self.digits)?;
        Ok((p.checked_level_bound(self.max_level)?, r))
    }
}

/// `m/2^e`, read back without loss.
fn exact(p: &DyadicPoint) -> Cell {
    Cell::text(format!("{}/2^{}", p.mantissa(), p.exponent()))
}

fn rounding_table(inputs: &[(&DyadicPoint, &Rounding)]) -> Table {
    let mut t = Table::new("rounding", &["input", "value", "exact", "abs_error", "digits"]);
    for (p, r) in inputs {
        t.push(vec![
            Cell::text(r.input.clone()),
            exact(p),
            r.exact.into(),
            r.abs_error.into(),
            (r.digits as i64).into(),
        ]);
    }
    t
}

fn interval_cells(i: &DyadicInterval) -> Vec<Cell> {
    vec![i.level().into(), i.index().into(), exact(&i.left()), exact(&i.right())]
}

fn diffusion(s: f64, t: f64) -> Result<DiffusionParams> {
    DiffusionParams::new(s, t)
}

/// Runs one parsed command; `Ok(false)` means a verification failure.
pub fn execute(cfg: &RunConfig) -> Result<(Output, bool)> {
    let g = &cfg.global;
    let trunc = g.truncation()?;
    match &cfg.command {
        Command::Delta { x, y } => {
            let (px, rx) = g.point(x)?;
            let (py, ry) = g.point(y)?;
            let mut out = Output::new("delta");
            let mut t = Table::new("delta", &["delta", "log2_delta", "level", "index", "left", "right"]);
            match smallest_common_interval(&px, &py) {
                Some(i) => {
                    let mut row = vec![i.length().into(), i.log2_length().into()];
                    row.extend(interval_cells(&i));
                    t.push(row);
                }
                None => {
                    out.notes
                        .push("x = y: the smallest interval degenerates to a point".into());
                    let p = Cell::text("point");
                    t.push(vec![
                        0.0.into(),
                        f64::NEG_INFINITY.into(),
                        p.clone(),
                        p,
                        exact(&px),
                        exact(&px),
                    ]);
                }
            }
            out.tables.push(t);
            out.tables.push(rounding_table(&[(&px, &rx), (&py, &ry)]));
            Ok((out, true))
        }
        Command::Distance { x, y, s, t, method } => {
            let p = diffusion(*s, *t)?;
            let (px, rx) = g.point(x)?;
            let (py, ry) = g.point(y)?;
            let mut columns = vec!["s", "t", "delta"];
            let mut row: Vec<Cell> = vec![
                (*s).into(),
                (*t).into(),
                crate::dyadic::dyadic_distance(&px, &py).into(),
            ];
            let closed = match method {
                Method::Closed | Method::Both => Some(spectral::distance_closed(&px, &py, &p, &trunc)?),
                Method::Spectral => None,
            };
            let spectral = match method {
                Method::Spectral | Method::Both => Some(spectral::distance_spectral(&px, &py, &p, &trunc)?),
                Method::Closed => None,
            };
            if let Some(c) = closed {
                columns.push("closed");
                row.push(c.into());
            }
            if let Some(v) = spectral {
                columns.push("spectral");
                row.push(v.into());
            }
            if let (Some(c), Some(v)) = (closed, spectral) {
                columns.push("discrepancy");
                row.push((c - v).abs().into());
            }
            let mut table = Table::new("distance", &columns);
            table.push(row);
            let mut out = Output::new("distance");
            out.tables.push(table);
            out.tables.push(rounding_table(&[(&px, &rx), (&py, &ry)]));
            Ok((out, true))
        }
        Command::Ball { x, r, s, t } => {
            let p = diffusion(*s, *t)?;
            let (px, rx) = g.point(x)?;
            let b = spectral::ball(&px, *r, &p, &trunc)?;
            let inf = spectral::psi_infinity(&p, &trunc)?;
            let mut table = Table::new(
                "ball",
                &[
                    "r",
                    "kind",
                    "level",
                    "index",
                    "left",
                    "right",
                    "psi_length",
                    "psi_parent",
                    "psi_infinity",
                ],
            );
            match &b {
                Ball::Interval(i) => {
                    let mut row = vec![(*r).into(), Cell::text("interval")];
                    row.extend(interval_cells(i));
                    row.push(spectral::psi_pow2(&p, i.log2_length(), &trunc)?.into());
                    row.push(spectral::psi_pow2(&p, i.log2_length() + 1, &trunc)?.into());
                    row.push(inf.into());
                    table.push(row);
                }
                Ball::WholeSpace => {
                    let dash = || Cell::text("-");
                    table.push(vec![
                        (*r).into(),
                        Cell::text("whole_space"),
                        dash(),
                        dash(),
                        Cell::text("0/2^0"),
                        f64::INFINITY.into(),
                        dash(),
                        dash(),
                        inf.into(),
                    ]);
                }
            }
            let mut out = Output::new("ball");
            out.notes
                .push("psi_length < r <= psi_parent brackets the radius for an interval ball".into());
            out.tables.push(table);
            out.tables.push(rounding_table(&[(&px, &rx)]));
            Ok((out, true))
        }
        Command::Profile {
            s,
            t,
            i_min,
            i_max,
            subdivide,
        } => {
            if i_min > i_max {
                return Err(Error::Range {
                    name: "i_min",
                    reason: format!("{i_min} exceeds i_max {i_max}"),
                });
            }
            let p = diffusion(*s, *t)?;
            let mut table = Table::new("profile", &["i", "lambda", "psi", "lattice"]);
            for i in *i_min..=*i_max {
                table.push(vec![
                    i.into(),
                    pow2(i).into(),
                    spectral::psi_pow2(&p, i, &trunc)?.into(),
                    true.into(),
                ]);
                if i == *i_max {
                    break;
                }
                for k in 1..=*subdivide {
                    let lambda = (i as f64 + k as f64 / (*subdivide as f64 + 1.0)).exp2();
                    table.push(vec![
                        i.into(),
                        lambda.into(),
                        spectral::psi(&p, lambda, &trunc)?.into(),
                        false.into(),
                    ]);
                }
            }
            let inf = spectral::psi_infinity(&p, &trunc)?;
            let c = spectral::c_t_s(&p, &trunc)?;
            let mut limits = Table::new("limits", &["psi_infinity", "c", "sqrt2_c", "two_c"]);
            limits.push(vec![
                inf.into(),
                c.into(),
                (std::f64::consts::SQRT_2 * c).into(),
                (2.0 * c).into(),
            ]);
            let mut out = Output::new("profile");
            out.notes.push(format!("s {s:.16e} t {t:.16e}"));
            if *subdivide > 0 {
                out.notes
                    .push("rows with lattice = false are off-lattice: δ never takes those values".into());
            }
            out.tables.push(table);
            out.tables.push(limits);
            Ok((out, true))
        }
        Command::Evolve {
            input,
            s,
            t,
            at,
            expansion_out,
        } => {
            if !(s.is_finite() && *s > 0.0) {
                return Err(Error::Range {
                    name: "s",
                    reason: format!("must be positive, got {s}"),
                });
            }
            if !(t.is_finite() && *t >= 0.0) {
                return Err(Error::Range {
                    name: "t",
                    reason: format!("must be nonnegative, got {t}"),
                });
            }
            let text = fs::read_to_string(input)?;
            let f = HaarExpansion::parse_records(&text, g.max_level)?;
            let evolved = laplacian::evolve_spectral(&f, *s, *t);
            let piecewise = f.to_piecewise()?;
            let mut values = Table::new("values", &["x", "spectral", "kernel", "discrepancy"]);
            let mut points = Vec::new();
            for text in at {
                let (x, r) = g.point(text)?;
                let a = evolved.evaluate(&x, &trunc)?;
                let b = if *t == 0.0 {
                    piecewise.eval(&x)
                } else {
                    laplacian::evolve_pointwise(&piecewise, &x, &diffusion(*s, *t)?, &trunc)?
                };
                values.push(vec![exact(&x), a.into(), b.into(), (a - b).abs().into()]);
                points.push((x, r));
            }
            let mut out = Output::new("evolve");
            match expansion_out {
                Some(path) => {
                    fs::write(path, evolved.to_records())?;
                    out.notes
                        .push(format!("evolved expansion written to {}", path.display()));
                }
                None => {
                    let mut e = Table::new("expansion", &["j", "k", "coefficient"]);
                    for (i, c) in &evolved.coefficients {
                        e.push(vec![i.level().into(), i.index().into(), (*c).into()]);
                    }
                    out.tables.push(e);
                }
            }
            out.tables.push(values);
            let refs: Vec<_> = points.iter().map(|(p, r)| (p, r)).collect();
            out.tables.push(rounding_table(&refs));
            Ok((out, true))
        }
        Command::Verify { suite } => {
            let checks = verify::run(*suite, &trunc);
            let mut table = Table::new("checks", &["suite", "name", "status", "measured", "threshold"]);
            let mut out = Output::new(&format!("verify {suite}"));
            for c in &checks {
                table.push(vec![
                    Cell::text(c.suite.to_string()),
                    Cell::text(c.name),
                    Cell::text(if c.passed { "pass" } else { "FAIL" }),
                    c.measured.into(),
                    c.threshold.into(),
                ]);
                out.notes.push(format!("{}: {}", c.name, c.detail));
            }
            let all = checks.iter().all(|c| c.passed);
            let failed = checks.iter().filter(|c| !c.passed).count();
            out.notes.push(format!("{} checks, {failed} failed", checks.len()));
            out.tables.push(table);
            Ok((out, all))
        }
    }
}

fn emit(cfg: &RunConfig, out: &Output) -> Result<()> {
    let text = match cfg.global.format {
        Format::Records => out.to_records(),
        Format::Json => out.to_json(),
    };
    match &cfg.global.output {
        Some(path) => fs::write(path, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

/// Parses `args`, runs the command and returns the exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cfg = match RunConfig::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_PARSE } else { EXIT_OK };
        }
    };
    match execute(&cfg).and_then(|(out, ok)| emit(&cfg, &out).map(|_| ok)) {
        Ok(true) => EXIT_OK,
        Ok(false) => EXIT_VERIFY,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

pub fn main() -> i32 {
    run(std::env::args_os())
}
