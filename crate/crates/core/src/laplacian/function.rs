//! Piecewise-constant dyadic functions and their finite Haar expansions.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use num_bigint::BigUint;

use crate::dyadic::{haar_eval, DyadicInterval, DyadicPoint};
use crate::error::{Error, Result};
use crate::numeric::{pow2, pow2_half, CompensatedSum};
use crate::spectral::{DiffusionParams, TruncationPolicy};

/// Finitely many disjoint dyadic pieces with constant values; zero elsewhere.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PiecewiseDyadicFunction {
    pieces: Vec<(DyadicInterval, f64)>,
}

impl PiecewiseDyadicFunction {
    pub fn new(pieces: Vec<(DyadicInterval, f64)>) -> Result<Self> {
        for (i, (a, _)) in pieces.iter().enumerate() {
            for (b, _) in &pieces[i + 1..] {
                if !a.is_disjoint(b) {
                    return Err(Error::OverlappingPieces(format!("{a} and {b}")));
                }
            }
        }
        if let Some((i, v)) = pieces.iter().find(|(_, v)| !v.is_finite()) {
            return Err(Error::Range {
                name: "value",
                reason: format!("non-finite value {v} on {i}"),
            });
        }
        Ok(PiecewiseDyadicFunction { pieces })
    }

    /// `c * 1_I`.
    pub fn indicator(interval: DyadicInterval, value: f64) -> Self {
        PiecewiseDyadicFunction {
            pieces: vec![(interval, value)],
        }
    }

    /// The Haar wavelet `h_I` as two half-interval pieces.
    pub fn haar(interval: &DyadicInterval) -> Self {
        let amp = pow2_half(interval.level());
        let [left, right] = interval.children();
        PiecewiseDyadicFunction {
            pieces: vec![(left, amp), (right, -amp)],
        }
    }

    pub fn pieces(&self) -> &[(DyadicInterval, f64)] {
        &self.pieces
    }

    pub fn eval(&self, x: &DyadicPoint) -> f64 {
        self.pieces.iter().find(|(i, _)| i.contains(x)).map_or(0.0, |(_, v)| *v)
    }

    /// Smallest dyadic interval containing every piece.
    pub fn hull(&self) -> Option<DyadicInterval> {
        let mut iter = self.pieces.iter().map(|(i, _)| i);
        let first = iter.next()?.clone();
        Some(iter.fold(first, |acc, i| acc.common_ancestor(i)))
    }

    /// Finest level among the pieces.
    pub fn finest_level(&self) -> Option<i64> {
        self.pieces.iter().map(|(i, _)| i.level()).max()
    }

    /// `∫_J f`, exact up to floating rounding of the piece values.
    pub fn integral_over(&self, interval: &DyadicInterval) -> f64 {
        self.pieces
            .iter()
            .map(|(p, v)| v * p.overlap_length(interval))
            .collect::<CompensatedSum>()
            .value()
    }

    pub fn integral(&self) -> f64 {
        self.pieces
            .iter()
            .map(|(p, v)| v * p.length())
            .collect::<CompensatedSum>()
            .value()
    }

    /// Whether `f` is constant on `J` (a single piece covers it, or none meets it).
    fn constant_on(&self, interval: &DyadicInterval) -> bool {
        !self
            .pieces
            .iter()
            .any(|(p, _)| interval.contains_interval(p) && p != interval)
    }

    pub fn scaled(&self, factor: f64) -> Self {
        PiecewiseDyadicFunction {
            pieces: self.pieces.iter().map(|(i, v)| (i.clone(), v * factor)).collect(),
        }
    }

    /// `self + other` on the common refinement.
    pub fn add(&self, other: &PiecewiseDyadicFunction) -> Self {
        let mut leaves = Vec::new();
        let all: Vec<&DyadicInterval> = self.pieces.iter().chain(&other.pieces).map(|(i, _)| i).collect();
        let tops: Vec<DyadicInterval> = all
            .iter()
            .filter(|i| !all.iter().any(|j| j != *i && j.contains_interval(i)))
            .map(|i| (*i).clone())
            .collect::<std::collections::BTreeSet<_>>()
            .into_iter()
            .collect();
        for top in tops {
            refine(&top, &all, &mut leaves);
        }
        let pieces = leaves
            .into_iter()
            .map(|leaf| {
                let x = leaf.left();
                let v = self.eval(&x) + other.eval(&x);
                (leaf, v)
            })
            .filter(|(_, v)| *v != 0.0)
            .collect();
        PiecewiseDyadicFunction { pieces }
    }

    /// Exact Haar decomposition inside the hull plus the remaining mean part.
    pub fn to_haar(&self) -> HaarExpansion {
        let mut coefficients = BTreeMap::new();
        let hull = match self.hull() {
            Some(h) => h,
            None => return HaarExpansion::default(),
        };
        let mut stack = vec![hull.clone()];
        while let Some(interval) = stack.pop() {
            if self.constant_on(&interval) {
                continue;
            }
            let [left, right] = interval.children();
            let c = pow2_half(interval.level()) * (self.integral_over(&left) - self.integral_over(&right));
            if c != 0.0 {
                coefficients.insert(interval.clone(), c);
            }
            stack.push(left);
            stack.push(right);
        }
        let mass = self.integral();
        HaarExpansion {
            coefficients,
            mean_part: (mass != 0.0).then(|| MeanPart {
                interval: hull,
                mass,
                evolution: Vec::new(),
            }),
        }
    }
}

fn refine(interval: &DyadicInterval, all: &[&DyadicInterval], out: &mut Vec<DyadicInterval>) {
    if all.iter().any(|p| interval.contains_interval(p) && *p != interval) {
        for child in interval.children() {
            refine(&child, all, out);
        }
    } else {
        out.push(interval.clone());
    }
}

/// The nonzero-mean remainder `mass · 1_J / |J|` of a decomposition, tracked
/// apart from the Haar coefficients together with the evolutions applied to it.
#[derive(Debug, Clone, PartialEq)]
pub struct MeanPart {
    pub interval: DyadicInterval,
    pub mass: f64,
    /// Accumulated `(s, t)` evolutions; equal orders are merged.
    pub evolution: Vec<DiffusionParams>,
}

/// Sparse Haar coefficients keyed by support interval.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct HaarExpansion {
    pub coefficients: BTreeMap<DyadicInterval, f64>,
    pub mean_part: Option<MeanPart>,
}

impl HaarExpansion {
    pub fn from_coefficients(coefficients: impl IntoIterator<Item = (DyadicInterval, f64)>) -> Self {
        let mut map = BTreeMap::new();
        for (i, c) in coefficients {
            *map.entry(i).or_insert(0.0) += c;
        }
        HaarExpansion {
            coefficients: map,
            mean_part: None,
        }
    }

    pub fn is_mean_zero(&self) -> bool {
        self.mean_part.is_none()
    }

    /// Pointwise value of the expansion.
    pub fn evaluate(&self, x: &DyadicPoint, trunc: &TruncationPolicy) -> Result<f64> {
        let mut acc: CompensatedSum = self.coefficients.iter().map(|(i, c)| c * haar_eval(i, x)).collect();
        if let Some(mean) = &self.mean_part {
            acc.add(mean.evaluate(x, trunc)?);
        }
        Ok(acc.value())
    }

    /// Piecewise-constant form of a mean-zero expansion.
    pub fn to_piecewise(&self) -> Result<PiecewiseDyadicFunction> {
        if let Some(m) = &self.mean_part {
            if !m.evolution.is_empty() {
                return Err(Error::Range {
                    name: "expansion",
                    reason: "an evolved mean part has no finite piecewise form".into(),
                });
            }
        }
        let mut supports: Vec<&DyadicInterval> = self.coefficients.keys().collect();
        if let Some(m) = &self.mean_part {
            supports.push(&m.interval);
        }
        let tops: Vec<DyadicInterval> = supports
            .iter()
            .filter(|i| !supports.iter().any(|j| j != *i && j.contains_interval(i)))
            .map(|i| (*i).clone())
            .collect::<std::collections::BTreeSet<_>>()
            .into_iter()
            .collect();
        let mut leaves = Vec::new();
        for top in &tops {
            // split every support into halves so wavelet signs are resolved
            let halves: Vec<DyadicInterval> = supports
                .iter()
                .filter(|i| top.contains_interval(i))
                .flat_map(|i| i.children())
                .collect();
            let refs: Vec<&DyadicInterval> = halves.iter().collect();
            refine(top, &refs, &mut leaves);
        }
        let trunc = TruncationPolicy::default();
        let mut pieces = Vec::with_capacity(leaves.len());
        for leaf in leaves {
            let v = self.evaluate(&leaf.left(), &trunc)?;
            if v != 0.0 {
                pieces.push((leaf, v));
            }
        }
        PiecewiseDyadicFunction::new(pieces)
    }

    /// Text form: one `j k coefficient` record per line.
    pub fn to_records(&self) -> String {
        let mut out = String::from("# j k coefficient\n");
        if let Some(m) = &self.mean_part {
            // informational only; not read back
            let _ = writeln!(
                out,
                "# mean-part level {} index {} mass {:.16e}",
                m.interval.level(),
                m.interval.index(),
                m.mass
            );
        }
        for (i, c) in &self.coefficients {
            let _ = writeln!(out, "{} {} {:.16e}", i.level(), i.index(), c);
        }
        out
    }

    /// Parses `j k coefficient` records; blank lines and `#` comments are skipped.
    pub fn parse_records(text: &str, max_level: i64) -> Result<Self> {
        let mut coefficients = Vec::new();
        for (n, raw) in text.lines().enumerate() {
            let line_no = n + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |message: String| Error::ParseLine { line: line_no, message };
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 3 {
                return Err(err(format!(
                    "expected `j k coefficient`, found {} fields",
                    fields.len()
                )));
            }
            let j: i64 = fields[0]
                .parse()
                .map_err(|_| err(format!("bad level `{}`", fields[0])))?;
            let k = BigUint::parse_bytes(fields[1].as_bytes(), 10)
                .ok_or_else(|| err(format!("bad index `{}`", fields[1])))?;
            let c: f64 = fields[2]
                .parse()
                .map_err(|_| err(format!("bad coefficient `{}`", fields[2])))?;
            if !c.is_finite() {
                return Err(err(format!("non-finite coefficient `{}`", fields[2])));
            }
            let interval = DyadicInterval::new(j, k)
                .checked_level_bound(max_level)
                .map_err(|e| err(e.to_string()))?;
            coefficients.push((interval, c));
        }
        Ok(HaarExpansion::from_coefficients(coefficients))
    }
}

impl MeanPart {
    fn log_multiplier(&self, interval: &DyadicInterval) -> f64 {
        self.evolution
            .iter()
            .map(|p| -p.t * (p.s * interval.level() as f64).exp2())
            .sum()
    }

    /// `mass · 1_J / |J|` before evolution; afterwards the ancestor series
    /// `Σ_{I ⊋ J} mass · m(I) h_I(J) h_I(x)`, whose terms are bounded by `|mass| / |I|`.
    pub fn evaluate(&self, x: &DyadicPoint, trunc: &TruncationPolicy) -> Result<f64> {
        if self.evolution.is_empty() {
            return Ok(if self.interval.contains(x) {
                self.mass * pow2(self.interval.level())
            } else {
                0.0
            });
        }
        let anchor = self.interval.left();
        let mut acc = CompensatedSum::new();
        let mut ancestor = self.interval.parent();
        for _ in 0..trunc.max_terms {
            let h = haar_eval(&ancestor, x);
            if h != 0.0 {
                acc.add(self.mass * self.log_multiplier(&ancestor).exp() * haar_eval(&ancestor, &anchor) * h);
            }
            if self.mass.abs() * pow2(ancestor.level()) <= 0.5 * trunc.tail_tol {
                return Ok(acc.value());
            }
            ancestor = ancestor.parent();
        }
        Err(Error::CapExceeded {
            what: "mean-part ancestor series",
            limit: trunc.max_terms,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(v: f64) -> DyadicPoint {
        DyadicPoint::from_f64(v).unwrap()
    }

    fn iv(j: i64, k: u64) -> DyadicInterval {
        DyadicInterval::new(j, k)
    }

    #[test]
    fn rejects_overlaps() {
        let r = PiecewiseDyadicFunction::new(vec![(iv(0, 0), 1.0), (iv(1, 1), 2.0)]);
        assert!(matches!(r, Err(Error::OverlappingPieces(_))));
        assert!(PiecewiseDyadicFunction::new(vec![(iv(1, 0), 1.0), (iv(1, 1), 2.0)]).is_ok());
    }

    #[test]
    fn haar_decomposition_of_a_wavelet() {
        let f = PiecewiseDyadicFunction::haar(&iv(2, 3));
        let e = f.to_haar();
        assert!(e.is_mean_zero());
        assert_eq!(e.coefficients.len(), 1);
        assert!((e.coefficients[&iv(2, 3)] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn round_trip_mean_zero() {
        let e = HaarExpansion::from_coefficients([(iv(0, 0), 0.5), (iv(2, 1), -1.25), (iv(-1, 1), 3.0)]);
        let f = e.to_piecewise().unwrap();
        let back = f.to_haar();
        assert!(back.is_mean_zero());
        for (i, c) in &e.coefficients {
            assert!((back.coefficients[i] - c).abs() < 1e-14, "{i}");
        }
        assert_eq!(back.coefficients.len(), e.coefficients.len());
    }

    #[test]
    fn indicator_keeps_its_mass() {
        let f = PiecewiseDyadicFunction::new(vec![(iv(1, 0), 1.0), (iv(2, 3), 4.0)]).unwrap();
        let e = f.to_haar();
        let m = e.mean_part.as_ref().unwrap();
        assert_eq!(m.interval, iv(0, 0));
        assert_eq!(m.mass, 1.5);
        let tr = TruncationPolicy::default();
        for x in [0.1, 0.3, 0.6, 0.8, 0.9, 1.5] {
            assert!(
                (e.evaluate(&p(x), &tr).unwrap() - f.eval(&p(x))).abs() < 1e-14,
                "x = {x}"
            );
        }
        // the ancestor series at t -> 0 reproduces 1_J |J|^{-1}
        let mut m2 = m.clone();
        m2.evolution.push(DiffusionParams::new(1.0, 1e-300).unwrap());
        assert!((m2.evaluate(&p(0.3), &tr).unwrap() - 1.5).abs() < 1e-11);
        assert!(m2.evaluate(&p(1.3), &tr).unwrap().abs() < 1e-11);
    }

    #[test]
    fn records_round_trip_and_errors() {
        let e = HaarExpansion::from_coefficients([(iv(0, 0), 0.1), (iv(-3, 2), -7.5e-3), (iv(40, 12345), 1.0 / 3.0)]);
        let back = HaarExpansion::parse_records(&e.to_records(), 1024).unwrap();
        assert_eq!(back, e);
        let err = HaarExpansion::parse_records("# c\n0 0 1.0\n0 x 2\n", 1024).unwrap_err();
        assert_eq!(
            err,
            Error::ParseLine {
                line: 3,
                message: "bad index `x`".into()
            }
        );
        assert!(HaarExpansion::parse_records("2000 0 1.0", 1024).is_err());
        assert!(HaarExpansion::parse_records("0 0", 1024).is_err());
    }

    #[test]
    fn sum_of_functions() {
        let f = PiecewiseDyadicFunction::indicator(iv(0, 0), 1.0);
        let g = PiecewiseDyadicFunction::haar(&iv(1, 1));
        let h = f.add(&g.scaled(2.0));
        for x in [0.1, 0.6, 0.8, 1.2] {
            let expect = f.eval(&p(x)) + 2.0 * g.eval(&p(x));
            assert_eq!(h.eval(&p(x)), expect);
        }
    }
}
