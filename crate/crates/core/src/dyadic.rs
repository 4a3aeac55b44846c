//! Exact dyadic points and intervals on the half line, the dyadic distance
//! and the Haar system.
//!
//! A point is stored as `mantissa * 2^-exponent` with arbitrary precision
//! integers, so every decision about which dyadic interval contains a point
//! is made with integer comparisons only.

use std::cmp::Ordering;
use std::fmt;

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::numeric::{pow2, pow2_half};

/// Default bound on `|j|` for levels and point exponents accepted from input.
pub const DEFAULT_MAX_LEVEL: i64 = 1024;

/// Nonnegative dyadic rational `mantissa * 2^-exponent` in canonical form.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct DyadicPoint {
    mantissa: BigUint,
    exponent: u64,
}

impl DyadicPoint {
    pub fn new(mantissa: impl Into<BigUint>, exponent: u64) -> Self {
        let mut mantissa = mantissa.into();
        let mut exponent = exponent;
        if mantissa.is_zero() {
            exponent = 0;
        } else {
            let tz = mantissa.trailing_zeros().unwrap_or(0).min(exponent);
            mantissa >>= tz;
            exponent -= tz;
        }
        DyadicPoint { mantissa, exponent }
    }

    pub fn zero() -> Self {
        DyadicPoint::new(0u32, 0)
    }

    /// `2^log2` as an exact point.
    pub fn power_of_two(log2: i64) -> Self {
        if log2 >= 0 {
            DyadicPoint::new(BigUint::one() << log2 as u64, 0)
        } else {
            DyadicPoint::new(1u32, log2.unsigned_abs())
        }
    }

    /// Lossless conversion; every finite binary float is a dyadic rational.
    pub fn from_f64(value: f64) -> Result<Self> {
        if !value.is_finite() {
            return Err(Error::Parse(format!("non-finite coordinate {value}")));
        }
        if value < 0.0 {
            return Err(Error::NegativeInput(value.to_string()));
        }
        if value == 0.0 {
            return Ok(Self::zero());
        }
        let bits = value.to_bits();
        let biased = ((bits >> 52) & 0x7ff) as i64;
        let frac = bits & ((1u64 << 52) - 1);
        let (m, e2) = if biased == 0 {
            (frac, -1074)
        } else {
            (frac | (1u64 << 52), biased - 1075)
        };
        Ok(if e2 >= 0 {
            DyadicPoint::new(BigUint::from(m) << e2 as u64, 0)
        } else {
            DyadicPoint::new(m, (-e2) as u64)
        })
    }

    /// Parses a nonnegative decimal literal (`12`, `0.75`, `3.2e-4`) and rounds it
    /// to `digits` significant binary digits, half to even.
    pub fn from_decimal_str(text: &str, digits: u32) -> Result<(Self, Rounding)> {
        if digits == 0 {
            return crate::error::range_err("digits", "must be at least 1");
        }
        let (num, den) = parse_decimal(text)?;
        if num.is_zero() {
            return Ok((Self::zero(), Rounding::exact(text, digits)));
        }
        // scale so that 2^(digits-1) <= num * 2^e / den < 2^digits
        let mut e = digits as i64 - (num.bits() as i64 - den.bits() as i64);
        let lo = BigUint::one() << (digits - 1);
        let hi = BigUint::one() << digits;
        let (mut q, mut rem, mut d) = scaled_div(&num, &den, e);
        loop {
            if q < lo {
                e += 1;
            } else if q >= hi {
                e -= 1;
            } else {
                break;
            }
            (q, rem, d) = scaled_div(&num, &den, e);
        }
        let exact = rem.is_zero();
        let twice = &rem << 1u32;
        let round_up = match twice.cmp(&d) {
            Ordering::Greater => true,
            Ordering::Less => false,
            Ordering::Equal => q.bit(0),
        };
        let rem_f = ratio_to_f64(&rem, &d);
        let abs_error = if round_up { 1.0 - rem_f } else { rem_f } * pow2(-e);
        if round_up {
            q += 1u32;
        }
        let point = if e >= 0 {
            DyadicPoint::new(q, e as u64)
        } else {
            DyadicPoint::new(q << (-e) as u64, 0)
        };
        let rounding = Rounding {
            input: text.trim().to_string(),
            exact,
            abs_error: if exact { 0.0 } else { abs_error },
            digits,
        };
        Ok((point, rounding))
    }

    pub fn mantissa(&self) -> &BigUint {
        &self.mantissa
    }

    pub fn exponent(&self) -> u64 {
        self.exponent
    }

    pub fn is_zero(&self) -> bool {
        self.mantissa.is_zero()
    }

    /// Nearest-ish `f64`; exact whenever the point fits a double.
    pub fn to_f64(&self) -> f64 {
        let bits = self.mantissa.bits();
        let (m, e) = if bits > 64 {
            let drop = bits - 64;
            (&self.mantissa >> drop, self.exponent as i64 - drop as i64)
        } else {
            (self.mantissa.clone(), self.exponent as i64)
        };
        let m = m.to_f64().unwrap_or(f64::INFINITY);
        // split the scaling so intermediate powers stay in range
        let half = e / 2;
        m * pow2(-half) * pow2(-(e - half))
    }

    /// `floor(x * 2^level)`, i.e. the index of the level-`level` interval containing `x`.
    pub fn floor_at_level(&self, level: i64) -> BigUint {
        let shift = level - self.exponent as i64;
        if shift >= 0 {
            &self.mantissa << shift as u64
        } else {
            &self.mantissa >> (-shift) as u64
        }
    }

    /// Exact `|x - y|`.
    pub fn abs_diff(&self, other: &DyadicPoint) -> DyadicPoint {
        let (a, b, e) = common_scale(self, other);
        let d = if a >= b { a - b } else { b - a };
        DyadicPoint::new(d, e)
    }

    pub fn checked_level_bound(self, bound: i64) -> Result<Self> {
        // finest level needed for the fraction, coarsest for the integer part
        let coarse = self.mantissa.bits() as i64 - self.exponent as i64;
        for level in [self.exponent as i64, coarse] {
            if level > bound {
                return Err(Error::LevelOutOfRange { level, bound });
            }
        }
        Ok(self)
    }
}

impl PartialOrd for DyadicPoint {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for DyadicPoint {
    fn cmp(&self, other: &Self) -> Ordering {
        let (a, b, _) = common_scale(self, other);
        a.cmp(&b)
    }
}

impl fmt::Display for DyadicPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.exponent == 0 {
            write!(f, "{}", self.mantissa)
        } else {
            write!(f, "{}/2^{}", self.mantissa, self.exponent)
        }
    }
}

/// Integer representatives of two points over the common denominator `2^e`.
fn common_scale(x: &DyadicPoint, y: &DyadicPoint) -> (BigUint, BigUint, u64) {
    let e = x.exponent.max(y.exponent);
    (&x.mantissa << (e - x.exponent), &y.mantissa << (e - y.exponent), e)
}

/// How a decimal input was mapped onto a dyadic rational.
#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Rounding {
    pub input: String,
    pub exact: bool,
    pub abs_error: f64,
    pub digits: u32,
}

impl Rounding {
    fn exact(text: &str, digits: u32) -> Self {
        Rounding {
            input: text.trim().to_string(),
            exact: true,
            abs_error: 0.0,
            digits,
        }
    }
}

fn parse_decimal(text: &str) -> Result<(BigUint, BigUint)> {
    let s = text.trim();
    let bad = || Error::Parse(format!("`{text}` is not a decimal number"));
    if s.starts_with('-') {
        return Err(Error::NegativeInput(s.to_string()));
    }
    let s = s.strip_prefix('+').unwrap_or(s);
    let (mant, exp10) = match s.find(['e', 'E']) {
        Some(pos) => {
            let e: i64 = s[pos + 1..].parse().map_err(|_| bad())?;
            (&s[..pos], e)
        }
        None => (s, 0),
    };
    let (int_part, frac_part) = match mant.split_once('.') {
        Some((i, f)) => (i, f),
        None => (mant, ""),
    };
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(bad());
    }
    if !int_part.bytes().chain(frac_part.bytes()).all(|b| b.is_ascii_digit()) {
        return Err(bad());
    }
    let digits = format!("{int_part}{frac_part}");
    let n = BigUint::parse_bytes(digits.as_bytes(), 10).ok_or_else(bad)?;
    let shift = exp10 - frac_part.len() as i64;
    if shift.abs() > 4000 {
        return crate::error::range_err("coordinate", format!("decimal exponent of `{text}` too large"));
    }
    let ten = BigUint::from(10u32);
    Ok(if shift >= 0 {
        (n * ten.pow(shift as u32), BigUint::one())
    } else {
        (n, ten.pow((-shift) as u32))
    })
}

/// `floor(num * 2^e / den)`, the remainder, and the effective denominator.
fn scaled_div(num: &BigUint, den: &BigUint, e: i64) -> (BigUint, BigUint, BigUint) {
    let (n, d) = if e >= 0 {
        (num << e as u64, den.clone())
    } else {
        (num.clone(), den << (-e) as u64)
    };
    let q = &n / &d;
    let r = n - &q * &d;
    (q, r, d)
}

fn ratio_to_f64(num: &BigUint, den: &BigUint) -> f64 {
    // both may exceed f64 range; keep the top 64 bits of the denominator
    let shift = den.bits().saturating_sub(64);
    let n = (num >> shift).to_f64().unwrap_or(0.0);
    let d = (den >> shift).to_f64().unwrap_or(1.0);
    n / d
}

/// The half-open interval `[k 2^-j, (k+1) 2^-j)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DyadicInterval {
    level: i64,
    index: BigUint,
}

impl DyadicInterval {
    pub fn new(level: i64, index: impl Into<BigUint>) -> Self {
        DyadicInterval {
            level,
            index: index.into(),
        }
    }

    /// `[0, 1)`.
    pub fn unit() -> Self {
        DyadicInterval::new(0, 0u32)
    }

    /// The level-`level` interval containing `x`.
    pub fn containing(x: &DyadicPoint, level: i64) -> Self {
        DyadicInterval {
            level,
            index: x.floor_at_level(level),
        }
    }

    pub fn level(&self) -> i64 {
        self.level
    }

    pub fn index(&self) -> &BigUint {
        &self.index
    }

    /// `|I| = 2^-j`.
    pub fn length(&self) -> f64 {
        pow2(-self.level)
    }

    /// `log2 |I|`.
    pub fn log2_length(&self) -> i64 {
        -self.level
    }

    pub fn left(&self) -> DyadicPoint {
        endpoint(&self.index, self.level)
    }

    pub fn right(&self) -> DyadicPoint {
        endpoint(&(&self.index + 1u32), self.level)
    }

    pub fn contains(&self, x: &DyadicPoint) -> bool {
        x.floor_at_level(self.level) == self.index
    }

    pub fn contains_interval(&self, other: &DyadicInterval) -> bool {
        other.level >= self.level && (&other.index >> (other.level - self.level) as u64) == self.index
    }

    pub fn is_disjoint(&self, other: &DyadicInterval) -> bool {
        !self.contains_interval(other) && !other.contains_interval(self)
    }

    pub fn parent(&self) -> DyadicInterval {
        DyadicInterval {
            level: self.level - 1,
            index: &self.index >> 1u32,
        }
    }

    pub fn children(&self) -> [DyadicInterval; 2] {
        let left = &self.index << 1u32;
        let right = &left + 1u32;
        [
            DyadicInterval::new(self.level + 1, left),
            DyadicInterval::new(self.level + 1, right),
        ]
    }

    /// The ancestor (or self) at a coarser or equal level.
    pub fn ancestor_at(&self, level: i64) -> DyadicInterval {
        assert!(level <= self.level, "ancestor level must be coarser");
        DyadicInterval {
            level,
            index: &self.index >> (self.level - level) as u64,
        }
    }

    /// `[I, parent(I), parent^2(I), ...]` with `count` entries.
    pub fn ancestor_chain(&self, count: usize) -> Vec<DyadicInterval> {
        assert!(count >= 1, "ancestor chain needs at least one entry");
        std::iter::successors(Some(self.clone()), |i| Some(i.parent()))
            .take(count)
            .collect()
    }

    /// Smallest dyadic interval containing both intervals.
    pub fn common_ancestor(&self, other: &DyadicInterval) -> DyadicInterval {
        let level = self.level.min(other.level);
        let a = self.ancestor_at(level);
        let b = other.ancestor_at(level);
        let up = (&a.index ^ &b.index).bits() as i64;
        a.ancestor_at(level - up)
    }

    /// `|I ∩ J|`, exact because dyadic intervals are nested or disjoint.
    pub fn overlap_length(&self, other: &DyadicInterval) -> f64 {
        if self.contains_interval(other) {
            other.length()
        } else if other.contains_interval(self) {
            self.length()
        } else {
            0.0
        }
    }

    pub fn checked_level_bound(self, bound: i64) -> Result<Self> {
        if self.level.abs() > bound {
            return Err(Error::LevelOutOfRange {
                level: self.level,
                bound,
            });
        }
        Ok(self)
    }

    /// The Haar wavelet `h_I` at `x`.
    pub fn haar_eval(&self, x: &DyadicPoint) -> f64 {
        haar_eval(self, x)
    }
}

fn endpoint(index: &BigUint, level: i64) -> DyadicPoint {
    if level >= 0 {
        DyadicPoint::new(index.clone(), level as u64)
    } else {
        DyadicPoint::new(index << (-level) as u64, 0)
    }
}

impl fmt::Display for DyadicInterval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {})", self.left().to_f64(), self.right().to_f64())
    }
}

/// The Haar wavelet supported on a dyadic interval.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct HaarWavelet {
    pub support: DyadicInterval,
}

impl HaarWavelet {
    pub fn new(support: DyadicInterval) -> Self {
        HaarWavelet { support }
    }

    /// `|I|^{-1/2}`.
    pub fn amplitude(&self) -> f64 {
        pow2_half(self.support.level)
    }

    pub fn eval(&self, x: &DyadicPoint) -> f64 {
        haar_eval(&self.support, x)
    }
}

/// Whether `x` lies in the half-open interval `I`.
pub fn contains(interval: &DyadicInterval, x: &DyadicPoint) -> bool {
    interval.contains(x)
}

/// `+|I|^{-1/2}` on the left half of `I`, `-|I|^{-1/2}` on the right half, `0` outside.
pub fn haar_eval(interval: &DyadicInterval, x: &DyadicPoint) -> f64 {
    let fine = x.floor_at_level(interval.level + 1);
    if (&fine >> 1u32) != interval.index {
        return 0.0;
    }
    let amp = pow2_half(interval.level);
    if fine.bit(0) {
        -amp
    } else {
        amp
    }
}

/// `I(x, y)`, the minimal dyadic interval containing both points; `None` when `x == y`.
pub fn smallest_common_interval(x: &DyadicPoint, y: &DyadicPoint) -> Option<DyadicInterval> {
    let (a, b, e) = common_scale(x, y);
    if a == b {
        return None;
    }
    let split = (&a ^ &b).bits();
    Some(DyadicInterval {
        level: e as i64 - split as i64,
        index: a >> split,
    })
}

/// `log2 δ(x, y)`, or `None` when `x == y`.
pub fn dyadic_distance_log2(x: &DyadicPoint, y: &DyadicPoint) -> Option<i64> {
    smallest_common_interval(x, y).map(|i| i.log2_length())
}

/// `δ(x, y) = |I(x, y)|`, with `δ(x, x) = 0`.
pub fn dyadic_distance(x: &DyadicPoint, y: &DyadicPoint) -> f64 {
    dyadic_distance_log2(x, y).map_or(0.0, pow2)
}

pub fn parent(interval: &DyadicInterval) -> DyadicInterval {
    interval.parent()
}

pub fn ancestor_chain(interval: &DyadicInterval, count: usize) -> Vec<DyadicInterval> {
    interval.ancestor_chain(count)
}
