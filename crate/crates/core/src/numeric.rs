//! Small floating-point helpers shared by the series and shell sums.

/// Exact `2^n` as an `f64`, saturating to `0` or `inf` outside the representable range.
pub fn pow2(n: i64) -> f64 {
    if n > 1023 {
        f64::INFINITY
    } else if n >= -1022 {
        f64::from_bits(((n + 1023) as u64) << 52)
    } else if n >= -1074 {
        f64::from_bits(1u64 << (n + 1074))
    } else {
        0.0
    }
}

/// `2^(n/2)`, exact for even `n`.
pub fn pow2_half(n: i64) -> f64 {
    if n.rem_euclid(2) == 0 {
        pow2(n / 2)
    } else {
        pow2((n - 1).div_euclid(2)) * std::f64::consts::SQRT_2
    }
}

/// Neumaier compensated summation.
#[derive(Debug, Default, Clone, Copy)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

impl std::iter::FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = CompensatedSum::new();
        for x in iter {
            acc.add(x);
        }
        acc
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pow2_matches_powi() {
        for n in -1022..=1023 {
            assert_eq!(pow2(n), 2f64.powi(n as i32), "n = {n}");
        }
        assert_eq!(pow2(-1074), f64::from_bits(1));
        assert_eq!(pow2(-1023), f64::MIN_POSITIVE / 2.0);
        assert_eq!(pow2(1024), f64::INFINITY);
        assert_eq!(pow2(-1075), 0.0);
    }

    #[test]
    fn pow2_half_odd_levels() {
        assert_eq!(pow2_half(2), 2.0);
        assert!((pow2_half(1) - 2f64.sqrt()).abs() < 1e-15);
        assert!((pow2_half(-3) - 2f64.powf(-1.5)).abs() < 1e-15);
    }

    #[test]
    fn compensated_sum_recovers_small_terms() {
        let acc: CompensatedSum = [1.0, 1e-16, 1e-16, -1.0].into_iter().collect();
        assert!((acc.value() - 2e-16).abs() < 1e-30);
    }
}
