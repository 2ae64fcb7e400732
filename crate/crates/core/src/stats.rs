//! Binomial confidence intervals.

use serde::{Deserialize, Serialize};

/// Two-sided 95% standard normal quantile.
pub const Z95: f64 = 1.959_963_984_540_054;

/// Wilson score interval for `successes` out of `trials` at normal quantile `z`.
pub fn wilson_interval(successes: u64, trials: u64, z: f64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let centre = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    // Clamp so lo <= p <= hi holds exactly at the extremes.
    ((centre - half).clamp(0.0, p), (centre + half).clamp(p, 1.0))
}

/// Neumaier-compensated sum.
pub fn compensated_sum(values: &[f64]) -> f64 {
    let mut sum = 0.0f64;
    let mut carry = 0.0f64;
    for &x in values {
        let t = sum + x;
        if sum.abs() >= x.abs() {
            carry += (sum - t) + x;
        } else {
            carry += (x - t) + sum;
        }
        sum = t;
    }
    sum + carry
}

/// A failure count with its point estimate and Wilson 95% interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Proportion {
    pub trials: u64,
    pub failures: u64,
    pub point: f64,
    pub lo: f64,
    pub hi: f64,
}

impl Proportion {
    pub fn new(failures: u64, trials: u64) -> Self {
        let (lo, hi) = wilson_interval(failures, trials, Z95);
        Self {
            trials,
            failures,
            point: if trials == 0 { 0.0 } else { failures as f64 / trials as f64 },
            lo,
            hi,
        }
    }

    /// Binomial standard deviation of the point estimate at true value `p`.
    pub fn sigma_at(&self, p: f64) -> f64 {
        (p * (1.0 - p) / self.trials as f64).sqrt()
    }

    /// `self` is below `other` with the 95% intervals not overlapping.
    pub fn clearly_below(&self, other: &Proportion) -> bool {
        self.hi < other.lo
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wilson_known_value() {
        // 10 failures out of 100: Wilson 95% is about (0.0552, 0.1744).
        let (lo, hi) = wilson_interval(10, 100, Z95);
        assert!((lo - 0.05522).abs() < 1e-4, "{lo}");
        assert!((hi - 0.17436).abs() < 1e-4, "{hi}");
    }

    #[test]
    fn wilson_brackets_point() {
        for trials in [1u64, 2, 7, 100, 10_000] {
            for failures in 0..=trials.min(50) {
                let p = Proportion::new(failures, trials);
                assert!(0.0 <= p.lo && p.lo <= p.point && p.point <= p.hi && p.hi <= 1.0);
            }
            let p = Proportion::new(trials, trials);
            assert_eq!(p.hi, 1.0);
        }
    }
}
