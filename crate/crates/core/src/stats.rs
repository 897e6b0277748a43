//! Binomial confidence bounds used by the Monte Carlo estimators.

use serde::{Deserialize, Serialize};

/// Standard normal quantile at 0.99, for one-sided 99% bounds.
pub const Z_99: f64 = 2.326_347_874_040_840_8;

/// Standard normal quantile at 0.995, for two-sided 99% intervals.
pub const Z_995: f64 = 2.575_829_303_548_900_4;

/// A proportion estimated from Bernoulli trials.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Proportion {
    pub successes: u64,
    pub trials: u64,
}

impl Proportion {
    pub fn new(successes: u64, trials: u64) -> Self {
        assert!(successes <= trials, "more successes than trials");
        Self { successes, trials }
    }

    pub fn estimate(&self) -> f64 {
        if self.trials == 0 {
            return 0.0;
        }
        self.successes as f64 / self.trials as f64
    }

    /// Wilson score upper bound with normal quantile `z`.
    pub fn wilson_upper(&self, z: f64) -> f64 {
        wilson(self.successes, self.trials, z).1
    }

    /// Wilson score lower bound with normal quantile `z`.
    pub fn wilson_lower(&self, z: f64) -> f64 {
        wilson(self.successes, self.trials, z).0
    }

    /// Half-width of the two-sided 99% Wilson interval.
    pub fn slack_99(&self) -> f64 {
        let (lo, hi) = wilson(self.successes, self.trials, Z_995);
        0.5 * (hi - lo)
    }
}

/// Wilson score interval `(lower, upper)` for `k` successes in `n` trials.
pub fn wilson(k: u64, n: u64, z: f64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let n = n as f64;
    let p = k as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let centre = p + z2 / (2.0 * n);
    let spread = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    (
        ((centre - spread) / denom).max(0.0),
        ((centre + spread) / denom).min(1.0),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wilson_brackets_the_estimate() {
        let p = Proportion::new(30, 100);
        assert!(p.wilson_lower(Z_99) < 0.3 && 0.3 < p.wilson_upper(Z_99));
        // zero successes still gives a positive upper bound
        let zero = Proportion::new(0, 1000);
        assert_eq!(zero.wilson_lower(Z_99), 0.0);
        let up = zero.wilson_upper(Z_99);
        assert!(up > 0.0 && up < 0.006, "{up}");
    }

    #[test]
    fn wilson_matches_reference_value() {
        // k=50, n=100, z=1.96: (0.4038, 0.5962)
        let (lo, hi) = wilson(50, 100, 1.96);
        assert!((lo - 0.403_831).abs() < 1e-5);
        assert!((hi - 0.596_169).abs() < 1e-5);
    }
}
