use statrs::distribution::{Beta, Binomial, ContinuousCDF, DiscreteCDF};

/// Exact (Clopper–Pearson) two-sided interval for a binomial proportion.
pub fn clopper_pearson(successes: u64, trials: u64, confidence: f64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let alpha = 1.0 - confidence;
    let k = successes as f64;
    let n = trials as f64;
    let low =
        if successes == 0 { 0.0 } else { Beta::new(k, n - k + 1.0).expect("valid beta").inverse_cdf(alpha / 2.0) };
    let high = if successes == trials {
        1.0
    } else {
        Beta::new(k + 1.0, n - k).expect("valid beta").inverse_cdf(1.0 - alpha / 2.0)
    };
    (low, high)
}

/// One-sided sign test p-value for `P(X >= wins)` with X ~ Bin(wins + losses, 1/2).
///
/// Used on discordant pairs of a paired comparison: a small value means the
/// "wins" side is significantly more frequent.
pub fn sign_test_upper(wins: u64, losses: u64) -> f64 {
    let n = wins + losses;
    if n == 0 || wins == 0 {
        return 1.0;
    }
    let b = Binomial::new(0.5, n).expect("valid binomial");
    (1.0 - b.cdf(wins - 1)).clamp(0.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clopper_pearson_reference_values() {
        // 0 of 10: upper = 1 - 0.025^(1/10)
        let (lo, hi) = clopper_pearson(0, 10, 0.95);
        assert_eq!(lo, 0.0);
        assert!((hi - (1.0 - 0.025f64.powf(0.1))).abs() < 1e-9);
        // 5 of 10 (tabulated): [0.187086, 0.812914]
        let (lo, hi) = clopper_pearson(5, 10, 0.95);
        assert!((lo - 0.187_086).abs() < 1e-5 && (hi - 0.812_914).abs() < 1e-5);
        let (lo, hi) = clopper_pearson(10, 10, 0.95);
        assert!((lo - 0.025f64.powf(0.1)).abs() < 1e-9 && hi == 1.0);
    }

    #[test]
    fn sign_test_values() {
        assert_eq!(sign_test_upper(0, 5), 1.0);
        // P(X >= 5 | n=5) = 1/32
        assert!((sign_test_upper(5, 0) - 1.0 / 32.0).abs() < 1e-12);
        // P(X >= 3 | n=4) = 5/16
        assert!((sign_test_upper(3, 1) - 5.0 / 16.0).abs() < 1e-12);
    }
}
