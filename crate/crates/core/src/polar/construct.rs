//! Frozen-set construction: reliability profiles of the `N` synthetic
//! bit-channels under a BEC or BI-AWGN surrogate.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

use super::check_block_length;

/// Surrogate channel used to rank bit-channels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DesignChannelParam {
    /// Binary erasure channel; Bhattacharyya recursion.
    Bec { erasure: f64 },
    /// BPSK (±1) over real AWGN with the given noise variance; Gaussian
    /// approximation of density evolution.
    BiAwgn { noise_variance: f64 },
}

impl DesignChannelParam {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Self::Bec { erasure } if !(0.0..=1.0).contains(&erasure) => {
                Err(invalid(format!("erasure probability {erasure} outside [0, 1]")))
            }
            Self::BiAwgn { noise_variance } if !(noise_variance > 0.0 && noise_variance.is_finite()) => {
                Err(invalid(format!("noise variance {noise_variance} must be positive")))
            }
            _ => Ok(()),
        }
    }

    /// BI-AWGN surrogate whose capacity matches `capacity` bits.
    pub fn biawgn_for_capacity(capacity: f64) -> Self {
        Self::BiAwgn { noise_variance: biawgn_noise_for_capacity(capacity) }
    }
}

fn expand<F, G>(n: usize, root: f64, worse: F, better: G) -> Vec<f64>
where
    F: Fn(f64) -> f64,
    G: Fn(f64) -> f64,
{
    // Bit i takes `worse` at a split where its corresponding index bit is 0
    // (MSB = top split), so each pass appends one low-order index bit.
    let mut vals = vec![root];
    while vals.len() < n {
        vals = vals.iter().flat_map(|&v| [worse(v), better(v)]).collect();
    }
    vals
}

/// Bhattacharyya parameters of the `n` bit-channels of a BEC(`erasure`).
pub fn bhattacharyya_profile(n: usize, erasure: f64) -> Result<Vec<f64>> {
    check_block_length(n)?;
    DesignChannelParam::Bec { erasure }.validate()?;
    Ok(expand(n, erasure, |z| 2.0 * z - z * z, |z| z * z))
}

/// `ln φ(x)` for the Gaussian-approximation function φ.
fn ln_phi(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else if x < 10.0 {
        -0.4527 * x.powf(0.86) + 0.0218
    } else {
        0.5 * (PI / x).ln() - x / 4.0 + (1.0 - 10.0 / (7.0 * x)).ln()
    }
}

fn inv_ln_phi(target: f64) -> f64 {
    if target >= 0.0 {
        return 0.0;
    }
    let mut lo = 0.0;
    let mut hi = 1.0;
    while ln_phi(hi) > target {
        lo = hi;
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if ln_phi(mid) > target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-12 * hi {
            break;
        }
    }
    0.5 * (lo + hi)
}

fn ga_check(m: f64) -> f64 {
    // ln(1 - (1 - φ)^2) = ln φ + ln(2 - φ)
    let lp = ln_phi(m);
    inv_ln_phi(lp + (2.0 - lp.exp()).ln())
}

/// Mean LLRs of the `n` bit-channels for BPSK over AWGN with the given
/// noise variance, by Gaussian-approximation density evolution.
pub fn ga_mean_profile(n: usize, noise_variance: f64) -> Result<Vec<f64>> {
    check_block_length(n)?;
    DesignChannelParam::BiAwgn { noise_variance }.validate()?;
    Ok(expand(n, 2.0 / noise_variance, ga_check, |m| 2.0 * m))
}

/// Capacity in bits of BPSK (±1) over real AWGN with noise variance `σ²`.
pub fn biawgn_capacity(noise_variance: f64) -> f64 {
    // LLR ~ N(μ, 2μ) with μ = 2/σ²; C = 1 - E[log2(1 + e^{-LLR})].
    let mu = 2.0 / noise_variance;
    let sd = (2.0 * mu).sqrt();
    let (a, b) = (mu - 12.0 * sd, mu + 12.0 * sd);
    let steps = 4000;
    let h = (b - a) / steps as f64;
    let integrand = |l: f64| {
        let z = (l - mu) / sd;
        let pdf = (-0.5 * z * z).exp() / (sd * (2.0 * PI).sqrt());
        pdf * super::decode::softplus(-l) / std::f64::consts::LN_2
    };
    let mut acc = integrand(a) + integrand(b);
    for i in 1..steps {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * integrand(a + i as f64 * h);
    }
    (1.0 - acc * h / 3.0).clamp(0.0, 1.0)
}

/// Noise variance at which the BI-AWGN capacity equals `capacity`.
///
/// Saturates at `σ² ∈ [1e-4, 1e4]` for capacities at the extremes.
pub fn biawgn_noise_for_capacity(capacity: f64) -> f64 {
    let (mut lo, mut hi) = (1e-4f64.ln(), 1e4f64.ln());
    if capacity >= biawgn_capacity(lo.exp()) {
        return lo.exp();
    }
    if capacity <= biawgn_capacity(hi.exp()) {
        return hi.exp();
    }
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if biawgn_capacity(mid.exp()) > capacity {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    (0.5 * (lo + hi)).exp()
}

/// Freezes the `n - k` least reliable bit-channels under the surrogate.
/// Ties freeze the lower index first. Output is sorted.
pub fn design_frozen_set(n: usize, k: usize, channel: DesignChannelParam) -> Result<Vec<usize>> {
    check_block_length(n)?;
    channel.validate()?;
    if k > n {
        return Err(invalid(format!("K={k} exceeds N={n}")));
    }
    // Larger score = less reliable.
    let score: Vec<f64> = match channel {
        DesignChannelParam::Bec { erasure } => bhattacharyya_profile(n, erasure)?,
        DesignChannelParam::BiAwgn { noise_variance } => {
            ga_mean_profile(n, noise_variance)?.into_iter().map(|m| -m).collect()
        }
    };
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| score[b].total_cmp(&score[a]).then(a.cmp(&b)));
    let mut frozen: Vec<usize> = order[..n - k].to_vec();
    frozen.sort_unstable();
    Ok(frozen)
}

#[cfg(test)]
mod tests {
    use super::*;

    // Depth-first recursion written directly from the decoder structure.
    fn bhatt_recursive(n: usize, z: f64) -> Vec<f64> {
        if n == 1 {
            return vec![z];
        }
        let mut v = bhatt_recursive(n / 2, 2.0 * z - z * z);
        v.extend(bhatt_recursive(n / 2, z * z));
        v
    }

    #[test]
    fn bhattacharyya_n4() {
        let z = bhattacharyya_profile(4, 0.5).unwrap();
        let expect = [0.9375, 0.5625, 0.4375, 0.0625];
        for (a, b) in z.iter().zip(expect) {
            assert!((a - b).abs() < 1e-15);
        }
        let frozen = design_frozen_set(4, 1, DesignChannelParam::Bec { erasure: 0.5 }).unwrap();
        assert_eq!(frozen, vec![0, 1, 2]);
    }

    #[test]
    fn profile_order_matches_recursion() {
        for n in [2usize, 8, 64, 1024] {
            assert_eq!(bhattacharyya_profile(n, 0.3).unwrap(), bhatt_recursive(n, 0.3));
        }
    }

    #[test]
    fn bec_ranking_is_the_classic_one_for_n8() {
        // K=4 at ε=0.5 keeps {3,5,6,7}
        let frozen = design_frozen_set(8, 4, DesignChannelParam::Bec { erasure: 0.5 }).unwrap();
        assert_eq!(frozen, vec![0, 1, 2, 4]);
    }

    #[test]
    fn extremes_of_k() {
        let ch = DesignChannelParam::BiAwgn { noise_variance: 0.5 };
        assert!(design_frozen_set(16, 16, ch).unwrap().is_empty());
        assert_eq!(design_frozen_set(16, 0, ch).unwrap(), (0..16).collect::<Vec<_>>());
        assert!(design_frozen_set(16, 17, ch).is_err());
        assert!(design_frozen_set(12, 4, ch).is_err());
        assert!(design_frozen_set(16, 4, DesignChannelParam::Bec { erasure: 1.5 }).is_err());
        assert!(design_frozen_set(16, 4, DesignChannelParam::BiAwgn { noise_variance: 0.0 }).is_err());
    }

    #[test]
    fn ga_profile_is_consistent() {
        let m = ga_mean_profile(256, 0.5).unwrap();
        assert!(m.iter().all(|v| v.is_finite() && *v >= 0.0));
        // last bit-channel sees n repetitions
        assert!((m[255] - 256.0 * 4.0).abs() < 1e-9);
        // first is worst
        assert!(m.iter().all(|&v| v >= m[0]));
        // very clean channel stays finite
        assert!(ga_mean_profile(1024, 1e-4).unwrap().iter().all(|v| v.is_finite()));
        let frozen = design_frozen_set(256, 128, DesignChannelParam::BiAwgn { noise_variance: 0.5 }).unwrap();
        assert_eq!(frozen.len(), 128);
        assert!(frozen.contains(&0) && !frozen.contains(&255));
    }

    #[test]
    fn biawgn_capacity_values() {
        // reference values of the BPSK-constrained AWGN capacity
        assert!((biawgn_capacity(1.0) - 0.4859).abs() < 1e-3);
        assert!(biawgn_capacity(1e-3) > 0.999_999);
        assert!(biawgn_capacity(1e3) < 1e-3);
        for c in [0.05, 0.3, 0.5, 0.9, 0.99] {
            let s2 = biawgn_noise_for_capacity(c);
            assert!((biawgn_capacity(s2) - c).abs() < 1e-6, "{c}");
        }
    }
}
