//! Bit-level capacities of the multi-level mapper on the single-user AWGN
//! channel and capacity-rule rate design.
//!
//! For a label drawn uniformly and `y = x + w`, the level-`l` sample is
//!
//! ```text
//! 1 + log2 Σ_{x' ∈ S(c_0..c_l)} p(y|x') − log2 Σ_{x' ∈ S(c_0..c_{l-1})} p(y|x')
//! ```
//!
//! whose mean is `I(c_l; y | c_0..c_{l-1})`. The per-sample level terms sum
//! to the full-label term, so the chain-rule check compares against
//! [`estimate_mutual_information`], which uses an independent stream.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::modem::{LevelMapper, RateProfile};
use crate::rng::{stream_rng, Stream};
use crate::scma::complex_normal;
use crate::sim::{run_point, PointStop, Scenario};
use crate::stats::clopper_pearson;

const BATCH: usize = 2048;

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(lin: f64) -> f64 {
    10.0 * lin.log10()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BitLevelCapacities {
    /// Linear SNR `1/σ²`.
    pub snr: f64,
    pub per_level: Vec<f64>,
    pub total: f64,
    pub sample_count: usize,
    pub std_error: Vec<f64>,
    /// Standard error of `total`, from the per-sample sums.
    pub total_std_error: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MutualInformation {
    pub snr: f64,
    pub value: f64,
    pub std_error: f64,
    pub sample_count: usize,
}

/// Running sums of `dims` per-sample quantities plus their total.
#[derive(Clone)]
struct Moments {
    sum: Vec<f64>,
    sum_sq: Vec<f64>,
    total: f64,
    total_sq: f64,
}

impl Moments {
    fn new(dims: usize) -> Self {
        Self { sum: vec![0.0; dims], sum_sq: vec![0.0; dims], total: 0.0, total_sq: 0.0 }
    }

    fn push(&mut self, terms: &[f64]) {
        let mut t = 0.0;
        for (i, &v) in terms.iter().enumerate() {
            self.sum[i] += v;
            self.sum_sq[i] += v * v;
            t += v;
        }
        self.total += t;
        self.total_sq += t * t;
    }

    fn merge(mut self, o: &Moments) -> Self {
        for i in 0..self.sum.len() {
            self.sum[i] += o.sum[i];
            self.sum_sq[i] += o.sum_sq[i];
        }
        self.total += o.total;
        self.total_sq += o.total_sq;
        self
    }
}

fn mean_and_se(sum: f64, sum_sq: f64, n: usize) -> (f64, f64) {
    let nf = n as f64;
    let mean = sum / nf;
    if n < 2 {
        return (mean, f64::INFINITY);
    }
    let var = ((sum_sq - nf * mean * mean) / (nf - 1.0)).max(0.0);
    (mean, (var / nf).sqrt())
}

fn log_sum_exp(v: impl Iterator<Item = f64>) -> f64 {
    let vals: Vec<f64> = v.collect();
    let m = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    m + vals.iter().map(|&x| (x - m).exp()).sum::<f64>().ln()
}

fn check_args(snr: f64, samples: usize) -> Result<f64> {
    if samples == 0 {
        return Err(invalid("sample count must be positive"));
    }
    if !(snr > 0.0 && snr.is_finite()) {
        return Err(invalid(format!("SNR {snr} must be positive and finite")));
    }
    Ok(1.0 / snr)
}

/// Batches with seeds derived from their index, reduced in index order, so
/// the result does not depend on the thread count.
fn sample_batches<F>(samples: usize, dims: usize, seed: u64, stream: Stream, per_sample: F) -> Moments
where
    F: Fn(&mut rand_chacha::ChaCha8Rng, &mut [f64]) + Sync,
{
    let batches = samples.div_ceil(BATCH);
    let parts: Vec<Moments> = (0..batches)
        .into_par_iter()
        .map(|b| {
            let mut rng = stream_rng(seed, stream, &[b as u64]);
            let count = BATCH.min(samples - b * BATCH);
            let mut m = Moments::new(dims);
            let mut terms = vec![0.0; dims];
            for _ in 0..count {
                per_sample(&mut rng, &mut terms);
                m.push(&terms);
            }
            m
        })
        .collect();
    parts.iter().fold(Moments::new(dims), |acc, p| acc.merge(p))
}

/// Monte Carlo estimate of `C_l = I(c_l; y | c_0..c_{l-1})` for every level.
pub fn estimate_bit_level_capacities(
    mapper: &LevelMapper,
    snr: f64,
    samples: usize,
    seed: u64,
) -> Result<BitLevelCapacities> {
    let nv = check_args(snr, samples)?;
    let levels = mapper.levels();
    let m = sample_batches(samples, levels, seed, Stream::Capacity, |rng, terms| {
        let label = rng.random_range(0..mapper.order());
        let y = mapper.point(label) + complex_normal(rng, nv);
        let ll: Vec<f64> = mapper.points().iter().map(|&x| -(y - x).norm_sqr() / nv).collect();
        // lse[l] = log Σ over labels agreeing with `label` on bits 0..l-1
        let lse: Vec<f64> = (0..=levels)
            .map(|l| {
                let mask = (1usize << l) - 1;
                log_sum_exp(mapper.extensions(label & mask, l).map(|j| ll[j]))
            })
            .collect();
        for l in 0..levels {
            terms[l] = 1.0 + (lse[l + 1] - lse[l]) / std::f64::consts::LN_2;
        }
    });
    let mut per_level = Vec::with_capacity(levels);
    let mut std_error = Vec::with_capacity(levels);
    for l in 0..levels {
        let (mean, se) = mean_and_se(m.sum[l], m.sum_sq[l], samples);
        per_level.push(mean);
        std_error.push(se);
    }
    let (total, total_std_error) = mean_and_se(m.total, m.total_sq, samples);
    Ok(BitLevelCapacities { snr, per_level, total, sample_count: samples, std_error, total_std_error })
}

/// Monte Carlo estimate of the full-label mutual information `I(x; y)`.
pub fn estimate_mutual_information(
    mapper: &LevelMapper,
    snr: f64,
    samples: usize,
    seed: u64,
) -> Result<MutualInformation> {
    let nv = check_args(snr, samples)?;
    let m = sample_batches(samples, 1, seed, Stream::MutualInformation, |rng, terms| {
        let x = mapper.point(rng.random_range(0..mapper.order()));
        let w = complex_normal(rng, nv);
        let y = x + w;
        let den = log_sum_exp(mapper.points().iter().map(|&p| -(y - p).norm_sqr() / nv));
        terms[0] = (mapper.levels() as f64) + (-w.norm_sqr() / nv - den) / std::f64::consts::LN_2;
    });
    let (value, std_error) = mean_and_se(m.sum[0], m.sum_sq[0], samples);
    Ok(MutualInformation { snr, value, std_error, sample_count: samples })
}

/// Outcome of capacity-rule rate design.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateDesign {
    pub design_snr_db: f64,
    pub capacities: BitLevelCapacities,
    pub profile: RateProfile,
    /// Levels whose count does not exceed the CRC length.
    pub suppression_candidates: Vec<usize>,
}

/// Apportions `total` units proportionally to `weights` by largest
/// remainders (ties go to the lower index).
fn largest_remainder(weights: &[f64], total: usize) -> Vec<usize> {
    let wsum: f64 = weights.iter().sum();
    let quotas: Vec<f64> = weights.iter().map(|&w| w / wsum * total as f64).collect();
    let mut counts: Vec<usize> = quotas.iter().map(|q| q.floor() as usize).collect();
    let assigned: usize = counts.iter().sum();
    let mut order: Vec<usize> = (0..weights.len()).collect();
    order.sort_by(|&a, &b| {
        let (ra, rb) = (quotas[a] - quotas[a].floor(), quotas[b] - quotas[b].floor());
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    for &i in order.iter().take(total.saturating_sub(assigned)) {
        counts[i] += 1;
    }
    counts
}

/// Capacity rule: at the smallest grid SNR (dB, any order) where `Σ C_l`
/// reaches `target_rate`, split `round(N·target_rate)` information bits
/// over the levels in proportion to `C_l` with largest-remainder rounding.
#[allow(clippy::too_many_arguments)]
pub fn design_rates(
    mapper: &LevelMapper,
    target_rate: f64,
    snr_grid_db: &[f64],
    block_length: usize,
    samples: usize,
    seed: u64,
    crc_degree: usize,
) -> Result<RateDesign> {
    let levels = mapper.levels() as f64;
    if !(target_rate > 0.0 && target_rate < levels) {
        return Err(Error::DesignInfeasible(format!("target {target_rate} bits/symbol outside (0, {levels})")));
    }
    if snr_grid_db.is_empty() {
        return Err(invalid("empty SNR grid"));
    }
    crate::polar::check_block_length(block_length)?;
    let mut grid = snr_grid_db.to_vec();
    grid.sort_by(f64::total_cmp);
    for db in grid {
        let caps = estimate_bit_level_capacities(mapper, db_to_linear(db), samples, seed)?;
        if caps.total < target_rate {
            continue;
        }
        let total = (block_length as f64 * target_rate).round() as usize;
        let weights: Vec<f64> = caps.per_level.iter().map(|c| c.clamp(0.0, 1.0)).collect();
        let counts = largest_remainder(&weights, total);
        let suppression_candidates =
            counts.iter().enumerate().filter(|(_, &k)| k <= crc_degree).map(|(l, _)| l).collect();
        let profile = RateProfile::all_active(counts, block_length)?;
        return Ok(RateDesign { design_snr_db: db, capacities: caps, profile, suppression_candidates });
    }
    Err(Error::DesignInfeasible(format!("sum of bit-level capacities stays below {target_rate} on the SNR grid")))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProfileValidation {
    pub pass: bool,
    pub fer: f64,
    pub frames: u64,
    pub user_frames: u64,
    pub frame_errors: u64,
    /// Upper end of the 95% Clopper–Pearson interval; with zero errors this
    /// is the bound reported in place of a measured rate.
    pub fer_upper: f64,
    /// Frames ran out before any error was seen.
    pub bound_only: bool,
}

/// Simulates the scenario at one SNR until `max_frames` or 100 user-frame
/// errors and compares the measured FER with `fer_threshold`.
pub fn validate_profile(
    scenario: &Scenario,
    snr_db: f64,
    max_frames: u64,
    fer_threshold: f64,
    seed: u64,
) -> Result<ProfileValidation> {
    let point = run_point(scenario, snr_db, seed, PointStop { max_frames, min_frame_errors: 100 })?;
    let (_, hi) = clopper_pearson(point.frame_errors, point.user_frames, 0.95);
    Ok(ProfileValidation {
        pass: point.fer < fer_threshold,
        fer: point.fer,
        frames: point.frames,
        user_frames: point.user_frames,
        frame_errors: point.frame_errors,
        fer_upper: hi,
        bound_only: point.frame_errors == 0,
    })
}
