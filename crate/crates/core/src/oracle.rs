//! Brute-force reference implementations, exponential in the problem size.
//! They share no code with the fast paths and back the `selftest`
//! subcommand and the test suites.

use num_complex::Complex64;

use crate::bits::BitBlock;
use crate::error::{invalid, Result};
use crate::modem::LevelMapper;
use crate::polar::{clip_llr, encode, polar_transform, LlrVector, PolarCodeSpec};

/// Bit log-likelihood `ln P(y | x = b)` up to a constant, from an LLR.
fn bit_loglik(llr: f64, b: u8) -> f64 {
    // ln(e^{±λ/2} / (e^{λ/2} + e^{-λ/2}))
    let s = if b == 0 { llr } else { -llr };
    -(s.abs() + (-s.abs()).exp().ln_1p() - s.max(0.0))
}

fn codeword_loglik(llr: &[f64], x: &[u8]) -> f64 {
    llr.iter().zip(x).map(|(&l, &b)| bit_loglik(l, b)).sum()
}

fn log_sum_exp(v: &[f64]) -> f64 {
    let m = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + v.iter().map(|&x| (x - m).exp()).sum::<f64>().ln()
}

/// Maximum-likelihood decoding by enumerating all `2^K` information words.
/// Returns the information bits of the most likely codeword; ties keep the
/// lexicographically first word (bit 0 as most significant).
pub fn ml_decode_bruteforce(llr: &LlrVector, spec: &PolarCodeSpec) -> Result<BitBlock> {
    let k = spec.info_count();
    if llr.len() != spec.block_length() {
        return Err(invalid("LLR length differs from block length"));
    }
    if k > 24 {
        return Err(invalid(format!("K={k} too large for exhaustive search")));
    }
    let mut best: Option<(f64, BitBlock)> = None;
    for w in 0..(1usize << k) {
        let info: BitBlock = (0..k).map(|i| ((w >> (k - 1 - i)) & 1) as u8).collect();
        let x = encode(&info, spec)?;
        let score = codeword_loglik(llr.as_slice(), &x);
        if best.as_ref().is_none_or(|(s, _)| score > *s) {
            best = Some((score, info));
        }
    }
    Ok(best.map(|(_, b)| b).unwrap_or_else(|| BitBlock::zeros(0)))
}

/// Successive MAP decisions: bit `i` is decided from
/// `ln P(y, û_0..û_{i-1} | u_i = 0) − ln P(…| u_i = 1)` with the later
/// bits marginalized by enumeration, conditioned on the oracle's own earlier
/// decisions. Frozen bits are 0; a zero LLR decides 0.
pub fn successive_map_oracle(llr: &LlrVector, spec: &PolarCodeSpec) -> Result<BitBlock> {
    let n = spec.block_length();
    if llr.len() != n {
        return Err(invalid("LLR length differs from block length"));
    }
    if n > 20 {
        return Err(invalid(format!("N={n} too large for exhaustive marginalization")));
    }
    let mut u = BitBlock::zeros(n);
    let mut out = Vec::with_capacity(spec.info_count());
    for i in 0..n {
        if spec.is_frozen(i) {
            continue;
        }
        let tail = n - i - 1;
        let mut terms = [Vec::with_capacity(1 << tail), Vec::with_capacity(1 << tail)];
        for b in 0..2u8 {
            for w in 0..(1usize << tail) {
                let mut v = u.clone();
                v[i] = b;
                for j in 0..tail {
                    v[i + 1 + j] = ((w >> j) & 1) as u8;
                }
                let x = polar_transform(&v)?;
                terms[b as usize].push(codeword_loglik(llr.as_slice(), &x));
            }
        }
        let lam = log_sum_exp(&terms[0]) - log_sum_exp(&terms[1]);
        u[i] = u8::from(lam < 0.0);
        out.push(u[i]);
    }
    Ok(BitBlock::from(out))
}

/// Stage-`stage` LLRs at a single function node, by explicit double loop
/// over both users' labels. `prefixes[k]` holds the known bits
/// `c_0..c_{stage-1}` of user `k`; the likelihood is `exp(-|r|²/σ²)`.
pub fn two_user_stage_llrs(
    y: Complex64,
    h: [Complex64; 2],
    stage: usize,
    prefixes: [&[u8]; 2],
    mapper: &LevelMapper,
    noise_variance: f64,
) -> Result<[f64; 2]> {
    let levels = mapper.levels();
    if stage >= levels || prefixes.iter().any(|p| p.len() != stage) {
        return Err(invalid("prefix length must equal the stage index"));
    }
    let consistent =
        |label: usize, prefix: &[u8]| prefix.iter().enumerate().all(|(l, &b)| (label >> l) & 1 == b as usize);
    let mut bins = [[Vec::new(), Vec::new()], [Vec::new(), Vec::new()]];
    for a in 0..mapper.order() {
        if !consistent(a, prefixes[0]) {
            continue;
        }
        for b in 0..mapper.order() {
            if !consistent(b, prefixes[1]) {
                continue;
            }
            let r = y - h[0] * mapper.point(a) - h[1] * mapper.point(b);
            let ll = -r.norm_sqr() / noise_variance;
            bins[0][(a >> stage) & 1].push(ll);
            bins[1][(b >> stage) & 1].push(ll);
        }
    }
    let llr = |k: usize| clip_llr(log_sum_exp(&bins[k][0]) - log_sum_exp(&bins[k][1]));
    Ok([llr(0), llr(1)])
}
