//! Binary polar codes built on the kernel `[[1, 0], [1, 1]]`.
//!
//! Codewords are `x = u · T^{⊗n}` over GF(2) in natural (non bit-reversed)
//! order, with `u` holding zeros at frozen positions and information bits
//! elsewhere. Decoders work on LLRs clipped to `±LLR_CLIP`.

mod construct;
mod crc;
mod decode;

use serde::{Deserialize, Serialize};

use crate::bits::BitBlock;
use crate::error::{invalid, Result};

pub use construct::{
    bhattacharyya_profile, biawgn_capacity, biawgn_noise_for_capacity, design_frozen_set, ga_mean_profile,
    DesignChannelParam,
};
pub use crc::CrcSpec;
pub(crate) use decode::softplus;
pub use decode::{sc_decode, scl_decode, ListDecodeOutput};

/// Magnitude at which all LLRs are saturated (natural log).
pub const LLR_CLIP: f64 = 40.0;

/// Default list size for CRC-aided list decoding.
pub const DEFAULT_LIST_SIZE: usize = 8;

/// Real-valued LLRs, positive favouring bit 0, saturated at `±LLR_CLIP`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct LlrVector(Vec<f64>);

impl LlrVector {
    /// Clips to `±LLR_CLIP`; NaN becomes 0 (no information).
    pub fn new(values: Vec<f64>) -> Self {
        Self(values.into_iter().map(clip_llr).collect())
    }

    /// Noise-free LLRs for a codeword: `+magnitude` for 0, `-magnitude` for 1.
    pub fn from_hard(codeword: &[u8], magnitude: f64) -> Self {
        Self::new(codeword.iter().map(|&b| if b == 0 { magnitude } else { -magnitude }).collect())
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn hard_decisions(&self) -> BitBlock {
        self.0.iter().map(|&l| (l < 0.0) as u8).collect()
    }
}

#[inline]
pub fn clip_llr(v: f64) -> f64 {
    if v.is_nan() {
        0.0
    } else {
        v.clamp(-LLR_CLIP, LLR_CLIP)
    }
}

/// Code of length `N = 2^n` with a fixed frozen set.
///
/// `info_count` counts every non-frozen position, so CRC bits are part of it
/// when a CRC is attached.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "SpecRepr", into = "SpecRepr")]
pub struct PolarCodeSpec {
    block_length: usize,
    frozen_set: Vec<usize>,
    crc: Option<CrcSpec>,
    // derived
    frozen_mask: Vec<bool>,
    info_positions: Vec<usize>,
}

#[derive(Serialize, Deserialize)]
struct SpecRepr {
    block_length: usize,
    info_count: usize,
    frozen_set: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    crc: Option<CrcSpec>,
}

impl TryFrom<SpecRepr> for PolarCodeSpec {
    type Error = crate::Error;
    fn try_from(r: SpecRepr) -> Result<Self> {
        let spec = PolarCodeSpec::new(r.block_length, r.frozen_set, r.crc)?;
        if spec.info_count() != r.info_count {
            return Err(invalid(format!(
                "info_count {} inconsistent with frozen set (expected {})",
                r.info_count,
                spec.info_count()
            )));
        }
        Ok(spec)
    }
}

impl From<PolarCodeSpec> for SpecRepr {
    fn from(s: PolarCodeSpec) -> Self {
        SpecRepr { block_length: s.block_length, info_count: s.info_count(), frozen_set: s.frozen_set, crc: s.crc }
    }
}

impl PolarCodeSpec {
    pub fn new(block_length: usize, mut frozen_set: Vec<usize>, crc: Option<CrcSpec>) -> Result<Self> {
        check_block_length(block_length)?;
        frozen_set.sort_unstable();
        if frozen_set.windows(2).any(|w| w[0] == w[1]) {
            return Err(invalid("frozen set contains duplicate indices"));
        }
        if let Some(&last) = frozen_set.last() {
            if last >= block_length {
                return Err(invalid(format!("frozen index {last} out of range for N={block_length}")));
            }
        }
        let mut frozen_mask = vec![false; block_length];
        for &i in &frozen_set {
            frozen_mask[i] = true;
        }
        let info_positions: Vec<usize> = (0..block_length).filter(|&i| !frozen_mask[i]).collect();
        if let Some(c) = crc {
            if !info_positions.is_empty() && info_positions.len() <= c.degree() {
                return Err(invalid(format!(
                    "{} information positions cannot hold a degree-{} CRC plus data",
                    info_positions.len(),
                    c.degree()
                )));
            }
        }
        Ok(Self { block_length, frozen_set, crc, frozen_mask, info_positions })
    }

    pub fn block_length(&self) -> usize {
        self.block_length
    }

    pub fn frozen_set(&self) -> &[usize] {
        &self.frozen_set
    }

    pub fn is_frozen(&self, i: usize) -> bool {
        self.frozen_mask[i]
    }

    pub fn info_positions(&self) -> &[usize] {
        &self.info_positions
    }

    /// K: non-frozen positions, CRC bits included.
    pub fn info_count(&self) -> usize {
        self.info_positions.len()
    }

    /// Information bits carried per codeword once the CRC is removed.
    pub fn payload_count(&self) -> usize {
        match self.crc {
            Some(c) if self.info_count() > 0 => self.info_count() - c.degree(),
            _ => self.info_count(),
        }
    }

    pub fn crc(&self) -> Option<&CrcSpec> {
        self.crc.as_ref()
    }

    pub fn rate(&self) -> f64 {
        self.info_count() as f64 / self.block_length as f64
    }

    /// Attaches the CRC (if any) and encodes a payload of `payload_count` bits.
    pub fn encode_payload(&self, payload: &BitBlock) -> Result<BitBlock> {
        if payload.len() != self.payload_count() {
            return Err(invalid(format!("payload of {} bits, code carries {}", payload.len(), self.payload_count())));
        }
        match self.crc {
            Some(c) if self.info_count() > 0 => encode(&c.attach(payload)?, self),
            _ => encode(payload, self),
        }
    }
}

pub(crate) fn check_block_length(n: usize) -> Result<()> {
    if n < 2 || !n.is_power_of_two() {
        return Err(invalid(format!("block length {n} is not a power of two >= 2")));
    }
    Ok(())
}

/// In-place `x ← x · T^{⊗n}` over GF(2).
pub(crate) fn transform_in_place(x: &mut [u8]) {
    let n = x.len();
    let mut half = 1;
    while half < n {
        for block in x.chunks_exact_mut(2 * half) {
            let (lo, hi) = block.split_at_mut(half);
            for (a, b) in lo.iter_mut().zip(hi.iter()) {
                *a ^= *b;
            }
        }
        half *= 2;
    }
}

/// `u · T^{⊗n}` over GF(2); the map is an involution.
pub fn polar_transform(u: &BitBlock) -> Result<BitBlock> {
    check_block_length(u.len())?;
    let mut x = u.clone();
    transform_in_place(&mut x);
    Ok(x)
}

/// Places `info` (CRC already attached if the code has one) on the
/// non-frozen positions, zeros elsewhere, and transforms.
pub fn encode(info: &BitBlock, spec: &PolarCodeSpec) -> Result<BitBlock> {
    if info.len() != spec.info_count() {
        return Err(invalid(format!("info block of {} bits, code expects K={}", info.len(), spec.info_count())));
    }
    let mut u = BitBlock::zeros(spec.block_length());
    for (&pos, &b) in spec.info_positions().iter().zip(info.iter()) {
        u[pos] = b;
    }
    transform_in_place(&mut u);
    Ok(u)
}

/// Recovers `u` from a codeword and returns its information positions.
pub fn extract_info(codeword: &BitBlock, spec: &PolarCodeSpec) -> Result<BitBlock> {
    if codeword.len() != spec.block_length() {
        return Err(invalid("codeword length mismatch"));
    }
    let mut u = codeword.clone();
    transform_in_place(&mut u);
    Ok(spec.info_positions().iter().map(|&i| u[i]).collect())
}

/// JSON sidecar holding one code per level, for reproducible reruns.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrozenSetSidecar {
    pub levels: Vec<Option<PolarCodeSpec>>,
}

impl FrozenSetSidecar {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}
