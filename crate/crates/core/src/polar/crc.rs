use serde::{Deserialize, Serialize};

use crate::bits::BitBlock;
use crate::error::{invalid, Result};

/// Cyclic redundancy check described by its generator polynomial.
///
/// `generator` holds the `degree + 1` coefficients with the x^degree term in
/// bit `degree` and the constant term in bit 0; both must be set. Bits are
/// processed MSB first (first bit of a block is the highest-order
/// coefficient of the dividend), with zero initial register and no output
/// reflection or xor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "CrcRepr", into = "CrcRepr")]
pub struct CrcSpec {
    degree: u32,
    generator: u64,
}

#[derive(Serialize, Deserialize)]
struct CrcRepr {
    degree: u32,
    generator: u64,
}

impl TryFrom<CrcRepr> for CrcSpec {
    type Error = crate::Error;
    fn try_from(r: CrcRepr) -> Result<Self> {
        CrcSpec::new(r.degree, r.generator)
    }
}

impl From<CrcSpec> for CrcRepr {
    fn from(c: CrcSpec) -> Self {
        CrcRepr { degree: c.degree, generator: c.generator }
    }
}

impl CrcSpec {
    /// CRC-8 with generator x^8 + x^2 + x + 1 (0x107, "0x07" in truncated form).
    pub const CRC8: CrcSpec = CrcSpec { degree: 8, generator: 0x107 };

    pub fn new(degree: u32, generator: u64) -> Result<Self> {
        if degree == 0 || degree > 32 {
            return Err(invalid(format!("CRC degree {degree} outside 1..=32")));
        }
        if generator >> degree != 1 {
            return Err(invalid(format!("generator {generator:#x} does not have leading coefficient at x^{degree}")));
        }
        if generator & 1 == 0 {
            return Err(invalid("generator constant term must be 1"));
        }
        Ok(Self { degree, generator })
    }

    pub fn degree(&self) -> usize {
        self.degree as usize
    }

    pub fn generator(&self) -> u64 {
        self.generator
    }

    fn remainder(&self, bits: impl Iterator<Item = u8>) -> u64 {
        let top = 1u64 << (self.degree - 1);
        let mask = (1u64 << self.degree) - 1;
        let low = self.generator & mask;
        let mut reg = 0u64;
        for b in bits {
            let feedback = ((reg & top) != 0) as u8 ^ b;
            reg = (reg << 1) & mask;
            if feedback == 1 {
                reg ^= low;
            }
        }
        reg
    }

    /// Remainder bits (MSB first) of `info(x) * x^degree mod g(x)`.
    pub fn checksum(&self, info: &[u8]) -> Vec<u8> {
        let r = self.remainder(info.iter().copied());
        (0..self.degree).rev().map(|i| ((r >> i) & 1) as u8).collect()
    }

    /// Appends the checksum to `info`.
    pub fn attach(&self, info: &BitBlock) -> Result<BitBlock> {
        if info.is_empty() {
            return Err(invalid("CRC attach needs at least one information bit"));
        }
        let mut out = info.to_vec();
        out.extend(self.checksum(info));
        Ok(BitBlock::from(out))
    }

    /// True iff the trailing `degree` bits of `payload` are the checksum of
    /// the leading bits.
    pub fn check(&self, payload: &[u8]) -> Result<bool> {
        if payload.len() < self.degree() {
            return Err(invalid(format!("payload of {} bits shorter than CRC degree {}", payload.len(), self.degree)));
        }
        Ok(self.passes(payload))
    }

    // Infallible variant for callers that already know the length.
    pub(crate) fn passes(&self, payload: &[u8]) -> bool {
        let split = payload.len() - self.degree();
        self.checksum(&payload[..split]) == payload[split..]
    }

    /// Strips the checksum, returning the information part.
    pub fn strip<'a>(&self, payload: &'a [u8]) -> &'a [u8] {
        &payload[..payload.len().saturating_sub(self.degree())]
    }
}

impl Default for CrcSpec {
    fn default() -> Self {
        Self::CRC8
    }
}
