use std::fmt;
use std::ops::{Deref, DerefMut};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Fixed-length binary vector, one `u8` (0 or 1) per bit.
#[derive(Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct BitBlock(Vec<u8>);

impl BitBlock {
    pub fn zeros(len: usize) -> Self {
        Self(vec![0; len])
    }

    /// Builds a block from values that must all be 0 or 1.
    pub fn from_bits(bits: Vec<u8>) -> Result<Self> {
        if let Some(pos) = bits.iter().position(|&b| b > 1) {
            return Err(invalid(format!("non-binary value {} at index {pos}", bits[pos])));
        }
        Ok(Self(bits))
    }

    pub fn random<R: Rng + ?Sized>(len: usize, rng: &mut R) -> Self {
        Self((0..len).map(|_| rng.random_range(0..=1u8)).collect())
    }

    pub fn xor(&self, other: &BitBlock) -> Result<BitBlock> {
        if self.len() != other.len() {
            return Err(invalid(format!("xor of blocks with lengths {} and {}", self.len(), other.len())));
        }
        Ok(Self(self.iter().zip(other.iter()).map(|(a, b)| a ^ b).collect()))
    }

    pub fn weight(&self) -> usize {
        self.iter().filter(|&&b| b == 1).count()
    }

    pub fn into_inner(self) -> Vec<u8> {
        self.0
    }
}

impl From<Vec<u8>> for BitBlock {
    /// Nonzero entries are mapped to 1.
    fn from(v: Vec<u8>) -> Self {
        Self(v.into_iter().map(|b| (b != 0) as u8).collect())
    }
}

impl From<&[u8]> for BitBlock {
    fn from(v: &[u8]) -> Self {
        v.to_vec().into()
    }
}

impl<const N: usize> From<[u8; N]> for BitBlock {
    fn from(v: [u8; N]) -> Self {
        v.to_vec().into()
    }
}

impl FromIterator<u8> for BitBlock {
    fn from_iter<I: IntoIterator<Item = u8>>(iter: I) -> Self {
        iter.into_iter().collect::<Vec<u8>>().into()
    }
}

impl Deref for BitBlock {
    type Target = [u8];
    fn deref(&self) -> &[u8] {
        &self.0
    }
}

impl DerefMut for BitBlock {
    fn deref_mut(&mut self) -> &mut [u8] {
        &mut self.0
    }
}

impl fmt::Debug for BitBlock {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitBlock[")?;
        for b in &self.0 {
            write!(f, "{b}")?;
        }
        write!(f, "]")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_non_binary() {
        assert!(BitBlock::from_bits(vec![0, 1, 2]).is_err());
        assert_eq!(BitBlock::from_bits(vec![0, 1]).unwrap().weight(), 1);
    }

    #[test]
    fn xor_length_mismatch() {
        let a = BitBlock::zeros(3);
        let b = BitBlock::zeros(4);
        assert!(a.xor(&b).is_err());
    }
}
