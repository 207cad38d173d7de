//! Multi-level transmitter: level split, Gaussian-integer label mapping and
//! the nested subconstellations seen by multi-stage detection.
//!
//! A label `[c_0, …, c_{L-1}]` is mapped to `Σ c_l (1+i)^l`, both
//! coordinates are reduced modulo `2^{L/2}`, then offset by
//! `v ↦ 2v − (2^{L/2} − 1)` onto the odd grid of square `2^L`-QAM and scaled
//! to unit average energy. Labels are also handled as integers with `c_l` in
//! bit `l`, so fixing `c_0..c_{l-1}` selects the labels `prefix + j·2^l`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::bits::BitBlock;
use crate::error::{invalid, Error, Result};

/// Per-level information counts and suppression flags.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RateProfile {
    pub level_info_counts: Vec<usize>,
    pub block_length: usize,
    pub active_levels: Vec<bool>,
}

impl RateProfile {
    pub fn new(level_info_counts: Vec<usize>, block_length: usize, active_levels: Vec<bool>) -> Result<Self> {
        let p = Self { level_info_counts, block_length, active_levels };
        p.validate()?;
        Ok(p)
    }

    /// All levels active.
    pub fn all_active(level_info_counts: Vec<usize>, block_length: usize) -> Result<Self> {
        let n = level_info_counts.len();
        Self::new(level_info_counts, block_length, vec![true; n])
    }

    pub fn validate(&self) -> Result<()> {
        if self.level_info_counts.len() != self.active_levels.len() {
            return Err(invalid("level counts and activity flags differ in length"));
        }
        if let Some(k) = self.level_info_counts.iter().find(|&&k| k > self.block_length) {
            return Err(invalid(format!("level count {k} exceeds block length {}", self.block_length)));
        }
        Ok(())
    }

    pub fn levels(&self) -> usize {
        self.level_info_counts.len()
    }

    pub fn is_active(&self, level: usize) -> bool {
        self.active_levels[level]
    }

    /// K_l, or 0 for a suppressed level.
    pub fn effective_count(&self, level: usize) -> usize {
        if self.active_levels[level] {
            self.level_info_counts[level]
        } else {
            0
        }
    }

    pub fn total(&self) -> usize {
        (0..self.levels()).map(|l| self.effective_count(l)).sum()
    }
}

/// Contiguous split of `b` into per-level blocks in level order; suppressed
/// levels receive empty blocks.
pub fn split_bits(b: &BitBlock, profile: &RateProfile) -> Result<Vec<BitBlock>> {
    profile.validate()?;
    if b.len() != profile.total() {
        return Err(invalid(format!("{} bits to split, profile carries {}", b.len(), profile.total())));
    }
    let mut offset = 0;
    Ok((0..profile.levels())
        .map(|l| {
            let k = profile.effective_count(l);
            let block = BitBlock::from(&b[offset..offset + k]);
            offset += k;
            block
        })
        .collect())
}

/// Label-to-symbol map for `L` (even) levels.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelMapper {
    levels: usize,
    grid: Vec<(i64, i64)>,
    points: Vec<Complex64>,
    scale: f64,
}

impl LevelMapper {
    pub fn new(levels: usize) -> Result<Self> {
        if levels == 0 || levels % 2 == 1 {
            return Err(Error::UnsupportedConfiguration(format!(
                "{levels} levels: only even L >= 2 (square QAM) is supported"
            )));
        }
        if levels > 16 {
            return Err(Error::UnsupportedConfiguration(format!("{levels} levels is too many")));
        }
        let modulus = 1i64 << (levels / 2);
        let weights = gaussian_powers(levels);
        let grid: Vec<(i64, i64)> = (0..1usize << levels)
            .map(|label| {
                let (re, im) = weights
                    .iter()
                    .enumerate()
                    .filter(|(l, _)| (label >> l) & 1 == 1)
                    .fold((0i64, 0i64), |(a, b), (_, w)| (a + w.0, b + w.1));
                (2 * re.rem_euclid(modulus) - (modulus - 1), 2 * im.rem_euclid(modulus) - (modulus - 1))
            })
            .collect();
        let m2 = (modulus * modulus) as f64;
        let scale = 1.0 / (2.0 * (m2 - 1.0) / 3.0).sqrt();
        let points = grid.iter().map(|&(x, y)| Complex64::new(x as f64 * scale, y as f64 * scale)).collect();
        Ok(Self { levels, grid, points, scale })
    }

    pub fn levels(&self) -> usize {
        self.levels
    }

    pub fn order(&self) -> usize {
        1 << self.levels
    }

    /// Factor mapping grid coordinates to unit-energy symbols.
    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// Gaussian-integer weights `(1+i)^l`, l = 0..L-1.
    pub fn weights(&self) -> Vec<(i64, i64)> {
        gaussian_powers(self.levels)
    }

    /// Unit-energy symbols indexed by integer label.
    pub fn points(&self) -> &[Complex64] {
        &self.points
    }

    pub fn point(&self, label: usize) -> Complex64 {
        self.points[label]
    }

    /// Odd-integer grid coordinates (before energy scaling) of a label.
    pub fn grid_point(&self, label: usize) -> (i64, i64) {
        self.grid[label]
    }

    pub fn label_index(&self, bits: &[u8]) -> Result<usize> {
        if bits.len() != self.levels {
            return Err(invalid(format!("label of {} bits for L={}", bits.len(), self.levels)));
        }
        bits.iter().enumerate().try_fold(0usize, |acc, (l, &b)| match b {
            0 => Ok(acc),
            1 => Ok(acc | 1 << l),
            other => Err(invalid(format!("non-binary label bit {other}"))),
        })
    }

    pub fn label_bits(&self, label: usize) -> Vec<u8> {
        (0..self.levels).map(|l| ((label >> l) & 1) as u8).collect()
    }

    pub fn map_label(&self, bits: &[u8]) -> Result<Complex64> {
        Ok(self.points[self.label_index(bits)?])
    }

    /// Symbol `t` is the image of `[c_0(t), …, c_{L-1}(t)]`.
    pub fn map_frame(&self, codewords: &[BitBlock]) -> Result<SymbolFrame> {
        if codewords.len() != self.levels {
            return Err(invalid(format!("{} codewords for L={}", codewords.len(), self.levels)));
        }
        let n = codewords[0].len();
        if codewords.iter().any(|c| c.len() != n) {
            return Err(invalid("codewords of unequal length"));
        }
        let labels: Vec<usize> = (0..n)
            .map(|t| codewords.iter().enumerate().fold(0usize, |acc, (l, c)| acc | ((c[t] as usize & 1) << l)))
            .collect();
        let symbols = labels.iter().map(|&lab| self.points[lab]).collect();
        Ok(SymbolFrame { symbols, labels })
    }

    /// Integer labels extending a prefix value of `prefix_len` bits.
    pub fn extensions(&self, prefix_value: usize, prefix_len: usize) -> impl Iterator<Item = usize> + '_ {
        debug_assert!(prefix_len <= self.levels);
        (0..1usize << (self.levels - prefix_len)).map(move |j| prefix_value | (j << prefix_len))
    }

    /// Points whose labels start with `prefix`, paired with the remaining
    /// label bits `[c_l, …, c_{L-1}]`, in increasing integer-label order.
    pub fn subconstellation(&self, prefix: &[u8]) -> Result<Vec<(Complex64, Vec<u8>)>> {
        if prefix.len() > self.levels {
            return Err(invalid(format!("prefix of {} bits for L={}", prefix.len(), self.levels)));
        }
        let mut padded = prefix.to_vec();
        padded.resize(self.levels, 0);
        let value = self.label_index(&padded)?;
        let l = prefix.len();
        Ok(self.extensions(value, l).map(|lab| (self.points[lab], self.label_bits(lab)[l..].to_vec())).collect())
    }
}

fn gaussian_powers(levels: usize) -> Vec<(i64, i64)> {
    let mut w = (1i64, 0i64);
    (0..levels)
        .map(|_| {
            let cur = w;
            w = (w.0 - w.1, w.0 + w.1);
            cur
        })
        .collect()
}

/// Convenience wrapper building a mapper for `c.len()` levels.
pub fn map_label(c: &[u8]) -> Result<Complex64> {
    LevelMapper::new(c.len())?.map_label(c)
}

/// One user's transmitted frame.
#[derive(Debug, Clone, PartialEq)]
pub struct SymbolFrame {
    pub symbols: Vec<Complex64>,
    /// Integer label per symbol (bit l = c_l).
    pub labels: Vec<usize>,
}

impl SymbolFrame {
    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }
}
