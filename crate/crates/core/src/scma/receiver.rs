//! Multi-stage receiver: detect level `l` for all users, list-decode, re-encode,
//! and condition the next stage on the re-encoded codewords.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::bits::BitBlock;
use crate::complexity::TermCounter;
use crate::error::{invalid, Result};
use crate::modem::LevelMapper;
use crate::polar::{encode, scl_decode, PolarCodeSpec, DEFAULT_LIST_SIZE};

use super::{mpa_detect_stage, ChannelRealization, DetectorConfig, ScmaGraph, StageContext};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReceiverMode {
    /// Decoded codewords of earlier stages condition later ones.
    #[default]
    Standard,
    /// The detector is handed the transmitted codewords of earlier stages.
    Genie,
    /// Standard, but each stage repeats detection and decoding, treating the
    /// stage-`l` codewords of users whose CRC passed as known, until every
    /// CRC passes or the inner-iteration limit is hit.
    CrcIterated,
}

impl ReceiverMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Standard => "standard",
            Self::Genie => "genie",
            Self::CrcIterated => "crc_iterated",
        }
    }
}

impl std::str::FromStr for ReceiverMode {
    type Err = crate::Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "standard" => Ok(Self::Standard),
            "genie" => Ok(Self::Genie),
            "crc_iterated" | "crc-iterated" => Ok(Self::CrcIterated),
            other => Err(invalid(format!("unknown receiver mode '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReceiverOptions {
    pub mode: ReceiverMode,
    pub list_size: usize,
    pub mpa_iterations: usize,
    /// Inner detect/decode rounds per stage in `CrcIterated` mode.
    pub max_inner_iterations: usize,
    pub detector: DetectorConfig,
}

impl Default for ReceiverOptions {
    fn default() -> Self {
        Self {
            mode: ReceiverMode::Standard,
            list_size: DEFAULT_LIST_SIZE,
            mpa_iterations: 1,
            max_inner_iterations: 4,
            detector: DetectorConfig::default(),
        }
    }
}

/// Receiver decisions per user and level.
#[derive(Debug, Clone, PartialEq)]
pub struct MsdOutput {
    /// Information bits with the CRC removed; empty for suppressed levels.
    pub payloads: Vec<Vec<BitBlock>>,
    /// `None` for suppressed levels and codes without a CRC.
    pub crc_passed: Vec<Vec<Option<bool>>>,
    /// Re-encoded codewords used to condition later stages.
    pub codewords: Vec<Vec<BitBlock>>,
    /// Detection rounds spent on each level (0 when suppressed).
    pub stage_rounds: Vec<usize>,
}

/// Decodes all users. `codes[l] = None` marks a suppressed level whose
/// codeword is all-zero and known to the receiver. `truth[u][l]` (the
/// transmitted codewords) is required in `Genie` mode and ignored otherwise.
///
/// In `Genie` mode every user's earlier-level codewords are taken from
/// `truth`; a user whose own earlier level was decoded wrongly has already
/// failed, so only the interferers' knowledge affects the error rate.
#[allow(clippy::too_many_arguments)]
pub fn msd_receive(
    y: &[Vec<Complex64>],
    channel: &ChannelRealization,
    graph: &ScmaGraph,
    codes: &[Option<PolarCodeSpec>],
    mapper: &LevelMapper,
    options: &ReceiverOptions,
    truth: Option<&[Vec<BitBlock>]>,
    mut counter: Option<&mut TermCounter>,
) -> Result<MsdOutput> {
    let levels = mapper.levels();
    let users = graph.users();
    if codes.len() != levels {
        return Err(invalid(format!("{} level codes for L={levels}", codes.len())));
    }
    let n = y.first().map(|r| r.len()).unwrap_or(0);
    if let Some(c) = codes.iter().flatten().find(|c| c.block_length() != n) {
        return Err(invalid(format!("code length {} but frame length {n}", c.block_length())));
    }
    if options.list_size == 0 {
        return Err(invalid("list size must be at least 1"));
    }
    let truth = match (options.mode, truth) {
        (ReceiverMode::Genie, None) => return Err(invalid("genie mode needs the transmitted codewords")),
        (ReceiverMode::Genie, Some(t)) => {
            if t.len() != users || t.iter().any(|u| u.len() != levels) {
                return Err(invalid("genie codewords must cover every user and level"));
            }
            Some(t)
        }
        _ => None,
    };
    let inner_limit = match options.mode {
        ReceiverMode::CrcIterated => options.max_inner_iterations.max(1),
        _ => 1,
    };

    let mut out = MsdOutput {
        payloads: vec![Vec::with_capacity(levels); users],
        crc_passed: vec![Vec::with_capacity(levels); users],
        codewords: vec![Vec::with_capacity(levels); users],
        stage_rounds: Vec::with_capacity(levels),
    };

    for (l, code) in codes.iter().enumerate() {
        let code = match code {
            Some(c) if c.info_count() > 0 => c,
            _ => {
                for u in 0..users {
                    out.payloads[u].push(BitBlock::zeros(0));
                    out.crc_passed[u].push(None);
                    out.codewords[u].push(BitBlock::zeros(n));
                }
                out.stage_rounds.push(0);
                continue;
            }
        };

        let known: Vec<Vec<BitBlock>> = match truth {
            Some(t) => t.iter().map(|lv| lv[..l].to_vec()).collect(),
            None => out.codewords.clone(),
        };
        let mut ctx = StageContext::new(l, known);
        let mut decoded: Vec<Option<(BitBlock, Option<bool>)>> = vec![None; users];
        let mut resolved = vec![false; users];
        let mut rounds = 0;

        for round in 0..inner_limit {
            rounds += 1;
            let llrs = mpa_detect_stage(
                y,
                channel,
                graph,
                mapper,
                &ctx,
                options.mpa_iterations,
                &options.detector,
                counter.as_deref_mut(),
            )?;
            for u in 0..users {
                if resolved[u] {
                    continue;
                }
                let res = scl_decode(&llrs[u], code, options.list_size)?;
                resolved[u] = res.crc_passed == Some(true);
                decoded[u] = Some((res.bits, res.crc_passed));
            }
            if resolved.iter().all(|&r| r) || round + 1 == inner_limit {
                break;
            }
            for u in (0..users).filter(|&u| resolved[u]) {
                if ctx.known[u].len() == l {
                    let bits = &decoded[u].as_ref().expect("decoded").0;
                    ctx.known[u].push(encode(bits, code)?);
                }
            }
        }

        for (u, d) in decoded.into_iter().enumerate() {
            let (bits, crc) = d.expect("every user decoded at least once");
            let cw = encode(&bits, code)?;
            let payload = match code.crc() {
                Some(c) => BitBlock::from(c.strip(&bits)),
                None => bits,
            };
            out.payloads[u].push(payload);
            out.crc_passed[u].push(crc);
            out.codewords[u].push(cw);
        }
        out.stage_rounds.push(rounds);
    }
    Ok(out)
}
