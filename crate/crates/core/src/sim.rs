//! Monte Carlo frame-error-rate driver.
//!
//! A frame carries one codeword per level for every user. Every random draw
//! of frame `t` at SNR `s` comes from streams keyed by
//! `(master_seed, purpose, s, t)`, frames are simulated in parallel batches
//! and folded back in frame order, and the stopping rule is evaluated frame
//! by frame. Results therefore do not depend on the thread count, and two
//! receiver modes run with the same seed see identical data, channels and
//! noise.
//!
//! Error counts are per user frame: `frame_errors` counts users whose
//! payload was not recovered on every active level, and
//! `fer = frame_errors / (frames · users)`.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bits::BitBlock;
use crate::complexity::TermCounter;
use crate::error::{invalid, Error, Result};
use crate::link_design::db_to_linear;
use crate::modem::{LevelMapper, RateProfile};
use crate::polar::{design_frozen_set, CrcSpec, DesignChannelParam, FrozenSetSidecar, PolarCodeSpec};
use crate::rng::{derive_seed, Stream};
use crate::scma::{msd_receive, sample_channel_with, transmit, ReceiverMode, ReceiverOptions, ScmaGraph};
use crate::stats::{clopper_pearson, sign_test_upper};

/// Frames simulated between stopping-rule checks.
const FRAME_BATCH: u64 = 32;

pub const CSV_HEADER: &str = "snr_db,frames,frame_errors,fer,ci_low,ci_high,mode,list_size,mpa_iters";

/// Frozen-set construction for configured codes.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Construction {
    /// Gaussian approximation on the BI-AWGN channel whose capacity equals
    /// the level's code rate `K_l/N`.
    #[default]
    RateMatched,
    Bec {
        erasure: f64,
    },
    BiAwgn {
        noise_variance: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSection {
    /// Allocation file, relative to the config file. Defaults to the
    /// built-in 4×6 graph.
    #[serde(default)]
    pub graph: Option<PathBuf>,
    pub users: usize,
    pub subcarriers: usize,
    pub users_per_subcarrier: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapperSection {
    pub levels: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CodeSection {
    pub block_length: usize,
    /// Information bits per level, CRC included.
    pub level_info_counts: Vec<usize>,
    #[serde(default)]
    pub active_levels: Option<Vec<bool>>,
    /// Nominal `Σ K_l` over all levels, checked when present.
    #[serde(default)]
    pub total_info_bits: Option<usize>,
    #[serde(default)]
    pub crc: Option<CrcSpec>,
    #[serde(default)]
    pub construction: Construction,
    /// Frozen-set sidecar (JSON), relative to the config file; overrides
    /// `construction`.
    #[serde(default)]
    pub frozen_sets: Option<PathBuf>,
}

fn default_list_size() -> usize {
    crate::polar::DEFAULT_LIST_SIZE
}

fn one() -> usize {
    1
}

fn four() -> usize {
    4
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReceiverSection {
    #[serde(default)]
    pub mode: ReceiverMode,
    #[serde(default = "default_list_size")]
    pub list_size: usize,
    #[serde(default = "one")]
    pub mpa_iterations: usize,
    #[serde(default = "four")]
    pub max_inner_iterations: usize,
    #[serde(default)]
    pub detector: crate::scma::DetectorConfig,
}

fn default_min_errors() -> u64 {
    100
}

/// File-level simulation configuration (TOML or JSON).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    pub master_seed: u64,
    pub snr_db: Vec<f64>,
    pub max_frames: u64,
    #[serde(default = "default_min_errors")]
    pub min_frame_errors: u64,
    pub scenario: ScenarioSection,
    pub mapper: MapperSection,
    pub code: CodeSection,
    pub receiver: ReceiverSection,
    /// Directory the relative paths above are resolved against.
    #[serde(skip)]
    pub base_dir: Option<PathBuf>,
}

const BUNDLED: &str = include_str!("../scenarios/uplink.toml");

impl SimConfig {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        toml::from_str(s).map_err(|e| Error::InvalidConfig(e.to_string()))
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::InvalidConfig(e.to_string()))
    }

    /// Reads `.json` files as JSON and anything else as TOML.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut cfg = match path.extension().and_then(|e| e.to_str()) {
            Some("json") => Self::from_json_str(&text)?,
            _ => Self::from_toml_str(&text)?,
        };
        cfg.base_dir = path.parent().map(Path::to_path_buf);
        Ok(cfg)
    }

    /// The shipped uplink scenario (`scenarios/uplink.toml`).
    pub fn bundled() -> Self {
        let mut cfg = Self::from_toml_str(BUNDLED).expect("bundled scenario parses");
        cfg.base_dir = Some(Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios"));
        cfg
    }

    fn resolve(&self, p: &Path) -> PathBuf {
        match &self.base_dir {
            Some(d) if p.is_relative() => d.join(p),
            _ => p.to_path_buf(),
        }
    }

    pub fn sweep(&self) -> Result<SweepSettings> {
        let s = SweepSettings {
            snr_db: self.snr_db.clone(),
            max_frames: self.max_frames,
            min_frame_errors: self.min_frame_errors,
            master_seed: self.master_seed,
        };
        s.validate()?;
        Ok(s)
    }

    /// Validates everything and builds the per-level codes.
    pub fn build(&self) -> Result<Scenario> {
        let cfg_err = |m: String| Error::InvalidConfig(m);
        self.sweep()?;

        let graph = match &self.scenario.graph {
            Some(p) => ScmaGraph::load(&self.resolve(p))?,
            None => ScmaGraph::bundled_default(),
        };
        let sc = &self.scenario;
        if graph.users() != sc.users
            || graph.subcarriers() != sc.subcarriers
            || graph.fn_degree() != sc.users_per_subcarrier
        {
            return Err(cfg_err(format!(
                "graph is {}x{} with {} users per subcarrier, config says {}x{} with {}",
                graph.subcarriers(),
                graph.users(),
                graph.fn_degree(),
                sc.subcarriers,
                sc.users,
                sc.users_per_subcarrier
            )));
        }

        let mapper = LevelMapper::new(self.mapper.levels)?;
        let code = &self.code;
        let levels = mapper.levels();
        if code.level_info_counts.len() != levels {
            return Err(cfg_err(format!("{} level counts for L={levels}", code.level_info_counts.len())));
        }
        let active = code.active_levels.clone().unwrap_or_else(|| vec![true; levels]);
        let profile = RateProfile::new(code.level_info_counts.clone(), code.block_length, active)
            .map_err(|e| cfg_err(e.to_string()))?;
        if let Some(total) = code.total_info_bits {
            let sum: usize = code.level_info_counts.iter().sum();
            if sum != total {
                return Err(cfg_err(format!("level counts sum to {sum}, total_info_bits is {total}")));
            }
        }

        let codes = match &code.frozen_sets {
            Some(p) => {
                let text = std::fs::read_to_string(self.resolve(p))?;
                let sidecar = FrozenSetSidecar::from_json(&text)?;
                if sidecar.levels.len() != levels {
                    return Err(cfg_err(format!("sidecar has {} levels for L={levels}", sidecar.levels.len())));
                }
                sidecar
                    .levels
                    .into_iter()
                    .enumerate()
                    .map(|(l, s)| if profile.is_active(l) { s } else { None })
                    .collect()
            }
            None => (0..levels)
                .map(|l| {
                    if !profile.is_active(l) {
                        return Ok(None);
                    }
                    let k = profile.level_info_counts[l];
                    let n = code.block_length;
                    let ch = match code.construction {
                        Construction::RateMatched => DesignChannelParam::biawgn_for_capacity(k as f64 / n as f64),
                        Construction::Bec { erasure } => DesignChannelParam::Bec { erasure },
                        Construction::BiAwgn { noise_variance } => DesignChannelParam::BiAwgn { noise_variance },
                    };
                    let frozen = design_frozen_set(n, k, ch)?;
                    PolarCodeSpec::new(n, frozen, code.crc).map(Some)
                })
                .collect::<Result<Vec<_>>>()?,
        };

        let receiver = ReceiverOptions {
            mode: self.receiver.mode,
            list_size: self.receiver.list_size,
            mpa_iterations: self.receiver.mpa_iterations,
            max_inner_iterations: self.receiver.max_inner_iterations,
            detector: self.receiver.detector,
        };
        Scenario::new(graph, mapper, profile, codes, receiver)
    }
}

/// SNR grid and stopping rule of a sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSettings {
    pub snr_db: Vec<f64>,
    pub max_frames: u64,
    pub min_frame_errors: u64,
    pub master_seed: u64,
}

impl SweepSettings {
    pub fn validate(&self) -> Result<()> {
        if self.snr_db.is_empty() {
            return Err(Error::InvalidConfig("empty SNR grid".into()));
        }
        if self.snr_db.iter().any(|s| !s.is_finite()) || self.snr_db.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidConfig("SNR grid must be finite and strictly increasing".into()));
        }
        if self.max_frames == 0 || self.min_frame_errors == 0 {
            return Err(Error::InvalidConfig("max_frames and min_frame_errors must be positive".into()));
        }
        Ok(())
    }

    fn stop(&self) -> PointStop {
        PointStop { max_frames: self.max_frames, min_frame_errors: self.min_frame_errors }
    }
}

/// A validated link: graph, mapper, per-level codes and receiver settings.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub graph: ScmaGraph,
    pub mapper: LevelMapper,
    pub profile: RateProfile,
    /// `None` on suppressed levels.
    pub codes: Vec<Option<PolarCodeSpec>>,
    pub receiver: ReceiverOptions,
}

impl Scenario {
    pub fn new(
        graph: ScmaGraph,
        mapper: LevelMapper,
        profile: RateProfile,
        codes: Vec<Option<PolarCodeSpec>>,
        receiver: ReceiverOptions,
    ) -> Result<Self> {
        let levels = mapper.levels();
        let cfg_err = |m: String| Error::InvalidConfig(m);
        if profile.levels() != levels || codes.len() != levels {
            return Err(cfg_err(format!("profile/codes do not cover L={levels} levels")));
        }
        if graph.users() > 64 {
            return Err(cfg_err(format!("{} users; at most 64 supported", graph.users())));
        }
        for (l, c) in codes.iter().enumerate() {
            match (profile.is_active(l), c) {
                (true, Some(c)) => {
                    if c.block_length() != profile.block_length {
                        return Err(cfg_err(format!("level {l}: code length {} != N", c.block_length())));
                    }
                    if c.info_count() != profile.level_info_counts[l] {
                        return Err(cfg_err(format!(
                            "level {l}: code carries {} bits, profile {}",
                            c.info_count(),
                            profile.level_info_counts[l]
                        )));
                    }
                    if let Some(crc) = c.crc() {
                        if c.info_count() > 0 && c.info_count() < crc.degree() {
                            return Err(cfg_err(format!("level {l}: K_l={} shorter than its CRC", c.info_count())));
                        }
                    }
                }
                (true, None) => return Err(cfg_err(format!("active level {l} has no code"))),
                (false, _) => {}
            }
        }
        if receiver.list_size == 0 || receiver.mpa_iterations == 0 {
            return Err(cfg_err("list size and MPA iterations must be positive".into()));
        }
        let codes = codes.into_iter().enumerate().map(|(l, c)| if profile.is_active(l) { c } else { None }).collect();
        Ok(Self { graph, mapper, profile, codes, receiver })
    }

    pub fn users(&self) -> usize {
        self.graph.users()
    }

    /// Payload bits per user and frame (CRC excluded).
    pub fn payload_bits(&self) -> usize {
        self.codes.iter().flatten().map(|c| c.payload_count()).sum()
    }

    pub fn with_mode(&self, mode: ReceiverMode) -> Self {
        let mut s = self.clone();
        s.receiver.mode = mode;
        s
    }
}

/// Seeds of the three independent draws of one frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FrameSeeds {
    pub data: u64,
    pub channel: u64,
    pub noise: u64,
}

impl FrameSeeds {
    pub fn for_trial(master: u64, snr_db: f64, frame: u64) -> Self {
        let s = snr_db.to_bits();
        Self {
            data: derive_seed(master, &[Stream::Data as u64, s, frame]),
            channel: derive_seed(master, &[Stream::Channel as u64, s, frame]),
            noise: derive_seed(master, &[Stream::Noise as u64, s, frame]),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrameOutcome {
    pub user_ok: Vec<bool>,
    /// First level whose payload was wrong, per user.
    pub first_error_level: Vec<Option<usize>>,
}

impl FrameOutcome {
    pub fn errors(&self) -> u64 {
        self.user_ok.iter().filter(|&&ok| !ok).count() as u64
    }

    fn failure_mask(&self) -> u64 {
        self.user_ok.iter().enumerate().filter(|(_, &ok)| !ok).fold(0, |m, (u, _)| m | (1 << u))
    }
}

/// One frame: random payloads, level encoding, mapping, a fresh channel
/// realization and noise, multi-stage reception, per-user comparison.
pub fn run_frame(scenario: &Scenario, snr_db: f64, seeds: FrameSeeds) -> Result<FrameOutcome> {
    run_frame_counted(scenario, snr_db, seeds, None)
}

/// [`run_frame`] with function-node term accounting.
pub fn run_frame_counted(
    scenario: &Scenario,
    snr_db: f64,
    seeds: FrameSeeds,
    counter: Option<&mut TermCounter>,
) -> Result<FrameOutcome> {
    if !snr_db.is_finite() {
        return Err(invalid(format!("SNR {snr_db} dB is not finite")));
    }
    let n = scenario.profile.block_length;
    let users = scenario.users();
    let mut data_rng = ChaCha8Rng::seed_from_u64(seeds.data);
    let mut payloads: Vec<Vec<BitBlock>> = Vec::with_capacity(users);
    let mut codewords: Vec<Vec<BitBlock>> = Vec::with_capacity(users);
    let mut frames = Vec::with_capacity(users);
    for _ in 0..users {
        let mut p = Vec::with_capacity(scenario.codes.len());
        let mut c = Vec::with_capacity(scenario.codes.len());
        for code in &scenario.codes {
            match code {
                Some(code) if code.info_count() > 0 => {
                    let payload = BitBlock::random(code.payload_count(), &mut data_rng);
                    c.push(code.encode_payload(&payload)?);
                    p.push(payload);
                }
                _ => {
                    p.push(BitBlock::zeros(0));
                    c.push(BitBlock::zeros(n));
                }
            }
        }
        frames.push(scenario.mapper.map_frame(&c)?);
        payloads.push(p);
        codewords.push(c);
    }

    let noise_variance = 1.0 / db_to_linear(snr_db);
    let mut ch_rng = ChaCha8Rng::seed_from_u64(seeds.channel);
    let channel = sample_channel_with(&scenario.graph, noise_variance, &mut ch_rng)?;
    let mut noise_rng = ChaCha8Rng::seed_from_u64(seeds.noise);
    let y = transmit(&frames, &scenario.graph, &channel, &mut noise_rng)?;

    let out = msd_receive(
        &y,
        &channel,
        &scenario.graph,
        &scenario.codes,
        &scenario.mapper,
        &scenario.receiver,
        Some(&codewords),
        counter,
    )?;
    let first_error_level: Vec<Option<usize>> =
        (0..users).map(|u| (0..scenario.codes.len()).find(|&l| out.payloads[u][l] != payloads[u][l])).collect();
    Ok(FrameOutcome { user_ok: first_error_level.iter().map(Option::is_none).collect(), first_error_level })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PointStop {
    pub max_frames: u64,
    /// User-frame errors after which the point is complete.
    pub min_frame_errors: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FerPoint {
    pub snr_db: f64,
    pub frames: u64,
    /// `frames × users`.
    pub user_frames: u64,
    pub frame_errors: u64,
    pub fer: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    /// Failed user frames by first wrong level.
    pub first_error_levels: Vec<u64>,
    /// Bit `u` of entry `t` set when user `u` failed in frame `t`.
    #[serde(skip)]
    pub failure_masks: Vec<u64>,
}

/// Simulates one SNR point until the stopping rule fires.
pub fn run_point(scenario: &Scenario, snr_db: f64, master_seed: u64, stop: PointStop) -> Result<FerPoint> {
    if stop.max_frames == 0 || stop.min_frame_errors == 0 {
        return Err(invalid("max_frames and min_frame_errors must be positive"));
    }
    let users = scenario.users() as u64;
    let mut point = FerPoint {
        snr_db,
        frames: 0,
        user_frames: 0,
        frame_errors: 0,
        fer: 0.0,
        ci_low: 0.0,
        ci_high: 1.0,
        first_error_levels: vec![0; scenario.codes.len()],
        failure_masks: Vec::new(),
    };
    let mut next = 0u64;
    'outer: while next < stop.max_frames {
        let end = (next + FRAME_BATCH).min(stop.max_frames);
        let batch: Vec<FrameOutcome> = (next..end)
            .into_par_iter()
            .map(|t| run_frame(scenario, snr_db, FrameSeeds::for_trial(master_seed, snr_db, t)))
            .collect::<Result<_>>()?;
        for o in batch {
            point.frames += 1;
            point.user_frames += users;
            point.frame_errors += o.errors();
            for l in o.first_error_level.iter().flatten() {
                point.first_error_levels[*l] += 1;
            }
            point.failure_masks.push(o.failure_mask());
            if point.frame_errors >= stop.min_frame_errors {
                break 'outer;
            }
        }
        next = end;
    }
    point.fer = point.frame_errors as f64 / point.user_frames as f64;
    (point.ci_low, point.ci_high) = clopper_pearson(point.frame_errors, point.user_frames, 0.95);
    Ok(point)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FerResult {
    pub mode: ReceiverMode,
    pub list_size: usize,
    pub mpa_iterations: usize,
    pub users: usize,
    pub master_seed: u64,
    pub points: Vec<FerPoint>,
}

impl FerResult {
    pub fn to_csv(&self) -> String {
        let mut s = String::from(CSV_HEADER);
        s.push('\n');
        for p in &self.points {
            let _ = writeln!(
                s,
                "{},{},{},{:.6e},{:.6e},{:.6e},{},{},{}",
                p.snr_db,
                p.frames,
                p.frame_errors,
                p.fer,
                p.ci_low,
                p.ci_high,
                self.mode.as_str(),
                self.list_size,
                self.mpa_iterations
            );
        }
        s
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// FER sweep over `settings.snr_db`.
pub fn run_fer(scenario: &Scenario, settings: &SweepSettings) -> Result<FerResult> {
    settings.validate()?;
    let points = settings
        .snr_db
        .iter()
        .map(|&s| run_point(scenario, s, settings.master_seed, settings.stop()))
        .collect::<Result<Vec<_>>>()?;
    Ok(FerResult {
        mode: scenario.receiver.mode,
        list_size: scenario.receiver.list_size,
        mpa_iterations: scenario.receiver.mpa_iterations,
        users: scenario.users(),
        master_seed: settings.master_seed,
        points,
    })
}

/// Sweep over the SNR points of `reference`, simulating at most as many
/// frames per point as `reference` did (and stopping early at
/// `min_frame_errors`). With the same master seed the frames are the ones
/// `reference` saw, so the two sweeps can be compared pairwise.
pub fn run_fer_matched(scenario: &Scenario, reference: &FerResult, min_frame_errors: u64) -> Result<FerResult> {
    if min_frame_errors == 0 {
        return Err(invalid("min_frame_errors must be positive"));
    }
    let points = reference
        .points
        .iter()
        .map(|p| {
            let stop = PointStop { max_frames: p.frames.max(1), min_frame_errors };
            run_point(scenario, p.snr_db, reference.master_seed, stop)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(FerResult {
        mode: scenario.receiver.mode,
        list_size: scenario.receiver.list_size,
        mpa_iterations: scenario.receiver.mpa_iterations,
        users: scenario.users(),
        master_seed: reference.master_seed,
        points,
    })
}

/// Paired comparison of two points simulated with the same seed, over
/// their common frames.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairedComparison {
    pub frames: u64,
    /// User frames failed only under `a` / only under `b`.
    pub only_a: u64,
    pub only_b: u64,
    /// One-sided sign-test p-value for "`a` fails more often than `b`".
    pub p_a_worse: f64,
}

pub fn paired_compare(a: &FerPoint, b: &FerPoint) -> Result<PairedComparison> {
    if a.snr_db.to_bits() != b.snr_db.to_bits() {
        return Err(invalid("paired points must share the SNR"));
    }
    let frames = a.failure_masks.len().min(b.failure_masks.len());
    let (mut only_a, mut only_b) = (0u64, 0u64);
    for (ma, mb) in a.failure_masks[..frames].iter().zip(&b.failure_masks[..frames]) {
        only_a += u64::from((ma & !mb).count_ones());
        only_b += u64::from((mb & !ma).count_ones());
    }
    Ok(PairedComparison { frames: frames as u64, only_a, only_b, p_a_worse: sign_test_upper(only_a, only_b) })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> Scenario {
        // bundled graph with short codes
        let mut cfg = SimConfig::bundled();
        cfg.code.block_length = 16;
        cfg.code.level_info_counts = vec![0, 10, 12, 14];
        cfg.code.total_info_bits = None;
        cfg.build().unwrap()
    }

    #[test]
    fn bundled_config_builds() {
        let cfg = SimConfig::bundled();
        let sc = cfg.build().unwrap();
        assert_eq!(sc.users(), 6);
        assert!(sc.codes[0].is_none());
        assert_eq!(sc.profile.level_info_counts, vec![9, 70, 185, 248]);
        assert_eq!(sc.payload_bits(), 70 + 185 + 248 - 24);
        cfg.sweep().unwrap();
    }

    #[test]
    fn rejects_inconsistent_configs() {
        let mut cfg = SimConfig::bundled();
        cfg.snr_db = vec![];
        assert!(matches!(cfg.build(), Err(Error::InvalidConfig(_))));
        let mut cfg = SimConfig::bundled();
        cfg.snr_db = vec![3.0, 2.0];
        assert!(cfg.build().is_err());
        let mut cfg = SimConfig::bundled();
        cfg.scenario.users = 5;
        assert!(cfg.build().is_err());
        let mut cfg = SimConfig::bundled();
        cfg.code.level_info_counts = vec![9, 70, 185];
        assert!(cfg.build().is_err());
        let mut cfg = SimConfig::bundled();
        cfg.code.total_info_bits = Some(500);
        assert!(cfg.build().is_err());
        assert!(SimConfig::from_toml_str("master_seed = 1\nbogus = 2").is_err());
    }

    #[test]
    fn noiseless_frames_succeed() {
        let sc = small();
        for t in 0..5 {
            let o = run_frame(&sc, 80.0, FrameSeeds::for_trial(1, 80.0, t)).unwrap();
            assert!(o.user_ok.iter().all(|&ok| ok), "{o:?}");
        }
    }

    #[test]
    fn overloaded_frames_fail() {
        let sc = small();
        let errs: u64 =
            (0..5).map(|t| run_frame(&sc, -20.0, FrameSeeds::for_trial(1, -20.0, t)).unwrap().errors()).sum();
        assert!(errs >= 28, "{errs}");
    }

    #[test]
    fn frame_is_reproducible() {
        let sc = small();
        let s = FrameSeeds::for_trial(42, 6.0, 3);
        assert_eq!(run_frame(&sc, 6.0, s).unwrap(), run_frame(&sc, 6.0, s).unwrap());
    }

    #[test]
    fn point_accounting_and_csv() {
        let sc = small();
        let settings = SweepSettings { snr_db: vec![0.0, 10.0], max_frames: 40, min_frame_errors: 10, master_seed: 5 };
        let r = run_fer(&sc, &settings).unwrap();
        for p in &r.points {
            assert_eq!(p.user_frames, p.frames * 6);
            assert_eq!(p.failure_masks.len() as u64, p.frames);
            assert_eq!(p.first_error_levels.iter().sum::<u64>(), p.frame_errors);
            assert!(p.ci_low <= p.fer && p.fer <= p.ci_high);
            assert!(p.frame_errors >= 10 || p.frames == 40);
        }
        let csv = r.to_csv();
        assert!(csv.starts_with(CSV_HEADER));
        assert_eq!(csv.lines().count(), 3);
        let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let three = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap();
        let a = one.install(|| run_fer(&sc, &settings).unwrap().to_csv());
        let b = three.install(|| run_fer(&sc, &settings).unwrap().to_csv());
        assert_eq!(a, b);
    }

    #[test]
    fn paired_compare_counts_discordant_users() {
        let mk = |masks: Vec<u64>| FerPoint {
            snr_db: 1.0,
            frames: masks.len() as u64,
            user_frames: 0,
            frame_errors: 0,
            fer: 0.0,
            ci_low: 0.0,
            ci_high: 1.0,
            first_error_levels: vec![],
            failure_masks: masks,
        };
        let c = paired_compare(&mk(vec![0b11, 0b01, 0]), &mk(vec![0b01, 0b10])).unwrap();
        assert_eq!((c.frames, c.only_a, c.only_b), (2, 2, 1));
    }
}
