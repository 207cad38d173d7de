//! Message-passing multi-user detection on the allocation graph.
//!
//! Function nodes marginalize the Gaussian likelihood of one subcarrier over
//! the joint hypotheses of the `U` users sharing it. At MLCM stage `l`, a
//! user whose bits `c_0..c_{l-1}` are known contributes only the `2^{L-l}`
//! points of its subconstellation; the symbol-level (BICM) variant
//! enumerates all `2^L` points of every user. Variable nodes add the
//! log-domain messages of a user's subcarriers.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::bits::BitBlock;
use crate::complexity::TermCounter;
use crate::error::{invalid, Result};
use crate::modem::LevelMapper;
use crate::polar::{clip_llr, LlrVector, LLR_CLIP};

use super::{ChannelRealization, ScmaGraph};

/// Denominator of the Gaussian exponent.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LikelihoodExponent {
    /// `exp(-|r|²/σ²)`: circularly-symmetric complex noise of total variance σ².
    #[default]
    ComplexGaussian,
    /// `exp(-|r|²/(2σ²))`.
    RealKernel,
}

/// How function nodes combine hypothesis terms.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Marginalization {
    /// Exact sum of likelihoods.
    #[default]
    Exact,
    /// Max-log approximation.
    MaxLog,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DetectorConfig {
    #[serde(default)]
    pub exponent: LikelihoodExponent,
    #[serde(default)]
    pub marginalization: Marginalization,
}

impl DetectorConfig {
    fn inverse_scale(&self, noise_variance: f64) -> f64 {
        match self.exponent {
            LikelihoodExponent::ComplexGaussian => 1.0 / noise_variance,
            LikelihoodExponent::RealKernel => 1.0 / (2.0 * noise_variance),
        }
    }
}

/// Per-user LLRs of one bit level.
pub type LlrFrame = Vec<LlrVector>;

/// Codewords known to the detector at one stage.
#[derive(Debug, Clone, PartialEq)]
pub struct StageContext {
    pub stage: usize,
    /// `known[u][l]` is user `u`'s level-`l` codeword. At least `stage`
    /// levels per user; a user with more has its stage-`l` bits fixed and is
    /// not detected.
    pub known: Vec<Vec<BitBlock>>,
}

impl StageContext {
    pub fn new(stage: usize, known: Vec<Vec<BitBlock>>) -> Self {
        Self { stage, known }
    }

    fn prefix_value(&self, u: usize, t: usize) -> usize {
        self.known[u].iter().enumerate().fold(0, |acc, (l, c)| acc | ((c[t] as usize) << l))
    }
}

/// Hypotheses of one user at a function node.
#[derive(Debug, Default, Clone)]
struct Slot {
    faded: Vec<Complex64>,
    log_prior: Vec<f64>,
    class: Vec<usize>,
    classes: usize,
}

impl Slot {
    fn clear(&mut self, classes: usize) {
        self.faded.clear();
        self.log_prior.clear();
        self.class.clear();
        self.classes = classes;
    }
}

/// Reusable buffers for function-node updates.
#[derive(Debug, Default)]
struct FnWorkspace {
    slots: Vec<Slot>,
    metrics: Vec<f64>,
    resid: Vec<Complex64>,
    bins: Vec<Vec<f64>>,
}

impl FnWorkspace {
    fn slots_mut(&mut self, n: usize) -> &mut [Slot] {
        if self.slots.len() < n {
            self.slots.resize_with(n, Slot::default);
        }
        &mut self.slots[..n]
    }

    /// Log-domain class sums `ln Σ prior · likelihood` per slot, written to
    /// `self.bins`. Returns the number of joint hypotheses evaluated.
    ///
    /// Joint hypotheses are laid out in mixed radix with the last slot
    /// varying fastest; residuals and priors are expanded slot by slot.
    fn marginalize(&mut self, y: Complex64, used: usize, inv_scale: f64, mode: Marginalization) -> u64 {
        let slots = &self.slots[..used];
        let total: usize = slots.iter().map(|s| s.faded.len()).product();

        self.resid.resize(total, Complex64::new(0.0, 0.0));
        self.metrics.resize(total, 0.0);
        self.resid[0] = y;
        self.metrics[0] = 0.0;
        // in-place expansion, back to front
        let mut len = 1;
        for slot in slots {
            let width = slot.faded.len();
            for i in (0..len).rev() {
                let (r, lp) = (self.resid[i], self.metrics[i]);
                let base = i * width;
                for (d, (f, p)) in slot.faded.iter().zip(&slot.log_prior).enumerate() {
                    self.resid[base + d] = r - f;
                    self.metrics[base + d] = lp + p;
                }
            }
            len *= width;
        }

        let mut best = f64::NEG_INFINITY;
        for (m, r) in self.metrics.iter_mut().zip(&self.resid) {
            *m -= r.norm_sqr() * inv_scale;
            best = best.max(*m);
        }
        if mode == Marginalization::Exact {
            // A bin that matters after clipping holds at least e^{-LLR_CLIP}
            // of the best term; everything skipped here sums to a relative
            // e^{-36} of such a bin.
            let floor = -(LLR_CLIP + (total as f64).ln() + 36.0);
            for m in self.metrics.iter_mut() {
                let d = *m - best;
                *m = if d < floor { 0.0 } else { crate::numeric::exp(d) };
            }
        }

        if self.bins.len() < used {
            self.bins.resize_with(used, Vec::new);
        }
        let init = match mode {
            Marginalization::Exact => 0.0,
            Marginalization::MaxLog => f64::NEG_INFINITY,
        };
        let mut stride = total;
        for (bin, slot) in self.bins.iter_mut().zip(slots) {
            bin.clear();
            bin.resize(slot.classes, init);
            let len = slot.faded.len();
            stride /= len;
            for block in self.metrics.chunks_exact(len * stride) {
                for (d, run) in block.chunks_exact(stride).enumerate() {
                    let b = &mut bin[slot.class[d]];
                    match mode {
                        Marginalization::Exact => *b += run.iter().sum::<f64>(),
                        Marginalization::MaxLog => *b = run.iter().copied().fold(*b, f64::max),
                    }
                }
            }
        }
        if mode == Marginalization::Exact {
            for bin in &mut self.bins[..used] {
                for v in bin.iter_mut() {
                    *v = v.ln() + best;
                }
            }
        }
        total as u64
    }
}

#[inline]
fn log_bit_prior(llr: f64, bit: usize) -> f64 {
    let signed = if bit == 0 { llr } else { -llr };
    -crate::polar::softplus(-signed)
}

#[inline]
fn llr_from_logs(l0: f64, l1: f64) -> f64 {
    if l0 == f64::NEG_INFINITY && l1 == f64::NEG_INFINITY {
        0.0
    } else {
        clip_llr(l0 - l1)
    }
}

/// One stage-`l` function-node update with uniform priors.
///
/// `h_row[k]` and `prefixes[k]` belong to the k-th user on the subcarrier;
/// every prefix must hold exactly `stage` bits. Returns, per user,
/// `[ln q(c_l = 0), ln q(c_l = 1)]` up to a common additive constant.
pub fn fn_update_mlcm(
    y_f: Complex64,
    h_row: &[Complex64],
    stage: usize,
    prefixes: &[Vec<u8>],
    mapper: &LevelMapper,
    noise_variance: f64,
    config: &DetectorConfig,
) -> Result<Vec<[f64; 2]>> {
    fn_update_mlcm_counted(y_f, h_row, stage, prefixes, mapper, noise_variance, config, None)
}

#[allow(clippy::too_many_arguments)]
pub fn fn_update_mlcm_counted(
    y_f: Complex64,
    h_row: &[Complex64],
    stage: usize,
    prefixes: &[Vec<u8>],
    mapper: &LevelMapper,
    noise_variance: f64,
    config: &DetectorConfig,
    counter: Option<&mut TermCounter>,
) -> Result<Vec<[f64; 2]>> {
    if stage >= mapper.levels() {
        return Err(invalid(format!("stage {stage} for L={}", mapper.levels())));
    }
    if h_row.len() != prefixes.len() || h_row.is_empty() {
        return Err(invalid("one channel coefficient and one prefix per user required"));
    }
    if let Some(p) = prefixes.iter().find(|p| p.len() != stage) {
        return Err(invalid(format!("prefix of {} bits at stage {stage}", p.len())));
    }
    let mut ws = FnWorkspace::default();
    let slots = ws.slots_mut(h_row.len());
    for ((slot, &h), prefix) in slots.iter_mut().zip(h_row).zip(prefixes) {
        let mut padded = prefix.clone();
        padded.resize(mapper.levels(), 0);
        let value = mapper.label_index(&padded)?;
        slot.clear(2);
        for lab in mapper.extensions(value, stage) {
            slot.faded.push(h * mapper.point(lab));
            slot.log_prior.push(0.0);
            slot.class.push((lab >> stage) & 1);
        }
    }
    let terms = ws.marginalize(y_f, h_row.len(), config.inverse_scale(noise_variance), config.marginalization);
    if let Some(c) = counter {
        c.record(stage, terms);
    }
    Ok(ws.bins[..h_row.len()].iter().map(|b| [b[0], b[1]]).collect())
}

/// Symbol-level function-node update.
///
/// `log_priors[k]` holds user k's log prior over its `2^L` symbols (any
/// additive constant). Returns per user the normalized log-probabilities of
/// the extrinsic message (own prior excluded).
pub fn fn_update_bicm(
    y_f: Complex64,
    h_row: &[Complex64],
    log_priors: &[Vec<f64>],
    mapper: &LevelMapper,
    noise_variance: f64,
    config: &DetectorConfig,
) -> Result<Vec<Vec<f64>>> {
    let mut ws = FnWorkspace::default();
    fn_update_bicm_ws(&mut ws, y_f, h_row, log_priors, mapper, noise_variance, config, None)
}

#[allow(clippy::too_many_arguments)]
fn fn_update_bicm_ws(
    ws: &mut FnWorkspace,
    y_f: Complex64,
    h_row: &[Complex64],
    log_priors: &[Vec<f64>],
    mapper: &LevelMapper,
    noise_variance: f64,
    config: &DetectorConfig,
    counter: Option<&mut TermCounter>,
) -> Result<Vec<Vec<f64>>> {
    let q = mapper.order();
    if h_row.len() != log_priors.len() || h_row.is_empty() {
        return Err(invalid("one channel coefficient and one prior vector per user required"));
    }
    if log_priors.iter().any(|p| p.len() != q) {
        return Err(invalid(format!("prior vectors must have {q} entries")));
    }
    let slots = ws.slots_mut(h_row.len());
    for ((slot, &h), prior) in slots.iter_mut().zip(h_row).zip(log_priors) {
        slot.clear(q);
        for lab in 0..q {
            slot.faded.push(h * mapper.point(lab));
            slot.log_prior.push(prior[lab]);
            slot.class.push(lab);
        }
    }
    let terms = ws.marginalize(y_f, h_row.len(), config.inverse_scale(noise_variance), config.marginalization);
    if let Some(c) = counter {
        c.record(TermCounter::SYMBOL_LEVEL, terms);
    }
    Ok(ws.bins[..h_row.len()]
        .iter()
        .zip(log_priors)
        .map(|(bin, prior)| {
            let ext: Vec<f64> = bin.iter().zip(prior).map(|(b, p)| b - p).collect();
            normalize_log(ext)
        })
        .collect())
}

fn normalize_log(mut v: Vec<f64>) -> Vec<f64> {
    let m = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        let u = -(v.len() as f64).ln();
        v.iter_mut().for_each(|x| *x = u);
        return v;
    }
    let lse = m + v.iter().map(|x| (x - m).exp()).sum::<f64>().ln();
    v.iter_mut().for_each(|x| *x -= lse);
    v
}

fn check_dims(y: &[Vec<Complex64>], channel: &ChannelRealization, graph: &ScmaGraph) -> Result<usize> {
    if y.len() != graph.subcarriers() {
        return Err(invalid(format!("{} received rows for {} subcarriers", y.len(), graph.subcarriers())));
    }
    if channel.h.len() != graph.subcarriers() || channel.h.iter().any(|r| r.len() != graph.users()) {
        return Err(invalid("channel matrix does not match graph dimensions"));
    }
    let n = y[0].len();
    if y.iter().any(|r| r.len() != n) {
        return Err(invalid("received rows of unequal length"));
    }
    Ok(n)
}

/// Slot position of each user on each subcarrier.
fn slot_positions(graph: &ScmaGraph) -> Vec<Vec<Option<usize>>> {
    (0..graph.subcarriers())
        .map(|f| {
            let mut pos = vec![None; graph.users()];
            for (k, &u) in graph.users_on(f).iter().enumerate() {
                pos[u] = Some(k);
            }
            pos
        })
        .collect()
}

/// Stage-`l` LLRs for every user.
///
/// With `iterations = 1`, each function node is evaluated once with uniform
/// priors and a user's LLR is the sum of its subcarriers' messages. More
/// iterations exchange extrinsic bit messages on the graph (flooding
/// schedule). Users whose stage bit is known in `ctx` get `±LLR_CLIP`.
#[allow(clippy::too_many_arguments)]
pub fn mpa_detect_stage(
    y: &[Vec<Complex64>],
    channel: &ChannelRealization,
    graph: &ScmaGraph,
    mapper: &LevelMapper,
    ctx: &StageContext,
    iterations: usize,
    config: &DetectorConfig,
    mut counter: Option<&mut TermCounter>,
) -> Result<LlrFrame> {
    let n = check_dims(y, channel, graph)?;
    let levels = mapper.levels();
    let l = ctx.stage;
    if l >= levels {
        return Err(invalid(format!("stage {l} for L={levels}")));
    }
    if iterations == 0 {
        return Err(invalid("at least one MPA iteration required"));
    }
    if ctx.known.len() != graph.users() {
        return Err(invalid(format!("context for {} users, graph has {}", ctx.known.len(), graph.users())));
    }
    for known in &ctx.known {
        if known.len() < l || known.len() > levels {
            return Err(invalid(format!("user context holds {} levels at stage {l}", known.len())));
        }
        if known.iter().any(|c| c.len() != n) {
            return Err(invalid("known codeword length differs from frame length"));
        }
    }

    let inv_scale = config.inverse_scale(channel.noise_variance);
    let pos = slot_positions(graph);
    // faded[f][k][label] = h[f][u_k] · x(label)
    let faded: Vec<Vec<Vec<Complex64>>> = (0..graph.subcarriers())
        .map(|f| {
            graph.users_on(f).iter().map(|&u| mapper.points().iter().map(|&x| channel.h[f][u] * x).collect()).collect()
        })
        .collect();

    let mut ws = FnWorkspace::default();
    let mut out = vec![vec![0.0; n]; graph.users()];
    let mut msgs: Vec<Vec<f64>> = (0..graph.subcarriers()).map(|f| vec![0.0; graph.users_on(f).len()]).collect();
    let mut next = msgs.clone();
    let mut prefix = vec![0usize; graph.users()];
    let known_len: Vec<usize> = ctx.known.iter().map(Vec::len).collect();

    for t in 0..n {
        for (u, p) in prefix.iter_mut().enumerate() {
            *p = ctx.prefix_value(u, t);
        }
        msgs.iter_mut().for_each(|m| m.iter_mut().for_each(|v| *v = 0.0));
        for _ in 0..iterations {
            for f in 0..graph.subcarriers() {
                let users = graph.users_on(f);
                let slots = ws.slots_mut(users.len());
                for (k, (&u, slot)) in users.iter().zip(slots.iter_mut()).enumerate() {
                    slot.clear(2);
                    let ext: f64 = graph
                        .subcarriers_of(u)
                        .iter()
                        .filter(|&&g| g != f)
                        .map(|&g| msgs[g][pos[g][u].expect("edge")])
                        .sum();
                    let (lp0, lp1) = (log_bit_prior(ext, 0), log_bit_prior(ext, 1));
                    for lab in mapper.extensions(prefix[u], known_len[u]) {
                        let bit = (lab >> l) & 1;
                        slot.faded.push(faded[f][k][lab]);
                        slot.log_prior.push(if bit == 0 { lp0 } else { lp1 });
                        slot.class.push(bit);
                    }
                }
                let terms = ws.marginalize(y[f][t], users.len(), inv_scale, config.marginalization);
                if let Some(c) = counter.as_deref_mut() {
                    c.record(l, terms);
                }
                for (k, &u) in users.iter().enumerate() {
                    let ext: f64 = graph
                        .subcarriers_of(u)
                        .iter()
                        .filter(|&&g| g != f)
                        .map(|&g| msgs[g][pos[g][u].expect("edge")])
                        .sum();
                    let (b0, b1) = (ws.bins[k][0], ws.bins[k][1]);
                    // drop own prior to keep the message extrinsic
                    next[f][k] = llr_from_logs(b0 - log_bit_prior(ext, 0), b1 - log_bit_prior(ext, 1));
                }
            }
            std::mem::swap(&mut msgs, &mut next);
        }
        for (u, o) in out.iter_mut().enumerate() {
            o[t] = if known_len[u] > l {
                if ctx.known[u][l][t] == 0 {
                    LLR_CLIP
                } else {
                    -LLR_CLIP
                }
            } else {
                graph.subcarriers_of(u).iter().map(|&f| msgs[f][pos[f][u].expect("edge")]).sum()
            };
        }
    }
    Ok(out.into_iter().map(LlrVector::new).collect())
}

/// Symbol-level MPA with `iterations` flooding passes. Returns, per user and
/// symbol time, normalized log-posteriors over the `2^L` labels.
#[allow(clippy::too_many_arguments)]
pub fn mpa_detect_symbols(
    y: &[Vec<Complex64>],
    channel: &ChannelRealization,
    graph: &ScmaGraph,
    mapper: &LevelMapper,
    iterations: usize,
    config: &DetectorConfig,
    mut counter: Option<&mut TermCounter>,
) -> Result<Vec<Vec<Vec<f64>>>> {
    let n = check_dims(y, channel, graph)?;
    if iterations == 0 {
        return Err(invalid("at least one MPA iteration required"));
    }
    let q = mapper.order();
    let pos = slot_positions(graph);
    let uniform = vec![0.0; q];
    let mut ws = FnWorkspace::default();
    let mut out = vec![Vec::with_capacity(n); graph.users()];
    for t in 0..n {
        let mut msgs: Vec<Vec<Vec<f64>>> =
            (0..graph.subcarriers()).map(|f| vec![uniform.clone(); graph.users_on(f).len()]).collect();
        for _ in 0..iterations {
            let mut next = msgs.clone();
            for f in 0..graph.subcarriers() {
                let users = graph.users_on(f);
                let h_row: Vec<Complex64> = users.iter().map(|&u| channel.h[f][u]).collect();
                let priors: Vec<Vec<f64>> = users
                    .iter()
                    .map(|&u| {
                        let mut p = uniform.clone();
                        for &g in graph.subcarriers_of(u).iter().filter(|&&g| g != f) {
                            for (a, b) in p.iter_mut().zip(&msgs[g][pos[g][u].expect("edge")]) {
                                *a += b;
                            }
                        }
                        p
                    })
                    .collect();
                next[f] = fn_update_bicm_ws(
                    &mut ws,
                    y[f][t],
                    &h_row,
                    &priors,
                    mapper,
                    channel.noise_variance,
                    config,
                    counter.as_deref_mut(),
                )?;
            }
            msgs = next;
        }
        for (u, o) in out.iter_mut().enumerate() {
            let mut post = uniform.clone();
            for &f in graph.subcarriers_of(u) {
                for (a, b) in post.iter_mut().zip(&msgs[f][pos[f][u].expect("edge")]) {
                    *a += b;
                }
            }
            o.push(normalize_log(post));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scma::{complex_normal, sample_channel_with};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn one() -> Complex64 {
        Complex64::new(1.0, 0.0)
    }

    #[test]
    fn single_user_matches_two_term_ratio() {
        let m = LevelMapper::new(2).unwrap();
        let s = m.scale();
        let y = Complex64::new(-s, -s);
        let sigma2 = 0.05;
        let q = fn_update_mlcm(y, &[one()], 0, &[vec![]], &m, sigma2, &DetectorConfig::default()).unwrap();
        let llr = q[0][0] - q[0][1];
        // c0 = 0: {(-1,-1), (1,1)}; c0 = 1: {(1,-1), (-1,1)} (grid units)
        let lik = |p: (f64, f64)| (-(y - Complex64::new(p.0 * s, p.1 * s)).norm_sqr() / sigma2).exp();
        let direct = ((lik((-1.0, -1.0)) + lik((1.0, 1.0))) / (lik((1.0, -1.0)) + lik((-1.0, 1.0)))).ln();
        assert!((llr - direct).abs() < 1e-9);
        assert!(llr > 10.0);
    }

    #[test]
    fn term_counts_follow_formula() {
        let m = LevelMapper::new(4).unwrap();
        let cfg = DetectorConfig::default();
        for stage in 0..4 {
            for users in 1..=3usize {
                let mut c = TermCounter::default();
                let h = vec![one(); users];
                let prefixes = vec![vec![0u8; stage]; users];
                fn_update_mlcm_counted(one(), &h, stage, &prefixes, &m, 0.1, &cfg, Some(&mut c)).unwrap();
                assert_eq!(c.total_terms(), 1u64 << ((4 - stage) * users));
            }
        }
        let m2 = LevelMapper::new(2).unwrap();
        let mut c = TermCounter::default();
        fn_update_mlcm_counted(one(), &[one()], 0, &[vec![]], &m2, 0.1, &cfg, Some(&mut c)).unwrap();
        assert_eq!(c.total_terms(), 4);
    }

    #[test]
    fn prefix_validation() {
        let m = LevelMapper::new(4).unwrap();
        let cfg = DetectorConfig::default();
        assert!(fn_update_mlcm(one(), &[one(), one()], 1, &[vec![0], vec![]], &m, 0.1, &cfg).is_err());
        assert!(fn_update_mlcm(one(), &[one()], 4, &[vec![0; 4]], &m, 0.1, &cfg).is_err());
        assert!(fn_update_mlcm(one(), &[one()], 1, &[vec![0], vec![1]], &m, 0.1, &cfg).is_err());
    }

    #[test]
    fn last_stage_noiseless_signs() {
        let m = LevelMapper::new(4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..200 {
            let users = 3;
            let h: Vec<Complex64> = (0..users).map(|_| complex_normal(&mut rng, 1.0)).collect();
            let labels: Vec<usize> = (0..users).map(|_| rng.random_range(0..16)).collect();
            let y: Complex64 = h.iter().zip(&labels).map(|(h, &lab)| h * m.point(lab)).sum();
            let prefixes: Vec<Vec<u8>> = labels.iter().map(|&lab| m.label_bits(lab)[..3].to_vec()).collect();
            let q = fn_update_mlcm(y, &h, 3, &prefixes, &m, 1e-6, &DetectorConfig::default()).unwrap();
            for (k, &lab) in labels.iter().enumerate() {
                let llr = q[k][0] - q[k][1];
                let bit = (lab >> 3) & 1;
                assert!(if bit == 0 { llr > 0.0 } else { llr < 0.0 }, "user {k}: llr {llr}");
            }
        }
    }

    #[test]
    fn bicm_update_basics() {
        let m = LevelMapper::new(2).unwrap();
        let cfg = DetectorConfig::default();
        // noiseless single user: all mass on the sent symbol
        let x = m.point(2);
        let p = fn_update_bicm(x, &[one()], &[vec![0.0; 4]], &m, 1e-4, &cfg).unwrap();
        assert!((p[0][2].exp() - 1.0).abs() < 1e-12);
        // y = 0 is equidistant from x and -x
        let p = fn_update_bicm(Complex64::new(0.0, 0.0), &[one()], &[vec![0.0; 4]], &m, 0.3, &cfg).unwrap();
        for lab in 0..4 {
            let neg = (0..4).find(|&o| (m.point(o) + m.point(lab)).norm() < 1e-12).unwrap();
            assert!((p[0][lab] - p[0][neg]).abs() < 1e-12);
        }
        let mut c = TermCounter::default();
        let mut ws = FnWorkspace::default();
        let h = vec![one(); 3];
        let m4 = LevelMapper::new(4).unwrap();
        fn_update_bicm_ws(&mut ws, one(), &h, &vec![vec![0.0; 16]; 3], &m4, 0.1, &cfg, Some(&mut c)).unwrap();
        assert_eq!(c.total_terms(), 4096);
    }

    #[test]
    fn max_log_agrees_in_sign_at_high_snr() {
        let m = LevelMapper::new(4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let exact = DetectorConfig::default();
        let maxlog = DetectorConfig { marginalization: Marginalization::MaxLog, ..Default::default() };
        for _ in 0..100 {
            let h: Vec<Complex64> = (0..2).map(|_| complex_normal(&mut rng, 1.0)).collect();
            let y = h[0] * m.point(rng.random_range(0..16)) + h[1] * m.point(rng.random_range(0..16));
            let a = fn_update_mlcm(y, &h, 0, &[vec![], vec![]], &m, 1e-3, &exact).unwrap();
            let b = fn_update_mlcm(y, &h, 0, &[vec![], vec![]], &m, 1e-3, &maxlog).unwrap();
            for k in 0..2 {
                let (la, lb) = (a[k][0] - a[k][1], b[k][0] - b[k][1]);
                assert!(la.abs() < 1.0 || la.signum() == lb.signum());
            }
        }
    }

    #[test]
    fn single_subcarrier_user_gets_its_fn_llr() {
        let g = ScmaGraph::new(vec![vec![1, 1]]).unwrap();
        let m = LevelMapper::new(2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let ch = sample_channel_with(&g, 0.2, &mut rng).unwrap();
        let y = vec![vec![complex_normal(&mut rng, 1.0), complex_normal(&mut rng, 1.0)]];
        let ctx = StageContext::new(0, vec![vec![], vec![]]);
        let llr = mpa_detect_stage(&y, &ch, &g, &m, &ctx, 1, &DetectorConfig::default(), None).unwrap();
        for t in 0..2 {
            let q =
                fn_update_mlcm(y[0][t], &ch.h[0], 0, &[vec![], vec![]], &m, 0.2, &DetectorConfig::default()).unwrap();
            for u in 0..2 {
                assert!((llr[u].as_slice()[t] - clip_llr(q[u][0] - q[u][1])).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn scaling_q_leaves_llr_unchanged() {
        let m = LevelMapper::new(4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let h: Vec<Complex64> = (0..3).map(|_| complex_normal(&mut rng, 1.0)).collect();
        let y = complex_normal(&mut rng, 2.0);
        let q = fn_update_mlcm(y, &h, 1, &[vec![0], vec![1], vec![0]], &m, 0.3, &DetectorConfig::default()).unwrap();
        for alpha in [1e-6, 0.37, 1.0, 42.0, 1e9] {
            for k in 0..3 {
                let base = q[k][0] - q[k][1];
                let scaled = (q[k][0] + f64::ln(alpha)) - (q[k][1] + f64::ln(alpha));
                assert!((base - scaled).abs() < 1e-9);
                let lin = (alpha * q[k][0].exp() / (alpha * q[k][1].exp())).ln();
                assert!((base - lin).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn detect_validates_context() {
        let g = ScmaGraph::bundled_default();
        let m = LevelMapper::new(4).unwrap();
        let ch = crate::scma::sample_channel(&g, 0.1, 1).unwrap();
        let y = vec![vec![one(); 4]; 4];
        let cfg = DetectorConfig::default();
        let short = StageContext::new(1, vec![vec![]; 6]);
        assert!(mpa_detect_stage(&y, &ch, &g, &m, &short, 1, &cfg, None).is_err());
        let ok = StageContext::new(0, vec![vec![]; 6]);
        assert!(mpa_detect_stage(&y, &ch, &g, &m, &ok, 0, &cfg, None).is_err());
        assert!(mpa_detect_stage(&y[..3], &ch, &g, &m, &ok, 1, &cfg, None).is_err());
    }
}
