//! Successive-cancellation decoding over the polar butterfly, with an
//! optional list of candidate paths and CRC-aided final selection.
//!
//! All updates use exact LLR arithmetic: the check-node combination is the
//! full box-plus, and path metrics accumulate `ln(1 + e^{-(1-2u)λ})`, so a
//! complete path metric equals `-ln P(u | y)` up to a path-independent
//! constant.

use std::cmp::Ordering;
use std::rc::Rc;

use crate::bits::BitBlock;
use crate::error::{invalid, Result};

use super::{LlrVector, PolarCodeSpec};

/// Result of list decoding.
#[derive(Debug, Clone, PartialEq)]
pub struct ListDecodeOutput {
    /// Estimated bits on the non-frozen positions, CRC bits included.
    pub bits: BitBlock,
    /// `None` when the code has no CRC.
    pub crc_passed: Option<bool>,
    pub path_metric: f64,
}

impl ListDecodeOutput {
    pub fn crc_ok(&self) -> bool {
        self.crc_passed.unwrap_or(true)
    }
}

/// `|a+b|, |a-b|` beyond which both correction terms are below 1e-16.
const BOXPLUS_TAIL: f64 = 37.0;

#[inline]
fn boxplus(a: f64, b: f64) -> f64 {
    let s = if (a < 0.0) != (b < 0.0) { -1.0 } else { 1.0 };
    let base = s * a.abs().min(b.abs());
    let (sum, diff) = ((a + b).abs(), (a - b).abs());
    if sum.min(diff) > BOXPLUS_TAIL {
        return base;
    }
    // ln(1 + e^{-|a+b|}) - ln(1 + e^{-|a-b|}) = ln1p((p - q) / (1 + q))
    let (p, q) = (crate::numeric::exp(-sum), crate::numeric::exp(-diff));
    base + ((p - q) / (1.0 + q)).ln_1p()
}

/// `ln(1 + e^x)` without overflow.
#[inline]
pub(crate) fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + crate::numeric::exp(-x).ln_1p()
    } else {
        crate::numeric::exp(x).ln_1p()
    }
}

#[inline]
fn hard(llr: f64) -> u8 {
    (llr < 0.0) as u8
}

/// LLRs and partial sums for one decoding path.
///
/// `llr[k]` holds the `2^k` LLRs of the active node at layer `k`; the root
/// layer `n` is the channel. Layers are shared between forked paths and
/// copied on first write. `left[2^k..2^{k+1})` keeps the partial sums of the
/// last finished left child of size `2^k`.
#[derive(Clone)]
struct PathState {
    llr: Vec<Rc<Vec<f64>>>,
    left: Vec<u8>,
}

impl PathState {
    fn new(channel: &[f64]) -> Self {
        let n = channel.len();
        let log_n = n.trailing_zeros() as usize;
        let mut llr: Vec<Rc<Vec<f64>>> = (0..log_n).map(|k| Rc::new(vec![0.0; 1 << k])).collect();
        llr.push(Rc::new(channel.to_vec()));
        Self { llr, left: vec![0; n] }
    }

    fn f_step(&mut self, k: usize) {
        let half = 1usize << (k - 1);
        let src = Rc::clone(&self.llr[k]);
        let dst = Rc::make_mut(&mut self.llr[k - 1]);
        for (d, (&a, &b)) in dst.iter_mut().zip(src[..half].iter().zip(&src[half..])) {
            *d = boxplus(a, b);
        }
    }

    fn g_step(&mut self, k: usize) {
        let half = 1usize << (k - 1);
        let src = Rc::clone(&self.llr[k]);
        let dst = Rc::make_mut(&mut self.llr[k - 1]);
        let partial = &self.left[half..2 * half];
        for (j, d) in dst.iter_mut().enumerate() {
            let a = src[j];
            *d = src[j + half] + if partial[j] == 0 { a } else { -a };
        }
    }

    /// LLR of `u_i` given the partial sums of `u_0..u_{i-1}`.
    fn bit_llr(&mut self, i: usize, log_n: usize) -> f64 {
        let top = if i == 0 {
            log_n
        } else {
            let p = i.trailing_zeros() as usize;
            self.g_step(p + 1);
            p
        };
        for k in (1..=top).rev() {
            self.f_step(k);
        }
        self.llr[0][0]
    }

    fn push_decision(&mut self, i: usize, u: u8, log_n: usize, scratch: &mut Vec<u8>) {
        scratch.clear();
        scratch.push(u);
        let mut k = 0;
        while k < log_n && (i >> k) & 1 == 1 {
            let size = 1usize << k;
            let left = &self.left[size..2 * size];
            let cur_len = scratch.len();
            for j in 0..cur_len {
                let v = left[j] ^ scratch[j];
                scratch.push(v);
            }
            // scratch = [cur, left^cur]; rotate into [left^cur, cur]
            scratch.rotate_left(cur_len);
            k += 1;
        }
        if k < log_n {
            let size = 1usize << k;
            self.left[size..2 * size].copy_from_slice(scratch);
        }
    }
}

fn check_input(llr: &LlrVector, spec: &PolarCodeSpec) -> Result<()> {
    if llr.len() != spec.block_length() {
        return Err(invalid(format!("LLR vector of length {} for code of length {}", llr.len(), spec.block_length())));
    }
    Ok(())
}

/// Plain successive-cancellation decoding; returns the bits on the
/// non-frozen positions.
pub fn sc_decode(llr: &LlrVector, spec: &PolarCodeSpec) -> Result<BitBlock> {
    check_input(llr, spec)?;
    if spec.info_count() == 0 {
        return Ok(BitBlock::zeros(0));
    }
    let n = spec.block_length();
    let log_n = n.trailing_zeros() as usize;
    let mut state = PathState::new(llr.as_slice());
    let mut scratch = Vec::with_capacity(n);
    let mut out = Vec::with_capacity(spec.info_count());
    for i in 0..n {
        let l = state.bit_llr(i, log_n);
        let u = if spec.is_frozen(i) { 0 } else { hard(l) };
        if !spec.is_frozen(i) {
            out.push(u);
        }
        state.push_decision(i, u, log_n, &mut scratch);
    }
    Ok(BitBlock::from(out))
}

struct Path {
    state: PathState,
    decided: Vec<u8>,
    metric: f64,
}

#[derive(Clone, Copy)]
struct Candidate {
    parent: usize,
    bit: u8,
    against_llr: bool,
    metric: f64,
}

fn candidate_order(a: &Candidate, b: &Candidate) -> Ordering {
    a.metric.total_cmp(&b.metric).then(a.parent.cmp(&b.parent)).then(a.against_llr.cmp(&b.against_llr))
}

/// Successive-cancellation list decoding.
///
/// Keeps the `list_size` best paths by metric (ties broken by path index,
/// then in favour of the hard decision). At the end, the best path whose
/// CRC checks is returned; without a passing path, the best path overall
/// with `crc_passed = Some(false)`. With `list_size = 1` the output equals
/// [`sc_decode`].
pub fn scl_decode(llr: &LlrVector, spec: &PolarCodeSpec, list_size: usize) -> Result<ListDecodeOutput> {
    check_input(llr, spec)?;
    if list_size == 0 {
        return Err(invalid("list size must be at least 1"));
    }
    let n = spec.block_length();
    let log_n = n.trailing_zeros() as usize;
    let k = spec.info_count();
    if k == 0 {
        return Ok(ListDecodeOutput { bits: BitBlock::zeros(0), crc_passed: None, path_metric: 0.0 });
    }

    let mut paths = vec![Path { state: PathState::new(llr.as_slice()), decided: Vec::with_capacity(k), metric: 0.0 }];
    let mut candidates: Vec<Candidate> = Vec::with_capacity(2 * list_size);
    let mut llrs: Vec<f64> = Vec::with_capacity(list_size);
    let mut scratch = Vec::with_capacity(n);

    for i in 0..n {
        llrs.clear();
        for p in paths.iter_mut() {
            llrs.push(p.state.bit_llr(i, log_n));
        }
        if spec.is_frozen(i) {
            for (p, &l) in paths.iter_mut().zip(&llrs) {
                p.metric += softplus(-l);
                p.state.push_decision(i, 0, log_n, &mut scratch);
            }
            continue;
        }

        candidates.clear();
        for (idx, (p, &l)) in paths.iter().zip(&llrs).enumerate() {
            let h = hard(l);
            // softplus(-|l|) for the hard decision, |l| more for its complement
            let agree = softplus(-l.abs());
            for bit in [0u8, 1] {
                let against = bit != h;
                candidates.push(Candidate {
                    parent: idx,
                    bit,
                    against_llr: against,
                    metric: p.metric + if against { agree + l.abs() } else { agree },
                });
            }
        }
        candidates.sort_by(candidate_order);
        candidates.truncate(list_size);

        // Children of each parent, in survivor rank order.
        let mut slots: Vec<Option<Path>> = paths.drain(..).map(Some).collect();
        let mut remaining = vec![0usize; slots.len()];
        for c in &candidates {
            remaining[c.parent] += 1;
        }
        let mut next = Vec::with_capacity(candidates.len());
        for c in &candidates {
            remaining[c.parent] -= 1;
            let mut child = if remaining[c.parent] == 0 {
                slots[c.parent].take().expect("parent consumed once")
            } else {
                let parent = slots[c.parent].as_ref().expect("parent alive");
                Path { state: parent.state.clone(), decided: parent.decided.clone(), metric: parent.metric }
            };
            child.metric = c.metric;
            child.decided.push(c.bit);
            child.state.push_decision(i, c.bit, log_n, &mut scratch);
            next.push(child);
        }
        paths = next;
    }

    let mut order: Vec<usize> = (0..paths.len()).collect();
    order.sort_by(|&a, &b| paths[a].metric.total_cmp(&paths[b].metric).then(a.cmp(&b)));

    let (chosen, crc_passed) = match spec.crc() {
        None => (order[0], None),
        Some(crc) => match order.iter().copied().find(|&p| crc.passes(&paths[p].decided)) {
            Some(p) => (p, Some(true)),
            None => (order[0], Some(false)),
        },
    };
    let best = &paths[chosen];
    Ok(ListDecodeOutput { bits: BitBlock::from(best.decided.clone()), crc_passed, path_metric: best.metric })
}
