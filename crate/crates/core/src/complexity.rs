//! Function-node cost of multi-user detection.
//!
//! The unit is one joint-hypothesis likelihood term `exp(-|y - h·x|²/σ²)`
//! evaluated at one function node for one symbol time. The symbol-level
//! (BICM) detector evaluates `2^{LU}` of them per iteration; the multi-stage
//! detector evaluates `2^{(L-l)U}` at stage `l` and does not iterate.

use std::collections::BTreeMap;
use std::fmt;

use serde::Serialize;

use crate::error::{invalid, Error, Result};

fn pow2(exp: u64, what: &'static str) -> Result<u64> {
    if exp >= 64 {
        return Err(Error::Overflow(what));
    }
    Ok(1u64 << exp)
}

/// `I_MPA · 2^{LU}`.
pub fn flops_bicm(levels: u32, users: u32, mpa_iterations: u32) -> Result<u64> {
    if levels == 0 || users == 0 || mpa_iterations == 0 {
        return Err(invalid("L, U and I_MPA must be at least 1"));
    }
    let per_iter = pow2(levels as u64 * users as u64, "flops_bicm")?;
    per_iter.checked_mul(mpa_iterations as u64).ok_or(Error::Overflow("flops_bicm"))
}

/// `Σ_{l ∈ active} 2^{(L-l)U}`.
pub fn flops_mlcm(levels: u32, users: u32, active_levels: &[u32]) -> Result<u64> {
    if levels == 0 || users == 0 {
        return Err(invalid("L and U must be at least 1"));
    }
    let mut seen = vec![false; levels as usize];
    let mut total = 0u64;
    for &l in active_levels {
        if l >= levels {
            return Err(invalid(format!("level {l} outside 0..{levels}")));
        }
        if std::mem::replace(&mut seen[l as usize], true) {
            return Err(invalid(format!("level {l} listed twice")));
        }
        let term = pow2((levels - l) as u64 * users as u64, "flops_mlcm")?;
        total = total.checked_add(term).ok_or(Error::Overflow("flops_mlcm"))?;
    }
    Ok(total)
}

pub fn all_levels(levels: u32) -> Vec<u32> {
    (0..levels).collect()
}

/// Exact ratio of two positive integers in lowest terms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Ratio {
    pub numer: u64,
    pub denom: u64,
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

impl Ratio {
    pub fn new(numer: u64, denom: u64) -> Result<Self> {
        if denom == 0 {
            return Err(invalid("zero denominator"));
        }
        let g = gcd(numer, denom).max(1);
        Ok(Self { numer: numer / g, denom: denom / g })
    }

    pub fn to_f64(self) -> f64 {
        self.numer as f64 / self.denom as f64
    }
}

impl fmt::Display for Ratio {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.numer, self.denom)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComplexityReport {
    pub levels: u32,
    pub users: u32,
    pub mpa_iterations: u32,
    pub active_levels: Vec<u32>,
    pub n_bicm: u64,
    pub n_mlcm: u64,
    pub ratio: Ratio,
}

impl ComplexityReport {
    pub fn new(levels: u32, users: u32, mpa_iterations: u32, active_levels: Vec<u32>) -> Result<Self> {
        let n_bicm = flops_bicm(levels, users, mpa_iterations)?;
        let n_mlcm = flops_mlcm(levels, users, &active_levels)?;
        if n_mlcm == 0 {
            return Err(invalid("no active levels"));
        }
        Ok(Self { levels, users, mpa_iterations, active_levels, n_bicm, n_mlcm, ratio: Ratio::new(n_bicm, n_mlcm)? })
    }
}

/// `flops_bicm / flops_mlcm` (all levels active) for each `U`.
pub fn ratio_curve(levels: u32, mpa_iterations: u32, users: &[u32]) -> Result<Vec<(u32, Ratio)>> {
    if users.is_empty() {
        return Err(invalid("empty U range"));
    }
    users
        .iter()
        .map(|&u| {
            let r = ComplexityReport::new(levels, u, mpa_iterations, all_levels(levels))?;
            Ok((u, r.ratio))
        })
        .collect()
}

/// CSV rows `levels,mpa_iterations,users,n_bicm,n_mlcm,ratio_num,ratio_den,ratio`.
pub fn ratio_curve_csv(levels: &[u32], iterations: &[u32], users: &[u32]) -> Result<String> {
    let mut out = String::from("levels,mpa_iterations,users,n_bicm,n_mlcm,ratio_num,ratio_den,ratio\n");
    for &l in levels {
        for &i in iterations {
            for &u in users {
                let r = ComplexityReport::new(l, u, i, all_levels(l))?;
                out.push_str(&format!(
                    "{l},{i},{u},{},{},{},{},{:.12}\n",
                    r.n_bicm,
                    r.n_mlcm,
                    r.ratio.numer,
                    r.ratio.denom,
                    r.ratio.to_f64()
                ));
            }
        }
    }
    Ok(out)
}

/// Instrumentation filled in by the detectors.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct TermCounter {
    /// Likelihood terms per stage (`usize::MAX` keys the symbol-level detector).
    pub terms_by_stage: BTreeMap<usize, u64>,
    /// Function-node evaluations (one node, one symbol time, one pass) per stage.
    pub evaluations_by_stage: BTreeMap<usize, u64>,
}

impl TermCounter {
    pub const SYMBOL_LEVEL: usize = usize::MAX;

    pub fn record(&mut self, stage: usize, terms: u64) {
        *self.terms_by_stage.entry(stage).or_default() += terms;
        *self.evaluations_by_stage.entry(stage).or_default() += 1;
    }

    pub fn merge(&mut self, other: &TermCounter) {
        for (&k, &v) in &other.terms_by_stage {
            *self.terms_by_stage.entry(k).or_default() += v;
        }
        for (&k, &v) in &other.evaluations_by_stage {
            *self.evaluations_by_stage.entry(k).or_default() += v;
        }
    }

    pub fn total_terms(&self) -> u64 {
        self.terms_by_stage.values().sum()
    }

    /// Terms per function-node evaluation at `stage`; `None` if the stage
    /// never ran or the count is not uniform.
    pub fn terms_per_evaluation(&self, stage: usize) -> Option<u64> {
        let terms = *self.terms_by_stage.get(&stage)?;
        let evals = *self.evaluations_by_stage.get(&stage)?;
        (evals > 0 && terms % evals == 0).then_some(terms / evals)
    }
}

/// Per-node, per-symbol-time cost measured by a counter: the sum over
/// stages of terms per evaluation.
pub fn count_fn_terms(counter: &TermCounter) -> u64 {
    counter.terms_by_stage.keys().filter_map(|&s| counter.terms_per_evaluation(s)).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reported_counts() {
        assert_eq!(flops_bicm(4, 3, 2).unwrap(), 8192);
        assert_eq!(flops_bicm(4, 3, 1).unwrap(), 4096);
        assert_eq!(flops_bicm(4, 3, 4).unwrap(), 16384);
        assert_eq!(flops_bicm(1, 1, 1).unwrap(), 2);
        assert_eq!(flops_mlcm(4, 3, &[1, 2, 3]).unwrap(), 584);
        assert_eq!(flops_mlcm(4, 3, &all_levels(4)).unwrap(), 4680);
        assert_eq!(flops_mlcm(4, 3, &[3]).unwrap(), 8);
    }

    #[test]
    fn closed_form_identity() {
        for l in 1..=8u32 {
            for u in 1..=6u32 {
                let closed = ((1u128 << u) * ((1u128 << (u * l)) - 1)) / ((1u128 << u) - 1);
                assert_eq!(flops_mlcm(l, u, &all_levels(l)).unwrap() as u128, closed);
            }
        }
    }

    #[test]
    fn overflow_and_arguments() {
        assert!(matches!(flops_bicm(16, 4, 1), Err(Error::Overflow(_))));
        assert!(matches!(flops_bicm(8, 7, u32::MAX), Err(Error::Overflow(_))));
        assert!(flops_bicm(0, 3, 1).is_err());
        assert!(flops_mlcm(4, 3, &[4]).is_err());
        assert!(flops_mlcm(4, 3, &[1, 1]).is_err());
        assert!(ratio_curve(4, 1, &[]).is_err());
    }

    #[test]
    fn ratio_examples() {
        let c = ratio_curve(2, 4, &[3]).unwrap();
        assert_eq!(c[0].1, Ratio { numer: 32, denom: 9 });
        let c1 = ratio_curve(4, 1, &[1, 2, 3, 4, 5, 6]).unwrap();
        let c4 = ratio_curve(4, 4, &[1, 2, 3, 4, 5, 6]).unwrap();
        for (a, b) in c1.iter().zip(&c4) {
            assert!(a.1.to_f64() < b.1.to_f64());
        }
        // I·(1 - 2^-U) limit
        let far = ratio_curve(2, 4, &[20]).unwrap()[0].1.to_f64();
        assert!((far - 4.0 * (1.0 - 2f64.powi(-20))).abs() < 1e-6);
    }
}
