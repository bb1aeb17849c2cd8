//! Normalized evaluation costs: per-character NLL and character error rate.
//!
//! Both costs are ratios of sums over the evaluated set, not means of
//! per-sample ratios, so they are invariant under any partition of the set
//! and comparable across sequence lengths.

use crate::ctc::Label;
use crate::error::{Error, Result};

/// Aggregate costs over one evaluation pass.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalReport {
    /// Summed NLL divided by summed target length, in nats per character.
    pub norm_nll: f64,
    /// Summed edit distance divided by summed target length. Can exceed 1
    /// when predictions are much longer than targets.
    pub cer: f64,
    /// The shared denominator: total target characters in the set.
    pub total_target_chars: usize,
}

/// Levenshtein distance with unit costs.
pub fn edit_distance(a: &[Label], b: &[Label]) -> usize {
    if a.is_empty() {
        return b.len();
    }
    if b.is_empty() {
        return a.len();
    }
    // Two-row dynamic program over the shorter string.
    let (long, short) = if a.len() >= b.len() { (a, b) } else { (b, a) };
    let mut cur: Vec<usize> = (0..=short.len()).collect();
    for (i, &cl) in long.iter().enumerate() {
        let mut prev_diag = cur[0];
        cur[0] = i + 1;
        for (j, &cs) in short.iter().enumerate() {
            let tmp = cur[j + 1];
            let sub = prev_diag + usize::from(cl != cs);
            cur[j + 1] = sub.min(tmp + 1).min(cur[j] + 1);
            prev_diag = tmp;
        }
    }
    cur[short.len()]
}

/// Per-character normalized NLL over `(nll, target_len)` pairs:
/// `sum(nll) / sum(target_len)`.
pub fn norm_nll(per_sample: &[(f64, usize)]) -> Result<f64> {
    let total_len: usize = per_sample.iter().map(|&(_, len)| len).sum();
    if total_len == 0 {
        return Err(Error::EmptyTargets);
    }
    let total_nll: f64 = per_sample.iter().map(|&(nll, _)| nll).sum();
    Ok(total_nll / total_len as f64)
}

/// Character error rate over `(target, prediction)` pairs:
/// `sum(edit_distance) / sum(|target|)`.
///
/// Samples with empty targets contribute their full edit distance to the
/// numerator and nothing to the denominator.
pub fn cer<T, P>(pairs: &[(T, P)]) -> Result<f64>
where
    T: AsRef<[Label]>,
    P: AsRef<[Label]>,
{
    let total_len: usize = pairs.iter().map(|(t, _)| t.as_ref().len()).sum();
    if total_len == 0 {
        return Err(Error::EmptyTargets);
    }
    let total_dist: usize = pairs
        .iter()
        .map(|(t, p)| edit_distance(t.as_ref(), p.as_ref()))
        .sum();
    Ok(total_dist as f64 / total_len as f64)
}
