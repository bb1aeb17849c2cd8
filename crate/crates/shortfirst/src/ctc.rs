//! CTC negative log-likelihood, its gradient, and best-path decoding.
//!
//! The loss marginalizes over every monotonic alignment between the frame
//! sequence and the target, with an extra blank label that may be emitted
//! between any two characters and must separate repeats. All recursions run
//! in log space over the blank-augmented state sequence of length
//! `2 * |target| + 1`, so likelihoods far below f64's exponent range of a
//! single product stay finite.
//!
//! Everything here is a pure function of its inputs and safe to call from
//! parallel evaluation workers.

use crate::error::{Error, Result};

/// Integer label id. Character labels live in `[0, n_labels - 2]`; the
/// blank is always the last index of a lattice row.
pub type Label = u32;

const LOG_ZERO: f64 = f64::NEG_INFINITY;

/// Row-stochastic matrix of per-frame label posteriors, `T x N` with the
/// blank at index `N - 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorLattice {
    probs: Vec<f64>,
    n_labels: usize,
}

impl PosteriorLattice {
    /// Tolerance on row sums accepted by the constructor.
    pub const ROW_SUM_TOL: f64 = 1e-9;

    /// Validates shape, entry range and row normalization.
    pub fn new(n_frames: usize, n_labels: usize, probs: Vec<f64>) -> Result<Self> {
        if n_frames == 0 {
            return Err(Error::BadLattice("need at least one frame".into()));
        }
        if n_labels < 2 {
            return Err(Error::BadLattice(
                "need at least one character label plus the blank".into(),
            ));
        }
        if probs.len() != n_frames * n_labels {
            return Err(Error::BadLattice(format!(
                "expected {} entries for a {n_frames} x {n_labels} lattice, got {}",
                n_frames * n_labels,
                probs.len()
            )));
        }
        for (t, row) in probs.chunks_exact(n_labels).enumerate() {
            let mut sum = 0.0;
            for &p in row {
                if !(0.0..=1.0).contains(&p) {
                    return Err(Error::BadLattice(format!(
                        "entry {p} at frame {t} outside [0, 1]"
                    )));
                }
                sum += p;
            }
            if (sum - 1.0).abs() > Self::ROW_SUM_TOL {
                return Err(Error::BadLattice(format!(
                    "frame {t} sums to {sum}, not 1"
                )));
            }
        }
        Ok(Self { probs, n_labels })
    }

    pub fn n_frames(&self) -> usize {
        self.probs.len() / self.n_labels
    }

    pub fn n_labels(&self) -> usize {
        self.n_labels
    }

    pub fn blank(&self) -> Label {
        (self.n_labels - 1) as Label
    }

    pub fn row(&self, t: usize) -> &[f64] {
        &self.probs[t * self.n_labels..(t + 1) * self.n_labels]
    }

    pub fn prob(&self, t: usize, label: Label) -> f64 {
        self.probs[t * self.n_labels + label as usize]
    }

    fn check_target(&self, target: &[Label]) -> Result<()> {
        let alphabet = self.n_labels - 1;
        for &y in target {
            if y as usize >= alphabet {
                return Err(Error::InvalidLabel { label: y, alphabet });
            }
        }
        let required = min_frames(target);
        if self.n_frames() < required {
            return Err(Error::InfeasibleTarget {
                frames: self.n_frames(),
                required,
            });
        }
        Ok(())
    }
}

/// Minimum number of frames that can carry `target`: its length plus one
/// separating blank per adjacent repeat.
pub fn min_frames(target: &[Label]) -> usize {
    let repeats = target.windows(2).filter(|w| w[0] == w[1]).count();
    target.len() + repeats
}

fn ln_or_zero(p: f64) -> f64 {
    if p > 0.0 {
        p.ln()
    } else {
        LOG_ZERO
    }
}

fn lse2(a: f64, b: f64) -> f64 {
    let m = a.max(b);
    if m == LOG_ZERO {
        LOG_ZERO
    } else {
        m + ((a - m).exp() + (b - m).exp()).ln()
    }
}

fn lse3(a: f64, b: f64, c: f64) -> f64 {
    let m = a.max(b).max(c);
    if m == LOG_ZERO {
        LOG_ZERO
    } else {
        m + ((a - m).exp() + (b - m).exp() + (c - m).exp()).ln()
    }
}

/// Blank-augmented state sequence: blank, y1, blank, y2, ..., yL, blank.
fn augmented(target: &[Label], blank: Label) -> Vec<Label> {
    let mut states = Vec::with_capacity(2 * target.len() + 1);
    states.push(blank);
    for &y in target {
        states.push(y);
        states.push(blank);
    }
    states
}

/// Whether a path may hop from state `s - 2` straight into state `s`
/// (equivalently from `s` to `s + 2`): only into a character state that
/// differs from the character two states back.
fn skip_into(states: &[Label], s: usize, blank: Label) -> bool {
    s >= 2 && states[s] != blank && states[s] != states[s - 2]
}

/// One forward pass; returns the full `T x (2L+1)` log-alpha trellis and the
/// total log-likelihood.
fn forward_trellis(lattice: &PosteriorLattice, states: &[Label]) -> (Vec<f64>, f64) {
    let t_len = lattice.n_frames();
    let s_len = states.len();
    let blank = lattice.blank();
    let mut alpha = vec![LOG_ZERO; t_len * s_len];

    alpha[0] = ln_or_zero(lattice.prob(0, states[0]));
    if s_len > 1 {
        alpha[1] = ln_or_zero(lattice.prob(0, states[1]));
    }
    for t in 1..t_len {
        let (prev, cur) = alpha.split_at_mut(t * s_len);
        let prev = &prev[(t - 1) * s_len..];
        let cur = &mut cur[..s_len];
        for s in 0..s_len {
            let mut acc = prev[s];
            if s >= 1 {
                acc = lse2(acc, prev[s - 1]);
            }
            if skip_into(states, s, blank) {
                acc = lse2(acc, prev[s - 2]);
            }
            cur[s] = if acc == LOG_ZERO {
                LOG_ZERO
            } else {
                acc + ln_or_zero(lattice.prob(t, states[s]))
            };
        }
    }

    let last = &alpha[(t_len - 1) * s_len..];
    let log_lik = if s_len > 1 {
        lse2(last[s_len - 1], last[s_len - 2])
    } else {
        last[0]
    };
    (alpha, log_lik)
}

/// Negative log-likelihood of `target` under the lattice, summed over all
/// collapsing alignments.
///
/// Infeasible targets (more augmented states than frames) are an error;
/// a feasible target whose every alignment has zero probability yields
/// `f64::INFINITY`.
pub fn ctc_nll(lattice: &PosteriorLattice, target: &[Label]) -> Result<f64> {
    lattice.check_target(target)?;
    let states = augmented(target, lattice.blank());
    let (_, log_lik) = forward_trellis(lattice, &states);
    Ok(-log_lik)
}

/// Gradient of the NLL with respect to the pre-softmax activations that
/// produced the lattice, as a row-major `T x N` matrix.
///
/// Uses the forward-backward posterior marginals: each entry is
/// `p(t, k) - occupancy(t, k)`, so every row sums to zero.
pub fn ctc_grad(lattice: &PosteriorLattice, target: &[Label]) -> Result<Vec<f64>> {
    ctc_nll_grad(lattice, target).map(|(_, grad)| grad)
}

/// NLL and activation gradient in one forward-backward pass.
pub fn ctc_nll_grad(lattice: &PosteriorLattice, target: &[Label]) -> Result<(f64, Vec<f64>)> {
    lattice.check_target(target)?;
    let blank = lattice.blank();
    let states = augmented(target, blank);
    let s_len = states.len();
    let t_len = lattice.n_frames();
    let n = lattice.n_labels();

    let (alpha, log_lik) = forward_trellis(lattice, &states);
    if log_lik == LOG_ZERO {
        return Err(Error::ZeroLikelihood);
    }

    // beta[s] at time t: log-probability of emitting frames t+1..T-1 while
    // completing the target from state s. Excludes frame t itself, so
    // alpha + beta is the total occupancy of (t, s) and no division by the
    // frame probability is needed.
    let mut beta = vec![LOG_ZERO; s_len];
    let mut beta_next = vec![LOG_ZERO; s_len];
    let mut grad = Vec::with_capacity(t_len * n);
    grad.extend_from_slice(&lattice.probs);

    for t in (0..t_len).rev() {
        if t == t_len - 1 {
            beta[s_len - 1] = 0.0;
            if s_len > 1 {
                beta[s_len - 2] = 0.0;
            }
        } else {
            for s in 0..s_len {
                let stay = ln_or_zero(lattice.prob(t + 1, states[s])) + beta_next[s];
                let step = if s + 1 < s_len {
                    ln_or_zero(lattice.prob(t + 1, states[s + 1])) + beta_next[s + 1]
                } else {
                    LOG_ZERO
                };
                let hop = if s + 2 < s_len && skip_into(&states, s + 2, blank) {
                    ln_or_zero(lattice.prob(t + 1, states[s + 2])) + beta_next[s + 2]
                } else {
                    LOG_ZERO
                };
                beta[s] = lse3(stay, step, hop);
            }
        }

        let row = &mut grad[t * n..(t + 1) * n];
        let alpha_row = &alpha[t * s_len..(t + 1) * s_len];
        for s in 0..s_len {
            let occupancy = alpha_row[s] + beta[s] - log_lik;
            if occupancy > LOG_ZERO {
                row[states[s] as usize] -= occupancy.exp();
            }
        }

        std::mem::swap(&mut beta, &mut beta_next);
        beta.fill(LOG_ZERO);
    }

    Ok((-log_lik, grad))
}

/// Best-path decoding: per-frame argmax (ties broken toward the lowest
/// label id), repeats collapsed, blanks removed.
pub fn best_path_decode(lattice: &PosteriorLattice) -> Vec<Label> {
    let blank = lattice.blank();
    let mut out = Vec::new();
    let mut prev: Option<Label> = None;
    for t in 0..lattice.n_frames() {
        let row = lattice.row(t);
        let mut best = 0usize;
        for (k, &p) in row.iter().enumerate() {
            if p > row[best] {
                best = k;
            }
        }
        let label = best as Label;
        if prev != Some(label) && label != blank {
            out.push(label);
        }
        prev = Some(label);
    }
    out
}
