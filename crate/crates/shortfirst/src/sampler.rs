//! Sample-drawing policies.
//!
//! The curriculum policy draws training samples with replacement, with
//! probability proportional to `shortness^lambda` where
//! `shortness = 1 / max(m, target_len)`. Drawing is done by rejection:
//! propose an index uniformly and accept with probability
//! `(shortness / max_shortness)^lambda`. This realizes the normalized law
//! without ever materializing the normalizer, so `lambda` may change
//! between draws at no cost.
//!
//! The baseline policy shuffles the corpus into a fresh permutation each
//! epoch and walks it, so every sample is visited exactly once per epoch.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default starting value for the curriculum exponent.
pub const DEFAULT_LAMBDA_START: f64 = 3.0;
/// Default clipping threshold for the shortness measure.
pub const DEFAULT_M_MIN: usize = 5;
/// Default decay span, expressed in training-set equivalents.
pub const DEFAULT_DECAY_EPOCHS: u32 = 5;

/// Easiness of a sample: `1 / max(m_min, target_len)`.
///
/// The clipping threshold keeps the measure bounded for empty targets and
/// stops very short sequences from being favoured without limit. Rejects
/// `m_min = 0`, which would divide by zero on empty targets.
pub fn shortness(target_len: usize, m_min: usize) -> Result<f64> {
    if m_min == 0 {
        return Err(Error::ZeroClipThreshold);
    }
    Ok(1.0 / m_min.max(target_len) as f64)
}

/// The exponent schedule: `lambda` decays linearly from `lambda_start` to 0
/// over `decay_span_targets` browsed target characters and stays 0 after.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurriculumSchedule {
    pub lambda_start: f64,
    pub decay_span_targets: u64,
    pub m_min: usize,
}

impl CurriculumSchedule {
    pub fn new(lambda_start: f64, decay_span_targets: u64, m_min: usize) -> Result<Self> {
        if !lambda_start.is_finite() || lambda_start < 0.0 {
            return Err(Error::Config(format!(
                "lambda_start must be a finite nonnegative real, got {lambda_start}"
            )));
        }
        if decay_span_targets == 0 {
            return Err(Error::Config(
                "decay_span_targets must be positive".into(),
            ));
        }
        if m_min == 0 {
            return Err(Error::ZeroClipThreshold);
        }
        Ok(Self {
            lambda_start,
            decay_span_targets,
            m_min,
        })
    }

    /// Linear interpolation from `lambda_start` at progress 0 down to 0 at
    /// `decay_span_targets`, clamped at 0 afterward.
    ///
    /// Computed as `lambda_start * remaining / span` so that grid points
    /// with an exactly representable quotient come out exact.
    pub fn lambda_at(&self, browsed_targets: u64) -> f64 {
        if browsed_targets >= self.decay_span_targets {
            return 0.0;
        }
        let remaining = (self.decay_span_targets - browsed_targets) as f64;
        self.lambda_start * remaining / self.decay_span_targets as f64
    }
}

/// Per-sample shortness values, fixed for the life of a corpus.
///
/// Immutable after construction; shareable across concurrent readers.
#[derive(Debug, Clone)]
pub struct SamplingWeights {
    shortness: Vec<f64>,
    max_shortness: f64,
}

impl SamplingWeights {
    /// Build weights from target lengths using the clipped shortness measure.
    pub fn from_lengths(lengths: &[usize], m_min: usize) -> Result<Self> {
        let values = lengths
            .iter()
            .map(|&len| shortness(len, m_min))
            .collect::<Result<Vec<f64>>>()?;
        Self::from_shortness(values)
    }

    /// Build weights from raw shortness values in `(0, 1]`.
    pub fn from_shortness(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptyCorpus);
        }
        let mut max = 0.0f64;
        for &v in &values {
            if !v.is_finite() || v <= 0.0 || v > 1.0 {
                return Err(Error::InvalidShortness(v));
            }
            max = max.max(v);
        }
        Ok(Self {
            shortness: values,
            max_shortness: max,
        })
    }

    pub fn len(&self) -> usize {
        self.shortness.len()
    }

    pub fn is_empty(&self) -> bool {
        self.shortness.is_empty()
    }

    pub fn shortness_values(&self) -> &[f64] {
        &self.shortness
    }

    pub fn max_shortness(&self) -> f64 {
        self.max_shortness
    }

    /// Draw one index with probability `shortness[t]^lambda / sum_u
    /// shortness[u]^lambda`, with replacement.
    ///
    /// At `lambda = 0` this degenerates to uniform with replacement.
    pub fn draw<R: Rng>(&self, lambda: f64, rng: &mut R) -> usize {
        self.draw_counted(lambda, rng).0
    }

    /// Like [`draw`](Self::draw) but also reports how many uniform proposals
    /// the rejection loop consumed. Expected proposals per accepted draw are
    /// bounded by `(max_shortness / min_shortness)^lambda`.
    pub fn draw_counted<R: Rng>(&self, lambda: f64, rng: &mut R) -> (usize, u64) {
        let n = self.shortness.len();
        let mut proposals = 0u64;
        loop {
            proposals += 1;
            let t = rng.random_range(0..n);
            let accept = (self.shortness[t] / self.max_shortness).powf(lambda);
            // random::<f64>() < 1.0 always holds, so the maximal-shortness
            // sample (and every sample at lambda = 0) never burns a uniform.
            if accept >= 1.0 || rng.random::<f64>() < accept {
                return (t, proposals);
            }
        }
    }
}

/// Flat sampling without replacement: a fresh uniform permutation of the
/// corpus each epoch, visited in order.
#[derive(Debug, Clone)]
pub struct BaselineSampler {
    order: Vec<u32>,
    cursor: usize,
}

impl BaselineSampler {
    pub fn new(n_samples: usize) -> Result<Self> {
        if n_samples == 0 {
            return Err(Error::EmptyCorpus);
        }
        Ok(Self {
            order: (0..n_samples as u32).collect(),
            // Start exhausted so the first draw shuffles.
            cursor: n_samples,
        })
    }

    /// Next index of the current permutation, reshuffling at epoch ends.
    pub fn next<R: Rng>(&mut self, rng: &mut R) -> usize {
        if self.cursor == self.order.len() {
            self.order.shuffle(rng);
            self.cursor = 0;
        }
        let t = self.order[self.cursor];
        self.cursor += 1;
        t as usize
    }
}
