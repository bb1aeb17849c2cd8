//! Length-curriculum training for CTC sequence recognition.
//!
//! The library trains a small bidirectional LSTM with per-sample SGD on a
//! synthetic line corpus and compares three ways of drawing training samples:
//!
//! * `baseline` — flat shuffling, without replacement, a fresh permutation
//!   per epoch;
//! * `curriculum` — samples drawn with replacement with probability
//!   proportional to `shortness(sample)^lambda`, where shortness is
//!   `1 / max(m, |target|)` and `lambda` decays linearly from its start
//!   value to 0 over a configurable number of browsed target characters;
//! * `by_hand` — two phases, isolated words first, then full lines.
//!
//! Progress is measured in browsed target characters, and every run emits a
//! CSV convergence log of per-character validation NLL and character error
//! rate.

pub mod ctc;
pub mod dataset;
pub mod error;
pub mod harness;
pub mod metrics;
pub mod model;
pub mod sampler;

pub use error::{Error, Result};
