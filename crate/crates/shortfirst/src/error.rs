//! Crate-wide error type.

use std::io;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("clipping threshold m must be at least 1")]
    ZeroClipThreshold,

    #[error("cannot sample from an empty corpus")]
    EmptyCorpus,

    #[error("shortness weights must be finite and in (0, 1], got {0}")]
    InvalidShortness(f64),

    #[error("invalid posterior lattice: {0}")]
    BadLattice(String),

    #[error("target needs at least {required} frames but only {frames} are available")]
    InfeasibleTarget { frames: usize, required: usize },

    #[error("label {label} out of range: alphabet has {alphabet} labels (blank excluded)")]
    InvalidLabel { label: u32, alphabet: usize },

    #[error("likelihood is zero; the CTC gradient is undefined")]
    ZeroLikelihood,

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("metrics over an all-empty target set are undefined")]
    EmptyTargets,

    #[error("record at line {line}: {message}")]
    MalformedRecord { line: usize, message: String },

    #[error("corpus has no word boundaries; cannot split into words")]
    MissingBoundaries,

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("evaluation grids do not match: {0}")]
    GridMismatch(String),

    #[error("bad checkpoint: {0}")]
    BadCheckpoint(String),

    #[error(transparent)]
    Io(#[from] io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
