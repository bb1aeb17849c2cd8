//! Synthetic variable-length sequence corpora.
//!
//! Each sample is a frame matrix plus a target label sequence. Characters
//! are rendered as short runs of a fixed per-label template vector with
//! additive Gaussian noise; words are runs of characters separated by a
//! dedicated space label (a real label, distinct from the CTC blank, which
//! is never part of a target). Word boundaries are recorded at generation
//! time so a line corpus can be split into an isolated-word corpus.
//!
//! Corpora are immutable after generation or loading and safe to share
//! across workers.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use base64::engine::general_purpose::STANDARD as BASE64;
use base64::Engine;
use rand::{Rng, SeedableRng};
use rand_distr::StandardNormal;
use rand_pcg::Pcg64Mcg;
use serde::{Deserialize, Serialize};

use crate::ctc::Label;
use crate::error::{Error, Result};

/// Longest word, in characters.
const MAX_WORD_LEN: usize = 8;

const FORMAT_NAME: &str = "shortfirst-corpus";
const FORMAT_VERSION: u32 = 1;

/// Row-major `T x input_dim` matrix of frame features.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameMatrix {
    cols: usize,
    data: Vec<f32>,
}

impl FrameMatrix {
    pub fn new(cols: usize, data: Vec<f32>) -> Result<Self> {
        if cols == 0 {
            return Err(Error::DimensionMismatch(
                "frame matrix needs at least one column".into(),
            ));
        }
        if !data.len().is_multiple_of(cols) {
            return Err(Error::DimensionMismatch(format!(
                "{} values do not fill rows of width {cols}",
                data.len()
            )));
        }
        Ok(Self { cols, data })
    }

    pub fn rows(&self) -> usize {
        self.data.len() / self.cols
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, t: usize) -> &[f32] {
        &self.data[t * self.cols..(t + 1) * self.cols]
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    /// Copy of the half-open row range `[start, end)`.
    pub fn slice_rows(&self, start: usize, end: usize) -> FrameMatrix {
        FrameMatrix {
            cols: self.cols,
            data: self.data[start * self.cols..end * self.cols].to_vec(),
        }
    }
}

/// One word's position: label indices and frame rows, both half-open.
/// Separator labels sit in the gaps between consecutive spans.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct WordSpan {
    pub start_label: usize,
    pub end_label: usize,
    pub start_frame: usize,
    pub end_frame: usize,
}

/// One training item: frames, target labels and word annotations.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub frames: FrameMatrix,
    pub target: Vec<Label>,
    pub word_boundaries: Vec<WordSpan>,
}

impl Sample {
    pub fn target_len(&self) -> usize {
        self.target.len()
    }
}

/// Immutable collection of samples plus the alphabet metadata they share.
#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    pub alphabet_size: usize,
    pub input_dim: usize,
    pub samples: Vec<Sample>,
}

impl Corpus {
    /// The separator label: always the last character label.
    pub fn space_label(&self) -> Label {
        (self.alphabet_size - 1) as Label
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn total_target_chars(&self) -> u64 {
        self.samples.iter().map(|s| s.target.len() as u64).sum()
    }

    pub fn target_lengths(&self) -> Vec<usize> {
        self.samples.iter().map(|s| s.target.len()).collect()
    }
}

/// Recipe for a synthetic corpus. Generation is deterministic given the
/// whole spec, seed included.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusSpec {
    /// Number of character labels including the space separator.
    pub alphabet_size: usize,
    pub input_dim: usize,
    pub n_train_lines: usize,
    pub n_valid_lines: usize,
    /// Probability that a line is short (a trailing single-word line).
    pub short_line_prob: f64,
    /// Inclusive character-count range of short lines.
    pub short_line_len: (usize, usize),
    /// Inclusive character-count range of ordinary lines.
    pub long_line_len: (usize, usize),
    /// Inclusive range of frames rendered per character.
    pub frames_per_char: (usize, usize),
    /// Additive Gaussian noise on template vectors.
    pub noise_sigma: f64,
    pub seed: u64,
}

impl Default for CorpusSpec {
    fn default() -> Self {
        Self {
            alphabet_size: 20,
            input_dim: 16,
            n_train_lines: 10_000,
            n_valid_lines: 1_000,
            short_line_prob: 0.15,
            short_line_len: (1, 5),
            long_line_len: (10, 60),
            frames_per_char: (3, 8),
            noise_sigma: 0.3,
            seed: 0,
        }
    }
}

impl CorpusSpec {
    pub fn validate(&self) -> Result<()> {
        if self.alphabet_size < 2 {
            return Err(Error::Config(
                "alphabet_size must be at least 2 (one character plus the space)".into(),
            ));
        }
        if self.input_dim == 0 {
            return Err(Error::Config("input_dim must be positive".into()));
        }
        if self.n_train_lines == 0 || self.n_valid_lines == 0 {
            return Err(Error::Config("line counts must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.short_line_prob) {
            return Err(Error::Config("short_line_prob must be in [0, 1]".into()));
        }
        for (lo, hi) in [
            self.short_line_len,
            self.long_line_len,
            self.frames_per_char,
        ] {
            if lo == 0 || lo > hi {
                return Err(Error::Config(format!("bad range ({lo}, {hi})")));
            }
        }
        if !self.noise_sigma.is_finite() || self.noise_sigma < 0.0 {
            return Err(Error::Config("noise_sigma must be finite and >= 0".into()));
        }
        Ok(())
    }
}

struct Generator<'a> {
    spec: &'a CorpusSpec,
    templates: Vec<Vec<f32>>,
    rng: Pcg64Mcg,
}

impl<'a> Generator<'a> {
    fn new(spec: &'a CorpusSpec) -> Self {
        let mut rng = Pcg64Mcg::seed_from_u64(spec.seed);
        let templates = (0..spec.alphabet_size)
            .map(|_| {
                (0..spec.input_dim)
                    .map(|_| (rng.random::<f64>() * 2.0 - 1.0) as f32)
                    .collect()
            })
            .collect();
        Self {
            spec,
            templates,
            rng,
        }
    }

    fn line_len(&mut self) -> usize {
        let (lo, hi) = if self.rng.random::<f64>() < self.spec.short_line_prob {
            self.spec.short_line_len
        } else {
            self.spec.long_line_len
        };
        self.rng.random_range(lo..=hi)
    }

    fn gen_line(&mut self) -> Sample {
        let spec = self.spec;
        let space = (spec.alphabet_size - 1) as Label;
        let total_len = self.line_len();

        // Words of 1..=MAX_WORD_LEN characters separated by single spaces,
        // chosen so the line never ends in a separator: a word may not
        // leave exactly one character of room.
        let mut target: Vec<Label> = Vec::with_capacity(total_len);
        let mut label_spans: Vec<(usize, usize)> = Vec::new();
        let mut remaining = total_len;
        while remaining > 0 {
            let max_w = remaining.min(MAX_WORD_LEN);
            let w = loop {
                let w = self.rng.random_range(1..=max_w);
                if remaining - w != 1 {
                    break w;
                }
            };
            let start = target.len();
            for _ in 0..w {
                target.push(self.rng.random_range(0..spec.alphabet_size as u32 - 1));
            }
            label_spans.push((start, start + w));
            remaining -= w;
            if remaining > 0 {
                target.push(space);
                remaining -= 1;
            }
        }

        let (fpc_lo, fpc_hi) = spec.frames_per_char;
        let mut data: Vec<f32> = Vec::new();
        let mut frame_spans: Vec<(usize, usize)> = Vec::with_capacity(target.len());
        let mut row = 0usize;
        for &label in &target {
            let width = self.rng.random_range(fpc_lo..=fpc_hi);
            let template = &self.templates[label as usize];
            for _ in 0..width {
                for &base in template {
                    let noise: f64 = self.rng.sample(StandardNormal);
                    data.push((base as f64 + spec.noise_sigma * noise) as f32);
                }
            }
            frame_spans.push((row, row + width));
            row += width;
        }

        let word_boundaries = label_spans
            .iter()
            .map(|&(s, e)| WordSpan {
                start_label: s,
                end_label: e,
                start_frame: frame_spans[s].0,
                end_frame: frame_spans[e - 1].1,
            })
            .collect();

        Sample {
            frames: FrameMatrix {
                cols: spec.input_dim,
                data,
            },
            target,
            word_boundaries,
        }
    }
}

/// Generate the `(train, valid)` line corpora described by `spec`.
pub fn generate_corpus(spec: &CorpusSpec) -> Result<(Corpus, Corpus)> {
    spec.validate()?;
    let mut generator = Generator::new(spec);
    let train: Vec<Sample> = (0..spec.n_train_lines)
        .map(|_| generator.gen_line())
        .collect();
    let valid: Vec<Sample> = (0..spec.n_valid_lines)
        .map(|_| generator.gen_line())
        .collect();
    let make = |samples| Corpus {
        alphabet_size: spec.alphabet_size,
        input_dim: spec.input_dim,
        samples,
    };
    Ok((make(train), make(valid)))
}

/// Cut every line into isolated word samples using its word boundaries.
///
/// Each word keeps its own frame rows and label span; separator labels are
/// dropped, so reassembling the words of a line in order reconstructs the
/// line target modulo separators.
pub fn split_into_words(corpus: &Corpus) -> Result<Corpus> {
    let mut words = Vec::new();
    for sample in &corpus.samples {
        if sample.word_boundaries.is_empty() && !sample.target.is_empty() {
            return Err(Error::MissingBoundaries);
        }
        for span in &sample.word_boundaries {
            let target = sample.target[span.start_label..span.end_label].to_vec();
            let frames = sample.frames.slice_rows(span.start_frame, span.end_frame);
            let rows = frames.rows();
            let len = target.len();
            words.push(Sample {
                frames,
                target,
                word_boundaries: vec![WordSpan {
                    start_label: 0,
                    end_label: len,
                    start_frame: 0,
                    end_frame: rows,
                }],
            });
        }
    }
    Ok(Corpus {
        alphabet_size: corpus.alphabet_size,
        input_dim: corpus.input_dim,
        samples: words,
    })
}

#[derive(Serialize, Deserialize)]
struct HeaderRecord {
    format: String,
    version: u32,
    alphabet_size: usize,
    input_dim: usize,
    samples: usize,
}

#[derive(Serialize, Deserialize)]
struct SampleRecord {
    id: usize,
    target: Vec<Label>,
    rows: usize,
    cols: usize,
    /// Base64 of the row-major frame values as little-endian f32 bytes.
    frames: String,
    word_boundaries: Vec<WordSpan>,
}

fn encode_frames(frames: &FrameMatrix) -> String {
    let mut bytes = Vec::with_capacity(frames.data.len() * 4);
    for v in &frames.data {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    BASE64.encode(bytes)
}

fn decode_frames(encoded: &str) -> std::result::Result<Vec<f32>, String> {
    let bytes = BASE64.decode(encoded).map_err(|e| e.to_string())?;
    if bytes.len() % 4 != 0 {
        return Err(format!("frame payload of {} bytes is not f32-aligned", bytes.len()));
    }
    Ok(bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect())
}

/// Write a corpus as line-delimited JSON: one header record, then one
/// record per sample. The round trip through [`load_corpus`] is bit-exact.
pub fn save_corpus(corpus: &Corpus, path: &Path) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    let header = HeaderRecord {
        format: FORMAT_NAME.into(),
        version: FORMAT_VERSION,
        alphabet_size: corpus.alphabet_size,
        input_dim: corpus.input_dim,
        samples: corpus.samples.len(),
    };
    writeln!(out, "{}", serde_json::to_string(&header).expect("header serializes"))?;
    for (id, sample) in corpus.samples.iter().enumerate() {
        let record = SampleRecord {
            id,
            target: sample.target.clone(),
            rows: sample.frames.rows(),
            cols: sample.frames.cols(),
            frames: encode_frames(&sample.frames),
            word_boundaries: sample.word_boundaries.clone(),
        };
        writeln!(out, "{}", serde_json::to_string(&record).expect("record serializes"))?;
    }
    out.flush()?;
    Ok(())
}

fn malformed(line: usize, message: impl Into<String>) -> Error {
    Error::MalformedRecord {
        line,
        message: message.into(),
    }
}

/// Load a corpus written by [`save_corpus`]. Malformed records report their
/// line number; a truncated file names the first missing record. An empty
/// file loads as an empty corpus with a warning on stderr.
pub fn load_corpus(path: &Path) -> Result<Corpus> {
    let reader = BufReader::new(File::open(path)?);
    let mut lines = reader.lines();

    let header_line = match lines.next() {
        Some(line) => line?,
        None => {
            eprintln!(
                "warning: {} is empty; loading an empty corpus",
                path.display()
            );
            return Ok(Corpus {
                alphabet_size: 0,
                input_dim: 0,
                samples: Vec::new(),
            });
        }
    };
    let header: HeaderRecord =
        serde_json::from_str(&header_line).map_err(|e| malformed(1, e.to_string()))?;
    if header.format != FORMAT_NAME {
        return Err(malformed(1, format!("unknown format {:?}", header.format)));
    }
    if header.version != FORMAT_VERSION {
        return Err(malformed(
            1,
            format!("unsupported version {}", header.version),
        ));
    }
    if header.alphabet_size < 2 || header.input_dim == 0 {
        return Err(malformed(1, "header declares a degenerate alphabet or width"));
    }

    let mut samples = Vec::with_capacity(header.samples);
    for (idx, line) in lines.enumerate() {
        let line_no = idx + 2;
        let line = line?;
        let record: SampleRecord =
            serde_json::from_str(&line).map_err(|e| malformed(line_no, e.to_string()))?;
        if record.cols != header.input_dim {
            return Err(malformed(
                line_no,
                format!(
                    "record width {} does not match header input_dim {}",
                    record.cols, header.input_dim
                ),
            ));
        }
        let data = decode_frames(&record.frames).map_err(|e| malformed(line_no, e))?;
        if data.len() != record.rows * record.cols {
            return Err(malformed(
                line_no,
                format!(
                    "declared shape {} x {} but payload holds {} values",
                    record.rows,
                    record.cols,
                    data.len()
                ),
            ));
        }
        for &label in &record.target {
            if label as usize >= header.alphabet_size {
                return Err(malformed(
                    line_no,
                    format!("label {label} outside the declared alphabet"),
                ));
            }
        }
        for span in &record.word_boundaries {
            if span.start_label > span.end_label
                || span.end_label > record.target.len()
                || span.start_frame > span.end_frame
                || span.end_frame > record.rows
            {
                return Err(malformed(line_no, format!("inconsistent word span {span:?}")));
            }
        }
        samples.push(Sample {
            frames: FrameMatrix {
                cols: record.cols,
                data,
            },
            target: record.target,
            word_boundaries: record.word_boundaries,
        });
    }

    if samples.len() != header.samples {
        return Err(malformed(
            samples.len() + 2,
            format!(
                "header declares {} samples but the file ends after {}",
                header.samples,
                samples.len()
            ),
        ));
    }

    Ok(Corpus {
        alphabet_size: header.alphabet_size,
        input_dim: header.input_dim,
        samples,
    })
}
