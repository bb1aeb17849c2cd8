//! Experiment harness: runs the three training strategies under identical
//! conditions and logs convergence curves.
//!
//! Progress is indexed by browsed target characters — the cumulative length
//! of every drawn sample's target — rather than by updates, so strategies
//! that favour short sequences are compared on equal computational footing.
//! After every `eval_every_targets` browsed characters the model is scored
//! on the validation set and one [`ConvergencePoint`] is appended.

use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::SeedableRng;
use rand_pcg::Pcg64Mcg;
use rayon::prelude::*;

use crate::ctc::{best_path_decode, ctc_nll};
use crate::dataset::{load_corpus, Corpus};
use crate::error::{Error, Result};
use crate::metrics::{edit_distance, EvalReport};
use crate::model::{Checkpoint, ModelConfig, ModelState};
use crate::sampler::{BaselineSampler, CurriculumSchedule, SamplingWeights};

/// Half-life, in browsed targets, of the running training-cost average.
const TRAIN_EWMA_HALF_LIFE: f64 = 10_000.0;

/// Keeps the sampling stream distinct from the parameter-init stream.
const SAMPLER_SEED_OFFSET: u64 = 0x9E37_79B9_7F4A_7C15;

/// How training samples are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Strategy {
    /// Flat priors, without replacement: a fresh shuffle every epoch.
    Baseline,
    /// Shortness-weighted drawing with replacement and a decaying exponent.
    Curriculum,
    /// Isolated words first, then lines.
    ByHand,
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Strategy::Baseline => "baseline",
            Strategy::Curriculum => "curriculum",
            Strategy::ByHand => "by_hand",
        })
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "baseline" => Ok(Strategy::Baseline),
            "curriculum" => Ok(Strategy::Curriculum),
            "by_hand" | "by-hand" => Ok(Strategy::ByHand),
            other => Err(Error::Config(format!("unknown strategy {other:?}"))),
        }
    }
}

/// Which corpus the by-hand schedule is currently training on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    Words,
    Lines,
    NotApplicable,
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Phase::Words => "words",
            Phase::Lines => "lines",
            Phase::NotApplicable => "n/a",
        })
    }
}

impl FromStr for Phase {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "words" => Ok(Phase::Words),
            "lines" => Ok(Phase::Lines),
            "n/a" => Ok(Phase::NotApplicable),
            other => Err(Error::Config(format!("unknown phase {other:?}"))),
        }
    }
}

/// Everything one run needs. All strategies of a study share the model
/// config, seed and evaluation grid so the comparison is controlled.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub strategy: Strategy,
    pub lambda_start: f64,
    /// Lambda decays to 0 over this many training-set equivalents of
    /// browsed targets.
    pub decay_epochs: u32,
    pub m_min: usize,
    pub model: ModelConfig,
    pub train_path: PathBuf,
    pub valid_path: PathBuf,
    pub words_path: Option<PathBuf>,
    /// Training budget in training-set equivalents of browsed targets.
    pub total_epochs: u32,
    pub eval_every_targets: u64,
    pub seed: u64,
    /// CSV destination; also anchors the diagnostic checkpoint on aborts.
    pub out: Option<PathBuf>,
    /// By-hand switch rule: evaluations without at least this much
    /// improvement in validation normNLL count as stale...
    pub min_delta: f64,
    /// ...and this many consecutive stale evaluations trigger the switch.
    pub patience: usize,
}

impl ExperimentConfig {
    pub fn new(strategy: Strategy) -> Self {
        Self {
            strategy,
            lambda_start: crate::sampler::DEFAULT_LAMBDA_START,
            decay_epochs: crate::sampler::DEFAULT_DECAY_EPOCHS,
            m_min: crate::sampler::DEFAULT_M_MIN,
            model: ModelConfig::default(),
            train_path: PathBuf::new(),
            valid_path: PathBuf::new(),
            words_path: None,
            total_epochs: 5,
            eval_every_targets: 50_000,
            seed: 0,
            out: None,
            min_delta: 0.001,
            patience: 2,
        }
    }

    fn validate(&self) -> Result<()> {
        self.model.validate()?;
        if self.total_epochs == 0 {
            return Err(Error::Config("total_epochs must be positive".into()));
        }
        if self.eval_every_targets == 0 {
            return Err(Error::Config("eval_every_targets must be positive".into()));
        }
        if !self.min_delta.is_finite() || self.min_delta < 0.0 {
            return Err(Error::Config("min_delta must be finite and >= 0".into()));
        }
        if self.patience == 0 {
            return Err(Error::Config("patience must be positive".into()));
        }
        Ok(())
    }
}

/// One row of the convergence log.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergencePoint {
    pub browsed_targets: u64,
    pub updates: u64,
    pub lambda: f64,
    pub phase: Phase,
    /// Running EWMA of per-character training NLL; NaN before the first
    /// update.
    pub train_norm_nll: f64,
    pub valid_norm_nll: f64,
    pub valid_cer: f64,
}

/// A finished run: its log plus per-draw accounting.
#[derive(Debug, Clone)]
pub struct RunResult {
    pub strategy: Strategy,
    pub eval_every: u64,
    pub budget_targets: u64,
    pub points: Vec<ConvergencePoint>,
    /// Target length of every trained-on draw, in draw order.
    pub draw_lengths: Vec<u32>,
    pub skipped_infeasible: u64,
}

impl RunResult {
    pub fn browsed_total(&self) -> u64 {
        self.points.last().map_or(0, |p| p.browsed_targets)
    }

    /// Lowest validation normNLL and where it was first reached.
    pub fn best_valid_norm_nll(&self) -> Option<(f64, u64)> {
        best_of(&self.points, |p| p.valid_norm_nll)
    }

    /// Lowest validation CER and where it was first reached.
    pub fn best_valid_cer(&self) -> Option<(f64, u64)> {
        best_of(&self.points, |p| p.valid_cer)
    }

    /// Browsed targets at the first evaluation with normNLL at or below
    /// `threshold`.
    pub fn first_reaching_norm_nll(&self, threshold: f64) -> Option<u64> {
        self.points
            .iter()
            .find(|p| p.valid_norm_nll <= threshold)
            .map(|p| p.browsed_targets)
    }
}

fn best_of(points: &[ConvergencePoint], key: impl Fn(&ConvergencePoint) -> f64) -> Option<(f64, u64)> {
    let mut best: Option<(f64, u64)> = None;
    for p in points {
        let v = key(p);
        if best.is_none_or(|(b, _)| v < b) {
            best = Some((v, p.browsed_targets));
        }
    }
    best
}

/// Exact validation metrics from an immutable parameter snapshot. Samples
/// are scored in parallel and reduced in index order, so the result does
/// not depend on thread scheduling.
pub fn evaluate(model: &ModelState, corpus: &Corpus) -> Result<EvalReport> {
    let scored: Vec<(f64, usize, usize)> = corpus
        .samples
        .par_iter()
        .map(|sample| -> Result<(f64, usize, usize)> {
            let lattice = model.forward(&sample.frames)?;
            let nll = ctc_nll(&lattice, &sample.target)?;
            let prediction = best_path_decode(&lattice);
            let dist = edit_distance(&sample.target, &prediction);
            Ok((nll, sample.target.len(), dist))
        })
        .collect::<Result<Vec<_>>>()?;

    let total_chars: usize = scored.iter().map(|&(_, len, _)| len).sum();
    if total_chars == 0 {
        return Err(Error::EmptyTargets);
    }
    let total_nll: f64 = scored.iter().map(|&(nll, _, _)| nll).sum();
    let total_dist: usize = scored.iter().map(|&(_, _, d)| d).sum();
    Ok(EvalReport {
        norm_nll: total_nll / total_chars as f64,
        cer: total_dist as f64 / total_chars as f64,
        total_target_chars: total_chars,
    })
}

struct Tracker<'a> {
    valid: &'a Corpus,
    eval_every: u64,
    browsed: u64,
    updates: u64,
    next_eval: u64,
    ewma: Option<f64>,
    points: Vec<ConvergencePoint>,
    draw_lengths: Vec<u32>,
    skipped_infeasible: u64,
}

impl<'a> Tracker<'a> {
    fn new(valid: &'a Corpus, eval_every: u64) -> Self {
        Self {
            valid,
            eval_every,
            browsed: 0,
            updates: 0,
            next_eval: eval_every,
            ewma: None,
            points: Vec::new(),
            draw_lengths: Vec::new(),
            skipped_infeasible: 0,
        }
    }

    fn record_update(&mut self, target_len: usize, nll: f64) {
        self.updates += 1;
        self.browsed += target_len as u64;
        self.draw_lengths.push(target_len as u32);
        if target_len > 0 {
            let keep = 0.5f64.powf(target_len as f64 / TRAIN_EWMA_HALF_LIFE);
            let per_char = nll / target_len as f64;
            self.ewma = Some(match self.ewma {
                None => per_char,
                Some(prev) => keep * prev + (1.0 - keep) * per_char,
            });
        }
    }

    fn due_for_eval(&self) -> bool {
        self.browsed >= self.next_eval
    }

    fn eval(&mut self, model: &ModelState, lambda: f64, phase: Phase) -> Result<ConvergencePoint> {
        let report = evaluate(model, self.valid)?;
        let point = ConvergencePoint {
            browsed_targets: self.browsed,
            updates: self.updates,
            lambda,
            phase,
            train_norm_nll: self.ewma.unwrap_or(f64::NAN),
            valid_norm_nll: report.norm_nll,
            valid_cer: report.cer,
        };
        self.points.push(point.clone());
        self.next_eval = (self.browsed / self.eval_every + 1) * self.eval_every;
        Ok(point)
    }

    fn needs_final_eval(&self) -> bool {
        self.points.last().is_none_or(|p| p.browsed_targets < self.browsed)
    }
}

fn abort_with_checkpoint(
    config: &ExperimentConfig,
    model: &ModelState,
    rng: &Pcg64Mcg,
    cause: Error,
) -> Error {
    if let Some(out) = &config.out {
        let path = out.with_extension("abort.ckpt.json");
        match Checkpoint::new(model, rng).save(&path) {
            Ok(()) => eprintln!(
                "error: training aborted ({cause}); diagnostic checkpoint written to {}",
                path.display()
            ),
            Err(e) => eprintln!(
                "error: training aborted ({cause}); failed to write diagnostic checkpoint: {e}"
            ),
        }
    }
    cause
}

fn warn_skip(skipped: u64, frames: usize, target_len: usize) {
    if skipped <= 3 {
        eprintln!(
            "warning: skipping infeasible sample ({frames} frames cannot carry {target_len} labels)"
        );
    }
}

/// Run one strategy end to end. Loads the corpora named in the config and
/// writes the CSV log when an output path is set.
pub fn run_experiment(config: &ExperimentConfig) -> Result<RunResult> {
    let train = load_corpus(&config.train_path)?;
    let valid = load_corpus(&config.valid_path)?;
    let words = match &config.words_path {
        Some(path) => Some(load_corpus(path)?),
        None => None,
    };
    run_with_corpora(config, &train, &valid, words.as_ref())
}

/// [`run_experiment`] over corpora already in memory.
pub fn run_with_corpora(
    config: &ExperimentConfig,
    train_lines: &Corpus,
    valid: &Corpus,
    words: Option<&Corpus>,
) -> Result<RunResult> {
    config.validate()?;
    if train_lines.is_empty() || train_lines.total_target_chars() == 0 {
        return Err(Error::Config(
            "training corpus has no target characters".into(),
        ));
    }
    let result = match config.strategy {
        Strategy::Baseline | Strategy::Curriculum => {
            run_single_corpus(config, train_lines, valid)?
        }
        Strategy::ByHand => {
            let words = words.ok_or_else(|| {
                Error::Config("the by_hand strategy needs a word corpus".into())
            })?;
            run_by_hand(config, train_lines, valid, words)?
        }
    };
    if let Some(out) = &config.out {
        save_csv(&result, out)?;
    }
    Ok(result)
}

enum Policy {
    Baseline(BaselineSampler),
    Curriculum {
        weights: SamplingWeights,
        schedule: CurriculumSchedule,
    },
}

impl Policy {
    fn lambda_at(&self, browsed: u64) -> f64 {
        match self {
            Policy::Baseline(_) => 0.0,
            Policy::Curriculum { schedule, .. } => schedule.lambda_at(browsed),
        }
    }

    fn draw(&mut self, browsed: u64, rng: &mut Pcg64Mcg) -> usize {
        match self {
            Policy::Baseline(sampler) => sampler.next(rng),
            Policy::Curriculum { weights, schedule } => {
                // Lambda is refreshed from progress before every draw.
                weights.draw(schedule.lambda_at(browsed), rng)
            }
        }
    }
}

fn run_single_corpus(
    config: &ExperimentConfig,
    train: &Corpus,
    valid: &Corpus,
) -> Result<RunResult> {
    let total_chars = train.total_target_chars();
    let budget = config.total_epochs as u64 * total_chars;
    let mut model = ModelState::init(config.model.clone(), config.seed)?;
    let mut rng = Pcg64Mcg::seed_from_u64(config.seed.wrapping_add(SAMPLER_SEED_OFFSET));

    let mut policy = match config.strategy {
        Strategy::Baseline => Policy::Baseline(BaselineSampler::new(train.len())?),
        Strategy::Curriculum => Policy::Curriculum {
            weights: SamplingWeights::from_lengths(&train.target_lengths(), config.m_min)?,
            schedule: CurriculumSchedule::new(
                config.lambda_start,
                config.decay_epochs as u64 * total_chars,
                config.m_min,
            )?,
        },
        Strategy::ByHand => unreachable!("dispatched in run_with_corpora"),
    };

    let mut tracker = Tracker::new(valid, config.eval_every_targets);
    tracker.eval(&model, policy.lambda_at(0), Phase::NotApplicable)?;

    while tracker.browsed < budget {
        let idx = policy.draw(tracker.browsed, &mut rng);
        let sample = &train.samples[idx];
        match model.sgd_step(&sample.frames, &sample.target, config.model.learning_rate) {
            Ok(nll) => {
                tracker.record_update(sample.target.len(), nll);
                if tracker.due_for_eval() {
                    let lambda = policy.lambda_at(tracker.browsed);
                    tracker.eval(&model, lambda, Phase::NotApplicable)?;
                }
            }
            Err(Error::InfeasibleTarget { frames, required }) => {
                tracker.skipped_infeasible += 1;
                warn_skip(tracker.skipped_infeasible, frames, required);
            }
            Err(e) => return Err(abort_with_checkpoint(config, &model, &rng, e)),
        }
    }
    if tracker.needs_final_eval() {
        let lambda = policy.lambda_at(tracker.browsed);
        tracker.eval(&model, lambda, Phase::NotApplicable)?;
    }

    Ok(RunResult {
        strategy: config.strategy,
        eval_every: config.eval_every_targets,
        budget_targets: budget,
        points: tracker.points,
        draw_lengths: tracker.draw_lengths,
        skipped_infeasible: tracker.skipped_infeasible,
    })
}

/// The two-phase schedule: train on isolated words with baseline sampling,
/// switch to lines once validation normNLL (measured on the line validation
/// set throughout) stops improving by `min_delta` for `patience` consecutive
/// evaluations.
pub fn run_by_hand(
    config: &ExperimentConfig,
    lines: &Corpus,
    valid: &Corpus,
    words: &Corpus,
) -> Result<RunResult> {
    config.validate()?;
    if words.is_empty() || words.total_target_chars() == 0 {
        return Err(Error::Config("word corpus has no target characters".into()));
    }
    if lines.is_empty() || lines.total_target_chars() == 0 {
        return Err(Error::Config(
            "training corpus has no target characters".into(),
        ));
    }

    // The budget is denominated in line-corpus equivalents regardless of
    // phase; browsed word characters count toward it.
    let budget = config.total_epochs as u64 * lines.total_target_chars();
    let mut model = ModelState::init(config.model.clone(), config.seed)?;
    let mut rng = Pcg64Mcg::seed_from_u64(config.seed.wrapping_add(SAMPLER_SEED_OFFSET));

    let mut tracker = Tracker::new(valid, config.eval_every_targets);
    let first = tracker.eval(&model, 0.0, Phase::Words)?;
    let mut best = first.valid_norm_nll;
    let mut stale = 0usize;
    let mut switched = false;

    let mut word_sampler = BaselineSampler::new(words.len())?;
    while tracker.browsed < budget {
        let sample = &words.samples[word_sampler.next(&mut rng)];
        match model.sgd_step(&sample.frames, &sample.target, config.model.learning_rate) {
            Ok(nll) => {
                tracker.record_update(sample.target.len(), nll);
                if tracker.due_for_eval() {
                    let point = tracker.eval(&model, 0.0, Phase::Words)?;
                    if point.valid_norm_nll < best - config.min_delta {
                        stale = 0;
                    } else {
                        stale += 1;
                    }
                    best = best.min(point.valid_norm_nll);
                    if stale >= config.patience {
                        switched = true;
                        break;
                    }
                }
            }
            Err(Error::InfeasibleTarget { frames, required }) => {
                tracker.skipped_infeasible += 1;
                warn_skip(tracker.skipped_infeasible, frames, required);
            }
            Err(e) => return Err(abort_with_checkpoint(config, &model, &rng, e)),
        }
    }

    if switched {
        let mut line_sampler = BaselineSampler::new(lines.len())?;
        while tracker.browsed < budget {
            let sample = &lines.samples[line_sampler.next(&mut rng)];
            match model.sgd_step(&sample.frames, &sample.target, config.model.learning_rate) {
                Ok(nll) => {
                    tracker.record_update(sample.target.len(), nll);
                    if tracker.due_for_eval() {
                        tracker.eval(&model, 0.0, Phase::Lines)?;
                    }
                }
                Err(Error::InfeasibleTarget { frames, required }) => {
                    tracker.skipped_infeasible += 1;
                    warn_skip(tracker.skipped_infeasible, frames, required);
                }
                Err(e) => return Err(abort_with_checkpoint(config, &model, &rng, e)),
            }
        }
    }

    if tracker.needs_final_eval() {
        let phase = if switched { Phase::Lines } else { Phase::Words };
        tracker.eval(&model, 0.0, phase)?;
    }

    Ok(RunResult {
        strategy: Strategy::ByHand,
        eval_every: config.eval_every_targets,
        budget_targets: budget,
        points: tracker.points,
        draw_lengths: tracker.draw_lengths,
        skipped_infeasible: tracker.skipped_infeasible,
    })
}

/// Per-strategy digest used by [`compare_strategies`].
#[derive(Debug, Clone)]
pub struct StrategySummary {
    pub strategy: Strategy,
    pub best_valid_norm_nll: Option<(f64, u64)>,
    pub best_valid_cer: Option<(f64, u64)>,
    /// Browsed targets at the first evaluation reaching the threshold;
    /// `None` when it was never reached within budget.
    pub targets_to_threshold: Option<u64>,
    pub budget_targets: u64,
}

/// Cross-strategy comparison at a normNLL threshold.
#[derive(Debug, Clone)]
pub struct Comparison {
    pub threshold: f64,
    pub summaries: Vec<StrategySummary>,
    /// `(strategy, targets_to_threshold / baseline's)` for every
    /// non-baseline strategy; `None` when either side never reached it.
    pub speedups_vs_baseline: Vec<(Strategy, Option<f64>)>,
}

impl fmt::Display for Comparison {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "threshold: valid normNLL <= {}", self.threshold)?;
        for s in &self.summaries {
            write!(f, "{:<12}", s.strategy.to_string())?;
            match s.best_valid_norm_nll {
                Some((v, at)) => write!(f, " best normNLL {v:.4} @ {at}")?,
                None => write!(f, " best normNLL n/a")?,
            }
            match s.best_valid_cer {
                Some((v, at)) => write!(f, " | best CER {v:.4} @ {at}")?,
                None => write!(f, " | best CER n/a")?,
            }
            match s.targets_to_threshold {
                Some(at) => writeln!(f, " | threshold @ {at}")?,
                None => writeln!(f, " | not reached (budget {})", s.budget_targets)?,
            }
        }
        for (strategy, ratio) in &self.speedups_vs_baseline {
            match ratio {
                Some(r) => writeln!(f, "speedup {strategy}/baseline: {r:.3}")?,
                None => writeln!(f, "speedup {strategy}/baseline: n/a")?,
            }
        }
        Ok(())
    }
}

/// Summarize runs that share an evaluation grid and compute speedup ratios
/// against the baseline when one is present.
pub fn compare_strategies(results: &[&RunResult], threshold: f64) -> Result<Comparison> {
    if results.is_empty() {
        return Err(Error::Config("nothing to compare".into()));
    }
    let first = results[0];
    for r in &results[1..] {
        if r.eval_every != first.eval_every {
            return Err(Error::GridMismatch(format!(
                "eval cadence {} vs {}",
                r.eval_every, first.eval_every
            )));
        }
        if r.points.len() != first.points.len() {
            return Err(Error::GridMismatch(format!(
                "{} evaluation points vs {}",
                r.points.len(),
                first.points.len()
            )));
        }
    }

    let summaries: Vec<StrategySummary> = results
        .iter()
        .map(|r| StrategySummary {
            strategy: r.strategy,
            best_valid_norm_nll: r.best_valid_norm_nll(),
            best_valid_cer: r.best_valid_cer(),
            targets_to_threshold: r.first_reaching_norm_nll(threshold),
            budget_targets: r.budget_targets,
        })
        .collect();

    let baseline_reach = results
        .iter()
        .find(|r| r.strategy == Strategy::Baseline)
        .map(|r| r.first_reaching_norm_nll(threshold));
    let mut speedups = Vec::new();
    if let Some(baseline_reach) = baseline_reach {
        for r in results.iter().filter(|r| r.strategy != Strategy::Baseline) {
            let ratio = match (r.first_reaching_norm_nll(threshold), baseline_reach) {
                (Some(own), Some(base)) if base > 0 => Some(own as f64 / base as f64),
                _ => None,
            };
            speedups.push((r.strategy, ratio));
        }
    }

    Ok(Comparison {
        threshold,
        summaries,
        speedups_vs_baseline: speedups,
    })
}

/// Fixed header of the convergence CSV.
pub const CSV_HEADER: &str =
    "browsed_targets,updates,lambda,phase,train_norm_nll,valid_norm_nll,valid_cer";

/// Write the convergence log; one row per evaluation point.
pub fn write_csv<W: Write>(points: &[ConvergencePoint], mut out: W) -> Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for p in points {
        writeln!(
            out,
            "{},{},{:.6},{},{:.6},{:.6},{:.6}",
            p.browsed_targets,
            p.updates,
            p.lambda,
            p.phase,
            p.train_norm_nll,
            p.valid_norm_nll,
            p.valid_cer
        )?;
    }
    Ok(())
}

pub fn save_csv(result: &RunResult, path: &Path) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    write_csv(&result.points, &mut out)?;
    out.flush()?;
    Ok(())
}

/// Read back a convergence CSV written by [`write_csv`].
pub fn load_csv(path: &Path) -> Result<Vec<ConvergencePoint>> {
    let reader = BufReader::new(File::open(path)?);
    let mut lines = reader.lines();
    let header = lines
        .next()
        .transpose()?
        .ok_or_else(|| Error::MalformedRecord {
            line: 1,
            message: "empty log".into(),
        })?;
    if header != CSV_HEADER {
        return Err(Error::MalformedRecord {
            line: 1,
            message: format!("unexpected header {header:?}"),
        });
    }
    let mut points = Vec::new();
    for (idx, line) in lines.enumerate() {
        let line_no = idx + 2;
        let line = line?;
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 7 {
            return Err(Error::MalformedRecord {
                line: line_no,
                message: format!("expected 7 fields, found {}", fields.len()),
            });
        }
        let bad = |message: String| Error::MalformedRecord {
            line: line_no,
            message,
        };
        points.push(ConvergencePoint {
            browsed_targets: fields[0].parse().map_err(|e| bad(format!("browsed_targets: {e}")))?,
            updates: fields[1].parse().map_err(|e| bad(format!("updates: {e}")))?,
            lambda: fields[2].parse().map_err(|e| bad(format!("lambda: {e}")))?,
            phase: fields[3].parse().map_err(|_| bad(format!("phase: {:?}", fields[3])))?,
            train_norm_nll: fields[4].parse().map_err(|e| bad(format!("train_norm_nll: {e}")))?,
            valid_norm_nll: fields[5].parse().map_err(|e| bad(format!("valid_norm_nll: {e}")))?,
            valid_cer: fields[6].parse().map_err(|e| bad(format!("valid_cer: {e}")))?,
        });
    }
    Ok(points)
}

/// Wrap CSV-loaded points so they can flow through [`compare_strategies`].
/// The cadence is unknown from the file alone, so grid equality falls back
/// to comparing point counts.
pub fn result_from_points(strategy: Strategy, points: Vec<ConvergencePoint>) -> RunResult {
    let budget = points.last().map_or(0, |p| p.browsed_targets);
    RunResult {
        strategy,
        eval_every: 0,
        budget_targets: budget,
        points,
        draw_lengths: Vec::new(),
        skipped_infeasible: 0,
    }
}
