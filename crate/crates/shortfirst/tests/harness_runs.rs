//! End-to-end harness behaviour on small corpora: determinism, accounting,
//! the by-hand switch rule, and failure handling.

mod common;

use std::path::PathBuf;

use shortfirst::dataset::{
    generate_corpus, split_into_words, Corpus, CorpusSpec, FrameMatrix, Sample, WordSpan,
};
use shortfirst::error::Error;
use shortfirst::harness::{
    run_with_corpora, ExperimentConfig, Phase, RunResult, Strategy,
};
use shortfirst::model::{ModelConfig, ModelState};

fn small_corpora() -> (CorpusSpec, Corpus, Corpus, Corpus) {
    let spec = CorpusSpec {
        n_train_lines: 60,
        n_valid_lines: 12,
        long_line_len: (8, 30),
        seed: 17,
        ..CorpusSpec::default()
    };
    let (train, valid) = generate_corpus(&spec).unwrap();
    let words = split_into_words(&train).unwrap();
    (spec, train, valid, words)
}

fn small_config(strategy: Strategy, spec: &CorpusSpec) -> ExperimentConfig {
    ExperimentConfig {
        model: ModelConfig {
            alphabet_size: spec.alphabet_size,
            hidden_dim: 8,
            ..ModelConfig::default()
        },
        total_epochs: 2,
        eval_every_targets: 500,
        seed: 5,
        ..ExperimentConfig::new(strategy)
    }
}

fn check_log_invariants(result: &RunResult) {
    assert!(result.points.len() >= 2);
    // Strictly increasing browsed targets, first point before training.
    assert_eq!(result.points[0].browsed_targets, 0);
    assert!(result.points[0].train_norm_nll.is_nan());
    for pair in result.points.windows(2) {
        assert!(pair[0].browsed_targets < pair[1].browsed_targets);
        assert!(pair[0].updates < pair[1].updates);
    }
    for p in &result.points {
        assert!(p.valid_norm_nll.is_finite());
        assert!(p.valid_cer.is_finite());
    }
    // Accounting: browsed targets equals the summed length of drawn samples.
    let drawn: u64 = result.draw_lengths.iter().map(|&l| l as u64).sum();
    assert_eq!(result.browsed_total(), drawn);
    assert!(result.browsed_total() >= result.budget_targets);
    // Best-so-far validation cost never worsens.
    let mut best = f64::INFINITY;
    let mut bests = Vec::new();
    for p in &result.points {
        best = best.min(p.valid_norm_nll);
        bests.push(best);
    }
    assert!(bests.windows(2).all(|w| w[1] <= w[0]));
}

#[test]
fn all_strategies_run_and_log() {
    let (spec, train, valid, words) = small_corpora();
    for strategy in [Strategy::Baseline, Strategy::Curriculum, Strategy::ByHand] {
        let config = small_config(strategy, &spec);
        let result = run_with_corpora(&config, &train, &valid, Some(&words)).unwrap();
        assert_eq!(result.strategy, strategy);
        check_log_invariants(&result);
        match strategy {
            Strategy::Baseline => {
                assert!(result.points.iter().all(|p| p.lambda == 0.0));
                assert!(result
                    .points
                    .iter()
                    .all(|p| p.phase == Phase::NotApplicable));
            }
            Strategy::Curriculum => {
                assert_eq!(result.points[0].lambda, 3.0);
                let lambdas: Vec<f64> = result.points.iter().map(|p| p.lambda).collect();
                assert!(lambdas.windows(2).all(|w| w[1] <= w[0]));
            }
            Strategy::ByHand => {
                assert!(result.points.iter().all(|p| p.phase != Phase::NotApplicable));
            }
        }
    }
}

#[test]
fn baseline_epoch_accounting_is_exact() {
    // One epoch without replacement browses every line exactly once, so
    // the final browsed count equals the corpus total exactly.
    let (spec, train, valid, _) = small_corpora();
    let mut config = small_config(Strategy::Baseline, &spec);
    config.total_epochs = 1;
    let result = run_with_corpora(&config, &train, &valid, None).unwrap();
    assert_eq!(result.browsed_total(), train.total_target_chars());
    assert_eq!(result.draw_lengths.len(), train.len());

    config.total_epochs = 2;
    let result = run_with_corpora(&config, &train, &valid, None).unwrap();
    assert_eq!(result.browsed_total(), 2 * train.total_target_chars());
    assert_eq!(result.draw_lengths.len(), 2 * train.len());
}

#[test]
fn identical_config_and_seed_reproduce_the_csv_byte_for_byte() {
    let (spec, train, valid, _) = small_corpora();
    let dir = tempfile::tempdir().unwrap();
    let mut bytes = Vec::new();
    for name in ["a.csv", "b.csv"] {
        let mut config = small_config(Strategy::Curriculum, &spec);
        config.out = Some(dir.path().join(name));
        let result = run_with_corpora(&config, &train, &valid, None).unwrap();
        check_log_invariants(&result);
        bytes.push(std::fs::read(dir.path().join(name)).unwrap());
    }
    assert_eq!(bytes[0], bytes[1]);
}

#[test]
fn strategies_share_identical_initial_parameters() {
    // The controlled comparison: same config and seed mean the same
    // parameter vector at step zero, whatever the strategy does later.
    let config = ModelConfig::default();
    let a = ModelState::init(config.clone(), 5).unwrap();
    let b = ModelState::init(config, 5).unwrap();
    assert_eq!(a.params(), b.params());
}

#[test]
fn by_hand_switches_after_exactly_two_stale_evaluations() {
    // A learning rate this small cannot move validation cost by min_delta,
    // so the curve is flat and the switch fires at the second evaluation
    // after the initial one.
    let (spec, train, valid, words) = small_corpora();
    let mut config = small_config(Strategy::ByHand, &spec);
    config.model.learning_rate = 1e-12;
    config.total_epochs = 1;
    let result = run_with_corpora(&config, &train, &valid, Some(&words)).unwrap();

    let phases: Vec<Phase> = result.points.iter().map(|p| p.phase).collect();
    assert_eq!(phases[0], Phase::Words, "initial evaluation");
    assert_eq!(phases[1], Phase::Words, "first stale evaluation");
    assert_eq!(phases[2], Phase::Words, "second stale evaluation, switches");
    assert!(phases[3..].iter().all(|&p| p == Phase::Lines));
    assert!(phases.len() > 3, "budget must outlive the switch");
}

#[test]
fn by_hand_never_switches_while_improving() {
    // Real training on this corpus improves validation normNLL at every
    // coarse evaluation early on, so patience never runs out.
    let (spec, train, valid, words) = small_corpora();
    let mut config = small_config(Strategy::ByHand, &spec);
    config.eval_every_targets = 700;
    config.total_epochs = 1;
    let result = run_with_corpora(&config, &train, &valid, Some(&words)).unwrap();
    assert!(
        result.points.iter().all(|p| p.phase == Phase::Words),
        "phases: {:?}",
        result
            .points
            .iter()
            .map(|p| (p.browsed_targets, p.phase, p.valid_norm_nll))
            .collect::<Vec<_>>()
    );
}

#[test]
fn by_hand_requires_a_word_corpus() {
    let (spec, train, valid, _) = small_corpora();
    let config = small_config(Strategy::ByHand, &spec);
    assert!(matches!(
        run_with_corpora(&config, &train, &valid, None),
        Err(Error::Config(_))
    ));
}

#[test]
fn infeasible_samples_are_skipped_with_accounting() {
    let (spec, mut train, valid, _) = small_corpora();
    // One sample whose frame count cannot carry its target.
    let bad = Sample {
        frames: FrameMatrix::new(spec.input_dim, vec![0.0; spec.input_dim * 2]).unwrap(),
        target: vec![0, 1, 2, 3],
        word_boundaries: vec![WordSpan {
            start_label: 0,
            end_label: 4,
            start_frame: 0,
            end_frame: 2,
        }],
    };
    train.samples.insert(0, bad);

    let mut config = small_config(Strategy::Baseline, &spec);
    config.total_epochs = 1;
    let result = run_with_corpora(&config, &train, &valid, None).unwrap();
    // Two epochs' worth of shuffles may both hit it; at least one pass did.
    assert!(result.skipped_infeasible >= 1);
    check_log_invariants(&result);
}

#[test]
fn non_finite_gradient_aborts_with_a_diagnostic_checkpoint() {
    let (spec, mut train, valid, _) = small_corpora();
    // NaN frames (a corrupted corpus) poison the forward activations on
    // the first visit.
    let poisoned = Sample {
        frames: FrameMatrix::new(spec.input_dim, vec![f32::NAN; spec.input_dim * 40]).unwrap(),
        target: vec![0, 1, 2],
        word_boundaries: vec![WordSpan {
            start_label: 0,
            end_label: 3,
            start_frame: 0,
            end_frame: 40,
        }],
    };
    train.samples.insert(0, poisoned);

    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run.csv");
    let mut config = small_config(Strategy::Baseline, &spec);
    config.out = Some(out.clone());
    let err = run_with_corpora(&config, &train, &valid, None).unwrap_err();
    assert!(matches!(err, Error::NonFinite(_)), "got {err:?}");
    assert!(
        out.with_extension("abort.ckpt.json").exists(),
        "diagnostic checkpoint missing"
    );
}

#[test]
fn experiment_config_paths_roundtrip_through_run_experiment() {
    let (spec, train, valid, words) = small_corpora();
    let dir = tempfile::tempdir().unwrap();
    let train_path = dir.path().join("train.jsonl");
    let valid_path = dir.path().join("valid.jsonl");
    let words_path = dir.path().join("words.jsonl");
    shortfirst::dataset::save_corpus(&train, &train_path).unwrap();
    shortfirst::dataset::save_corpus(&valid, &valid_path).unwrap();
    shortfirst::dataset::save_corpus(&words, &words_path).unwrap();

    let out = dir.path().join("log.csv");
    let config = ExperimentConfig {
        train_path,
        valid_path,
        words_path: Some(words_path),
        out: Some(out.clone()),
        total_epochs: 1,
        eval_every_targets: 800,
        ..small_config(Strategy::ByHand, &spec)
    };
    let result = shortfirst::harness::run_experiment(&config).unwrap();
    check_log_invariants(&result);

    let points = shortfirst::harness::load_csv(&out).unwrap();
    assert_eq!(points.len(), result.points.len());
    for (a, b) in points.iter().zip(&result.points) {
        assert_eq!(a.browsed_targets, b.browsed_targets);
        assert_eq!(a.phase, b.phase);
    }
}

#[test]
fn curriculum_draws_shorter_targets_early() {
    // Compare the mean drawn length over the first and last five percent
    // of browsed targets.
    let (spec, train, valid, _) = small_corpora();
    let mut config = small_config(Strategy::Curriculum, &spec);
    config.total_epochs = 3;
    // Make the schedule actually traverse most of its decay within budget.
    config.decay_epochs = 3;
    let result = run_with_corpora(&config, &train, &valid, None).unwrap();

    let browsed_total = result.browsed_total();
    let slice_budget = browsed_total / 20;
    let mut acc = 0u64;
    let mut head = Vec::new();
    let mut tail = Vec::new();
    for &len in &result.draw_lengths {
        if acc < slice_budget {
            head.push(len as f64);
        }
        if acc >= browsed_total - slice_budget {
            tail.push(len as f64);
        }
        acc += len as u64;
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    assert!(
        mean(&head) < mean(&tail),
        "early mean {} vs late mean {}",
        mean(&head),
        mean(&tail)
    );
}

#[test]
fn missing_train_corpus_is_an_io_error() {
    let (spec, _, _, _) = small_corpora();
    let mut config = small_config(Strategy::Baseline, &spec);
    config.train_path = PathBuf::from("/nonexistent/corpus.jsonl");
    config.valid_path = PathBuf::from("/nonexistent/valid.jsonl");
    assert!(matches!(
        shortfirst::harness::run_experiment(&config),
        Err(Error::Io(_))
    ));
}
