// Scratch calibration for the convergence comparison. Not part of the
// test suite; run with `cargo run --release --example calib`.

use std::time::Instant;

use rayon::prelude::*;
use shortfirst::dataset::{generate_corpus, CorpusSpec};
use shortfirst::harness::{run_with_corpora, ExperimentConfig, RunResult, Strategy};
use shortfirst::model::ModelConfig;

fn main() {
    let spec = CorpusSpec::default();
    let (train, valid) = generate_corpus(&spec).unwrap();
    println!(
        "corpus: {} lines / {} chars train",
        train.len(),
        train.total_target_chars()
    );

    let seeds = [101u64, 102, 103, 104, 105, 106, 107, 108, 109, 110];
    let mut jobs = Vec::new();
    for &seed in &seeds {
        for strategy in [Strategy::Baseline, Strategy::Curriculum] {
            jobs.push((seed, strategy));
        }
    }

    let t0 = Instant::now();
    let results: Vec<(u64, Strategy, RunResult)> = jobs
        .par_iter()
        .map(|&(seed, strategy)| {
            let config = ExperimentConfig {
                model: ModelConfig {
                    alphabet_size: spec.alphabet_size,
                    ..ModelConfig::default()
                },
                total_epochs: 1,
                decay_epochs: 5,
                eval_every_targets: 2_500,
                seed,
                ..ExperimentConfig::new(strategy)
            };
            let result = run_with_corpora(&config, &train, &valid, None).unwrap();
            (seed, strategy, result)
        })
        .collect();
    println!("10 runs in {:.1}s", t0.elapsed().as_secs_f64());

    let mut ratios = Vec::new();
    for &seed in &seeds {
        let get = |s: Strategy| {
            results
                .iter()
                .find(|(sd, st, _)| *sd == seed && *st == s)
                .map(|(_, _, r)| r)
                .unwrap()
        };
        let base = get(Strategy::Baseline).first_reaching_norm_nll(1.0);
        let curr = get(Strategy::Curriculum).first_reaching_norm_nll(1.0);
        println!("seed {seed}: baseline {base:?}  curriculum {curr:?}");
        if let (Some(b), Some(c)) = (base, curr) {
            let r = c as f64 / b as f64;
            println!("  ratio {r:.3}  curriculum_first={}", c < b);
            ratios.push(r);
        }
    }
    ratios.sort_by(|a, b| a.partial_cmp(b).unwrap());
    println!("ratios: {ratios:?}");
    if !ratios.is_empty() {
        println!("median: {:.3}", ratios[ratios.len() / 2]);
    }
}
