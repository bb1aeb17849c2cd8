//! Command-line front end: corpus generation, training, and log comparison.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use shortfirst::dataset::{generate_corpus, save_corpus, split_into_words, CorpusSpec};
use shortfirst::harness::{
    compare_strategies, load_csv, result_from_points, run_with_corpora, ExperimentConfig, Strategy,
};
use shortfirst::model::ModelConfig;
use shortfirst::Result;

#[derive(Parser)]
#[command(
    name = "shortfirst",
    about = "Length-curriculum training for CTC sequence recognition",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic corpus: train and validation line files, plus an
    /// optional isolated-word file split from the training lines.
    Generate(GenerateArgs),
    /// Train one strategy and write its convergence log as CSV.
    Train(TrainArgs),
    /// Compare convergence logs: best costs, threshold crossings, speedups.
    Compare(CompareArgs),
}

#[derive(Args)]
struct GenerateArgs {
    /// Where to write the training lines.
    #[arg(long)]
    train: PathBuf,
    /// Where to write the validation lines.
    #[arg(long)]
    valid: PathBuf,
    /// Optionally write the training lines split into isolated words here.
    #[arg(long)]
    words: Option<PathBuf>,
    #[arg(long, default_value_t = 10_000)]
    lines: usize,
    #[arg(long, default_value_t = 1_000)]
    valid_lines: usize,
    /// Character labels including the space separator.
    #[arg(long, default_value_t = 20)]
    alphabet_size: usize,
    #[arg(long, default_value_t = 16)]
    input_dim: usize,
    #[arg(long, default_value_t = 0.3)]
    noise_sigma: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum StrategyArg {
    Baseline,
    Curriculum,
    #[value(name = "by-hand", alias = "by_hand")]
    ByHand,
}

impl From<StrategyArg> for Strategy {
    fn from(value: StrategyArg) -> Self {
        match value {
            StrategyArg::Baseline => Strategy::Baseline,
            StrategyArg::Curriculum => Strategy::Curriculum,
            StrategyArg::ByHand => Strategy::ByHand,
        }
    }
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long, value_enum)]
    strategy: StrategyArg,
    /// Training line corpus.
    #[arg(long)]
    train: PathBuf,
    /// Validation line corpus.
    #[arg(long)]
    valid: PathBuf,
    /// Word corpus; required by --strategy by-hand.
    #[arg(long)]
    words: Option<PathBuf>,
    /// CSV destination for the convergence log.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 3.0)]
    lambda_start: f64,
    /// Lambda reaches 0 after this many training-set equivalents.
    #[arg(long, default_value_t = 5)]
    decay_epochs: u32,
    #[arg(long, default_value_t = 5)]
    m_min: usize,
    #[arg(long, default_value_t = 0.001)]
    lr: f64,
    /// Training budget in training-set equivalents of browsed targets.
    #[arg(long, default_value_t = 5)]
    epochs: u32,
    /// Evaluate every this many browsed target characters.
    #[arg(long, default_value_t = 50_000)]
    eval_every: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 32)]
    hidden_dim: usize,
}

#[derive(Args)]
struct CompareArgs {
    /// Baseline convergence log.
    #[arg(long)]
    baseline: PathBuf,
    /// Curriculum convergence log.
    #[arg(long)]
    curriculum: Option<PathBuf>,
    /// By-hand convergence log.
    #[arg(long)]
    by_hand: Option<PathBuf>,
    /// Validation normNLL threshold for the time-to-reach comparison.
    #[arg(long, default_value_t = 1.0)]
    threshold: f64,
}

fn generate(args: GenerateArgs) -> Result<()> {
    let spec = CorpusSpec {
        alphabet_size: args.alphabet_size,
        input_dim: args.input_dim,
        n_train_lines: args.lines,
        n_valid_lines: args.valid_lines,
        noise_sigma: args.noise_sigma,
        seed: args.seed,
        ..CorpusSpec::default()
    };
    let (train, valid) = generate_corpus(&spec)?;
    save_corpus(&train, &args.train)?;
    println!(
        "wrote {} training lines ({} target chars) to {}",
        train.len(),
        train.total_target_chars(),
        args.train.display()
    );
    save_corpus(&valid, &args.valid)?;
    println!(
        "wrote {} validation lines ({} target chars) to {}",
        valid.len(),
        valid.total_target_chars(),
        args.valid.display()
    );
    if let Some(words_path) = args.words {
        let words = split_into_words(&train)?;
        save_corpus(&words, &words_path)?;
        println!(
            "wrote {} word samples ({} target chars) to {}",
            words.len(),
            words.total_target_chars(),
            words_path.display()
        );
    }
    Ok(())
}

fn train(args: TrainArgs) -> Result<()> {
    let train = shortfirst::dataset::load_corpus(&args.train)?;
    let valid = shortfirst::dataset::load_corpus(&args.valid)?;
    let words = match &args.words {
        Some(path) => Some(shortfirst::dataset::load_corpus(path)?),
        None => None,
    };

    // The corpus fixes the alphabet and frame width.
    let model = ModelConfig {
        input_dim: train.input_dim,
        hidden_dim: args.hidden_dim,
        alphabet_size: train.alphabet_size,
        learning_rate: args.lr,
        ..ModelConfig::default()
    };

    let config = ExperimentConfig {
        lambda_start: args.lambda_start,
        decay_epochs: args.decay_epochs,
        m_min: args.m_min,
        model,
        train_path: args.train,
        valid_path: args.valid,
        words_path: args.words,
        total_epochs: args.epochs,
        eval_every_targets: args.eval_every,
        seed: args.seed,
        out: Some(args.out.clone()),
        ..ExperimentConfig::new(args.strategy.into())
    };

    let result = run_with_corpora(&config, &train, &valid, words.as_ref())?;
    println!(
        "{}: {} evaluation points over {} browsed targets ({} updates)",
        result.strategy,
        result.points.len(),
        result.browsed_total(),
        result.points.last().map_or(0, |p| p.updates),
    );
    if let Some((v, at)) = result.best_valid_norm_nll() {
        println!("best valid normNLL {v:.4} at {at} browsed targets");
    }
    if let Some((v, at)) = result.best_valid_cer() {
        println!("best valid CER {v:.4} at {at} browsed targets");
    }
    if result.skipped_infeasible > 0 {
        println!("skipped {} infeasible samples", result.skipped_infeasible);
    }
    println!("log written to {}", args.out.display());
    Ok(())
}

fn compare(args: CompareArgs) -> Result<()> {
    let mut results = vec![result_from_points(
        Strategy::Baseline,
        load_csv(&args.baseline)?,
    )];
    if let Some(path) = &args.curriculum {
        results.push(result_from_points(Strategy::Curriculum, load_csv(path)?));
    }
    if let Some(path) = &args.by_hand {
        results.push(result_from_points(Strategy::ByHand, load_csv(path)?));
    }
    let refs: Vec<&_> = results.iter().collect();
    let comparison = compare_strategies(&refs, args.threshold)?;
    print!("{comparison}");
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Generate(args) => generate(args),
        Command::Train(args) => train(args),
        Command::Compare(args) => compare(args),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
