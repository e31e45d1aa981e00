use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use lintext::corpus::{corpus_stats, load_corpus_dir, load_split, Dataset, Format, TaskKind};
use lintext::features::{Tokenizer, TokenizerConfig};
use lintext::metrics::EvalOptions;
use lintext::pipeline::{format_predictions, parse_config_file, train_pipeline, Predictor, RunConfig};
use lintext::ErrorKind;

const EXIT_CONFIG: u8 = 2;
const EXIT_DATA: u8 = 3;
const EXIT_NUMERIC: u8 = 4;

/// TF-IDF + linear SVM text classification.
///
/// Exit codes: 0 success, 2 configuration error, 3 data error, 4 numeric
/// error.
#[derive(Parser)]
#[command(name = "lintext", version)]
struct Cli {
    /// Worker threads for per-label training (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a model and write it to a directory.
    Train(Box<TrainArgs>),
    /// Predict label sets for a file of documents.
    Predict(PredictArgs),
    /// Score a trained model on a labeled file.
    Eval(EvalArgs),
    /// Length statistics for a corpus.
    Stats(StatsArgs),
}

#[derive(Args)]
struct TrainArgs {
    /// `key = value` settings; command-line flags override them.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    train: Option<String>,
    #[arg(long)]
    valid: Option<String>,
    /// Labeled test file; when given, the trained model is scored on it.
    #[arg(long)]
    test: Option<String>,
    /// Model directory to write.
    #[arg(long)]
    output: Option<String>,
    /// tsv or svmlight
    #[arg(long)]
    format: Option<String>,
    /// auto, multi-class or multi-label
    #[arg(long)]
    task: Option<String>,
    /// one-vs-rest, thresholding or cost-sensitive
    #[arg(long)]
    strategy: Option<String>,
    #[arg(long)]
    c: Option<String>,
    /// squared-hinge or hinge
    #[arg(long)]
    loss: Option<String>,
    #[arg(long)]
    tol: Option<String>,
    #[arg(long)]
    max_iter: Option<String>,
    /// none, english, or a comma-separated list
    #[arg(long)]
    stop_words: Option<String>,
    /// `lo,hi`
    #[arg(long)]
    ngram_range: Option<String>,
    #[arg(long)]
    min_df: Option<String>,
    #[arg(long)]
    max_features: Option<String>,
    #[arg(long)]
    n_folds: Option<String>,
    /// macro_f1 or micro_f1
    #[arg(long)]
    target: Option<String>,
    /// Comma-separated positive-row weights, ascending.
    #[arg(long)]
    cost_grid: Option<String>,
    #[arg(long)]
    include_validation: Option<String>,
    #[arg(long)]
    unlabeled_extension: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    /// Any other setting as `key=value`; may be repeated.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    extra: Vec<String>,
}

impl TrainArgs {
    fn overrides(&self) -> Vec<(&'static str, &str)> {
        let flags = [
            ("train", &self.train),
            ("valid", &self.valid),
            ("test", &self.test),
            ("output", &self.output),
            ("format", &self.format),
            ("task", &self.task),
            ("strategy", &self.strategy),
            ("c", &self.c),
            ("loss", &self.loss),
            ("tol", &self.tol),
            ("max_iter", &self.max_iter),
            ("stop_words", &self.stop_words),
            ("ngram_range", &self.ngram_range),
            ("min_df", &self.min_df),
            ("max_features", &self.max_features),
            ("n_folds", &self.n_folds),
            ("target", &self.target),
            ("cost_grid", &self.cost_grid),
            ("include_validation", &self.include_validation),
            ("unlabeled_extension", &self.unlabeled_extension),
            ("seed", &self.seed),
        ];
        flags
            .into_iter()
            .filter_map(|(k, v)| v.as_deref().map(|v| (k, v)))
            .collect()
    }
}

#[derive(Args)]
struct PredictArgs {
    /// Model directory written by `train`.
    #[arg(long)]
    model: PathBuf,
    /// Documents in the model's input format; labels, if any, are ignored.
    #[arg(long)]
    input: PathBuf,
    /// Output file (default: stdout).
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    test: PathBuf,
    /// Score empty label sets as an extra "unlabeled" class.
    #[arg(long)]
    unlabeled_extension: bool,
    #[arg(long)]
    json: bool,
    /// Output file (default: stdout).
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct StatsArgs {
    /// A corpus directory (train/valid/test files) or a single split file.
    #[arg(long)]
    data: PathBuf,
    /// Token budget to count documents against.
    #[arg(long, default_value_t = 512)]
    budget: usize,
    #[arg(long, default_value = "tsv")]
    format: String,
    #[arg(long)]
    json: bool,
}

/// An error tagged with the stage it happened in.
struct Failure {
    stage: &'static str,
    error: anyhow::Error,
}

trait Stage<T> {
    fn stage(self, stage: &'static str) -> Result<T, Failure>;
}

impl<T, E: Into<anyhow::Error>> Stage<T> for Result<T, E> {
    fn stage(self, stage: &'static str) -> Result<T, Failure> {
        self.map_err(|e| Failure {
            stage,
            error: e.into(),
        })
    }
}

fn exit_code(error: &anyhow::Error) -> u8 {
    match error.downcast_ref::<lintext::Error>().map(lintext::Error::kind) {
        Some(ErrorKind::Config) => EXIT_CONFIG,
        Some(ErrorKind::Numeric) => EXIT_NUMERIC,
        Some(ErrorKind::Data) | None => EXIT_DATA,
    }
}

fn write_output(path: Option<&Path>, text: &str) -> anyhow::Result<()> {
    match path {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())?;
            out.flush()?;
            Ok(())
        }
    }
}

fn train(args: TrainArgs, threads: Option<usize>) -> Result<(), Failure> {
    let mut pairs: Vec<(String, String)> = Vec::new();
    if let Some(path) = &args.config {
        let text = fs::read_to_string(path)
            .map_err(|e| lintext::Error::Config(format!("cannot read {}: {e}", path.display())))
            .stage("config")?;
        pairs.extend(parse_config_file(&text).stage("config")?);
    }
    for kv in &args.extra {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| lintext::Error::Config(format!("--set expects KEY=VALUE, got {kv:?}")))
            .stage("config")?;
        pairs.push((k.trim().into(), v.trim().into()));
    }
    pairs.extend(args.overrides().into_iter().map(|(k, v)| (k.to_string(), v.to_string())));
    let mut cfg = RunConfig::from_pairs(pairs.iter().map(|(k, v)| (k.as_str(), v.as_str()))).stage("config")?;
    if threads.is_some() {
        cfg.threads = threads;
    }
    cfg.validate().stage("config")?;
    let output = cfg
        .output_dir
        .clone()
        .ok_or_else(|| lintext::Error::Config("no output directory (--output)".into()))
        .stage("config")?;
    install_threads(cfg.threads)?;

    let dataset = cfg.load_dataset().stage("load")?;
    log::info!(
        "loaded {} train, {} validation, {} test documents ({}, {} labels)",
        dataset.train.len(),
        dataset.validation.len(),
        dataset.test.len(),
        dataset.task_kind.as_str(),
        dataset.labels().len()
    );
    let trained = train_pipeline(&cfg, &dataset).stage("train")?;
    log::info!(
        "trained {} in {:.2}s ({} features)",
        trained.fit.strategy,
        trained.train_seconds,
        trained.model().n_features()
    );
    trained.save(&output, &cfg).stage("save")?;

    if !dataset.test.is_empty() {
        let report = trained
            .predictor()
            .evaluate(
                &dataset.test,
                EvalOptions {
                    unlabeled_extension: cfg.unlabeled_extension,
                },
            )
            .stage("eval")?;
        write_output(None, &report.to_tsv()).stage("eval")?;
    }
    Ok(())
}

fn install_threads(threads: Option<usize>) -> Result<(), Failure> {
    if let Some(n) = threads {
        if n == 0 {
            return Err(lintext::Error::Config("--threads must be at least 1".into())).stage("config");
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .stage("config")?;
    }
    Ok(())
}

fn predict(args: PredictArgs) -> Result<(), Failure> {
    let predictor = Predictor::load(&args.model).stage("load model")?;
    let docs = load_split(&args.input, predictor.expected_format()).stage("load input")?;
    let started = Instant::now();
    let names = predictor.predict_names(&docs).stage("predict")?;
    log::info!("predicted {} documents in {:.2}s", docs.len(), started.elapsed().as_secs_f64());
    write_output(args.output.as_deref(), &format_predictions(&docs, &names)).stage("write")
}

fn eval(args: EvalArgs) -> Result<(), Failure> {
    let predictor = Predictor::load(&args.model).stage("load model")?;
    let docs = load_split(&args.test, predictor.expected_format()).stage("load test")?;
    let report = predictor
        .evaluate(
            &docs,
            EvalOptions {
                unlabeled_extension: args.unlabeled_extension,
            },
        )
        .stage("eval")?;
    let text = if args.json {
        report.to_json() + "\n"
    } else {
        report.to_tsv()
    };
    write_output(args.output.as_deref(), &text).stage("write")
}

fn stats(args: StatsArgs) -> Result<(), Failure> {
    let format: Format = args.format.parse().stage("config")?;
    let tokenizer = Tokenizer::new(TokenizerConfig::default()).stage("config")?;
    let dataset = if args.data.is_dir() {
        load_corpus_dir(&args.data, format, None)
    } else {
        load_split(&args.data, format).and_then(|docs| Dataset::new(docs, vec![], vec![], TaskKind::MultiLabel))
    }
    .stage("load")?;
    if dataset.all_documents().next().is_none() {
        log::warn!("{} contains no documents", args.data.display());
    }
    let s = corpus_stats(&dataset, &tokenizer, args.budget).stage("stats")?;
    let text = if args.json {
        serde_json::to_string(&s).expect("stats serialize") + "\n"
    } else {
        format!(
            "n_train\t{}\nn_validation\t{}\nn_test\t{}\nn_labels\t{}\nmean_words\t{:.2}\nmax_words\t{}\n\
             budget\t{}\nn_over_budget\t{}\nfraction_over_budget\t{:.4}\n",
            s.n_train,
            s.n_validation,
            s.n_test,
            s.n_labels,
            s.mean_words,
            s.max_words,
            s.budget,
            s.n_over_budget,
            s.fraction_over_budget
        )
    };
    write_output(None, &text).stage("write")
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Train(a) => train(*a, cli.threads),
        other => install_threads(cli.threads).and_then(|()| match other {
            Command::Predict(a) => predict(a),
            Command::Eval(a) => eval(a),
            Command::Stats(a) => stats(a),
            Command::Train(_) => unreachable!(),
        }),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("lintext: {} failed: {:#}", f.stage, f.error);
            ExitCode::from(exit_code(&f.error))
        }
    }
}
