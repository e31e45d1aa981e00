//! End-to-end training and inference: featurize, train a strategy, persist
//! everything needed to predict later.
//!
//! A trained model directory holds:
//!
//! * `model.txt`: the [`LinearModel`];
//! * `vocabulary.txt`: the fitted [`Vocabulary`] (text input only);
//! * `train_report.tsv`: settings and per-label solver diagnostics;
//! * `timing.tsv`: wall-clock featurization and training time.
//!
//! Everything except `timing.tsv` is a deterministic function of the data
//! and the configuration.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use crate::corpus::{load_corpus, merge_train_validation, CorpusPaths, Dataset, Document, Format, TaskKind};
use crate::error::{Error, Result};
use crate::features::{fit_vocabulary, transform_tfidf, SparseMatrix, StopWords, TokenizerConfig, Vocabulary, VocabularyLimits};
use crate::linear::SolverParams;
use crate::metrics::{evaluate, EvalOptions, EvalReport};
use crate::strategies::{train_strategy, LinearModel, Strategy, StrategyFit, TuningConfig};

pub const MODEL_FILE: &str = "model.txt";
pub const VOCABULARY_FILE: &str = "vocabulary.txt";
pub const TRAIN_REPORT_FILE: &str = "train_report.tsv";
pub const TIMING_FILE: &str = "timing.tsv";

/// Everything a training run needs.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub train_path: Option<PathBuf>,
    pub valid_path: Option<PathBuf>,
    pub test_path: Option<PathBuf>,
    pub output_dir: Option<PathBuf>,
    pub format: Format,
    /// `None` infers the task kind from the training labels.
    pub task_kind: Option<TaskKind>,
    pub strategy: Strategy,
    pub tokenizer: TokenizerConfig,
    pub limits: VocabularyLimits,
    pub solver: SolverParams,
    pub tuning: TuningConfig,
    pub include_validation: bool,
    pub unlabeled_extension: bool,
    pub seed: u64,
    pub threads: Option<usize>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            train_path: None,
            valid_path: None,
            test_path: None,
            output_dir: None,
            format: Format::Tsv,
            task_kind: None,
            strategy: Strategy::OneVsRest,
            tokenizer: TokenizerConfig::default(),
            limits: VocabularyLimits::default(),
            solver: SolverParams::default(),
            tuning: TuningConfig::default(),
            include_validation: true,
            unlabeled_extension: false,
            seed: 1,
            threads: None,
        }
    }
}

fn parse_bool(key: &str, v: &str) -> Result<bool> {
    match v {
        "true" | "1" | "yes" | "on" => Ok(true),
        "false" | "0" | "no" | "off" => Ok(false),
        _ => Err(Error::Config(format!("{key}: expected a boolean, got {v:?}"))),
    }
}

fn parse_num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
    v.trim()
        .parse()
        .map_err(|_| Error::Config(format!("{key}: invalid value {v:?}")))
}

fn parse_list<T: std::str::FromStr>(key: &str, v: &str) -> Result<Vec<T>> {
    v.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse_num(key, s))
        .collect()
}

/// Parses `key = value` lines. Blank lines and lines starting with `#` are
/// skipped.
pub fn parse_config_file(text: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("config line {}: expected `key = value`", i + 1)))?;
        out.push((k.trim().to_string(), v.trim().to_string()));
    }
    Ok(out)
}

impl RunConfig {
    /// Config from a file's pairs followed by override pairs; later pairs win.
    pub fn from_pairs<'a, I>(pairs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (&'a str, &'a str)>,
    {
        let mut cfg = RunConfig::default();
        for (k, v) in pairs {
            cfg.set(k, v)?;
        }
        Ok(cfg)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        match key.replace('-', "_").as_str() {
            "train" => self.train_path = Some(v.into()),
            "valid" | "validation" => self.valid_path = Some(v.into()),
            "test" => self.test_path = Some(v.into()),
            "output" | "output_dir" | "model" => self.output_dir = Some(v.into()),
            "format" => self.format = v.parse()?,
            "task" | "task_kind" => {
                self.task_kind = match v {
                    "auto" => None,
                    other => Some(other.parse()?),
                }
            }
            "strategy" => self.strategy = v.parse()?,
            "lowercase" => self.tokenizer.lowercase = parse_bool(key, v)?,
            "min_token_len" => self.tokenizer.min_token_len = parse_num(key, v)?,
            "stop_words" => {
                self.tokenizer.stop_words = match v {
                    "none" | "" => StopWords::None,
                    "english" => StopWords::English,
                    list => StopWords::Custom(list.split(',').map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect()),
                }
            }
            "ngram_range" => {
                let r: Vec<usize> = parse_list(key, v)?;
                match r[..] {
                    [lo, hi] => self.tokenizer.ngram_range = (lo, hi),
                    _ => return Err(Error::Config(format!("{key}: expected `lo,hi`, got {v:?}"))),
                }
            }
            "min_df" => self.limits.min_df = parse_num(key, v)?,
            "max_features" => {
                self.limits.max_features = match v {
                    "none" => None,
                    s => Some(parse_num(key, s)?),
                }
            }
            "c" => self.solver.c = parse_num(key, v)?,
            "loss" => self.solver.loss = v.parse()?,
            "tol" => self.solver.tol = parse_num(key, v)?,
            "max_iter" => self.solver.max_iter = parse_num(key, v)?,
            "n_folds" | "folds" => self.tuning.n_folds = parse_num(key, v)?,
            "target" | "target_metric" => self.tuning.target = v.parse()?,
            "cost_grid" => self.tuning.cost_grid = parse_list(key, v)?,
            "include_validation" => self.include_validation = parse_bool(key, v)?,
            "unlabeled_extension" => self.unlabeled_extension = parse_bool(key, v)?,
            "seed" => self.seed = parse_num(key, v)?,
            "threads" => self.threads = Some(parse_num(key, v)?),
            _ => return Err(Error::Config(format!("unknown config key {key:?}"))),
        }
        Ok(())
    }

    /// Checks every setting the chosen strategy will use.
    pub fn validate(&self) -> Result<()> {
        self.tokenizer.validate()?;
        if self.limits.min_df < 1 {
            return Err(Error::Config("min_df must be at least 1".into()));
        }
        if self.limits.max_features == Some(0) {
            return Err(Error::Config("max_features must be positive".into()));
        }
        self.solver_params().validate()?;
        if self.strategy != Strategy::OneVsRest {
            self.tuning_config().validate()?;
        }
        if self.threads == Some(0) {
            return Err(Error::Config("threads must be at least 1".into()));
        }
        Ok(())
    }

    /// Solver settings with the run seed applied.
    pub fn solver_params(&self) -> SolverParams {
        SolverParams {
            seed: self.seed,
            ..self.solver
        }
    }

    pub fn tuning_config(&self) -> TuningConfig {
        TuningConfig {
            seed: self.seed,
            ..self.tuning.clone()
        }
    }

    pub fn load_dataset(&self) -> Result<Dataset> {
        let train = self
            .train_path
            .clone()
            .ok_or_else(|| Error::Config("no training file given".into()))?;
        load_corpus(
            &CorpusPaths {
                train,
                validation: self.valid_path.clone(),
                test: self.test_path.clone(),
            },
            self.format,
            self.task_kind,
        )
    }
}

/// Label-index sets for documents; labels missing from `labels` are an
/// error.
pub fn label_indices(docs: &[Document], labels: &[String]) -> Result<Vec<Vec<usize>>> {
    let index: BTreeMap<&str, usize> = labels.iter().enumerate().map(|(i, l)| (l.as_str(), i)).collect();
    docs.iter()
        .map(|d| {
            d.labels
                .iter()
                .map(|l| {
                    index.get(l.as_str()).copied().ok_or_else(|| Error::UnknownLabel {
                        label: l.clone(),
                        split: "evaluation".into(),
                    })
                })
                .collect()
        })
        .collect()
}

fn precomputed_matrix(docs: &[Document], n_cols: Option<usize>) -> Result<SparseMatrix> {
    fn feats(d: &Document) -> Result<&Vec<(usize, f64)>> {
        d.features
            .as_ref()
            .ok_or_else(|| Error::Data(format!("document {:?} has no pre-computed features", d.id)))
    }
    let width = match n_cols {
        Some(n) => n,
        None => {
            let mut w = 0;
            for d in docs {
                w = w.max(feats(d)?.last().map_or(0, |&(j, _)| j + 1));
            }
            w
        }
    };
    let mut m = SparseMatrix::new(width);
    for d in docs {
        m.push_row(feats(d)?.iter().copied().filter(|&(j, _)| j < width).collect())?;
    }
    Ok(m)
}

/// Featurizer state carried by a trained model.
#[derive(Debug, Clone, PartialEq)]
pub enum Featurizer {
    Tfidf(Vocabulary),
    /// svmlight input; features beyond the training width are ignored.
    Precomputed { n_features: usize },
}

impl Featurizer {
    pub fn transform(&self, docs: &[Document]) -> Result<SparseMatrix> {
        match self {
            Featurizer::Tfidf(v) => {
                let texts: Vec<&str> = docs.iter().map(|d| d.text.as_str()).collect();
                Ok(transform_tfidf(&texts, v))
            }
            Featurizer::Precomputed { n_features } => precomputed_matrix(docs, Some(*n_features)),
        }
    }

    pub fn vocabulary(&self) -> Option<&Vocabulary> {
        match self {
            Featurizer::Tfidf(v) => Some(v),
            Featurizer::Precomputed { .. } => None,
        }
    }
}

/// Fits the featurizer on training documents and returns their matrix.
pub fn fit_featurizer(train: &[Document], format: Format, cfg: &RunConfig) -> Result<(Featurizer, SparseMatrix)> {
    match format {
        Format::Tsv => {
            let texts: Vec<&str> = train.iter().map(|d| d.text.as_str()).collect();
            let vocab = fit_vocabulary(&texts, &cfg.tokenizer, cfg.limits)?;
            let x = transform_tfidf(&texts, &vocab);
            Ok((Featurizer::Tfidf(vocab), x))
        }
        Format::Svmlight => {
            let x = precomputed_matrix(train, None)?;
            Ok((Featurizer::Precomputed { n_features: x.n_cols() }, x))
        }
    }
}

#[derive(Debug, Clone)]
pub struct TrainedPipeline {
    pub featurizer: Featurizer,
    pub fit: StrategyFit,
    pub n_train_documents: usize,
    pub featurize_seconds: f64,
    pub train_seconds: f64,
}

/// Featurizes the training split (merged with validation when
/// `include_validation` is set) and trains the configured strategy.
pub fn train_pipeline(cfg: &RunConfig, dataset: &Dataset) -> Result<TrainedPipeline> {
    cfg.validate()?;
    let data = if cfg.include_validation {
        merge_train_validation(dataset.clone())
    } else {
        dataset.clone()
    };
    if data.train.is_empty() {
        return Err(Error::Data("training split is empty".into()));
    }
    let labels: Vec<String> = data.labels().into_iter().collect();
    let y = label_indices(&data.train, &labels)?;

    let started = Instant::now();
    let (featurizer, x) = fit_featurizer(&data.train, cfg.format, cfg)?;
    let featurize_seconds = started.elapsed().as_secs_f64();

    let started = Instant::now();
    let fit = train_strategy(
        &x,
        &y,
        &labels,
        data.task_kind,
        cfg.strategy,
        &cfg.solver_params(),
        &cfg.tuning_config(),
    )?;
    let train_seconds = started.elapsed().as_secs_f64();
    Ok(TrainedPipeline {
        featurizer,
        fit,
        n_train_documents: data.train.len(),
        featurize_seconds,
        train_seconds,
    })
}

impl TrainedPipeline {
    pub fn model(&self) -> &LinearModel {
        &self.fit.fit.model
    }

    pub fn predictor(&self) -> Predictor {
        Predictor {
            featurizer: self.featurizer.clone(),
            model: self.model().clone(),
            train_seconds: Some(self.train_seconds),
        }
    }

    /// Deterministic summary of settings and solver diagnostics.
    pub fn train_report(&self, cfg: &RunConfig) -> String {
        let m = self.model();
        let mut s = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(s, "{k}\t{v}");
        };
        kv("strategy", self.fit.strategy.to_string());
        kv("task_kind", m.task_kind().as_str().into());
        kv("n_train_documents", self.n_train_documents.to_string());
        kv("n_features", m.n_features().to_string());
        kv("n_labels", m.n_labels().to_string());
        kv("parameter_count", m.parameter_count().to_string());
        kv("include_validation", cfg.include_validation.to_string());
        kv("tokenizer", cfg.tokenizer.canonical());
        kv("min_df", cfg.limits.min_df.to_string());
        kv(
            "max_features",
            cfg.limits.max_features.map_or("none".into(), |k| k.to_string()),
        );
        kv("c", format!("{:e}", cfg.solver.c));
        kv("loss", cfg.solver.loss.to_string());
        kv("tol", format!("{:e}", cfg.solver.tol));
        kv("max_iter", cfg.solver.max_iter.to_string());
        kv("seed", cfg.seed.to_string());
        if self.fit.strategy != Strategy::OneVsRest {
            kv("n_folds", cfg.tuning.n_folds.to_string());
            kv("target", cfg.tuning.target.as_str().into());
            let grid: Vec<String> = cfg.tuning.cost_grid.iter().map(|g| format!("{g}")).collect();
            kv("cost_grid", grid.join(","));
        }
        if let Some(t) = &self.fit.thresholds {
            kv("cv_score", format!("{:.6}", t.cv_score));
        }
        let reports = &self.fit.fit.reports;
        kv(
            "converged_labels",
            format!("{}/{}", reports.iter().filter(|r| r.converged).count(), reports.len()),
        );
        for (l, r) in reports.iter().enumerate() {
            kv(
                &format!("label:{}", m.labels()[l]),
                format!(
                    "epochs={} relative_gap={:e} converged={} delta={:e} positive_weight={:e}",
                    r.epochs,
                    r.relative_gap,
                    r.converged,
                    m.thresholds()[l],
                    m.positive_weights()[l]
                ),
            );
        }
        s
    }

    /// Writes the model directory.
    pub fn save(&self, dir: &Path, cfg: &RunConfig) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        self.model().save(&dir.join(MODEL_FILE))?;
        let vocab_path = dir.join(VOCABULARY_FILE);
        match &self.featurizer {
            Featurizer::Tfidf(v) => v.save(&vocab_path)?,
            Featurizer::Precomputed { .. } => {
                if vocab_path.exists() {
                    std::fs::remove_file(&vocab_path).map_err(|e| Error::io(&vocab_path, e))?;
                }
            }
        }
        write_file(&dir.join(TRAIN_REPORT_FILE), &self.train_report(cfg))?;
        write_file(
            &dir.join(TIMING_FILE),
            &format!(
                "featurize_seconds\t{:.3}\ntrain_seconds\t{:.3}\n",
                self.featurize_seconds, self.train_seconds
            ),
        )
    }
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).map_err(|e| Error::io(path, e))
}

/// A model loaded for inference.
#[derive(Debug, Clone)]
pub struct Predictor {
    pub featurizer: Featurizer,
    pub model: LinearModel,
    pub train_seconds: Option<f64>,
}

impl Predictor {
    pub fn load(dir: &Path) -> Result<Self> {
        let model = LinearModel::load(&dir.join(MODEL_FILE))?;
        let vocab_path = dir.join(VOCABULARY_FILE);
        let featurizer = if vocab_path.exists() {
            let v = Vocabulary::load(&vocab_path)?;
            if v.len() != model.n_features() {
                return Err(Error::DimensionMismatch {
                    expected: model.n_features(),
                    found: v.len(),
                });
            }
            Featurizer::Tfidf(v)
        } else {
            Featurizer::Precomputed {
                n_features: model.n_features(),
            }
        };
        let train_seconds = std::fs::read_to_string(dir.join(TIMING_FILE)).ok().and_then(|t| {
            t.lines()
                .find_map(|l| l.strip_prefix("train_seconds\t"))
                .and_then(|v| v.parse().ok())
        });
        Ok(Predictor {
            featurizer,
            model,
            train_seconds,
        })
    }

    pub fn expected_format(&self) -> Format {
        match self.featurizer {
            Featurizer::Tfidf(_) => Format::Tsv,
            Featurizer::Precomputed { .. } => Format::Svmlight,
        }
    }

    pub fn predict(&self, docs: &[Document]) -> Result<Vec<Vec<usize>>> {
        let x = self.featurizer.transform(docs)?;
        self.model.predict(&x)
    }

    pub fn predict_names(&self, docs: &[Document]) -> Result<Vec<Vec<String>>> {
        let labels = self.model.labels();
        Ok(self
            .predict(docs)?
            .into_iter()
            .map(|set| set.into_iter().map(|l| labels[l].clone()).collect())
            .collect())
    }

    pub fn evaluate(&self, docs: &[Document], opts: EvalOptions) -> Result<EvalReport> {
        let truth = label_indices(docs, self.model.labels())?;
        let x = self.featurizer.transform(docs)?;
        let mut report = evaluate(&self.model, &x, &truth, opts)?;
        report.train_seconds = self.train_seconds;
        Ok(report)
    }
}

/// `id<TAB>label1 label2` lines.
pub fn format_predictions(docs: &[Document], predictions: &[Vec<String>]) -> String {
    let mut s = String::new();
    for (d, p) in docs.iter().zip(predictions) {
        let _ = writeln!(s, "{}\t{}", d.id, p.join(" "));
    }
    s
}
