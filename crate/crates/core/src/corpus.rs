//! Datasets of labelled documents: loading, validation, merging and length
//! auditing.
//!
//! Two on-disk formats are understood, both UTF-8 with LF line endings:
//!
//! * `tsv`: `label1 label2<TAB>text`. An empty label field marks an
//!   unlabeled document. Everything after the first tab is the text.
//! * `svmlight`: `label1,label2 idx:val idx:val ...` with 1-based feature
//!   indices. Lines whose first field contains `:` have no labels. These
//!   documents carry pre-computed features and skip TF-IDF.

use std::collections::{BTreeSet, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::features::Tokenizer;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum TaskKind {
    MultiClass,
    MultiLabel,
}

impl TaskKind {
    pub fn as_str(self) -> &'static str {
        match self {
            TaskKind::MultiClass => "multi-class",
            TaskKind::MultiLabel => "multi-label",
        }
    }
}

impl FromStr for TaskKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "multi-class" | "multiclass" | "multi_class" => Ok(TaskKind::MultiClass),
            "multi-label" | "multilabel" | "multi_label" => Ok(TaskKind::MultiLabel),
            _ => Err(Error::Config(format!("unknown task kind {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Tsv,
    Svmlight,
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tsv" => Ok(Format::Tsv),
            "svmlight" | "svm" | "libsvm" => Ok(Format::Svmlight),
            _ => Err(Error::Config(format!("unknown data format {s:?}"))),
        }
    }
}

impl Format {
    fn extension(self) -> &'static str {
        match self {
            Format::Tsv => "tsv",
            Format::Svmlight => "svm",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Document {
    pub id: String,
    pub text: String,
    pub labels: BTreeSet<String>,
    /// Pre-computed `(column, value)` features, 0-based, for svmlight input.
    pub features: Option<Vec<(usize, f64)>>,
}

impl Document {
    pub fn new<I, S>(id: impl Into<String>, labels: I, text: impl Into<String>) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Document {
            id: id.into(),
            text: text.into(),
            labels: labels.into_iter().map(Into::into).collect(),
            features: None,
        }
    }

    pub fn is_unlabeled(&self) -> bool {
        self.labels.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub train: Vec<Document>,
    pub validation: Vec<Document>,
    pub test: Vec<Document>,
    pub task_kind: TaskKind,
}

impl Dataset {
    /// Validates and assembles a dataset.
    ///
    /// Rejects duplicate ids within a split, multi-class training documents
    /// without exactly one label, and evaluation labels absent from training.
    pub fn new(
        train: Vec<Document>,
        validation: Vec<Document>,
        test: Vec<Document>,
        task_kind: TaskKind,
    ) -> Result<Self> {
        let d = Dataset {
            train,
            validation,
            test,
            task_kind,
        };
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, split) in self.splits() {
            let mut seen = HashSet::new();
            for doc in split {
                if !seen.insert(doc.id.as_str()) {
                    return Err(Error::DuplicateId {
                        id: doc.id.clone(),
                        split: name.to_string(),
                    });
                }
            }
        }
        if self.task_kind == TaskKind::MultiClass {
            if let Some(doc) = self.train.iter().find(|d| d.labels.len() != 1) {
                return Err(Error::Data(format!(
                    "multi-class training document {:?} has {} labels",
                    doc.id,
                    doc.labels.len()
                )));
            }
        }
        let universe = self.labels();
        for (name, split) in [("validation", &self.validation), ("test", &self.test)] {
            for doc in split {
                if let Some(l) = doc.labels.iter().find(|l| !universe.contains(*l)) {
                    return Err(Error::UnknownLabel {
                        label: l.clone(),
                        split: name.to_string(),
                    });
                }
            }
        }
        Ok(())
    }

    fn splits(&self) -> [(&'static str, &Vec<Document>); 3] {
        [
            ("train", &self.train),
            ("validation", &self.validation),
            ("test", &self.test),
        ]
    }

    /// Label universe: every label seen in the training split, sorted.
    pub fn labels(&self) -> BTreeSet<String> {
        self.train
            .iter()
            .flat_map(|d| d.labels.iter().cloned())
            .collect()
    }

    pub fn all_documents(&self) -> impl Iterator<Item = &Document> {
        self.train.iter().chain(&self.validation).chain(&self.test)
    }
}

/// Detects the task kind from training labels: multi-class when every
/// training document has exactly one label.
pub fn infer_task_kind(train: &[Document]) -> TaskKind {
    if !train.is_empty() && train.iter().all(|d| d.labels.len() == 1) {
        TaskKind::MultiClass
    } else {
        TaskKind::MultiLabel
    }
}

/// Reads one split file. Document ids are 1-based line numbers.
pub fn load_split(path: &Path, format: Format) -> Result<Vec<Document>> {
    let f = File::open(path).map_err(|e| Error::io(path, e))?;
    read_split(BufReader::new(f), path, format)
}

pub fn read_split<R: BufRead>(reader: R, path: &Path, format: Format) -> Result<Vec<Document>> {
    let mut docs = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let no = i + 1;
        let line = line.map_err(|e| Error::parse(path, no, e.to_string()))?;
        let doc = match format {
            Format::Tsv => parse_tsv_line(&line),
            Format::Svmlight => parse_svmlight_line(&line),
        }
        .map_err(|m| Error::parse(path, no, m))?;
        if let Some(&(col, value)) = doc.features.iter().flatten().find(|(_, v)| !v.is_finite()) {
            return Err(Error::NonFinite { row: i, col, value });
        }
        docs.push(Document {
            id: no.to_string(),
            ..doc
        });
    }
    Ok(docs)
}

fn parse_tsv_line(line: &str) -> std::result::Result<Document, String> {
    let (labels, text) = line
        .split_once('\t')
        .ok_or_else(|| "missing tab between labels and text".to_string())?;
    Ok(Document::new(String::new(), labels.split_whitespace(), text))
}

fn parse_svmlight_line(line: &str) -> std::result::Result<Document, String> {
    let mut fields = line.split_ascii_whitespace().peekable();
    let mut labels = BTreeSet::new();
    if let Some(first) = fields.peek() {
        if !first.contains(':') {
            labels = first
                .split(',')
                .filter(|l| !l.is_empty())
                .map(str::to_owned)
                .collect();
            fields.next();
        }
    }
    let mut features = Vec::new();
    for field in fields {
        let (idx, val) = field
            .split_once(':')
            .ok_or_else(|| format!("feature {field:?} is not index:value"))?;
        let idx: usize = idx
            .parse()
            .map_err(|_| format!("invalid feature index {idx:?}"))?;
        if idx == 0 {
            return Err("feature indices are 1-based".into());
        }
        let val: f64 = val
            .parse()
            .map_err(|_| format!("invalid feature value {val:?}"))?;
        features.push((idx - 1, val));
    }
    features.sort_by_key(|&(j, _)| j);
    if features.windows(2).any(|w| w[0].0 == w[1].0) {
        return Err("duplicate feature index".into());
    }
    Ok(Document {
        id: String::new(),
        text: String::new(),
        labels,
        features: Some(features),
    })
}

/// Writes documents in the given format. Text must not contain tabs or
/// newlines for the tsv output to load back identically.
pub fn write_split<W: Write>(mut w: W, docs: &[Document], format: Format) -> std::io::Result<()> {
    for d in docs {
        match format {
            Format::Tsv => {
                let labels: Vec<&str> = d.labels.iter().map(String::as_str).collect();
                writeln!(w, "{}\t{}", labels.join(" "), d.text)?;
            }
            Format::Svmlight => {
                let labels: Vec<&str> = d.labels.iter().map(String::as_str).collect();
                write!(w, "{}", labels.join(","))?;
                for (j, v) in d.features.iter().flatten() {
                    write!(w, " {}:{}", j + 1, v)?;
                }
                writeln!(w)?;
            }
        }
    }
    Ok(())
}

/// Paths of the split files inside a corpus directory.
#[derive(Debug, Clone)]
pub struct CorpusPaths {
    pub train: PathBuf,
    pub validation: Option<PathBuf>,
    pub test: Option<PathBuf>,
}

impl CorpusPaths {
    /// `train.<ext>`, `valid.<ext>` and `test.<ext>` inside `dir`, where
    /// `<ext>` is `tsv` or `svm`. Only the training file is required.
    pub fn in_dir(dir: &Path, format: Format) -> Self {
        let file = |stem: &str| dir.join(format!("{stem}.{}", format.extension()));
        let optional = |p: PathBuf| p.exists().then_some(p);
        CorpusPaths {
            train: file("train"),
            validation: optional(file("valid")),
            test: optional(file("test")),
        }
    }
}

/// Loads and validates a dataset. `task_kind = None` infers it from the
/// training labels.
pub fn load_corpus(paths: &CorpusPaths, format: Format, task_kind: Option<TaskKind>) -> Result<Dataset> {
    let train = load_split(&paths.train, format)?;
    let load_opt = |p: &Option<PathBuf>| match p {
        Some(p) => load_split(p, format),
        None => Ok(Vec::new()),
    };
    let validation = load_opt(&paths.validation)?;
    let test = load_opt(&paths.test)?;
    let kind = task_kind.unwrap_or_else(|| infer_task_kind(&train));
    Dataset::new(train, validation, test, kind)
}

/// Loads a corpus directory laid out as described in [`CorpusPaths::in_dir`].
pub fn load_corpus_dir(dir: &Path, format: Format, task_kind: Option<TaskKind>) -> Result<Dataset> {
    load_corpus(&CorpusPaths::in_dir(dir, format), format, task_kind)
}

/// Moves the validation documents to the end of the training split.
/// Validation ids are prefixed with `valid:` to stay unique.
pub fn merge_train_validation(d: Dataset) -> Dataset {
    let Dataset {
        mut train,
        validation,
        test,
        task_kind,
    } = d;
    train.extend(validation.into_iter().map(|doc| Document {
        id: format!("valid:{}", doc.id),
        ..doc
    }));
    Dataset {
        train,
        validation: Vec::new(),
        test,
        task_kind,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorpusStats {
    pub n_train: usize,
    pub n_validation: usize,
    pub n_test: usize,
    pub n_labels: usize,
    pub mean_words: f64,
    pub max_words: usize,
    pub budget: usize,
    pub n_over_budget: usize,
    pub fraction_over_budget: f64,
}

pub fn word_count(text: &str) -> usize {
    text.split_ascii_whitespace().count()
}

/// Length statistics over all splits. Words are ASCII-whitespace separated;
/// the budget is checked against the tokenizer's token count.
pub fn corpus_stats(d: &Dataset, tokenizer: &Tokenizer, budget: usize) -> Result<CorpusStats> {
    if budget < 1 {
        return Err(Error::Config("token budget must be at least 1".into()));
    }
    let mut n = 0usize;
    let mut total_words = 0usize;
    let mut max_words = 0usize;
    let mut over = 0usize;
    for doc in d.all_documents() {
        let w = word_count(&doc.text);
        n += 1;
        total_words += w;
        max_words = max_words.max(w);
        if tokenizer.tokens(&doc.text).len() > budget {
            over += 1;
        }
    }
    let frac = |k: usize| if n == 0 { 0.0 } else { k as f64 / n as f64 };
    Ok(CorpusStats {
        n_train: d.train.len(),
        n_validation: d.validation.len(),
        n_test: d.test.len(),
        n_labels: d.labels().len(),
        mean_words: frac(total_words),
        max_words,
        budget,
        n_over_budget: over,
        fraction_over_budget: frac(over),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Segmentation {
    pub segments: Vec<Vec<String>>,
    pub dropped: usize,
}

/// Splits a token stream into consecutive chunks of at most `max_tokens`,
/// keeping at most `max_segments` chunks and dropping the rest.
pub fn segment_tokens(tokens: Vec<String>, max_tokens: usize, max_segments: usize) -> Result<Segmentation> {
    if max_tokens < 1 || max_segments < 1 {
        return Err(Error::Config("max_tokens and max_segments must be at least 1".into()));
    }
    let total = tokens.len();
    let keep = total.min(max_tokens.saturating_mul(max_segments));
    let mut segments = Vec::new();
    let mut it = tokens.into_iter().take(keep).peekable();
    while it.peek().is_some() {
        segments.push(it.by_ref().take(max_tokens).collect());
    }
    Ok(Segmentation {
        segments,
        dropped: total - keep,
    })
}

pub fn segment_document(
    doc: &Document,
    tokenizer: &Tokenizer,
    max_tokens: usize,
    max_segments: usize,
) -> Result<Segmentation> {
    segment_tokens(tokenizer.tokens(&doc.text), max_tokens, max_segments)
}
