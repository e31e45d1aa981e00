//! Uni-gram (or n-gram) TF-IDF featurization.
//!
//! Weights are raw term counts times the smoothed inverse document frequency
//! `ln((1 + N) / (1 + df)) + 1`, and every nonzero row is scaled to unit L2
//! norm.

mod sparse;
mod tokenizer;

use std::collections::{BTreeSet, HashMap};
use std::fmt::Write as _;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub use sparse::{SparseMatrix, SparseRow};
pub use tokenizer::{english_stop_words, StopWords, Tokenizer, TokenizerConfig};

const VOCAB_MAGIC: &str = "lintext-vocabulary";
const VOCAB_VERSION: u32 = 1;

/// Term filtering applied when fitting.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VocabularyLimits {
    pub min_df: usize,
    pub max_features: Option<usize>,
}

impl Default for VocabularyLimits {
    fn default() -> Self {
        VocabularyLimits {
            min_df: 1,
            max_features: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Vocabulary {
    terms: Vec<String>,
    index: HashMap<String, usize>,
    df: Vec<usize>,
    idf: Vec<f64>,
    n_documents: usize,
    limits: VocabularyLimits,
    tokenizer: Tokenizer,
}

// Tokenizer holds only its config.
impl PartialEq for Tokenizer {
    fn eq(&self, other: &Self) -> bool {
        self.config() == other.config()
    }
}

pub fn smoothed_idf(n_documents: usize, df: usize) -> f64 {
    ((1.0 + n_documents as f64) / (1.0 + df as f64)).ln() + 1.0
}

/// Fits the term index and IDF weights on training text.
pub fn fit_vocabulary<S: AsRef<str> + Sync>(
    train_texts: &[S],
    cfg: &TokenizerConfig,
    limits: VocabularyLimits,
) -> Result<Vocabulary> {
    if train_texts.is_empty() {
        return Err(Error::Data("cannot fit a vocabulary on zero documents".into()));
    }
    if limits.min_df < 1 {
        return Err(Error::Config("min_df must be at least 1".into()));
    }
    if limits.max_features == Some(0) {
        return Err(Error::Config("max_features must be positive".into()));
    }
    let tokenizer = Tokenizer::new(cfg.clone())?;

    let per_doc: Vec<HashMap<String, usize>> = train_texts
        .par_iter()
        .map(|t| {
            let mut counts = HashMap::new();
            for term in tokenizer.terms(t.as_ref()) {
                *counts.entry(term).or_insert(0) += 1;
            }
            counts
        })
        .collect();

    // term -> (df, total count)
    let mut stats: HashMap<String, (usize, usize)> = HashMap::new();
    for counts in per_doc {
        for (term, c) in counts {
            let e = stats.entry(term).or_insert((0, 0));
            e.0 += 1;
            e.1 += c;
        }
    }
    if stats.is_empty() {
        return Err(Error::EmptyVocabulary);
    }

    let mut kept: Vec<(String, usize, usize)> = stats
        .into_iter()
        .filter(|(_, (df, _))| *df >= limits.min_df)
        .map(|(t, (df, tf))| (t, df, tf))
        .collect();
    if let Some(k) = limits.max_features {
        kept.sort_by(|a, b| b.2.cmp(&a.2).then_with(|| a.0.cmp(&b.0)));
        kept.truncate(k);
    }
    if kept.is_empty() {
        return Err(Error::EmptyVocabulary);
    }
    kept.sort_by(|a, b| a.0.cmp(&b.0));

    let n = train_texts.len();
    let mut terms = Vec::with_capacity(kept.len());
    let mut df = Vec::with_capacity(kept.len());
    for (t, d, _) in kept {
        terms.push(t);
        df.push(d);
    }
    let idf = df.iter().map(|&d| smoothed_idf(n, d)).collect();
    Ok(Vocabulary::assemble(terms, df, idf, n, limits, tokenizer))
}

impl Vocabulary {
    fn assemble(
        terms: Vec<String>,
        df: Vec<usize>,
        idf: Vec<f64>,
        n_documents: usize,
        limits: VocabularyLimits,
        tokenizer: Tokenizer,
    ) -> Self {
        let index = terms
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i))
            .collect();
        Vocabulary {
            terms,
            index,
            df,
            idf,
            n_documents,
            limits,
            tokenizer,
        }
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    pub fn index_of(&self, term: &str) -> Option<usize> {
        self.index.get(term).copied()
    }

    pub fn document_frequencies(&self) -> &[usize] {
        &self.df
    }

    pub fn idf(&self) -> &[f64] {
        &self.idf
    }

    pub fn n_documents(&self) -> usize {
        self.n_documents
    }

    pub fn limits(&self) -> VocabularyLimits {
        self.limits
    }

    pub fn tokenizer(&self) -> &Tokenizer {
        &self.tokenizer
    }

    /// Short hex digest of the tokenizer config and limits.
    pub fn config_hash(&self) -> String {
        let descr = format!(
            "{};min_df={};max_features={}",
            self.tokenizer.config().canonical(),
            self.limits.min_df,
            self.limits
                .max_features
                .map_or_else(|| "none".to_string(), |k| k.to_string())
        );
        hex::encode(&Sha256::digest(descr.as_bytes())[..8])
    }

    /// Raw term counts of one document over retained terms, sorted by column.
    pub fn term_counts(&self, text: &str) -> Vec<(usize, usize)> {
        let mut counts: HashMap<usize, usize> = HashMap::new();
        for term in self.tokenizer.terms(text) {
            if let Some(&j) = self.index.get(&term) {
                *counts.entry(j).or_insert(0) += 1;
            }
        }
        let mut v: Vec<(usize, usize)> = counts.into_iter().collect();
        v.sort_unstable_by_key(|&(j, _)| j);
        v
    }

    fn tfidf_row(&self, text: &str) -> Vec<(usize, f64)> {
        let mut row: Vec<(usize, f64)> = self
            .term_counts(text)
            .into_iter()
            .map(|(j, c)| (j, c as f64 * self.idf[j]))
            .collect();
        let norm = row.iter().map(|(_, v)| v * v).sum::<f64>().sqrt();
        if norm > 0.0 {
            row.iter_mut().for_each(|(_, v)| *v /= norm);
        }
        row
    }

    /// Writes the vocabulary in its versioned text format.
    pub fn write_to<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let cfg = self.tokenizer.config();
        writeln!(w, "{VOCAB_MAGIC}\t{VOCAB_VERSION}")?;
        writeln!(w, "n_documents\t{}", self.n_documents)?;
        writeln!(w, "config_hash\t{}", self.config_hash())?;
        writeln!(w, "lowercase\t{}", cfg.lowercase)?;
        writeln!(w, "min_token_len\t{}", cfg.min_token_len)?;
        writeln!(w, "ngram_range\t{} {}", cfg.ngram_range.0, cfg.ngram_range.1)?;
        match &cfg.stop_words {
            StopWords::None => writeln!(w, "stop_words\tnone")?,
            StopWords::English => writeln!(w, "stop_words\tenglish")?,
            StopWords::Custom(set) => {
                let mut line = String::from("stop_words\tcustom");
                for s in set {
                    let _ = write!(line, " {s}");
                }
                writeln!(w, "{line}")?
            }
        }
        writeln!(w, "min_df\t{}", self.limits.min_df)?;
        match self.limits.max_features {
            Some(k) => writeln!(w, "max_features\t{k}")?,
            None => writeln!(w, "max_features\tnone")?,
        }
        writeln!(w, "n_terms\t{}", self.terms.len())?;
        for (j, t) in self.terms.iter().enumerate() {
            writeln!(w, "{t}\t{j}\t{}\t{:e}", self.df[j], self.idf[j])?;
        }
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = std::io::BufWriter::new(f);
        self.write_to(&mut w)
            .and_then(|_| w.flush())
            .map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_from(BufReader::new(f), path)
    }

    pub fn read_from<R: BufRead>(r: R, path: &Path) -> Result<Self> {
        let mut lines = r.lines().enumerate();
        let mut next = |what: &str| -> Result<(usize, String)> {
            match lines.next() {
                Some((i, Ok(l))) => Ok((i + 1, l)),
                Some((i, Err(e))) => Err(Error::parse(path, i + 1, e.to_string())),
                None => Err(Error::parse(path, 0, format!("unexpected end of file, expected {what}"))),
            }
        };
        let header = |what: &'static str, line: (usize, String)| -> Result<(usize, String)> {
            let (no, l) = line;
            match l.split_once('\t') {
                Some((k, v)) if k == what => Ok((no, v.to_string())),
                _ => Err(Error::parse(path, no, format!("expected header field {what:?}"))),
            }
        };
        fn num<T: std::str::FromStr>(path: &Path, no: usize, v: &str) -> Result<T> {
            v.trim()
                .parse()
                .map_err(|_| Error::parse(path, no, format!("invalid number {v:?}")))
        }

        let (no, version) = header(VOCAB_MAGIC, next("magic")?)?;
        if num::<u32>(path, no, &version)? != VOCAB_VERSION {
            return Err(Error::parse(path, no, format!("unsupported vocabulary version {version}")));
        }
        let (no, v) = header("n_documents", next("n_documents")?)?;
        let n_documents: usize = num(path, no, &v)?;
        let (hash_no, stored_hash) = header("config_hash", next("config_hash")?)?;
        let (no, v) = header("lowercase", next("lowercase")?)?;
        let lowercase: bool = num(path, no, &v)?;
        let (no, v) = header("min_token_len", next("min_token_len")?)?;
        let min_token_len: usize = num(path, no, &v)?;
        let (no, v) = header("ngram_range", next("ngram_range")?)?;
        let ngram_range = match v.split_once(' ') {
            Some((a, b)) => (num(path, no, a)?, num(path, no, b)?),
            None => return Err(Error::parse(path, no, "ngram_range needs two integers")),
        };
        let (no, v) = header("stop_words", next("stop_words")?)?;
        let stop_words = match v.as_str() {
            "none" => StopWords::None,
            "english" => StopWords::English,
            s if s.starts_with("custom") => StopWords::Custom(
                s["custom".len()..]
                    .split_whitespace()
                    .map(str::to_owned)
                    .collect::<BTreeSet<_>>(),
            ),
            _ => return Err(Error::parse(path, no, format!("unknown stop_words {v:?}"))),
        };
        let (no, v) = header("min_df", next("min_df")?)?;
        let min_df: usize = num(path, no, &v)?;
        let (no, v) = header("max_features", next("max_features")?)?;
        let max_features = match v.as_str() {
            "none" => None,
            s => Some(num(path, no, s)?),
        };
        let (no, v) = header("n_terms", next("n_terms")?)?;
        let n_terms: usize = num(path, no, &v)?;

        let mut terms = Vec::with_capacity(n_terms);
        let mut df = Vec::with_capacity(n_terms);
        let mut idf = Vec::with_capacity(n_terms);
        for j in 0..n_terms {
            let (no, l) = next("term line")?;
            let fields: Vec<&str> = l.split('\t').collect();
            if fields.len() != 4 {
                return Err(Error::parse(path, no, "term line needs 4 tab-separated fields"));
            }
            if num::<usize>(path, no, fields[1])? != j {
                return Err(Error::parse(path, no, "term indices must be dense and ordered"));
            }
            terms.push(fields[0].to_string());
            df.push(num(path, no, fields[2])?);
            idf.push(num(path, no, fields[3])?);
        }

        let tokenizer = Tokenizer::new(TokenizerConfig {
            lowercase,
            min_token_len,
            stop_words,
            ngram_range,
        })?;
        let vocab = Vocabulary::assemble(
            terms,
            df,
            idf,
            n_documents,
            VocabularyLimits { min_df, max_features },
            tokenizer,
        );
        if vocab.config_hash() != stored_hash {
            return Err(Error::parse(path, hash_no, "config hash does not match stored settings"));
        }
        Ok(vocab)
    }
}

/// TF-IDF rows for `texts` over the fitted vocabulary. Unseen terms are
/// ignored; documents without known terms become empty rows.
pub fn transform_tfidf<S: AsRef<str> + Sync>(texts: &[S], vocab: &Vocabulary) -> SparseMatrix {
    let rows: Vec<Vec<(usize, f64)>> = texts
        .par_iter()
        .map(|t| vocab.tfidf_row(t.as_ref()))
        .collect();
    SparseMatrix::from_rows(vocab.len(), rows).expect("tf-idf rows are well formed")
}
