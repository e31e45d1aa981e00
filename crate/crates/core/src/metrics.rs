//! Micro-F1 and Macro-F1 over label sets.
//!
//! Label sets are slices of label indices. Per-label F1 is
//! `2TP / (2TP + FP + FN)` with `0/0 = 0`.

use std::fmt::Write as _;
use std::time::Instant;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::features::SparseMatrix;
use crate::strategies::LinearModel;

/// Name of the extra class given to rows with an empty label set.
pub const UNLABELED: &str = "<unlabeled>";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfusionCounts {
    pub tp: Vec<u64>,
    pub fp: Vec<u64>,
    pub fn_: Vec<u64>,
}

pub fn f1_score(tp: u64, fp: u64, fn_: u64) -> f64 {
    let denom = 2 * tp + fp + fn_;
    if denom == 0 {
        0.0
    } else {
        (2 * tp) as f64 / denom as f64
    }
}

impl ConfusionCounts {
    pub fn zeros(n_labels: usize) -> Self {
        ConfusionCounts {
            tp: vec![0; n_labels],
            fp: vec![0; n_labels],
            fn_: vec![0; n_labels],
        }
    }

    pub fn n_labels(&self) -> usize {
        self.tp.len()
    }

    pub fn per_label_f1(&self) -> Vec<f64> {
        (0..self.n_labels())
            .map(|l| f1_score(self.tp[l], self.fp[l], self.fn_[l]))
            .collect()
    }

    /// Counts restricted to the given labels, in the given order.
    pub fn subset(&self, labels: &[usize]) -> ConfusionCounts {
        ConfusionCounts {
            tp: labels.iter().map(|&l| self.tp[l]).collect(),
            fp: labels.iter().map(|&l| self.fp[l]).collect(),
            fn_: labels.iter().map(|&l| self.fn_[l]).collect(),
        }
    }
}

/// Per-label TP/FP/FN. Every index in `truth` and `pred` must be below
/// `n_labels`; duplicate indices within a set are counted once.
pub fn confusion_counts(truth: &[Vec<usize>], pred: &[Vec<usize>], n_labels: usize) -> ConfusionCounts {
    assert_eq!(truth.len(), pred.len(), "truth and prediction row counts differ");
    let mut c = ConfusionCounts::zeros(n_labels);
    let mut in_truth = vec![false; n_labels];
    let mut in_pred = vec![false; n_labels];
    for (t, p) in truth.iter().zip(pred) {
        for &l in t {
            in_truth[l] = true;
        }
        for &l in p {
            in_pred[l] = true;
        }
        for &l in t.iter().chain(p) {
            match (in_truth[l], in_pred[l]) {
                (true, true) => c.tp[l] += 1,
                (false, true) => c.fp[l] += 1,
                (true, false) => c.fn_[l] += 1,
                (false, false) => continue,
            }
            // count each label once per row
            in_truth[l] = false;
            in_pred[l] = false;
        }
    }
    c
}

pub fn micro_f1(c: &ConfusionCounts) -> f64 {
    f1_score(c.tp.iter().sum(), c.fp.iter().sum(), c.fn_.iter().sum())
}

/// Mean per-label F1; 0 for an empty label set.
pub fn macro_f1(c: &ConfusionCounts) -> f64 {
    if c.n_labels() == 0 {
        return 0.0;
    }
    c.per_label_f1().iter().sum::<f64>() / c.n_labels() as f64
}

/// Label sets with the extra unlabeled class appended at index
/// `labels.len() - 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct Extended {
    pub labels: Vec<String>,
    pub truth: Vec<Vec<usize>>,
    pub pred: Vec<Vec<usize>>,
}

impl Extended {
    pub fn unlabeled_index(&self) -> usize {
        self.labels.len() - 1
    }
}

/// Rows with an empty truth set get truth `{U}`; rows with an empty
/// prediction get prediction `{U}`; other rows are unchanged.
pub fn apply_unlabeled_extension(
    labels: &[String],
    truth: &[Vec<usize>],
    pred: &[Vec<usize>],
) -> Result<Extended> {
    if labels.iter().any(|l| l == UNLABELED) {
        return Err(Error::Config(format!(
            "label name {UNLABELED:?} is reserved for the unlabeled class"
        )));
    }
    let u = labels.len();
    let fill = |sets: &[Vec<usize>]| {
        sets.iter()
            .map(|s| if s.is_empty() { vec![u] } else { s.clone() })
            .collect()
    };
    let mut labels = labels.to_vec();
    labels.push(UNLABELED.to_string());
    Ok(Extended {
        labels,
        truth: fill(truth),
        pred: fill(pred),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct EvalOptions {
    pub unlabeled_extension: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LabelScore {
    pub label: String,
    pub f1: f64,
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub n_documents: usize,
    pub n_labels: usize,
    pub micro_f1: f64,
    pub macro_f1: f64,
    pub unlabeled_extension: bool,
    pub parameter_count: usize,
    pub train_seconds: Option<f64>,
    pub predict_seconds: f64,
    pub per_label: Vec<LabelScore>,
}

impl EvalReport {
    /// Scores the given predictions. With the extension on, the unlabeled
    /// class joins the Macro-F1 average only if it occurs in the truth or
    /// the predictions.
    pub fn from_predictions(
        labels: &[String],
        truth: &[Vec<usize>],
        pred: &[Vec<usize>],
        opts: EvalOptions,
    ) -> Result<Self> {
        let (labels, counts) = if opts.unlabeled_extension {
            let ext = apply_unlabeled_extension(labels, truth, pred)?;
            let counts = confusion_counts(&ext.truth, &ext.pred, ext.labels.len());
            let u = ext.unlabeled_index();
            if counts.tp[u] + counts.fp[u] + counts.fn_[u] == 0 {
                let keep: Vec<usize> = (0..u).collect();
                (ext.labels[..u].to_vec(), counts.subset(&keep))
            } else {
                (ext.labels, counts)
            }
        } else {
            (labels.to_vec(), confusion_counts(truth, pred, labels.len()))
        };
        let f1 = counts.per_label_f1();
        let per_label = labels
            .iter()
            .enumerate()
            .map(|(l, name)| LabelScore {
                label: name.clone(),
                f1: f1[l],
                tp: counts.tp[l],
                fp: counts.fp[l],
                fn_: counts.fn_[l],
            })
            .collect();
        Ok(EvalReport {
            n_documents: truth.len(),
            n_labels: labels.len(),
            micro_f1: micro_f1(&counts),
            macro_f1: macro_f1(&counts),
            unlabeled_extension: opts.unlabeled_extension,
            parameter_count: 0,
            train_seconds: None,
            predict_seconds: 0.0,
            per_label,
        })
    }

    /// `key<TAB>value` lines, per-label scores last.
    pub fn to_tsv(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "n_documents\t{}", self.n_documents);
        let _ = writeln!(s, "n_labels\t{}", self.n_labels);
        let _ = writeln!(s, "micro_f1\t{:.6}", self.micro_f1);
        let _ = writeln!(s, "macro_f1\t{:.6}", self.macro_f1);
        let _ = writeln!(s, "unlabeled_extension\t{}", self.unlabeled_extension);
        let _ = writeln!(s, "parameter_count\t{}", self.parameter_count);
        match self.train_seconds {
            Some(t) => {
                let _ = writeln!(s, "train_seconds\t{t:.3}");
            }
            None => {
                let _ = writeln!(s, "train_seconds\tNA");
            }
        }
        let _ = writeln!(s, "predict_seconds\t{:.3}", self.predict_seconds);
        for l in &self.per_label {
            let _ = writeln!(s, "f1:{}\t{:.6}", l.label, l.f1);
        }
        s
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Predicts with `model` and scores against `truth`.
pub fn evaluate(
    model: &LinearModel,
    x: &SparseMatrix,
    truth: &[Vec<usize>],
    opts: EvalOptions,
) -> Result<EvalReport> {
    if truth.len() != x.n_rows() {
        return Err(Error::DimensionMismatch {
            expected: x.n_rows(),
            found: truth.len(),
        });
    }
    let started = Instant::now();
    let pred = model.predict(x)?;
    let predict_seconds = started.elapsed().as_secs_f64();
    let mut report = EvalReport::from_predictions(model.labels(), truth, &pred, opts)?;
    report.parameter_count = model.parameter_count();
    report.predict_seconds = predict_seconds;
    Ok(report)
}
