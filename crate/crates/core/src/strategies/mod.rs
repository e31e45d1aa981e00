//! Multi-class and multi-label classifiers built from binary linear SVMs.
//!
//! All three strategies train one binary problem per label (positives are
//! the rows carrying that label, everything else is negative, including
//! unlabeled rows). They differ in what they tune by cross-validation:
//!
//! * one-vs-rest: nothing;
//! * thresholding: a per-label offset `Δ_ℓ` added to the decision value;
//! * cost-sensitive: a per-label factor multiplying `C` on positive rows.

mod persist;
mod tuning;

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;

use crate::corpus::TaskKind;
use crate::error::{Error, Result};
use crate::features::SparseMatrix;
use crate::linear::{train_binary, BinaryFit, BinaryProblem, ConvergenceReport, SolverParams, WeightVector};

pub use persist::{read_model, write_model, MODEL_VERSION};
pub use tuning::{
    best_threshold, cross_validated_decision_values, fold_assignment, tune_cost_weights, tune_thresholds,
    CostTuning, TargetMetric, ThresholdChoice, ThresholdTuning, TuningConfig,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Strategy {
    OneVsRest,
    Thresholding,
    CostSensitive,
}

impl Strategy {
    pub fn as_str(self) -> &'static str {
        match self {
            Strategy::OneVsRest => "one-vs-rest",
            Strategy::Thresholding => "thresholding",
            Strategy::CostSensitive => "cost-sensitive",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.replace('_', "-").as_str() {
            "one-vs-rest" | "ovr" => Ok(Strategy::OneVsRest),
            "thresholding" => Ok(Strategy::Thresholding),
            "cost-sensitive" => Ok(Strategy::CostSensitive),
            _ => Err(Error::Config(format!("unknown strategy {s:?}"))),
        }
    }
}

/// One weight vector per label plus the per-label threshold `Δ_ℓ` and the
/// positive-row cost factor it was trained with.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel {
    labels: Vec<String>,
    task_kind: TaskKind,
    n_features: usize,
    weights: Vec<WeightVector>,
    thresholds: Vec<f64>,
    positive_weights: Vec<f64>,
}

impl LinearModel {
    pub fn new(
        labels: Vec<String>,
        task_kind: TaskKind,
        n_features: usize,
        weights: Vec<WeightVector>,
        thresholds: Vec<f64>,
        positive_weights: Vec<f64>,
    ) -> Result<Self> {
        let n = labels.len();
        if weights.len() != n || thresholds.len() != n || positive_weights.len() != n {
            return Err(Error::Data(format!(
                "model has {n} labels but {} weight rows, {} thresholds, {} positive weights",
                weights.len(),
                thresholds.len(),
                positive_weights.len()
            )));
        }
        if let Some(w) = weights.iter().find(|w| w.len() != n_features) {
            return Err(Error::DimensionMismatch {
                expected: n_features,
                found: w.len(),
            });
        }
        if thresholds.iter().chain(&positive_weights).any(|v| !v.is_finite()) {
            return Err(Error::Data("thresholds and positive weights must be finite".into()));
        }
        if let Some(w) = weights.iter().flat_map(|w| &w.0).find(|v| !v.is_finite()) {
            return Err(Error::Data(format!("non-finite model weight {w}")));
        }
        Ok(LinearModel {
            labels,
            task_kind,
            n_features,
            weights,
            thresholds,
            positive_weights,
        })
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn task_kind(&self) -> TaskKind {
        self.task_kind
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn n_labels(&self) -> usize {
        self.labels.len()
    }

    pub fn weights(&self) -> &[WeightVector] {
        &self.weights
    }

    pub fn thresholds(&self) -> &[f64] {
        &self.thresholds
    }

    pub fn positive_weights(&self) -> &[f64] {
        &self.positive_weights
    }

    /// Number of stored parameters: features times labels.
    pub fn parameter_count(&self) -> usize {
        self.n_features * self.n_labels()
    }

    pub fn with_thresholds(mut self, thresholds: Vec<f64>) -> Result<Self> {
        if thresholds.len() != self.n_labels() {
            return Err(Error::DimensionMismatch {
                expected: self.n_labels(),
                found: thresholds.len(),
            });
        }
        if thresholds.iter().any(|t| !t.is_finite()) {
            return Err(Error::Config("thresholds must be finite".into()));
        }
        self.thresholds = thresholds;
        Ok(self)
    }

    fn check_dims(&self, x: &SparseMatrix) -> Result<()> {
        if x.n_cols() != self.n_features {
            return Err(Error::DimensionMismatch {
                expected: self.n_features,
                found: x.n_cols(),
            });
        }
        Ok(())
    }

    /// Decision values `w_ℓᵀx_i`, one row per document, one column per
    /// label. Thresholds are not added.
    pub fn decision_values(&self, x: &SparseMatrix) -> Result<Vec<Vec<f64>>> {
        self.check_dims(x)?;
        Ok((0..x.n_rows())
            .into_par_iter()
            .map(|i| {
                let row = x.row(i);
                self.weights.iter().map(|w| row.dot(&w.0)).collect()
            })
            .collect())
    }

    /// Labels with `w_ℓᵀx + Δ_ℓ > 0`, ascending.
    pub fn predict_multilabel(&self, x: &SparseMatrix) -> Result<Vec<Vec<usize>>> {
        Ok(self
            .decision_values(x)?
            .iter()
            .map(|scores| labels_above_thresholds(scores, &self.thresholds))
            .collect())
    }

    /// Highest-scoring label per row; ties go to the lowest index.
    /// Thresholds are ignored.
    pub fn predict_multiclass(&self, x: &SparseMatrix) -> Result<Vec<usize>> {
        if self.n_labels() == 0 {
            return Err(Error::Data("model has no labels".into()));
        }
        Ok(self.decision_values(x)?.iter().map(|s| argmax(s)).collect())
    }

    /// Predictions following the model's task kind, as label-index sets.
    pub fn predict(&self, x: &SparseMatrix) -> Result<Vec<Vec<usize>>> {
        match self.task_kind {
            TaskKind::MultiLabel => self.predict_multilabel(x),
            TaskKind::MultiClass => Ok(self.predict_multiclass(x)?.into_iter().map(|l| vec![l]).collect()),
        }
    }
}

pub fn labels_above_thresholds(scores: &[f64], thresholds: &[f64]) -> Vec<usize> {
    scores
        .iter()
        .zip(thresholds)
        .enumerate()
        .filter(|(_, (s, t))| *s + *t > 0.0)
        .map(|(l, _)| l)
        .collect()
}

/// Index of the maximum; the first one on ties.
pub fn argmax(scores: &[f64]) -> usize {
    let mut best = 0;
    for (l, &s) in scores.iter().enumerate().skip(1) {
        if s > scores[best] {
            best = l;
        }
    }
    best
}

/// For each label, the rows that carry it.
pub fn positives_per_label(y: &[Vec<usize>], n_labels: usize) -> Result<Vec<Vec<usize>>> {
    let mut pos = vec![Vec::new(); n_labels];
    for (i, set) in y.iter().enumerate() {
        for &l in set {
            if l >= n_labels {
                return Err(Error::Data(format!("row {i} has label index {l} >= {n_labels}")));
            }
            if pos[l].last() != Some(&i) {
                pos[l].push(i);
            }
        }
    }
    Ok(pos)
}

pub(crate) fn train_label(
    x: &SparseMatrix,
    positives: &[usize],
    positive_weight: f64,
    params: &SolverParams,
) -> Result<BinaryFit> {
    let p = BinaryProblem::from_positive_set(x, positives.iter().copied(), params.c, positive_weight, params.loss)?;
    train_binary(&p, params.tol, params.max_iter, params.seed)
}

/// A trained model with one convergence report per label.
#[derive(Debug, Clone)]
pub struct MultiLabelFit {
    pub model: LinearModel,
    pub reports: Vec<ConvergenceReport>,
}

/// Trains every label with its own positive-row weight, in parallel.
pub fn train_per_label(
    x: &SparseMatrix,
    y: &[Vec<usize>],
    labels: &[String],
    task_kind: TaskKind,
    positive_weights: &[f64],
    params: &SolverParams,
) -> Result<MultiLabelFit> {
    if labels.is_empty() {
        return Err(Error::Config("label universe is empty".into()));
    }
    if y.len() != x.n_rows() {
        return Err(Error::DimensionMismatch {
            expected: x.n_rows(),
            found: y.len(),
        });
    }
    assert_eq!(positive_weights.len(), labels.len());
    params.validate()?;
    let positives = positives_per_label(y, labels.len())?;
    for (l, p) in positives.iter().enumerate() {
        if p.is_empty() {
            log::warn!("label {:?} has no positive training rows", labels[l]);
        }
    }
    let fits: Vec<BinaryFit> = positives
        .par_iter()
        .zip(positive_weights)
        .map(|(p, &pw)| train_label(x, p, pw, params))
        .collect::<Result<_>>()?;
    let mut weights = Vec::with_capacity(fits.len());
    let mut reports = Vec::with_capacity(fits.len());
    for f in fits {
        weights.push(f.weights);
        reports.push(f.report);
    }
    let model = LinearModel::new(
        labels.to_vec(),
        task_kind,
        x.n_cols(),
        weights,
        vec![0.0; labels.len()],
        positive_weights.to_vec(),
    )?;
    Ok(MultiLabelFit { model, reports })
}

/// One binary SVM per label, thresholds 0, no re-weighting.
pub fn train_one_vs_rest(
    x: &SparseMatrix,
    y: &[Vec<usize>],
    labels: &[String],
    task_kind: TaskKind,
    params: &SolverParams,
) -> Result<MultiLabelFit> {
    train_per_label(x, y, labels, task_kind, &vec![1.0; labels.len()], params)
}

/// Output of [`train_strategy`]: the final model plus what tuning chose.
#[derive(Debug, Clone)]
pub struct StrategyFit {
    pub strategy: Strategy,
    pub fit: MultiLabelFit,
    pub thresholds: Option<ThresholdTuning>,
    pub costs: Option<CostTuning>,
}

/// Trains the final model for `strategy`. Tuned strategies run
/// cross-validation first, then retrain on all rows.
pub fn train_strategy(
    x: &SparseMatrix,
    y: &[Vec<usize>],
    labels: &[String],
    task_kind: TaskKind,
    strategy: Strategy,
    params: &SolverParams,
    tuning: &TuningConfig,
) -> Result<StrategyFit> {
    match strategy {
        Strategy::OneVsRest => Ok(StrategyFit {
            strategy,
            fit: train_one_vs_rest(x, y, labels, task_kind, params)?,
            thresholds: None,
            costs: None,
        }),
        Strategy::Thresholding => {
            if task_kind == TaskKind::MultiClass {
                log::info!("multi-class prediction takes the argmax; tuned thresholds will not affect it");
            }
            let tuned = tune_thresholds(x, y, labels.len(), tuning, params)?;
            let mut fit = train_one_vs_rest(x, y, labels, task_kind, params)?;
            fit.model = fit.model.with_thresholds(tuned.thresholds.clone())?;
            Ok(StrategyFit {
                strategy,
                fit,
                thresholds: Some(tuned),
                costs: None,
            })
        }
        Strategy::CostSensitive => {
            let tuned = tune_cost_weights(x, y, labels.len(), task_kind, tuning, params)?;
            let fit = train_per_label(x, y, labels, task_kind, &tuned.positive_weights, params)?;
            Ok(StrategyFit {
                strategy,
                fit,
                thresholds: None,
                costs: Some(tuned),
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model(weights: Vec<Vec<f64>>, thresholds: Vec<f64>, kind: TaskKind) -> LinearModel {
        let n = weights[0].len();
        let labels = (0..weights.len()).map(|l| format!("L{l}")).collect();
        let k = weights.len();
        LinearModel::new(
            labels,
            kind,
            n,
            weights.into_iter().map(WeightVector).collect(),
            thresholds,
            vec![1.0; k],
        )
        .unwrap()
    }

    fn identity_rows(n: usize) -> SparseMatrix {
        SparseMatrix::from_rows(n, (0..n).map(|i| vec![(i, 1.0)])).unwrap()
    }

    #[test]
    fn zero_model_predicts_nothing() {
        let m = model(vec![vec![0.0; 3]; 2], vec![0.0; 2], TaskKind::MultiLabel);
        let p = m.predict_multilabel(&identity_rows(3)).unwrap();
        assert!(p.iter().all(Vec::is_empty));
        let big = m.with_thresholds(vec![1e6, 0.0]).unwrap();
        let p = big.predict_multilabel(&identity_rows(3)).unwrap();
        assert!(p.iter().all(|s| s == &vec![0]));
    }

    #[test]
    fn thresholds_shift_scores() {
        // scores (0.2, -0.1), Δ = (0, 0.3): both labels fire
        assert_eq!(labels_above_thresholds(&[0.2, -0.1], &[0.0, 0.3]), vec![0, 1]);
        assert_eq!(labels_above_thresholds(&[0.2, -0.1], &[0.0, 0.0]), vec![0]);
    }

    #[test]
    fn argmax_and_ties() {
        assert_eq!(argmax(&[0.1, 0.9, -0.3]), 1);
        assert_eq!(argmax(&[0.0, 0.0, 0.0]), 0);
        assert_eq!(argmax(&[-1.0, 2.0, 2.0]), 1);
    }

    #[test]
    fn infinite_threshold_rejected() {
        let m = model(vec![vec![0.0]], vec![0.0], TaskKind::MultiLabel);
        assert!(m.with_thresholds(vec![f64::INFINITY]).is_err());
    }

    #[test]
    fn dimension_mismatch() {
        let m = model(vec![vec![0.0; 2]], vec![0.0], TaskKind::MultiClass);
        assert!(matches!(
            m.predict(&identity_rows(3)),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn parameter_count_is_features_times_labels() {
        let m = model(vec![vec![0.0; 7]; 3], vec![0.0; 3], TaskKind::MultiLabel);
        assert_eq!(m.parameter_count(), 21);
    }

    #[test]
    fn unlabeled_rows_are_negative_everywhere() {
        let x = identity_rows(3);
        let y = vec![vec![0], vec![], vec![1]];
        let pos = positives_per_label(&y, 2).unwrap();
        assert_eq!(pos, vec![vec![0], vec![2]]);
        let labels = vec!["a".to_string(), "b".to_string()];
        let fit = train_one_vs_rest(&x, &y, &labels, TaskKind::MultiLabel, &SolverParams::default()).unwrap();
        let pred = fit.model.predict(&x).unwrap();
        assert_eq!(pred, vec![vec![0], vec![], vec![1]]);
    }

    #[test]
    fn single_label_all_positive() {
        let x = SparseMatrix::from_rows(2, vec![vec![(0, 1.0)], vec![(1, 0.5)], vec![(0, 0.3), (1, 0.3)]]).unwrap();
        let y = vec![vec![0]; 3];
        let fit = train_one_vs_rest(&x, &y, &["only".to_string()], TaskKind::MultiLabel, &SolverParams::default())
            .unwrap();
        assert_eq!(fit.model.predict(&x).unwrap(), vec![vec![0]; 3]);
    }

    #[test]
    fn empty_universe_rejected() {
        let x = identity_rows(1);
        assert!(train_one_vs_rest(&x, &[vec![]], &[], TaskKind::MultiLabel, &SolverParams::default()).is_err());
    }

    #[test]
    fn strategy_names() {
        for s in [Strategy::OneVsRest, Strategy::Thresholding, Strategy::CostSensitive] {
            assert_eq!(s.as_str().parse::<Strategy>().unwrap(), s);
        }
        assert_eq!("cost_sensitive".parse::<Strategy>().unwrap(), Strategy::CostSensitive);
    }
}
