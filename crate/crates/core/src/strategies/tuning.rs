use std::cmp::Ordering;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::{argmax, positives_per_label, train_label};
use crate::corpus::TaskKind;
use crate::error::{Error, Result};
use crate::features::SparseMatrix;
use crate::linear::SolverParams;
use crate::metrics::f1_score;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TargetMetric {
    MicroF1,
    MacroF1,
}

impl FromStr for TargetMetric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.replace('-', "_").as_str() {
            "micro_f1" | "micro" => Ok(TargetMetric::MicroF1),
            "macro_f1" | "macro" => Ok(TargetMetric::MacroF1),
            _ => Err(Error::Config(format!("unknown target metric {s:?}"))),
        }
    }
}

impl TargetMetric {
    pub fn as_str(self) -> &'static str {
        match self {
            TargetMetric::MicroF1 => "micro_f1",
            TargetMetric::MacroF1 => "macro_f1",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TuningConfig {
    pub n_folds: usize,
    pub target: TargetMetric,
    /// Candidate positive-row weights, ascending.
    pub cost_grid: Vec<f64>,
    pub seed: u64,
}

impl Default for TuningConfig {
    fn default() -> Self {
        TuningConfig {
            n_folds: 3,
            target: TargetMetric::MacroF1,
            cost_grid: vec![1.0, 2.0, 4.0, 8.0, 16.0, 32.0],
            seed: 1,
        }
    }
}

impl TuningConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_folds < 2 {
            return Err(Error::Config(format!("n_folds must be at least 2, got {}", self.n_folds)));
        }
        if self.cost_grid.is_empty() {
            return Err(Error::Config("cost_grid must not be empty".into()));
        }
        if self.cost_grid.iter().any(|&c| !(c >= 1.0 && c.is_finite())) {
            return Err(Error::Config("cost_grid values must be finite and at least 1".into()));
        }
        if self.cost_grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config("cost_grid must be strictly ascending".into()));
        }
        Ok(())
    }
}

/// Fold index for each of `n` rows: a seeded shuffle dealt round-robin, so
/// fold sizes differ by at most one.
pub fn fold_assignment(n: usize, n_folds: usize, seed: u64) -> Result<Vec<usize>> {
    if n_folds < 2 {
        return Err(Error::Config("n_folds must be at least 2".into()));
    }
    if n_folds > n {
        return Err(Error::Config(format!("n_folds = {n_folds} exceeds the {n} training rows")));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut folds = vec![0; n];
    for (k, &i) in order.iter().enumerate() {
        folds[i] = k % n_folds;
    }
    Ok(folds)
}

/// Out-of-fold decision values, `[label][row]`. Each row's value comes from
/// the model trained on the other folds; label `ℓ` is trained with positive
/// weight `positive_weights[ℓ]`.
pub fn cross_validated_decision_values(
    x: &SparseMatrix,
    y: &[Vec<usize>],
    n_labels: usize,
    positive_weights: &[f64],
    folds: &[usize],
    n_folds: usize,
    params: &SolverParams,
) -> Result<Vec<Vec<f64>>> {
    assert_eq!(positive_weights.len(), n_labels);
    let n = x.n_rows();
    if folds.len() != n || y.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: folds.len().min(y.len()),
        });
    }
    let positives = positives_per_label(y, n_labels)?;

    struct FoldData {
        train_rows: Vec<usize>,
        held_out: Vec<usize>,
        x_train: SparseMatrix,
        x_held: SparseMatrix,
        // global row -> position in train_rows
        local: Vec<Option<usize>>,
    }
    let fold_data: Vec<FoldData> = (0..n_folds)
        .map(|k| {
            let train_rows: Vec<usize> = (0..n).filter(|&i| folds[i] != k).collect();
            let held_out: Vec<usize> = (0..n).filter(|&i| folds[i] == k).collect();
            let mut local = vec![None; n];
            for (j, &i) in train_rows.iter().enumerate() {
                local[i] = Some(j);
            }
            FoldData {
                x_train: x.select_rows(&train_rows),
                x_held: x.select_rows(&held_out),
                train_rows,
                held_out,
                local,
            }
        })
        .collect();

    let jobs: Vec<(usize, usize)> = (0..n_labels)
        .flat_map(|l| (0..n_folds).map(move |k| (l, k)))
        .collect();
    let outputs: Vec<Vec<f64>> = jobs
        .par_iter()
        .map(|&(l, k)| {
            let fd = &fold_data[k];
            if fd.train_rows.is_empty() {
                return Ok(vec![0.0; fd.held_out.len()]);
            }
            let local_pos: Vec<usize> = positives[l].iter().filter_map(|&i| fd.local[i]).collect();
            let fit = train_label(&fd.x_train, &local_pos, positive_weights[l], params)?;
            Ok(fd.x_held.rows().map(|r| r.dot(&fit.weights.0)).collect())
        })
        .collect::<Result<_>>()?;

    let mut scores = vec![vec![0.0; n]; n_labels];
    for (&(l, k), vals) in jobs.iter().zip(outputs) {
        for (&i, v) in fold_data[k].held_out.iter().zip(vals) {
            scores[l][i] = v;
        }
    }
    Ok(scores)
}

/// Chosen offset for one label and the pooled cross-validated F1 it reaches.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ThresholdChoice {
    pub delta: f64,
    pub f1: f64,
}

/// Candidate cut points for the rule `score > t`: one above the maximum,
/// midpoints between consecutive distinct scores, one below the minimum.
/// Each comes with the number of rows it predicts positive, counted from the
/// top of `order` (indices sorted by descending score).
fn cut_points(scores: &[f64], order: &[usize]) -> Vec<(f64, usize)> {
    let mut cuts = Vec::with_capacity(order.len() + 1);
    if order.is_empty() {
        return cuts;
    }
    let top = scores[order[0]];
    let bottom = scores[order[order.len() - 1]];
    cuts.push((top + 1.0, 0));
    for k in 1..order.len() {
        let hi = scores[order[k - 1]];
        let lo = scores[order[k]];
        if hi > lo {
            let mid = lo + (hi - lo) / 2.0;
            cuts.push((if mid < hi { mid } else { lo }, k));
        }
    }
    cuts.push((bottom - 1.0, order.len()));
    cuts
}

fn descending_order(scores: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].partial_cmp(&scores[a]).unwrap_or(Ordering::Equal).then(a.cmp(&b)));
    order
}

/// Best cut for one label given counts `base = (tp, fp, fn)` contributed by
/// other labels (zeros for a per-label F1 objective). Ties prefer the cut
/// closest to zero, then the larger cut. Returns `(cut, objective)`.
fn sweep(scores: &[f64], truth: &[bool], base: (u64, u64, u64)) -> (f64, f64) {
    let order = descending_order(scores);
    let n_pos = truth.iter().filter(|&&t| t).count() as u64;
    let mut best: Option<(f64, f64)> = None;
    let mut tp = 0u64;
    let mut taken = 0usize;
    for (cut, k) in cut_points(scores, &order) {
        while taken < k {
            if truth[order[taken]] {
                tp += 1;
            }
            taken += 1;
        }
        let fp = k as u64 - tp;
        let fn_ = n_pos - tp;
        let obj = f1_score(base.0 + tp, base.1 + fp, base.2 + fn_);
        let better = match best {
            None => true,
            Some((bc, bo)) => {
                obj > bo || (obj == bo && (cut.abs() < bc.abs() || (cut.abs() == bc.abs() && cut > bc)))
            }
        };
        if better {
            best = Some((cut, obj));
        }
    }
    best.unwrap_or((0.0, 0.0))
}

/// Offset maximizing F1 of `score + Δ > 0` over the candidate cuts. Labels
/// whose best F1 is 0 keep `Δ = 0`.
pub fn best_threshold(scores: &[f64], truth: &[bool]) -> ThresholdChoice {
    let (cut, f1) = sweep(scores, truth, (0, 0, 0));
    if f1 > 0.0 {
        ThresholdChoice { delta: -cut, f1 }
    } else {
        ThresholdChoice { delta: 0.0, f1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThresholdTuning {
    pub thresholds: Vec<f64>,
    /// Pooled cross-validated F1 per label at the chosen threshold.
    pub cv_f1: Vec<f64>,
    /// Cross-validated target metric at the chosen thresholds.
    pub cv_score: f64,
}

fn membership(y: &[Vec<usize>], n_labels: usize) -> Vec<Vec<bool>> {
    let mut m = vec![vec![false; y.len()]; n_labels];
    for (i, set) in y.iter().enumerate() {
        for &l in set {
            m[l][i] = true;
        }
    }
    m
}

fn label_counts(scores: &[f64], truth: &[bool], delta: f64) -> (u64, u64, u64) {
    let mut c = (0, 0, 0);
    for (&s, &t) in scores.iter().zip(truth) {
        match (s + delta > 0.0, t) {
            (true, true) => c.0 += 1,
            (true, false) => c.1 += 1,
            (false, true) => c.2 += 1,
            (false, false) => {}
        }
    }
    c
}

/// Per-label offsets `Δ_ℓ` chosen on pooled out-of-fold decision values.
///
/// For `MacroF1` each label maximizes its own F1. For `MicroF1` labels are
/// revisited in order (coordinate ascent on the pooled Micro-F1, starting
/// from `Δ = 0`) until a full pass changes nothing.
pub fn tune_thresholds(
    x: &SparseMatrix,
    y: &[Vec<usize>],
    n_labels: usize,
    cfg: &TuningConfig,
    params: &SolverParams,
) -> Result<ThresholdTuning> {
    cfg.validate()?;
    let folds = fold_assignment(x.n_rows(), cfg.n_folds, cfg.seed)?;
    let scores = cross_validated_decision_values(x, y, n_labels, &vec![1.0; n_labels], &folds, cfg.n_folds, params)?;
    let truth = membership(y, n_labels);
    Ok(thresholds_from_scores(&scores, &truth, cfg.target))
}

pub(crate) fn thresholds_from_scores(scores: &[Vec<f64>], truth: &[Vec<bool>], target: TargetMetric) -> ThresholdTuning {
    let n_labels = scores.len();
    let mut thresholds = vec![0.0; n_labels];
    match target {
        TargetMetric::MacroF1 => {
            for l in 0..n_labels {
                let choice = best_threshold(&scores[l], &truth[l]);
                if choice.f1 == 0.0 {
                    log::info!("label {l}: no threshold reaches a positive F1, keeping 0");
                }
                thresholds[l] = choice.delta;
            }
        }
        TargetMetric::MicroF1 => {
            let mut counts: Vec<(u64, u64, u64)> = (0..n_labels)
                .map(|l| label_counts(&scores[l], &truth[l], 0.0))
                .collect();
            for _pass in 0..20 {
                let mut changed = false;
                for l in 0..n_labels {
                    let others = counts
                        .iter()
                        .enumerate()
                        .filter(|&(m, _)| m != l)
                        .fold((0, 0, 0), |a, (_, c)| (a.0 + c.0, a.1 + c.1, a.2 + c.2));
                    let (cut, _) = sweep(&scores[l], &truth[l], others);
                    let new_counts = label_counts(&scores[l], &truth[l], -cut);
                    let current = f1_score(
                        others.0 + counts[l].0,
                        others.1 + counts[l].1,
                        others.2 + counts[l].2,
                    );
                    let proposed = f1_score(others.0 + new_counts.0, others.1 + new_counts.1, others.2 + new_counts.2);
                    if proposed > current {
                        thresholds[l] = -cut;
                        counts[l] = new_counts;
                        changed = true;
                    }
                }
                if !changed {
                    break;
                }
            }
        }
    }
    let per_label: Vec<(u64, u64, u64)> = (0..n_labels)
        .map(|l| label_counts(&scores[l], &truth[l], thresholds[l]))
        .collect();
    let cv_f1: Vec<f64> = per_label.iter().map(|c| f1_score(c.0, c.1, c.2)).collect();
    let cv_score = match target {
        TargetMetric::MacroF1 => mean(&cv_f1),
        TargetMetric::MicroF1 => {
            let t = per_label
                .iter()
                .fold((0, 0, 0), |a, c| (a.0 + c.0, a.1 + c.1, a.2 + c.2));
            f1_score(t.0, t.1, t.2)
        }
    };
    ThresholdTuning {
        thresholds,
        cv_f1,
        cv_score,
    }
}

fn mean(v: &[f64]) -> f64 {
    if v.is_empty() {
        0.0
    } else {
        v.iter().sum::<f64>() / v.len() as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CostTuning {
    pub positive_weights: Vec<f64>,
    /// Cross-validated score of every grid value: per label for `MacroF1`,
    /// a single shared row for `MicroF1`. Indexed `[row][grid position]`.
    pub cv_scores: Vec<Vec<f64>>,
}

/// Per-label positive-row weights picked from `cfg.cost_grid`.
///
/// With `MacroF1`, each label independently takes the grid value
/// maximizing the cross-validated F1 of `score > 0`. With `MicroF1`, one
/// grid value is shared by all labels and chosen by pooled Micro-F1 (of
/// argmax predictions for multi-class tasks). Ties go to the smaller weight.
pub fn tune_cost_weights(
    x: &SparseMatrix,
    y: &[Vec<usize>],
    n_labels: usize,
    task_kind: TaskKind,
    cfg: &TuningConfig,
    params: &SolverParams,
) -> Result<CostTuning> {
    cfg.validate()?;
    if cfg.cost_grid == [1.0] {
        return Ok(CostTuning {
            positive_weights: vec![1.0; n_labels],
            cv_scores: Vec::new(),
        });
    }
    let folds = fold_assignment(x.n_rows(), cfg.n_folds, cfg.seed)?;
    let truth = membership(y, n_labels);

    // grid position -> [label][row]
    let per_grid: Vec<Vec<Vec<f64>>> = cfg
        .cost_grid
        .iter()
        .map(|&g| cross_validated_decision_values(x, y, n_labels, &vec![g; n_labels], &folds, cfg.n_folds, params))
        .collect::<Result<_>>()?;

    let pick = |scores: &[f64]| -> usize {
        let mut best = 0;
        for (k, &s) in scores.iter().enumerate() {
            if s > scores[best] {
                best = k;
            }
        }
        best
    };

    match cfg.target {
        TargetMetric::MacroF1 => {
            let cv_scores: Vec<Vec<f64>> = (0..n_labels)
                .map(|l| {
                    per_grid
                        .iter()
                        .map(|s| {
                            let c = label_counts(&s[l], &truth[l], 0.0);
                            f1_score(c.0, c.1, c.2)
                        })
                        .collect()
                })
                .collect();
            let positive_weights = cv_scores.iter().map(|s| cfg.cost_grid[pick(s)]).collect();
            Ok(CostTuning {
                positive_weights,
                cv_scores,
            })
        }
        TargetMetric::MicroF1 => {
            let shared: Vec<f64> = per_grid
                .iter()
                .map(|s| match task_kind {
                    TaskKind::MultiLabel => {
                        let t = (0..n_labels)
                            .map(|l| label_counts(&s[l], &truth[l], 0.0))
                            .fold((0, 0, 0), |a, c| (a.0 + c.0, a.1 + c.1, a.2 + c.2));
                        f1_score(t.0, t.1, t.2)
                    }
                    TaskKind::MultiClass => multiclass_micro_f1(s, y),
                })
                .collect();
            let g = cfg.cost_grid[pick(&shared)];
            Ok(CostTuning {
                positive_weights: vec![g; n_labels],
                cv_scores: vec![shared],
            })
        }
    }
}

fn multiclass_micro_f1(scores: &[Vec<f64>], y: &[Vec<usize>]) -> f64 {
    let n_labels = scores.len();
    let (mut tp, mut fp, mut fn_) = (0u64, 0u64, 0u64);
    for (i, truth) in y.iter().enumerate() {
        let row: Vec<f64> = (0..n_labels).map(|l| scores[l][i]).collect();
        let p = argmax(&row);
        if truth.contains(&p) {
            tp += 1;
            fn_ += truth.len() as u64 - 1;
        } else {
            fp += 1;
            fn_ += truth.len() as u64;
        }
    }
    f1_score(tp, fp, fn_)
}
