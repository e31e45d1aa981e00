#![allow(dead_code)]

use std::collections::{BTreeSet, HashSet};

use lintext::features::SparseMatrix;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Random sparse matrix with roughly `density` of entries set, values in
/// [-1, 1].
pub fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize, density: f64) -> SparseMatrix {
    let data: Vec<Vec<(usize, f64)>> = (0..rows)
        .map(|_| {
            let mut row = Vec::new();
            for j in 0..cols {
                if rng.gen::<f64>() < density {
                    row.push((j, rng.gen_range(-1.0..1.0)));
                }
            }
            row
        })
        .collect();
    SparseMatrix::from_rows(cols, data).unwrap()
}

pub fn random_labels(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| if rng.gen_bool(0.4) { 1.0 } else { -1.0 }).collect()
}

/// Squared-hinge primal `½‖w‖² + Σ c_i max(0, 1 − y_i wᵀx_i)²` on dense
/// rows.
pub fn dense_primal(rows: &[Vec<f64>], y: &[f64], cost: &[f64], w: &[f64]) -> f64 {
    let reg: f64 = 0.5 * w.iter().map(|v| v * v).sum::<f64>();
    reg + rows
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let m = y[i] * dot(r, w);
            cost[i] * (1.0 - m).max(0.0).powi(2)
        })
        .sum::<f64>()
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn solve_spd(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    // Gaussian elimination with partial pivoting
    let n = b.len();
    for k in 0..n {
        let p = (k..n).max_by(|&i, &j| a[i][k].abs().total_cmp(&a[j][k].abs())).unwrap();
        a.swap(k, p);
        b.swap(k, p);
        for i in k + 1..n {
            let f = a[i][k] / a[k][k];
            for j in k..n {
                a[i][j] -= f * a[k][j];
            }
            b[i] -= f * b[k];
        }
    }
    let mut x = vec![0.0; n];
    for k in (0..n).rev() {
        let s: f64 = (k + 1..n).map(|j| a[k][j] * x[j]).sum();
        x[k] = (b[k] - s) / a[k][k];
    }
    x
}

/// Minimizes the squared-hinge primal with a generalized Newton method and
/// backtracking line search, directly in the primal on dense rows.
pub fn newton_squared_hinge(rows: &[Vec<f64>], y: &[f64], cost: &[f64]) -> Vec<f64> {
    let d = rows.first().map_or(0, Vec::len);
    let mut w = vec![0.0; d];
    for _ in 0..200 {
        let mut grad = w.clone();
        let mut hess: Vec<Vec<f64>> = (0..d)
            .map(|i| (0..d).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
            .collect();
        for (i, r) in rows.iter().enumerate() {
            let m = y[i] * dot(r, &w);
            if m < 1.0 {
                for a in 0..d {
                    grad[a] -= 2.0 * cost[i] * (1.0 - m) * y[i] * r[a];
                    for b in 0..d {
                        hess[a][b] += 2.0 * cost[i] * r[a] * r[b];
                    }
                }
            }
        }
        let gnorm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
        if gnorm < 1e-13 {
            break;
        }
        let step = solve_spd(hess, grad.clone());
        let f0 = dense_primal(rows, y, cost, &w);
        let slope: f64 = dot(&grad, &step);
        let mut t = 1.0;
        loop {
            let cand: Vec<f64> = w.iter().zip(&step).map(|(a, s)| a - t * s).collect();
            if dense_primal(rows, y, cost, &cand) <= f0 - 1e-4 * t * slope || t < 1e-12 {
                w = cand;
                break;
            }
            t *= 0.5;
        }
    }
    w
}

pub fn dense_rows(x: &SparseMatrix) -> Vec<Vec<f64>> {
    (0..x.n_rows()).map(|i| x.to_dense_row(i)).collect()
}

/// Micro/Macro-F1 from set membership over named labels, scored with
/// `2TP / (2TP + FP + FN)` (0 when the denominator is 0).
pub fn brute_force_f1(
    labels: &[String],
    truth: &[BTreeSet<String>],
    pred: &[BTreeSet<String>],
) -> (f64, f64) {
    let f1 = |tp: usize, fp: usize, fn_: usize| {
        if 2 * tp + fp + fn_ == 0 {
            0.0
        } else {
            (2 * tp) as f64 / (2 * tp + fp + fn_) as f64
        }
    };
    let (mut sum_tp, mut sum_fp, mut sum_fn) = (0, 0, 0);
    let mut macro_sum = 0.0;
    for label in labels {
        let tp = truth.iter().zip(pred).filter(|(t, p)| t.contains(label) && p.contains(label)).count();
        let fp = truth.iter().zip(pred).filter(|(t, p)| !t.contains(label) && p.contains(label)).count();
        let fn_ = truth.iter().zip(pred).filter(|(t, p)| t.contains(label) && !p.contains(label)).count();
        sum_tp += tp;
        sum_fp += fp;
        sum_fn += fn_;
        macro_sum += f1(tp, fp, fn_);
    }
    let macro_ = if labels.is_empty() { 0.0 } else { macro_sum / labels.len() as f64 };
    (f1(sum_tp, sum_fp, sum_fn), macro_)
}

/// Applies the unlabeled-class rule on named sets.
pub fn brute_force_extend(sets: &[BTreeSet<String>], u: &str) -> Vec<BTreeSet<String>> {
    sets.iter()
        .map(|s| {
            if s.is_empty() {
                [u.to_string()].into()
            } else {
                s.clone()
            }
        })
        .collect()
}

pub fn names(sets: &[Vec<usize>], labels: &[String]) -> Vec<BTreeSet<String>> {
    sets.iter()
        .map(|s| s.iter().map(|&l| labels[l].clone()).collect())
        .collect()
}

pub fn distinct<T: std::hash::Hash + Eq + Clone>(v: &[T]) -> usize {
    v.iter().cloned().collect::<HashSet<_>>().len()
}

/// Random label sets over `n_labels` labels; roughly a quarter of rows are
/// empty.
pub fn random_sets(rng: &mut ChaCha8Rng, n_rows: usize, n_labels: usize) -> Vec<Vec<usize>> {
    (0..n_rows)
        .map(|_| {
            if rng.gen_bool(0.25) {
                return Vec::new();
            }
            let mut s: Vec<usize> = (0..n_labels).filter(|_| rng.gen_bool(0.3)).collect();
            if s.is_empty() {
                s.push(rng.gen_range(0..n_labels));
            }
            s
        })
        .collect()
}

pub fn label_names(n: usize) -> Vec<String> {
    (0..n).map(|l| format!("L{l}")).collect()
}

/// Oracle scores under the unlabeled extension: fill empty sets with `U`,
/// and count `U` as a label only when it occurs.
pub fn brute_force_extended_f1(
    labels: &[String],
    truth: &[BTreeSet<String>],
    pred: &[BTreeSet<String>],
    u: &str,
) -> (f64, f64) {
    let t = brute_force_extend(truth, u);
    let p = brute_force_extend(pred, u);
    let mut all = labels.to_vec();
    if t.iter().chain(&p).any(|s| s.contains(u)) {
        all.push(u.to_string());
    }
    brute_force_f1(&all, &t, &p)
}
