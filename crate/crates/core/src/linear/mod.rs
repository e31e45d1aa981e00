//! Binary L2-regularized linear SVM
//!
//! ```text
//! min_w  ½ wᵀw + Σ_i C_i ξ(y_i wᵀx_i)
//! ```
//!
//! with `ξ(z) = max(0, 1 − z)` (hinge) or `max(0, 1 − z)²` (squared hinge),
//! `C_i = C · positive_weight` on positive rows and `C` otherwise. There is
//! no intercept; the decision value is `wᵀx`.

mod dual_cd;

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::features::SparseMatrix;

pub use dual_cd::{train_binary, BinaryFit, ConvergenceReport, DualCoordinateDescent};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Loss {
    Hinge,
    SquaredHinge,
}

impl Loss {
    pub fn value(self, margin: f64) -> f64 {
        let slack = (1.0 - margin).max(0.0);
        match self {
            Loss::Hinge => slack,
            Loss::SquaredHinge => slack * slack,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Loss::Hinge => "hinge",
            Loss::SquaredHinge => "squared_hinge",
        }
    }
}

impl fmt::Display for Loss {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Loss {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "hinge" => Ok(Loss::Hinge),
            "squared_hinge" | "squared-hinge" => Ok(Loss::SquaredHinge),
            _ => Err(Error::Config(format!("unknown loss {s:?}"))),
        }
    }
}

/// Solver settings shared by every binary subproblem of a run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverParams {
    pub c: f64,
    pub loss: Loss,
    /// Stop once `(primal − dual) / primal ≤ tol`.
    pub tol: f64,
    /// Maximum number of passes over the data.
    pub max_iter: usize,
    pub seed: u64,
}

impl Default for SolverParams {
    fn default() -> Self {
        SolverParams {
            c: 1.0,
            loss: Loss::SquaredHinge,
            tol: 1e-4,
            max_iter: 1000,
            seed: 1,
        }
    }
}

impl SolverParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.c > 0.0 && self.c.is_finite()) {
            return Err(Error::Config(format!("C must be positive and finite, got {}", self.c)));
        }
        if self.tol.is_nan() || self.tol <= 0.0 {
            return Err(Error::Config(format!("tol must be positive, got {}", self.tol)));
        }
        if self.max_iter == 0 {
            return Err(Error::Config("max_iter must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct BinaryProblem<'a> {
    x: &'a SparseMatrix,
    y: Vec<f64>,
    c: f64,
    positive_weight: f64,
    loss: Loss,
}

impl<'a> BinaryProblem<'a> {
    pub fn new(x: &'a SparseMatrix, y: Vec<f64>, c: f64, positive_weight: f64, loss: Loss) -> Result<Self> {
        if y.len() != x.n_rows() {
            return Err(Error::DimensionMismatch {
                expected: x.n_rows(),
                found: y.len(),
            });
        }
        if let Some(i) = y.iter().position(|&v| v != 1.0 && v != -1.0) {
            return Err(Error::Data(format!("label y[{i}] = {} is not +1 or -1", y[i])));
        }
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::Config(format!("C must be positive and finite, got {c}")));
        }
        if !(positive_weight >= 1.0 && positive_weight.is_finite()) {
            return Err(Error::Config(format!(
                "positive_weight must be finite and at least 1, got {positive_weight}"
            )));
        }
        Ok(BinaryProblem {
            x,
            y,
            c,
            positive_weight,
            loss,
        })
    }

    /// Rows labelled `+1` are exactly the indices in `positives`.
    pub fn from_positive_set(
        x: &'a SparseMatrix,
        positives: impl IntoIterator<Item = usize>,
        c: f64,
        positive_weight: f64,
        loss: Loss,
    ) -> Result<Self> {
        let mut y = vec![-1.0; x.n_rows()];
        for i in positives {
            y[i] = 1.0;
        }
        Self::new(x, y, c, positive_weight, loss)
    }

    pub fn x(&self) -> &SparseMatrix {
        self.x
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn positive_weight(&self) -> f64 {
        self.positive_weight
    }

    pub fn loss(&self) -> Loss {
        self.loss
    }

    pub fn n_rows(&self) -> usize {
        self.y.len()
    }

    pub fn n_features(&self) -> usize {
        self.x.n_cols()
    }

    /// Per-row cost `C_i`.
    pub fn cost(&self, i: usize) -> f64 {
        if self.y[i] > 0.0 {
            self.c * self.positive_weight
        } else {
            self.c
        }
    }

    /// Box upper bound on `alpha_i` (infinite for squared hinge).
    pub fn dual_upper_bound(&self, i: usize) -> f64 {
        match self.loss {
            Loss::Hinge => self.cost(i),
            Loss::SquaredHinge => f64::INFINITY,
        }
    }

    /// Diagonal term added to `Q_ii` in the dual (`1 / (2 C_i)` for squared
    /// hinge, 0 for hinge).
    pub fn dual_diagonal(&self, i: usize) -> f64 {
        match self.loss {
            Loss::Hinge => 0.0,
            Loss::SquaredHinge => 0.5 / self.cost(i),
        }
    }
}

/// Dense weight vector of a binary linear model.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightVector(pub Vec<f64>);

impl WeightVector {
    pub fn zeros(n: usize) -> Self {
        WeightVector(vec![0.0; n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn squared_norm(&self) -> f64 {
        self.0.iter().map(|v| v * v).sum()
    }
}

/// `wᵀx_i` for every row.
pub fn decision_values(w: &WeightVector, x: &SparseMatrix) -> Result<Vec<f64>> {
    if w.len() != x.n_cols() {
        return Err(Error::DimensionMismatch {
            expected: w.len(),
            found: x.n_cols(),
        });
    }
    Ok(x.rows().map(|r| r.dot(&w.0)).collect())
}

pub fn primal_objective(p: &BinaryProblem<'_>, w: &WeightVector) -> f64 {
    let loss: f64 = p
        .x
        .rows()
        .enumerate()
        .map(|(i, r)| p.cost(i) * p.loss.value(p.y[i] * r.dot(&w.0)))
        .sum();
    0.5 * w.squared_norm() + loss
}

/// Gradient of the primal objective. Exact for squared hinge; for hinge it
/// is the subgradient that takes 0 at the kink.
pub fn primal_gradient(p: &BinaryProblem<'_>, w: &WeightVector) -> Vec<f64> {
    let mut g = w.0.clone();
    for (i, r) in p.x.rows().enumerate() {
        let margin = p.y[i] * r.dot(&w.0);
        if margin < 1.0 {
            let coef = match p.loss {
                Loss::SquaredHinge => -2.0 * p.cost(i) * (1.0 - margin) * p.y[i],
                Loss::Hinge => -p.cost(i) * p.y[i],
            };
            r.axpy_into(coef, &mut g);
        }
    }
    g
}

fn check_dual_feasible(p: &BinaryProblem<'_>, alpha: &[f64]) -> Result<()> {
    if alpha.len() != p.n_rows() {
        return Err(Error::DimensionMismatch {
            expected: p.n_rows(),
            found: alpha.len(),
        });
    }
    for (i, &a) in alpha.iter().enumerate() {
        if !(a >= 0.0 && a <= p.dual_upper_bound(i) && a.is_finite()) {
            return Err(Error::InfeasibleDual { index: i, value: a });
        }
    }
    Ok(())
}

/// `w(α) = Σ_i α_i y_i x_i`
pub fn primal_from_dual(p: &BinaryProblem<'_>, alpha: &[f64]) -> WeightVector {
    let mut w = vec![0.0; p.n_features()];
    for (i, r) in p.x.rows().enumerate() {
        if alpha[i] != 0.0 {
            r.axpy_into(alpha[i] * p.y[i], &mut w);
        }
    }
    WeightVector(w)
}

fn dual_value(p: &BinaryProblem<'_>, alpha: &[f64], w: &WeightVector) -> f64 {
    let linear: f64 = alpha.iter().sum();
    let diag: f64 = alpha
        .iter()
        .enumerate()
        .map(|(i, a)| p.dual_diagonal(i) * a * a)
        .sum();
    linear - 0.5 * w.squared_norm() - 0.5 * diag
}

/// Dual objective `Σα − ½‖w(α)‖² − ½ Σ D_ii α_i²`.
pub fn dual_objective(p: &BinaryProblem<'_>, alpha: &[f64]) -> Result<f64> {
    check_dual_feasible(p, alpha)?;
    Ok(dual_value(p, alpha, &primal_from_dual(p, alpha)))
}

/// `primal(w(α)) − dual(α)`, nonnegative up to rounding for feasible `α`.
pub fn duality_gap(p: &BinaryProblem<'_>, alpha: &[f64]) -> Result<f64> {
    check_dual_feasible(p, alpha)?;
    let w = primal_from_dual(p, alpha);
    Ok(primal_objective(p, &w) - dual_value(p, alpha, &w))
}
