use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{primal_objective, BinaryProblem, WeightVector};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceReport {
    pub epochs: usize,
    pub primal: f64,
    pub dual: f64,
    pub relative_gap: f64,
    pub converged: bool,
    pub elapsed_secs: f64,
}

#[derive(Debug, Clone)]
pub struct BinaryFit {
    pub weights: WeightVector,
    pub alpha: Vec<f64>,
    pub report: ConvergenceReport,
}

/// Dual coordinate descent for the L2-regularized (squared) hinge SVM.
///
/// Each epoch visits every dual variable once, in a fresh random order,
/// and maximizes the dual exactly along that coordinate. `w = Σ α_i y_i x_i`
/// is kept up to date incrementally.
pub struct DualCoordinateDescent<'p, 'a> {
    problem: &'p BinaryProblem<'a>,
    alpha: Vec<f64>,
    w: Vec<f64>,
    qbar: Vec<f64>,
    diag: Vec<f64>,
    upper: Vec<f64>,
    order: Vec<usize>,
    rng: ChaCha8Rng,
    epochs: usize,
}

impl<'p, 'a> DualCoordinateDescent<'p, 'a> {
    pub fn new(problem: &'p BinaryProblem<'a>, seed: u64) -> Self {
        let n = problem.n_rows();
        let diag: Vec<f64> = (0..n).map(|i| problem.dual_diagonal(i)).collect();
        let qbar = (0..n)
            .map(|i| problem.x().row(i).squared_norm() + diag[i])
            .collect();
        DualCoordinateDescent {
            problem,
            alpha: vec![0.0; n],
            w: vec![0.0; problem.n_features()],
            qbar,
            diag,
            upper: (0..n).map(|i| problem.dual_upper_bound(i)).collect(),
            order: (0..n).collect(),
            rng: ChaCha8Rng::seed_from_u64(seed),
            epochs: 0,
        }
    }

    pub fn epoch(&mut self) {
        self.order.shuffle(&mut self.rng);
        let x = self.problem.x();
        let y = self.problem.y();
        for &i in &self.order {
            let row = x.row(i);
            let old = self.alpha[i];
            let grad = y[i] * row.dot(&self.w) - 1.0 + self.diag[i] * old;
            let new = if self.qbar[i] > 0.0 {
                (old - grad / self.qbar[i]).clamp(0.0, self.upper[i])
            } else if grad < 0.0 {
                // empty row under hinge loss: the dual is linear in alpha_i
                self.upper[i]
            } else {
                old
            };
            if new != old {
                row.axpy_into((new - old) * y[i], &mut self.w);
                self.alpha[i] = new;
            }
        }
        self.epochs += 1;
    }

    pub fn epochs(&self) -> usize {
        self.epochs
    }

    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }

    pub fn weights(&self) -> &[f64] {
        &self.w
    }

    pub fn dual_objective(&self) -> f64 {
        let mut linear = 0.0;
        let mut diag = 0.0;
        for (i, &a) in self.alpha.iter().enumerate() {
            linear += a;
            diag += self.diag[i] * a * a;
        }
        let wnorm: f64 = self.w.iter().map(|v| v * v).sum();
        linear - 0.5 * wnorm - 0.5 * diag
    }

    pub fn primal_objective(&self) -> f64 {
        primal_objective(self.problem, &WeightVector(self.w.clone()))
    }

    fn gap_status(&self) -> (f64, f64, f64) {
        let primal = self.primal_objective();
        let dual = self.dual_objective();
        let rel = if primal > 0.0 { (primal - dual) / primal } else { primal - dual };
        (primal, dual, rel)
    }

    pub fn into_fit(self, tol: f64, started: Instant) -> BinaryFit {
        let (primal, dual, relative_gap) = self.gap_status();
        BinaryFit {
            report: ConvergenceReport {
                epochs: self.epochs,
                primal,
                dual,
                relative_gap,
                converged: relative_gap <= tol,
                elapsed_secs: started.elapsed().as_secs_f64(),
            },
            weights: WeightVector(self.w),
            alpha: self.alpha,
        }
    }
}

/// Solves one binary problem in the dual until the relative duality gap
/// drops to `tol` or `max_iter` epochs have run. Hitting the epoch limit is
/// not an error; it shows up as `converged = false` in the report.
pub fn train_binary(p: &BinaryProblem<'_>, tol: f64, max_iter: usize, seed: u64) -> Result<BinaryFit> {
    if p.n_rows() == 0 {
        return Err(Error::Data("cannot train on an empty feature matrix".into()));
    }
    if tol.is_nan() || tol <= 0.0 || max_iter == 0 {
        return Err(Error::Config("tol must be positive and max_iter at least 1".into()));
    }
    let started = Instant::now();
    let mut solver = DualCoordinateDescent::new(p, seed);
    while solver.epochs() < max_iter {
        solver.epoch();
        if solver.gap_status().2 <= tol {
            break;
        }
    }
    let fit = solver.into_fit(tol, started);
    if !fit.report.converged {
        log::debug!(
            "solver stopped after {} epochs with relative gap {:e}",
            fit.report.epochs,
            fit.report.relative_gap
        );
    }
    Ok(fit)
}
