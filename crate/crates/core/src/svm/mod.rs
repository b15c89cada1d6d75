//! One-class nu-SVM novelty detection.
//!
//! Schölkopf formulation: minimize (1/2) a'Ka subject to 0 <= a_i <= 1/(nu l)
//! and sum a_i = 1, solved by SMO on maximal-KKT-violating pairs. The
//! decision function sum_i a_i K(x_i, x) - rho is positive on normal points
//! and negative on novelties.

mod model_file;
mod smo;

pub use model_file::{load_model, parse_model, save_model, write_model};

use crate::error::{Error, Result};
use crate::matrix::FeatureMatrix;
use crate::num::Scalar;
use crate::selector::majority_smooth;
use crate::stats::StandardizationParams;

/// Kernel family and parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelParams<F> {
    pub kind: KernelKind,
    /// RBF width; ignored by the linear kernel.
    pub gamma: F,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelKind {
    Rbf,
    Linear,
}

impl<F: Scalar> KernelParams<F> {
    pub fn rbf(gamma: F) -> Result<Self> {
        if gamma.is_nan() || gamma <= F::zero() {
            return Err(Error::param("RBF gamma must be positive"));
        }
        Ok(KernelParams {
            kind: KernelKind::Rbf,
            gamma,
        })
    }

    pub fn linear() -> Self {
        KernelParams {
            kind: KernelKind::Linear,
            gamma: F::zero(),
        }
    }
}

/// Evaluates the kernel on two equal-dimension vectors.
pub fn kernel_eval<F: Scalar>(x: &[F], y: &[F], params: &KernelParams<F>) -> Result<F> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    Ok(kernel_eval_unchecked(x, y, params))
}

pub(crate) fn kernel_eval_unchecked<F: Scalar>(x: &[F], y: &[F], params: &KernelParams<F>) -> F {
    match params.kind {
        KernelKind::Linear => x.iter().zip(y).fold(F::zero(), |acc, (&a, &b)| acc + a * b),
        KernelKind::Rbf => {
            let sq = x.iter().zip(y).fold(F::zero(), |acc, (&a, &b)| {
                let d = a - b;
                acc + d * d
            });
            (-params.gamma * sq).exp()
        }
    }
}

/// Solver parameters.
#[derive(Debug, Clone, Copy)]
pub struct TrainConfig<F> {
    /// KKT violation threshold for convergence.
    pub tol: F,
    /// Pair-update budget.
    pub max_iter: u64,
    /// Full Gram matrix is precomputed up to this many rows; beyond it an
    /// LRU row cache is used. Results do not depend on this.
    pub full_gram_limit: usize,
    /// Row capacity of the LRU cache.
    pub lru_rows: usize,
}

impl<F: Scalar> Default for TrainConfig<F> {
    fn default() -> Self {
        TrainConfig {
            tol: F::from_f64_lossy(1e-3),
            max_iter: 10_000_000,
            full_gram_limit: 8192,
            lru_rows: 256,
        }
    }
}

/// Trained detector.
#[derive(Debug, Clone, PartialEq)]
pub struct OcsvmModel<F> {
    pub support_vectors: Vec<Vec<F>>,
    pub alphas: Vec<F>,
    pub rho: F,
    pub kernel: KernelParams<F>,
    pub nu: F,
    /// Columns the model expects, in order.
    pub feature_names: Vec<String>,
    /// Normalization fitted at training time; `None` when inputs are already
    /// in model space.
    pub standardization: Option<StandardizationParams<F>>,
    /// Window used to rebuild `corr(A,B)` columns on foreign datasets.
    pub correlation_window: Option<usize>,
}

impl<F: Scalar> OcsvmModel<F> {
    pub fn dimension(&self) -> usize {
        self.support_vectors.first().map_or(0, Vec::len)
    }

    /// Decision value of one (already standardized) point.
    pub fn decision(&self, x: &[F]) -> Result<F> {
        if x.len() != self.dimension() {
            return Err(Error::LengthMismatch {
                left: x.len(),
                right: self.dimension(),
            });
        }
        let mut sum = F::zero();
        for (sv, &alpha) in self.support_vectors.iter().zip(&self.alphas) {
            sum = sum + alpha * kernel_eval_unchecked(sv, x, &self.kernel);
        }
        Ok(sum - self.rho)
    }

    /// Per-row verdicts over a standardized matrix; `true` marks abnormal
    /// (negative decision). Columns must match the model exactly.
    pub fn predict(&self, matrix: &FeatureMatrix<F>) -> Result<Vec<bool>> {
        self.decisions(matrix)
            .map(|d| d.into_iter().map(|v| v < F::zero()).collect())
    }

    /// Raw decision values per row.
    pub fn decisions(&self, matrix: &FeatureMatrix<F>) -> Result<Vec<F>> {
        if matrix.column_names() != self.feature_names.as_slice() {
            return Err(Error::ColumnMismatch(format!(
                "model expects columns {:?}",
                self.feature_names
            )));
        }
        (0..matrix.nrows()).map(|r| self.decision(matrix.row(r))).collect()
    }

    /// Verdicts smoothed with k-bin majority blocks.
    pub fn predict_smoothed(&self, matrix: &FeatureMatrix<F>, k: usize) -> Result<Vec<bool>> {
        Ok(majority_smooth(&self.predict(matrix)?, k))
    }
}

/// Convergence and solution-quality report.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainingDiagnostics<F> {
    pub iterations: u64,
    /// Final maximal KKT violation (duality gap proxy the solver bounds).
    pub kkt_violation: F,
    /// Dual objective (1/2) a'Ka at exit.
    pub objective: F,
    pub support_vector_count: usize,
    pub margin_sv_count: usize,
    /// Fraction of training points scored negative by the trained model.
    pub fraction_negative: F,
    pub converged: bool,
}

/// Trains a one-class nu-SVM on (already standardized) rows.
pub fn train<F: Scalar>(
    rows: &[Vec<F>],
    nu: F,
    kernel: KernelParams<F>,
    config: &TrainConfig<F>,
) -> Result<(OcsvmModel<F>, TrainingDiagnostics<F>)> {
    if rows.len() < 2 {
        return Err(Error::param("training needs at least 2 rows"));
    }
    if nu.is_nan() || nu <= F::zero() || nu > F::one() {
        return Err(Error::param("nu must lie in (0, 1]"));
    }
    if config.tol.is_nan() || config.tol <= F::zero() {
        return Err(Error::param("tolerance must be positive"));
    }
    let dim = rows[0].len();
    if rows.iter().any(|r| r.len() != dim) {
        return Err(Error::param("training rows have mixed dimensions"));
    }
    if rows.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::param("training rows contain non-finite values"));
    }

    let solution = smo::solve(rows, nu, &kernel, config);

    let mut support_vectors = Vec::new();
    let mut alphas = Vec::new();
    for (i, &alpha) in solution.alpha.iter().enumerate() {
        if alpha > F::zero() {
            support_vectors.push(rows[i].clone());
            alphas.push(alpha);
        }
    }
    let negatives = solution
        .gradient
        .iter()
        .filter(|&&g| g - solution.rho < F::zero())
        .count();

    let feature_names = (0..dim).map(|c| format!("x{c}")).collect();
    let model = OcsvmModel {
        support_vectors,
        alphas,
        rho: solution.rho,
        kernel,
        nu,
        feature_names,
        standardization: None,
        correlation_window: None,
    };
    let diagnostics = TrainingDiagnostics {
        iterations: solution.iterations,
        kkt_violation: solution.kkt_violation,
        objective: solution.objective,
        support_vector_count: model.support_vectors.len(),
        margin_sv_count: solution.margin_sv_count,
        fraction_negative: F::from_count(negatives) / F::from_count(rows.len()),
        converged: solution.converged,
    };
    Ok((model, diagnostics))
}

/// One grid cell of a tuning run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TuneCell<F> {
    pub nu: F,
    pub gamma: F,
    /// TPR - FPR on the validation set; `None` when training failed.
    pub score: Option<F>,
}

/// Winning (nu, gamma) pair plus the per-cell scores.
pub type TuneOutcome<F> = ((F, F), Vec<TuneCell<F>>);

/// Grid search over (nu, gamma): trains per cell and scores TPR - FPR on a
/// labeled validation set (`true` = abnormal). Ties prefer smaller nu, then
/// smaller gamma.
pub fn tune<F: Scalar>(
    train_rows: &[Vec<F>],
    validation_rows: &[Vec<F>],
    validation_labels: &[bool],
    nus: &[F],
    gammas: &[F],
    config: &TrainConfig<F>,
) -> Result<TuneOutcome<F>> {
    if nus.is_empty() || gammas.is_empty() {
        return Err(Error::param("tuning grid must be non-empty"));
    }
    if validation_rows.len() != validation_labels.len() {
        return Err(Error::LengthMismatch {
            left: validation_rows.len(),
            right: validation_labels.len(),
        });
    }

    let mut cells = Vec::with_capacity(nus.len() * gammas.len());
    let mut best: Option<(F, F, F)> = None; // score, nu, gamma
    for &nu in nus {
        for &gamma in gammas {
            let score = KernelParams::rbf(gamma)
                .and_then(|kernel| train(train_rows, nu, kernel, config))
                .ok()
                .map(|(model, _)| {
                    let mut tp = 0u64;
                    let mut fp = 0u64;
                    let mut pos = 0u64;
                    let mut neg = 0u64;
                    for (row, &label) in validation_rows.iter().zip(validation_labels) {
                        let abnormal = model.decision(row).map(|d| d < F::zero()).unwrap_or(false);
                        if label {
                            pos += 1;
                            if abnormal {
                                tp += 1;
                            }
                        } else {
                            neg += 1;
                            if abnormal {
                                fp += 1;
                            }
                        }
                    }
                    let ratio = |n: u64, d: u64| {
                        if d == 0 {
                            F::zero()
                        } else {
                            F::from_count(n as usize) / F::from_count(d as usize)
                        }
                    };
                    ratio(tp, pos) - ratio(fp, neg)
                });
            cells.push(TuneCell { nu, gamma, score });
            if let Some(s) = score {
                let better = match best {
                    None => true,
                    Some((bs, bn, bg)) => {
                        s > bs || (s == bs && (nu < bn || (nu == bn && gamma < bg)))
                    }
                };
                if better {
                    best = Some((s, nu, gamma));
                }
            }
        }
    }

    let (_, nu, gamma) =
        best.ok_or_else(|| Error::param("every tuning cell failed to train"))?;
    Ok(((nu, gamma), cells))
}
