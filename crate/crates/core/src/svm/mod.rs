//! Binary C-SVC with an RBF kernel.
//!
//! Features are min-max scaled on the training data, the dual is solved by
//! [`smo`], and only multipliers above zero are kept in the model. Paid
//! posters are the +1 class; a decision value of exactly 0 predicts normal.

pub mod cv;
pub mod io;
pub mod kernel;
pub mod scale;
pub mod smo;

use serde::{Deserialize, Serialize};

use crate::corpus::Label;
use crate::error::{Error, Result};
use crate::features::{FeatureMask, FeatureVector};
use crate::parallel::Execution;

pub use cv::{cross_validate, stratified_folds, CandidateScore, CvReport};
pub use io::{load, save, FORMAT_VERSION};
pub use kernel::rbf;
pub use scale::ScalingParams;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub c: f64,
    /// `None` means `1 / number of selected features`.
    pub gamma: Option<f64>,
    pub kkt_tol: f64,
    /// Iteration cap, in sweeps of `n` pair updates.
    pub max_passes: usize,
    pub folds: usize,
    pub seed: u64,
    /// `(c, gamma)` candidates for cross-validated selection.
    pub grid: Option<Vec<(f64, f64)>>,
    pub feature_mask: FeatureMask,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            c: 1.0,
            gamma: None,
            kkt_tol: 1e-3,
            max_passes: 10_000,
            folds: 10,
            seed: 0,
            grid: None,
            feature_mask: FeatureMask::all(),
        }
    }
}

impl TrainConfig {
    pub fn effective_gamma(&self) -> f64 {
        self.gamma.unwrap_or(1.0 / self.feature_mask.len() as f64)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |v: f64| v.is_finite() && v > 0.0;
        if !positive(self.c) {
            return Err(Error::Config(format!("C must be positive, got {}", self.c)));
        }
        if !positive(self.effective_gamma()) {
            return Err(Error::Config(format!(
                "gamma must be positive, got {}",
                self.effective_gamma()
            )));
        }
        if !positive(self.kkt_tol) {
            return Err(Error::Config("kkt_tol must be positive".into()));
        }
        if self.max_passes == 0 {
            return Err(Error::Config("max_passes must be positive".into()));
        }
        if self.folds < 2 {
            return Err(Error::Config("folds must be at least 2".into()));
        }
        if let Some(grid) = &self.grid {
            if grid.is_empty() {
                return Err(Error::Config("grid must not be empty".into()));
            }
            if grid.iter().any(|&(c, g)| !positive(c) || !positive(g)) {
                return Err(Error::Config("grid values must be positive".into()));
            }
        }
        Ok(())
    }

    /// Every combination of the given C and gamma values.
    pub fn grid_product(cs: &[f64], gammas: &[f64]) -> Vec<(f64, f64)> {
        cs.iter()
            .flat_map(|&c| gammas.iter().map(move |&g| (c, g)))
            .collect()
    }

    /// The `(c, gamma)` candidates cross-validation compares.
    pub fn candidates(&self) -> Vec<(f64, f64)> {
        self.grid
            .clone()
            .unwrap_or_else(|| vec![(self.c, self.effective_gamma())])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SvmModel {
    /// Scaled support vectors.
    pub support_vectors: Vec<Vec<f64>>,
    /// `alpha_i * y_i` for each support vector.
    pub dual_coefs: Vec<f64>,
    pub bias: f64,
    pub gamma: f64,
    pub c: f64,
    pub scaling: ScalingParams,
    pub feature_mask: FeatureMask,
    pub converged: bool,
    pub iterations: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prediction {
    pub label: Label,
    pub decision: f64,
}

/// Model plus what the solver saw on the training set.
#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: SvmModel,
    /// Multiplier of every training point, in input order.
    pub alpha: Vec<f64>,
    pub objective: f64,
    pub gap: f64,
}

impl SvmModel {
    pub fn decision_scaled(&self, scaled: &[f64]) -> f64 {
        self.support_vectors
            .iter()
            .zip(&self.dual_coefs)
            .map(|(sv, coef)| coef * kernel::rbf_unchecked(sv, scaled, self.gamma))
            .sum::<f64>()
            + self.bias
    }

    /// Decision value for already-selected, unscaled feature values.
    pub fn decision_raw(&self, selected: &[f64]) -> Result<f64> {
        if selected.len() != self.scaling.dims() {
            return Err(Error::DimensionMismatch {
                expected: self.scaling.dims(),
                got: selected.len(),
            });
        }
        Ok(self.decision_scaled(&self.scaling.transform(selected)))
    }

    pub fn predict(&self, v: &FeatureVector) -> Prediction {
        let selected = self.feature_mask.select(v);
        let decision = self.decision_scaled(&self.scaling.transform(&selected));
        Prediction {
            label: Label::from_sign(decision),
            decision,
        }
    }

    pub fn predict_all(&self, vectors: &[FeatureVector], exec: Execution) -> Vec<Prediction> {
        exec.map(vectors, |v| self.predict(v))
    }
}

pub fn predict(model: &SvmModel, v: &FeatureVector) -> Prediction {
    model.predict(v)
}

fn check_inputs(rows: &[Vec<f64>], labels: &[Label]) -> Result<()> {
    if rows.len() != labels.len() {
        return Err(Error::DimensionMismatch {
            expected: rows.len(),
            got: labels.len(),
        });
    }
    let paid = labels.iter().filter(|l| **l == Label::Paid).count();
    if rows.len() < 2 || paid == 0 || paid == labels.len() {
        return Err(Error::SingleClass);
    }
    for (r, row) in rows.iter().enumerate() {
        if let Some(column) = row.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { row: r, column });
        }
    }
    Ok(())
}

/// Trains on raw (unscaled) rows that already hold only the masked features.
pub fn train_rows(
    rows: &[Vec<f64>],
    labels: &[Label],
    mask: FeatureMask,
    c: f64,
    gamma: f64,
    cfg: &TrainConfig,
) -> Result<TrainOutcome> {
    check_inputs(rows, labels)?;
    let scaling = ScalingParams::fit(rows);
    let scaled: Vec<Vec<f64>> = rows.iter().map(|r| scaling.transform(r)).collect();
    let y: Vec<f64> = labels.iter().map(|l| l.sign()).collect();
    let params = smo::SmoParams {
        c,
        gamma,
        kkt_tol: cfg.kkt_tol,
        max_iter: cfg.max_passes.saturating_mul(rows.len()),
        seed: cfg.seed,
        record_trace: false,
    };
    let solution = smo::solve(&scaled, &y, &params);
    if !solution.converged {
        log::warn!(
            "SMO stopped after {} iterations without reaching kkt_tol {} (gap {:.3e})",
            solution.iterations,
            cfg.kkt_tol,
            solution.gap
        );
    }
    let (support_vectors, dual_coefs) = scaled
        .iter()
        .zip(&solution.alpha)
        .zip(&y)
        .filter(|((_, a), _)| **a > 0.0)
        .map(|((sv, a), yy)| (sv.clone(), a * yy))
        .unzip();
    Ok(TrainOutcome {
        model: SvmModel {
            support_vectors,
            dual_coefs,
            bias: solution.bias,
            gamma,
            c,
            scaling,
            feature_mask: mask,
            converged: solution.converged,
            iterations: solution.iterations,
        },
        alpha: solution.alpha,
        objective: solution.objective,
        gap: solution.gap,
    })
}

/// Trains with `cfg.c` and the effective gamma on the masked features.
pub fn train(vectors: &[FeatureVector], labels: &[Label], cfg: &TrainConfig) -> Result<SvmModel> {
    train_detailed(vectors, labels, cfg).map(|o| o.model)
}

pub fn train_detailed(
    vectors: &[FeatureVector],
    labels: &[Label],
    cfg: &TrainConfig,
) -> Result<TrainOutcome> {
    cfg.validate()?;
    let rows: Vec<Vec<f64>> = vectors.iter().map(|v| cfg.feature_mask.select(v)).collect();
    train_rows(
        &rows,
        labels,
        cfg.feature_mask.clone(),
        cfg.c,
        cfg.effective_gamma(),
        cfg,
    )
}
