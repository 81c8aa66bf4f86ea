use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{train_rows, TrainConfig};
use crate::corpus::Label;
use crate::error::{Error, Result};
use crate::features::FeatureVector;
use crate::parallel::Execution;

#[derive(Debug, Clone, PartialEq)]
pub struct CandidateScore {
    pub c: f64,
    pub gamma: f64,
    pub fold_accuracies: Vec<f64>,
    pub mean_accuracy: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CvReport {
    /// Fold index of every sample.
    pub assignment: Vec<usize>,
    pub candidates: Vec<CandidateScore>,
    pub best: CandidateScore,
}

/// Seeded stratified fold assignment. Each class is shuffled and dealt
/// round-robin, continuing where the previous class stopped, so every fold
/// holds each class's share within one member.
pub fn stratified_folds(labels: &[Label], folds: usize, seed: u64) -> Result<Vec<usize>> {
    if folds < 2 {
        return Err(Error::Config("folds must be at least 2".into()));
    }
    let paid: Vec<usize> = (0..labels.len())
        .filter(|&i| labels[i] == Label::Paid)
        .collect();
    let normal: Vec<usize> = (0..labels.len())
        .filter(|&i| labels[i] == Label::Normal)
        .collect();
    let minority = paid.len().min(normal.len());
    if folds > minority {
        return Err(Error::TooManyFolds { folds, minority });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut assignment = vec![0; labels.len()];
    let mut next = 0;
    for mut class in [paid, normal] {
        class.shuffle(&mut rng);
        for i in class {
            assignment[i] = next;
            next = (next + 1) % folds;
        }
    }
    Ok(assignment)
}

/// Mean held-out accuracy of every `(c, gamma)` candidate. The best one has
/// the highest mean; ties go to the smaller C, then the smaller gamma.
/// Fold `f` trains with seed `cfg.seed + f`.
pub fn cross_validate(
    vectors: &[FeatureVector],
    labels: &[Label],
    cfg: &TrainConfig,
    exec: Execution,
) -> Result<CvReport> {
    cfg.validate()?;
    if vectors.len() != labels.len() {
        return Err(Error::DimensionMismatch {
            expected: vectors.len(),
            got: labels.len(),
        });
    }
    let assignment = stratified_folds(labels, cfg.folds, cfg.seed)?;
    let rows: Vec<Vec<f64>> = vectors.iter().map(|v| cfg.feature_mask.select(v)).collect();
    let candidates = cfg.candidates();

    let jobs: Vec<(usize, usize)> = (0..candidates.len())
        .flat_map(|c| (0..cfg.folds).map(move |f| (c, f)))
        .collect();
    let accuracies = exec.map(&jobs, |&(cand, fold)| -> Result<f64> {
        let (c, gamma) = candidates[cand];
        let mut train_x = Vec::new();
        let mut train_y = Vec::new();
        let mut test = Vec::new();
        for (i, &f) in assignment.iter().enumerate() {
            if f == fold {
                test.push(i);
            } else {
                train_x.push(rows[i].clone());
                train_y.push(labels[i]);
            }
        }
        let fold_cfg = TrainConfig {
            seed: cfg.seed.wrapping_add(fold as u64),
            ..cfg.clone()
        };
        let outcome = train_rows(
            &train_x,
            &train_y,
            cfg.feature_mask.clone(),
            c,
            gamma,
            &fold_cfg,
        )?;
        let correct = test
            .iter()
            .filter(|&&i| {
                let d = outcome.model.decision_raw(&rows[i]).expect("masked row");
                Label::from_sign(d) == labels[i]
            })
            .count();
        Ok(correct as f64 / test.len() as f64)
    });

    let mut scores = Vec::with_capacity(candidates.len());
    let mut accuracies = accuracies.into_iter();
    for &(c, gamma) in &candidates {
        let fold_accuracies = accuracies
            .by_ref()
            .take(cfg.folds)
            .collect::<Result<Vec<f64>>>()?;
        let mean_accuracy = fold_accuracies.iter().sum::<f64>() / cfg.folds as f64;
        scores.push(CandidateScore {
            c,
            gamma,
            fold_accuracies,
            mean_accuracy,
        });
    }
    let best = scores
        .iter()
        .max_by(|a, b| {
            a.mean_accuracy
                .total_cmp(&b.mean_accuracy)
                .then(b.c.total_cmp(&a.c))
                .then(b.gamma.total_cmp(&a.gamma))
        })
        .cloned()
        .expect("at least one candidate");
    Ok(CvReport {
        assignment,
        candidates: scores,
        best,
    })
}
