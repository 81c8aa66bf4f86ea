//! Confusion matrix and the four summary metrics. Paid posters are the
//! positive class.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::corpus::Label;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ConfusionMatrix {
    pub tp: u64,
    pub fp: u64,
    pub fn_: u64,
    pub tn: u64,
}

impl ConfusionMatrix {
    pub fn new(tp: u64, fp: u64, fn_: u64, tn: u64) -> Self {
        ConfusionMatrix { tp, fp, fn_, tn }
    }

    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.fn_ + self.tn
    }

    pub fn record(&mut self, predicted: Label, truth: Label) {
        match (predicted, truth) {
            (Label::Paid, Label::Paid) => self.tp += 1,
            (Label::Paid, Label::Normal) => self.fp += 1,
            (Label::Normal, Label::Paid) => self.fn_ += 1,
            (Label::Normal, Label::Normal) => self.tn += 1,
        }
    }

    /// Builds the matrix from paired `(predicted, truth)` labels.
    pub fn from_pairs(pairs: impl IntoIterator<Item = (Label, Label)>) -> Self {
        let mut m = ConfusionMatrix::default();
        for (p, t) in pairs {
            m.record(p, t);
        }
        m
    }

    pub fn metrics(&self) -> Result<Metrics> {
        metrics(self)
    }
}

/// Counts predictions against ground truth. Both maps must cover the same
/// users.
pub fn confusion(
    predictions: &BTreeMap<String, Label>,
    truth: &BTreeMap<String, Label>,
) -> Result<ConfusionMatrix> {
    let missing_in_predictions: Vec<String> = truth
        .keys()
        .filter(|k| !predictions.contains_key(*k))
        .cloned()
        .collect();
    let missing_in_truth: Vec<String> = predictions
        .keys()
        .filter(|k| !truth.contains_key(*k))
        .cloned()
        .collect();
    if !missing_in_predictions.is_empty() || !missing_in_truth.is_empty() {
        return Err(Error::KeyMismatch {
            missing_in_predictions,
            missing_in_truth,
        });
    }
    Ok(ConfusionMatrix::from_pairs(
        predictions.iter().map(|(user, p)| (*p, truth[user])),
    ))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Metrics {
    pub precision: f64,
    pub recall: f64,
    pub f_measure: f64,
    pub accuracy: f64,
    /// false when no user was predicted paid; precision is then reported as 0
    pub precision_defined: bool,
    /// false when no user is truly paid; recall is then reported as 0
    pub recall_defined: bool,
}

pub fn metrics(m: &ConfusionMatrix) -> Result<Metrics> {
    let total = m.total();
    if total == 0 {
        return Err(Error::EmptyConfusion);
    }
    let ratio = |num: u64, den: u64| {
        if den == 0 {
            0.0
        } else {
            num as f64 / den as f64
        }
    };
    let precision = ratio(m.tp, m.tp + m.fp);
    let recall = ratio(m.tp, m.tp + m.fn_);
    let f_measure = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    Ok(Metrics {
        precision,
        recall,
        f_measure,
        accuracy: ratio(m.tp + m.tn, total),
        precision_defined: m.tp + m.fp > 0,
        recall_defined: m.tp + m.fn_ > 0,
    })
}

/// `0.952380…` -> `"95.24%"`.
pub fn percent(x: f64) -> String {
    format!("{:.2}%", x * 100.0)
}

/// `tp,fp,fn,tn,precision,recall,f_measure,accuracy` with percentages.
pub fn machine_line(m: &ConfusionMatrix, s: &Metrics) -> String {
    format!(
        "{},{},{},{},{},{},{},{}",
        m.tp,
        m.fp,
        m.fn_,
        m.tn,
        percent(s.precision),
        percent(s.recall),
        percent(s.f_measure),
        percent(s.accuracy)
    )
}

pub fn report(m: &ConfusionMatrix, s: &Metrics) -> String {
    let mut out = String::new();
    let flag = |defined: bool| if defined { "" } else { " (undefined)" };
    let _ = writeln!(
        out,
        "                      classified normal  classified paid"
    );
    let _ = writeln!(out, "benchmark normal      {:>17}  {:>15}", m.tn, m.fp);
    let _ = writeln!(out, "benchmark paid        {:>17}  {:>15}", m.fn_, m.tp);
    let _ = writeln!(out);
    let _ = writeln!(
        out,
        "precision  {:>8}{}",
        percent(s.precision),
        flag(s.precision_defined)
    );
    let _ = writeln!(
        out,
        "recall     {:>8}{}",
        percent(s.recall),
        flag(s.recall_defined)
    );
    let _ = writeln!(out, "f-measure  {:>8}", percent(s.f_measure));
    let _ = writeln!(out, "accuracy   {:>8}", percent(s.accuracy));
    let _ = writeln!(out, "{}", machine_line(m, s));
    out
}
