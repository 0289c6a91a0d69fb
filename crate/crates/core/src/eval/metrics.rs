use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal::ClassLabel;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confusion {
    pub tp: usize,
    pub tn: usize,
    pub fp: usize,
    pub fn_: usize,
}

impl Confusion {
    pub fn from_predictions(predicted: &[ClassLabel], truth: &[ClassLabel]) -> Result<Self> {
        if predicted.len() != truth.len() {
            return Err(Error::param("predictions and labels differ in length"));
        }
        let mut c = Confusion::default();
        for (&p, &t) in predicted.iter().zip(truth) {
            c.record(p, t);
        }
        Ok(c)
    }

    pub fn record(&mut self, predicted: ClassLabel, truth: ClassLabel) {
        match (predicted.is_positive(), truth.is_positive()) {
            (true, true) => self.tp += 1,
            (false, false) => self.tn += 1,
            (true, false) => self.fp += 1,
            (false, true) => self.fn_ += 1,
        }
    }

    pub fn total(&self) -> usize {
        self.tp + self.tn + self.fp + self.fn_
    }

    /// Percent correct; 0 for an empty table.
    pub fn accuracy(&self) -> f64 {
        ratio(self.tp + self.tn, self.total())
    }

    /// Percent of positives detected.
    pub fn sensitivity(&self) -> f64 {
        ratio(self.tp, self.tp + self.fn_)
    }

    pub fn specificity(&self) -> f64 {
        ratio(self.tn, self.tn + self.fp)
    }

    /// `1 − accuracy/100`.
    pub fn error_rate(&self) -> f64 {
        1.0 - self.accuracy() / 100.0
    }
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64 * 100.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RocPoint {
    pub threshold: f64,
    pub tpr: f64,
    pub fpr: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RocCurve {
    /// Ordered by rising threshold.
    pub points: Vec<RocPoint>,
    pub auc: f64,
    pub best_threshold: f64,
    pub best_youden: f64,
}

/// Whether `p` counts as positive at `threshold`. Threshold 0 accepts
/// everything, threshold 1 nothing, and in between `p > threshold`.
pub fn exceeds(p: f64, threshold: f64) -> bool {
    if threshold <= 0.0 {
        true
    } else if threshold >= 1.0 {
        false
    } else {
        p > threshold
    }
}

/// Sweeps thresholds `0, 1/steps, …, 1` and integrates the ROC by trapezoids.
pub fn threshold_sweep(probabilities: &[f64], labels: &[ClassLabel], steps: usize) -> Result<RocCurve> {
    if probabilities.len() != labels.len() {
        return Err(Error::param("probabilities and labels differ in length"));
    }
    if steps == 0 {
        return Err(Error::param("threshold sweep needs at least one step"));
    }
    let pos = labels.iter().filter(|l| l.is_positive()).count();
    let neg = labels.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(Error::data("threshold sweep needs both classes"));
    }
    let points: Vec<RocPoint> = (0..=steps)
        .map(|s| {
            let threshold = s as f64 / steps as f64;
            let (mut tp, mut fp) = (0usize, 0usize);
            for (&p, l) in probabilities.iter().zip(labels) {
                if exceeds(p, threshold) {
                    if l.is_positive() {
                        tp += 1;
                    } else {
                        fp += 1;
                    }
                }
            }
            RocPoint {
                threshold,
                tpr: tp as f64 / pos as f64,
                fpr: fp as f64 / neg as f64,
            }
        })
        .collect();
    let auc = points
        .windows(2)
        .map(|w| (w[0].fpr - w[1].fpr) * (w[0].tpr + w[1].tpr) / 2.0)
        .sum();
    let mut best = points[0];
    for p in &points[1..] {
        if p.tpr - p.fpr > best.tpr - best.fpr {
            best = *p;
        }
    }
    Ok(RocCurve {
        points,
        auc,
        best_threshold: best.threshold,
        best_youden: best.tpr - best.fpr,
    })
}

/// Most frequent class; an exact tie goes to the positive class.
pub fn majority_vote(classes: &[ClassLabel]) -> Result<ClassLabel> {
    if classes.is_empty() {
        return Err(Error::param("majority vote needs at least one prediction"));
    }
    let pos = classes.iter().filter(|c| c.is_positive()).count();
    Ok(if 2 * pos >= classes.len() {
        ClassLabel::Positive
    } else {
        ClassLabel::Negative
    })
}

/// Mean of `|p − 1[label positive]|`.
pub fn mean_absolute_probability_error(probabilities: &[f64], labels: &[ClassLabel]) -> Result<f64> {
    if probabilities.len() != labels.len() || labels.is_empty() {
        return Err(Error::param("probabilities and labels must be non-empty and equal in length"));
    }
    let total: f64 = probabilities
        .iter()
        .zip(labels)
        .map(|(&p, l)| (p - if l.is_positive() { 1.0 } else { 0.0 }).abs())
        .sum();
    Ok(total / labels.len() as f64)
}
