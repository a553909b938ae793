//! Contamination-threshold flagging and precision/recall/F1 reports.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Flagging rule: the proportion of points predicted to be outliers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdRule {
    contamination: f64,
}

impl ThresholdRule {
    pub fn new(contamination: f64) -> Result<Self> {
        if !(contamination > 0.0 && contamination < 1.0) {
            return Err(Error::InvalidParameter {
                name: "contamination",
                reason: format!("must lie in (0, 1), got {contamination}"),
            });
        }
        Ok(Self { contamination })
    }

    pub fn contamination(&self) -> f64 {
        self.contamination
    }

    /// Number of points flagged for `n` scores: ceil(contamination * n), so
    /// any positive contamination flags at least one point.
    pub fn flag_count(&self, n: usize) -> usize {
        (self.contamination * n as f64).ceil() as usize
    }
}

/// Confusion counts and derived metrics for one flagging.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub true_positives: usize,
    pub false_positives: usize,
    pub false_negatives: usize,
    pub true_negatives: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// Flags the `ceil(contamination * n)` highest scores; ties at the cut go to
/// the lower insertion index. Rank-based, so any strictly monotone transform
/// of the scores flags the same points.
pub fn flag_outliers(scores: &[f64], rule: &ThresholdRule) -> Result<Vec<bool>> {
    if scores.is_empty() {
        return Err(Error::InvalidParameter {
            name: "scores",
            reason: "cannot flag an empty score array".into(),
        });
    }
    if let Some(&bad) = scores.iter().find(|s| !s.is_finite()) {
        return Err(Error::InvalidParameter {
            name: "scores",
            reason: format!("scores must be finite, got {bad}"),
        });
    }
    let n = scores.len();
    let count = rule.flag_count(n).min(n);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_unstable_by(|&a, &b| {
        scores[b]
            .partial_cmp(&scores[a])
            .expect("finite scores")
            .then_with(|| a.cmp(&b))
    });
    let mut flags = vec![false; n];
    for &idx in &order[..count] {
        flags[idx] = true;
    }
    Ok(flags)
}

/// Confusion counts with the standard zero-denominator fallbacks:
/// precision and recall are 0 when undefined, and F1 is 0 when
/// precision + recall is 0.
pub fn f1_report(predicted: &[bool], truth: &[bool]) -> Result<EvalReport> {
    if predicted.len() != truth.len() {
        return Err(Error::LabelLengthMismatch {
            labels: truth.len(),
            points: predicted.len(),
        });
    }
    let mut tp = 0;
    let mut fp = 0;
    let mut fn_ = 0;
    let mut tn = 0;
    for (&p, &t) in predicted.iter().zip(truth) {
        match (p, t) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, true) => fn_ += 1,
            (false, false) => tn += 1,
        }
    }
    let precision = if tp + fp > 0 {
        tp as f64 / (tp + fp) as f64
    } else {
        0.0
    };
    let recall = if tp + fn_ > 0 {
        tp as f64 / (tp + fn_) as f64
    } else {
        0.0
    };
    let f1 = if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    };
    Ok(EvalReport {
        true_positives: tp,
        false_positives: fp,
        false_negatives: fn_,
        true_negatives: tn,
        precision,
        recall,
        f1,
    })
}
