use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Binary confusion counts with CT (class 1) as the positive class.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

impl ConfusionMatrix {
    pub fn total(&self) -> usize {
        self.tp + self.fp + self.tn + self.fn_
    }
}

pub fn confusion(preds: &[u8], truth: &[u8]) -> Result<ConfusionMatrix> {
    if preds.len() != truth.len() {
        return Err(Error::InvalidInput(format!(
            "{} predictions for {} labels",
            preds.len(),
            truth.len()
        )));
    }
    if preds.is_empty() {
        return Err(Error::InvalidInput("no predictions to score".into()));
    }
    let mut cm = ConfusionMatrix::default();
    for (&p, &t) in preds.iter().zip(truth) {
        match (p, t) {
            (1, 1) => cm.tp += 1,
            (1, 0) => cm.fp += 1,
            (0, 0) => cm.tn += 1,
            (0, 1) => cm.fn_ += 1,
            _ => return Err(Error::InvalidInput(format!("labels must be 0 or 1, got ({p}, {t})"))),
        }
    }
    Ok(cm)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: usize,
    /// Set when the metric's denominator was zero and it was defined as 0.
    pub precision_undefined: bool,
    pub recall_undefined: bool,
}

fn class_metrics(tp: usize, fp: usize, fn_: usize) -> ClassMetrics {
    let ratio = |num: usize, den: usize| if den == 0 { (0.0, true) } else { (num as f64 / den as f64, false) };
    let (precision, precision_undefined) = ratio(tp, tp + fp);
    let (recall, recall_undefined) = ratio(tp, tp + fn_);
    let f1 = if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    };
    ClassMetrics {
        precision,
        recall,
        f1,
        support: tp + fn_,
        precision_undefined,
        recall_undefined,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricSet {
    pub accuracy: f64,
    pub ct: ClassMetrics,
    pub real: ClassMetrics,
    pub macro_precision: f64,
    pub macro_recall: f64,
    pub macro_f1: f64,
}

impl MetricSet {
    pub fn zero_division(&self) -> bool {
        [self.ct, self.real]
            .iter()
            .any(|c| c.precision_undefined || c.recall_undefined)
    }
}

pub fn metrics(cm: &ConfusionMatrix) -> MetricSet {
    let total = cm.total();
    let accuracy = if total == 0 {
        0.0
    } else {
        (cm.tp + cm.tn) as f64 / total as f64
    };
    let ct = class_metrics(cm.tp, cm.fp, cm.fn_);
    // the Real class sees the matrix mirrored
    let real = class_metrics(cm.tn, cm.fn_, cm.fp);
    MetricSet {
        accuracy,
        ct,
        real,
        macro_precision: (ct.precision + real.precision) / 2.0,
        macro_recall: (ct.recall + real.recall) / 2.0,
        macro_f1: (ct.f1 + real.f1) / 2.0,
    }
}

pub fn score(preds: &[u8], truth: &[u8]) -> Result<MetricSet> {
    Ok(metrics(&confusion(preds, truth)?))
}
