//! Thresholded classification metrics and precision–recall sweeps.
//!
//! A sample is called positive when its probability is `>= threshold`.
//! Metric values are reported as percentages. Zero denominators give
//! precision 0 and MCC 0.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: u64,
    pub fp: u64,
    pub fn_: u64,
    pub tn: u64,
}

impl ConfusionCounts {
    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.fn_ + self.tn
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricPoint {
    pub threshold: f64,
    pub recall: f64,
    pub precision: f64,
    pub f1: f64,
    pub mcc: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrCurve {
    pub points: Vec<MetricPoint>,
    /// Index of the highest-F1 point; ties resolve to the lowest threshold.
    pub best: usize,
}

impl PrCurve {
    pub fn best_point(&self) -> &MetricPoint {
        &self.points[self.best]
    }
}

pub fn confusion(pred: &[f64], y: &[bool], threshold: f64) -> ConfusionCounts {
    let mut c = ConfusionCounts::default();
    for (&p, &t) in pred.iter().zip(y) {
        match (p >= threshold, t) {
            (true, true) => c.tp += 1,
            (true, false) => c.fp += 1,
            (false, true) => c.fn_ += 1,
            (false, false) => c.tn += 1,
        }
    }
    c
}

fn ratio(num: f64, den: f64) -> f64 {
    if den > 0.0 {
        num / den
    } else {
        0.0
    }
}

/// Recall, precision, F1 and MCC in percent. The threshold field is left at
/// zero; [`sweep`] fills it in.
pub fn point_metrics(c: &ConfusionCounts) -> MetricPoint {
    let (tp, fp, fn_, tn) = (c.tp as f64, c.fp as f64, c.fn_ as f64, c.tn as f64);
    let recall = ratio(tp, tp + fn_);
    let precision = ratio(tp, tp + fp);
    let f1 = ratio(2.0 * precision * recall, precision + recall);
    let den = (tp + fp) * (tp + fn_) * (tn + fp) * (tn + fn_);
    let mcc = if den > 0.0 {
        (tp * tn - fp * fn_) / libm::sqrt(den)
    } else {
        0.0
    };
    MetricPoint {
        threshold: 0.0,
        recall: 100.0 * recall,
        precision: 100.0 * precision,
        f1: 100.0 * f1,
        mcc: 100.0 * mcc,
    }
}

/// `0.05, 0.10, …, 0.95`.
pub fn default_thresholds() -> Vec<f64> {
    (1..20).map(|k| k as f64 / 20.0).collect()
}

/// One metric point per threshold. Thresholds must be strictly increasing.
pub fn sweep(pred: &[f64], y: &[bool], thresholds: &[f64]) -> PrCurve {
    debug_assert!(thresholds.windows(2).all(|w| w[0] < w[1]));
    let points: Vec<MetricPoint> = thresholds
        .iter()
        .map(|&t| MetricPoint {
            threshold: t,
            ..point_metrics(&confusion(pred, y, t))
        })
        .collect();
    let mut best = 0;
    for (i, p) in points.iter().enumerate() {
        if p.f1 > points[best].f1 {
            best = i;
        }
    }
    PrCurve { points, best }
}

/// Mean and population standard deviation.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (0.0, 0.0);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, libm::sqrt(var))
}
