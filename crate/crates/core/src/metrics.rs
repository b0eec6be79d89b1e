//! Classification and ranking-comparison metrics. The positive class is
//! `novel`; precision, recall and F1 are macro-averaged over both classes.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domain::Classification;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum MetricsError {
    #[error("confusion matrix is empty")]
    EmptyMatrix,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

impl ConfusionMatrix {
    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.tn + self.fn_
    }

    pub fn record(&mut self, truth: Classification, predicted: Classification) {
        match (truth, predicted) {
            (Classification::Novel, Classification::Novel) => self.tp += 1,
            (Classification::NotNovel, Classification::Novel) => self.fp += 1,
            (Classification::NotNovel, Classification::NotNovel) => self.tn += 1,
            (Classification::Novel, Classification::NotNovel) => self.fn_ += 1,
        }
    }

    pub fn from_pairs(pairs: impl IntoIterator<Item = (Classification, Classification)>) -> Self {
        let mut cm = ConfusionMatrix::default();
        for (t, p) in pairs {
            cm.record(t, p);
        }
        cm
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassificationMetrics {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// `None` when chance agreement is total.
    pub kappa: Option<f64>,
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

fn f1(p: f64, r: f64) -> f64 {
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

/// A class with no predictions (or no members) scores 0 precision (recall).
pub fn classification_metrics(cm: &ConfusionMatrix) -> Result<ClassificationMetrics, MetricsError> {
    let n = cm.total();
    if n == 0 {
        return Err(MetricsError::EmptyMatrix);
    }
    let (p_novel, r_novel) = (ratio(cm.tp, cm.tp + cm.fp), ratio(cm.tp, cm.tp + cm.fn_));
    let (p_not, r_not) = (ratio(cm.tn, cm.tn + cm.fn_), ratio(cm.tn, cm.tn + cm.fp));
    let nf = n as f64;
    let p_o = (cm.tp + cm.tn) as f64 / nf;
    let p_e = ((cm.tp + cm.fp) as f64 * (cm.tp + cm.fn_) as f64 + (cm.tn + cm.fn_) as f64 * (cm.tn + cm.fp) as f64)
        / (nf * nf);
    Ok(ClassificationMetrics {
        accuracy: p_o,
        precision: (p_novel + p_not) / 2.0,
        recall: (r_novel + r_not) / 2.0,
        f1: (f1(p_novel, r_novel) + f1(p_not, r_not)) / 2.0,
        kappa: if p_e == 1.0 { None } else { Some((p_o - p_e) / (1.0 - p_e)) },
    })
}

/// Shared ids between two ranked lists.
pub fn overlap(reference: &[String], variant: &[String]) -> usize {
    reference.iter().filter(|id| variant.contains(id)).count()
}

/// Mean absolute difference in position among shared ids.
pub fn rank_shift(reference: &[String], variant: &[String]) -> Option<f64> {
    let pos: HashMap<&str, usize> = variant.iter().enumerate().map(|(i, id)| (id.as_str(), i)).collect();
    let shifts: Vec<f64> = reference
        .iter()
        .enumerate()
        .filter_map(|(i, id)| pos.get(id.as_str()).map(|&j| (i as f64 - j as f64).abs()))
        .collect();
    if shifts.is_empty() {
        None
    } else {
        Some(shifts.iter().sum::<f64>() / shifts.len() as f64)
    }
}
