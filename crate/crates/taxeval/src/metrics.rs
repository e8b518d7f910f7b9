//! The four rationality dimensions: Exclusivity, Coverage, Balance, and
//! Usability (Macro/Micro F1, Cohen's kappa).
//!
//! Exclusivity and the F1 scores consume model predictions; Coverage and
//! Balance consume gold labels only. Entropy uses the natural logarithm; the
//! base cancels after normalization by log(m).

use crate::llm::PredictionSet;
use crate::taxonomy::{Taxonomy, OTHER_LABEL};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

/// One evaluated instance: canonical gold label plus the aggregated
/// prediction set, absent when the instance was excluded by retry exhaustion.
#[derive(Debug, Clone, PartialEq)]
pub struct RunItem {
    pub instance_id: String,
    pub gold: String,
    pub prediction: Option<PredictionSet>,
}

/// Per-taxonomy evaluation run. Gold labels and prediction labels are
/// canonical (leaf codes or `"Other"`); items are sorted by instance id.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledRun {
    pub taxonomy_id: String,
    pub tau: f64,
    pub k: usize,
    pub items: Vec<RunItem>,
    pub excluded: usize,
}

#[derive(Debug, Error, PartialEq)]
pub enum MetricError {
    #[error("metric over an empty instance set")]
    EmptyRun,
    #[error("no instance carries a prediction set")]
    NoPredictions,
    #[error("balance is undefined: every gold label is {OTHER_LABEL:?}")]
    AllOther,
    #[error("label sequences have different lengths ({a} vs {b})")]
    LengthMismatch { a: usize, b: usize },
    #[error("k must be at least 2, got {k}")]
    BadK { k: usize },
}

/// Number of predicted error types whose confidence strictly exceeds tau.
pub fn overlap(prediction: &PredictionSet, tau: f64) -> usize {
    prediction.entries.iter().filter(|e| e.confidence > tau).count()
}

/// Dataset-average exclusivity: instances with Overlap > 0 contribute
/// `1 - (Overlap - 1) / (k - 1)`, instances with Overlap = 0 contribute 0.
pub fn exclusivity(run: &LabeledRun) -> Result<f64, MetricError> {
    if run.k < 2 {
        return Err(MetricError::BadK { k: run.k });
    }
    let mut total = 0.0;
    let mut count = 0usize;
    for item in &run.items {
        let Some(prediction) = &item.prediction else { continue };
        let ov = overlap(prediction, run.tau);
        if ov > 0 {
            total += 1.0 - (ov as f64 - 1.0) / (run.k as f64 - 1.0);
        }
        count += 1;
    }
    if count == 0 {
        return Err(if run.items.is_empty() {
            MetricError::EmptyRun
        } else {
            MetricError::NoPredictions
        });
    }
    Ok(total / count as f64)
}

/// Fraction of instances whose gold label is a defined category rather than
/// `"Other"`. Gold-only: prediction sets never affect it.
pub fn coverage(run: &LabeledRun) -> Result<f64, MetricError> {
    if run.items.is_empty() {
        return Err(MetricError::EmptyRun);
    }
    let covered = run.items.iter().filter(|i| i.gold != OTHER_LABEL).count();
    Ok(covered as f64 / run.items.len() as f64)
}

/// Entropy of the gold label distribution over the m leaf types, normalized
/// by ln(m). `"Other"` instances are excluded from both the numerator and the
/// proportion denominator.
pub fn balance(run: &LabeledRun, taxonomy: &Taxonomy) -> Result<f64, MetricError> {
    if run.items.is_empty() {
        return Err(MetricError::EmptyRun);
    }
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    let mut total = 0usize;
    for item in &run.items {
        if item.gold != OTHER_LABEL {
            *counts.entry(item.gold.as_str()).or_insert(0) += 1;
            total += 1;
        }
    }
    if total == 0 {
        return Err(MetricError::AllOther);
    }
    let mut entropy = 0.0;
    for code in taxonomy.leaf_codes() {
        let count = counts.get(code.as_str()).copied().unwrap_or(0);
        if count > 0 {
            let p = count as f64 / total as f64;
            entropy -= p * p.ln();
        }
    }
    Ok(entropy / (taxonomy.label_count() as f64).ln())
}

fn top1(prediction: &PredictionSet) -> &str {
    &prediction.entries.first().expect("prediction sets are non-empty").label
}

/// Pooled F1 over all instances; `"Other"` participates as a class, so with
/// one gold and one predicted label per instance this equals accuracy.
pub fn micro_f1(run: &LabeledRun) -> Result<f64, MetricError> {
    let mut tp = 0usize;
    let mut count = 0usize;
    for item in &run.items {
        let Some(prediction) = &item.prediction else { continue };
        if top1(prediction) == item.gold {
            tp += 1;
        }
        count += 1;
    }
    if count == 0 {
        return Err(if run.items.is_empty() {
            MetricError::EmptyRun
        } else {
            MetricError::NoPredictions
        });
    }
    let precision = tp as f64 / count as f64;
    let recall = tp as f64 / count as f64;
    if precision + recall == 0.0 {
        return Ok(0.0);
    }
    Ok(2.0 * precision * recall / (precision + recall))
}

/// Per-class precision, recall, and F1 for one leaf type.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassScore {
    pub code: String,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub gold_count: usize,
    pub predicted_count: usize,
}

/// Precision/recall/F1 for each of the m leaf types. `"Other"` is not one of
/// the m classes; predictions of it only deprive leaves of true positives.
pub fn per_class_scores(
    run: &LabeledRun,
    taxonomy: &Taxonomy,
) -> Result<Vec<ClassScore>, MetricError> {
    let mut any = false;
    let mut tp: BTreeMap<&str, usize> = BTreeMap::new();
    let mut gold_count: BTreeMap<&str, usize> = BTreeMap::new();
    let mut pred_count: BTreeMap<&str, usize> = BTreeMap::new();
    for item in &run.items {
        let Some(prediction) = &item.prediction else { continue };
        any = true;
        let predicted = top1(prediction);
        *gold_count.entry(item.gold.as_str()).or_insert(0) += 1;
        *pred_count.entry(predicted).or_insert(0) += 1;
        if predicted == item.gold {
            *tp.entry(predicted).or_insert(0) += 1;
        }
    }
    if !any {
        return Err(if run.items.is_empty() {
            MetricError::EmptyRun
        } else {
            MetricError::NoPredictions
        });
    }
    let mut scores = Vec::with_capacity(taxonomy.label_count());
    for code in taxonomy.leaf_codes() {
        let tp = tp.get(code.as_str()).copied().unwrap_or(0) as f64;
        let golds = gold_count.get(code.as_str()).copied().unwrap_or(0);
        let preds = pred_count.get(code.as_str()).copied().unwrap_or(0);
        let precision = if preds > 0 { tp / preds as f64 } else { 0.0 };
        let recall = if golds > 0 { tp / golds as f64 } else { 0.0 };
        let f1 = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        scores.push(ClassScore {
            code: code.clone(),
            precision,
            recall,
            f1,
            gold_count: golds,
            predicted_count: preds,
        });
    }
    Ok(scores)
}

/// Unweighted mean of per-class F1 over all m leaf types, including types
/// absent from the data (they contribute 0).
pub fn macro_f1(run: &LabeledRun, taxonomy: &Taxonomy) -> Result<f64, MetricError> {
    let scores = per_class_scores(run, taxonomy)?;
    let sum: f64 = scores.iter().map(|s| s.f1).sum();
    Ok(sum / taxonomy.label_count() as f64)
}

/// Cohen's kappa between two label sequences. Returns 1.0 in the degenerate
/// case where chance agreement is 1 (both annotators constant on one label).
pub fn cohens_kappa(a: &[String], b: &[String]) -> Result<f64, MetricError> {
    if a.len() != b.len() {
        return Err(MetricError::LengthMismatch { a: a.len(), b: b.len() });
    }
    if a.is_empty() {
        return Err(MetricError::EmptyRun);
    }
    let n = a.len() as f64;
    let agree = a.iter().zip(b).filter(|(x, y)| x == y).count() as f64;
    let observed = agree / n;

    let mut count_a: BTreeMap<&str, usize> = BTreeMap::new();
    let mut count_b: BTreeMap<&str, usize> = BTreeMap::new();
    for label in a {
        *count_a.entry(label.as_str()).or_insert(0) += 1;
    }
    for label in b {
        *count_b.entry(label.as_str()).or_insert(0) += 1;
    }
    let mut expected = 0.0;
    for (label, ca) in &count_a {
        if let Some(cb) = count_b.get(label) {
            expected += (*ca as f64 / n) * (*cb as f64 / n);
        }
    }
    if expected >= 1.0 {
        return Ok(1.0);
    }
    Ok((observed - expected) / (1.0 - expected))
}
