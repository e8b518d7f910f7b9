//! Confidence elicitation from a text-generation backend.
//!
//! Three strategies work together: top-k prompting (the prompt demands k
//! distinct labels with confidences), self-random sampling (the same prompt
//! issued `samples` times at nonzero temperature), and average-confidence
//! aggregation across the samples.

mod audit;
mod backend;
mod prompt;
mod reply;
mod sampler;

pub use audit::{read_audit, write_audit, AuditError, AuditRecord};
pub use backend::{make_backend, Backend, BackendError, GenRequest, HttpBackend, MockBackend, API_KEY_ENV};
pub use prompt::build_prompt;
pub use reply::{parse_reply, ParseFailure};
pub use sampler::{
    sample_and_aggregate, sample_predictions, InstanceSampling, SampleFailure, RETRY_BUDGET,
};

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

/// One predicted label with its verbalized confidence in [0, 1].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelConfidence {
    pub label: String,
    pub confidence: f64,
}

/// Up to k distinct (label, confidence) pairs for one instance, sorted by
/// descending confidence with ties broken by label code.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionSet {
    pub instance_id: String,
    pub entries: Vec<LabelConfidence>,
}

impl PredictionSet {
    /// Normalizes entries: duplicate labels keep their maximum confidence,
    /// the result is sorted and truncated to k.
    pub fn new(instance_id: String, entries: Vec<LabelConfidence>, k: usize) -> PredictionSet {
        let mut best: BTreeMap<String, f64> = BTreeMap::new();
        for entry in entries {
            let slot = best.entry(entry.label).or_insert(f64::NEG_INFINITY);
            if entry.confidence > *slot {
                *slot = entry.confidence;
            }
        }
        let mut entries: Vec<LabelConfidence> = best
            .into_iter()
            .map(|(label, confidence)| LabelConfidence { label, confidence })
            .collect();
        entries.sort_by(|a, b| {
            b.confidence
                .partial_cmp(&a.confidence)
                .expect("confidences are finite")
                .then_with(|| a.label.cmp(&b.label))
        });
        entries.truncate(k);
        PredictionSet { instance_id, entries }
    }

    pub fn top1(&self) -> Option<&LabelConfidence> {
        self.entries.first()
    }
}

/// Where generations come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BackendSpec {
    /// Deterministic offline backend; `ambiguity` is the probability that a
    /// second label is promoted above the confidence threshold.
    Mock { ambiguity: f64 },
    Http { endpoint: String, model: String },
}

/// Evaluation parameters shared by every operation in the pipeline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalConfig {
    /// Confidence threshold for Overlap (strictly exceeded).
    pub tau: f64,
    /// Top-k size requested from the model; at least 2.
    pub k: usize,
    /// Self-random sample count per instance.
    pub samples: usize,
    pub temperature: f64,
    pub seed: u64,
    pub backend: BackendSpec,
    pub max_parallel: usize,
}

impl Default for EvalConfig {
    fn default() -> EvalConfig {
        EvalConfig {
            tau: 0.7,
            k: 3,
            samples: 5,
            temperature: 0.7,
            seed: 0,
            backend: BackendSpec::Mock { ambiguity: 0.0 },
            max_parallel: 4,
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("tau must lie strictly between 0 and 1, got {0}")]
    BadTau(f64),
    #[error("k must be at least 2, got {0}")]
    BadK(usize),
    #[error("samples must be at least 1, got {0}")]
    BadSamples(usize),
    #[error("temperature must be non-negative, got {0}")]
    BadTemperature(f64),
    #[error("max_parallel must be at least 1, got {0}")]
    BadParallel(usize),
}

impl EvalConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(self.tau > 0.0 && self.tau < 1.0) {
            return Err(ConfigError::BadTau(self.tau));
        }
        if self.k < 2 {
            return Err(ConfigError::BadK(self.k));
        }
        if self.samples < 1 {
            return Err(ConfigError::BadSamples(self.samples));
        }
        if self.temperature.is_nan() || self.temperature < 0.0 {
            return Err(ConfigError::BadTemperature(self.temperature));
        }
        if self.max_parallel < 1 {
            return Err(ConfigError::BadParallel(self.max_parallel));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ParseStatus {
    Parsed,
    Failed,
}

/// Verbatim model output, retained so every aggregated prediction set can be
/// reproduced from its raw replies.
#[derive(Debug, Clone, PartialEq)]
pub struct RawModelReply {
    pub instance_id: String,
    pub sample_index: usize,
    pub text: String,
    pub parse_status: ParseStatus,
}

#[derive(Debug, Error, PartialEq)]
#[error("cannot aggregate an empty sample list")]
pub struct EmptyAggregation;

/// Average-confidence aggregation: per label, the mean confidence over all
/// samples, counting 0 where the label is absent; top-k labels survive.
pub fn aggregate_avg_conf(
    sets: &[PredictionSet],
    k: usize,
) -> Result<PredictionSet, EmptyAggregation> {
    let first = sets.first().ok_or(EmptyAggregation)?;
    let mut sums: BTreeMap<&str, f64> = BTreeMap::new();
    for set in sets {
        for entry in &set.entries {
            *sums.entry(entry.label.as_str()).or_insert(0.0) += entry.confidence;
        }
    }
    let n = sets.len() as f64;
    let entries = sums
        .into_iter()
        .map(|(label, sum)| LabelConfidence { label: label.to_string(), confidence: sum / n })
        .collect();
    Ok(PredictionSet::new(first.instance_id.clone(), entries, k))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn pset(entries: &[(&str, f64)], k: usize) -> PredictionSet {
        PredictionSet::new(
            "x".into(),
            entries
                .iter()
                .map(|(l, c)| LabelConfidence { label: l.to_string(), confidence: *c })
                .collect(),
            k,
        )
    }

    #[test]
    fn prediction_set_dedups_sorts_and_truncates() {
        let set = pset(&[("b", 0.4), ("a", 0.9), ("b", 0.6), ("c", 0.6)], 3);
        let labels: Vec<&str> = set.entries.iter().map(|e| e.label.as_str()).collect();
        assert_eq!(labels, ["a", "b", "c"]);
        assert_eq!(set.entries[1].confidence, 0.6);
        let set = pset(&[("a", 0.9), ("b", 0.8), ("c", 0.7), ("d", 0.6)], 2);
        assert_eq!(set.entries.len(), 2);
    }

    #[test]
    fn avg_conf_means_shared_labels() {
        let sets = vec![pset(&[("A", 0.8)], 3), pset(&[("A", 0.6)], 3)];
        let agg = aggregate_avg_conf(&sets, 3).unwrap();
        assert_eq!(agg.entries.len(), 1);
        assert_abs_diff_eq!(agg.entries[0].confidence, 0.7, epsilon = 1e-15);
    }

    #[test]
    fn avg_conf_counts_absent_labels_as_zero() {
        let sets = vec![pset(&[("A", 0.9)], 2), pset(&[("B", 0.9)], 2)];
        let agg = aggregate_avg_conf(&sets, 2).unwrap();
        assert_eq!(agg.entries.len(), 2);
        for entry in &agg.entries {
            assert_abs_diff_eq!(entry.confidence, 0.45, epsilon = 1e-15);
        }
    }

    #[test]
    fn avg_conf_single_sample_is_identity() {
        let set = pset(&[("A", 0.8), ("B", 0.3)], 3);
        let agg = aggregate_avg_conf(std::slice::from_ref(&set), 3).unwrap();
        assert_eq!(agg, set);
    }

    #[test]
    fn avg_conf_is_permutation_invariant_and_bounded() {
        let sets = vec![
            pset(&[("A", 0.9), ("B", 0.2)], 3),
            pset(&[("B", 0.7), ("C", 0.5)], 3),
            pset(&[("A", 0.4)], 3),
        ];
        let mut reversed = sets.clone();
        reversed.reverse();
        let a = aggregate_avg_conf(&sets, 3).unwrap();
        let b = aggregate_avg_conf(&reversed, 3).unwrap();
        assert_eq!(a, b);
        for entry in &a.entries {
            let max_single = sets
                .iter()
                .flat_map(|s| &s.entries)
                .filter(|e| e.label == entry.label)
                .map(|e| e.confidence)
                .fold(f64::NEG_INFINITY, f64::max);
            assert!(entry.confidence <= max_single);
            assert!((0.0..=1.0).contains(&entry.confidence));
        }
    }

    #[test]
    fn empty_aggregation_is_an_error() {
        assert_eq!(aggregate_avg_conf(&[], 3), Err(EmptyAggregation));
    }

    #[test]
    fn config_validation() {
        let mut cfg = EvalConfig::default();
        assert!(cfg.validate().is_ok());
        cfg.k = 1;
        assert_eq!(cfg.validate(), Err(ConfigError::BadK(1)));
        cfg = EvalConfig { tau: 1.0, ..EvalConfig::default() };
        assert_eq!(cfg.validate(), Err(ConfigError::BadTau(1.0)));
        cfg = EvalConfig { samples: 0, ..EvalConfig::default() };
        assert_eq!(cfg.validate(), Err(ConfigError::BadSamples(0)));
    }
}
