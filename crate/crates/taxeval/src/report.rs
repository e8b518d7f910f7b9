//! Report and manifest formats written by the evaluation pipeline.

use crate::metrics::ClassScore;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Config echo embedded in every report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigEcho {
    pub tau: f64,
    pub k: usize,
    pub samples: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreBlock {
    pub exclusivity: f64,
    pub coverage: f64,
    pub balance: f64,
    pub macro_f1: f64,
    pub micro_f1: f64,
}

impl ScoreBlock {
    pub fn delta(after: &ScoreBlock, before: &ScoreBlock) -> ScoreBlock {
        ScoreBlock {
            exclusivity: after.exclusivity - before.exclusivity,
            coverage: after.coverage - before.coverage,
            balance: after.balance - before.balance,
            macro_f1: after.macro_f1 - before.macro_f1,
            micro_f1: after.micro_f1 - before.micro_f1,
        }
    }
}

/// Per-taxonomy evaluation report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub taxonomy: String,
    pub config: ConfigEcho,
    pub scores: ScoreBlock,
    pub per_class: Vec<ClassScore>,
    pub excluded: usize,
}

/// Provenance of one run: resolved configuration, input digests, tool
/// version, timestamp, and seed. Two mock runs with equal manifests produce
/// byte-identical reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub config: serde_json::Value,
    pub inputs: BTreeMap<String, String>,
    pub version: String,
    pub timestamp: String,
    pub seed: u64,
}

impl RunManifest {
    pub fn new(command: &str, config: serde_json::Value, seed: u64) -> RunManifest {
        RunManifest {
            command: command.to_string(),
            config,
            inputs: BTreeMap::new(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            timestamp: String::new(),
            seed,
        }
    }
}

/// Report file written by `evaluate` and `replay`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReportFile {
    #[serde(flatten)]
    pub report: MetricReport,
    pub manifest: RunManifest,
}

/// One merge group echoed into the ablation report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MergeSummary {
    pub new_code: String,
    pub new_name: String,
    pub absorbed: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FusionSummary {
    pub merges: Vec<MergeSummary>,
    pub label_count_before: usize,
    pub label_count_after: usize,
    /// "repredict" (fresh predictions from the fused menu) or "relabel-only".
    pub mode: String,
}

/// Before/after comparison for one category-fusion ablation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationReport {
    pub taxonomy: String,
    pub fusion: FusionSummary,
    pub before: MetricReport,
    pub after: MetricReport,
    pub deltas: ScoreBlock,
    pub manifest: RunManifest,
}

/// One annotator-pair row of an agreement report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KappaRow {
    pub pair: String,
    pub kappa: BTreeMap<String, f64>,
}

/// Pairwise Cohen's kappa across annotators plus the average row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgreementReport {
    pub taxonomies: Vec<String>,
    pub rows: Vec<KappaRow>,
    pub average: BTreeMap<String, f64>,
    pub manifest: RunManifest,
}

/// Canonical pretty-printed JSON with a trailing newline.
pub fn to_canonical_json<T: Serialize>(value: &T) -> String {
    let mut out = serde_json::to_string_pretty(value).expect("report serialization");
    out.push('\n');
    out
}
