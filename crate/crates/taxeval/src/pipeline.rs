//! Orchestration: corpus + taxonomy + backend -> labeled run -> report.
//!
//! (instance, sample) requests are independent; instances run concurrently on
//! a pool capped at `cfg.max_parallel`, and results are sorted by instance id
//! before any metric is computed, so output never depends on scheduling.

use crate::corpus::SingleErrorInstance;
use crate::llm::{
    aggregate_avg_conf, parse_reply, read_audit, sample_and_aggregate, AuditError, AuditRecord,
    Backend, ConfigError, EvalConfig, PredictionSet, RawModelReply,
};
use crate::metrics::{self, LabeledRun, MetricError, RunItem};
use crate::report::{ConfigEcho, MetricReport, ScoreBlock};
use crate::taxonomy::Taxonomy;
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("instance {instance_id:?} has no gold label for taxonomy {taxonomy:?}")]
    MissingGoldLabel { instance_id: String, taxonomy: String },
    #[error("instance {instance_id:?}: gold label {label:?} is not a leaf of {taxonomy:?} and not \"Other\"")]
    InvalidGoldLabel { instance_id: String, taxonomy: String, label: String },
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error(transparent)]
    Audit(#[from] AuditError),
    #[error("audit file contains sample index {found}, but the configuration has {samples} samples")]
    AuditSampleMismatch { found: usize, samples: usize },
    #[error("corpus is empty")]
    EmptyCorpus,
}

/// A finished evaluation: the report, the labeled run behind it, and the raw
/// replies that produced it.
#[derive(Debug)]
pub struct EvalOutcome {
    pub report: MetricReport,
    pub run: LabeledRun,
    pub raw_replies: Vec<RawModelReply>,
}

fn canonical_gold(
    instance: &SingleErrorInstance,
    taxonomy: &Taxonomy,
) -> Result<String, PipelineError> {
    let raw = instance.gold_labels.get(&taxonomy.id).ok_or_else(|| {
        PipelineError::MissingGoldLabel {
            instance_id: instance.id.clone(),
            taxonomy: taxonomy.id.clone(),
        }
    })?;
    taxonomy.canonical_label(raw).ok_or_else(|| PipelineError::InvalidGoldLabel {
        instance_id: instance.id.clone(),
        taxonomy: taxonomy.id.clone(),
        label: raw.clone(),
    })
}

fn build_report(
    run: &LabeledRun,
    taxonomy: &Taxonomy,
    cfg: &EvalConfig,
) -> Result<MetricReport, PipelineError> {
    let scores = ScoreBlock {
        exclusivity: metrics::exclusivity(run)?,
        coverage: metrics::coverage(run)?,
        balance: metrics::balance(run, taxonomy)?,
        macro_f1: metrics::macro_f1(run, taxonomy)?,
        micro_f1: metrics::micro_f1(run)?,
    };
    Ok(MetricReport {
        taxonomy: taxonomy.id.clone(),
        config: ConfigEcho { tau: cfg.tau, k: cfg.k, samples: cfg.samples, seed: cfg.seed },
        scores,
        per_class: metrics::per_class_scores(run, taxonomy)?,
        excluded: run.excluded,
    })
}

fn assemble_run(
    taxonomy: &Taxonomy,
    cfg: &EvalConfig,
    mut items: Vec<RunItem>,
) -> LabeledRun {
    items.sort_by(|a, b| a.instance_id.cmp(&b.instance_id));
    let excluded = items.iter().filter(|i| i.prediction.is_none()).count();
    LabeledRun {
        taxonomy_id: taxonomy.id.clone(),
        tau: cfg.tau,
        k: cfg.k,
        items,
        excluded,
    }
}

/// Runs the full elicitation pipeline for one taxonomy: prompt, sample,
/// aggregate, score. Instances whose samples exhaust the retry budget are
/// excluded from the prediction-based metrics and counted in the report.
pub fn evaluate_taxonomy(
    instances: &[SingleErrorInstance],
    taxonomy: &Taxonomy,
    cfg: &EvalConfig,
    backend: &dyn Backend,
) -> Result<EvalOutcome, PipelineError> {
    cfg.validate()?;
    if instances.is_empty() {
        return Err(PipelineError::EmptyCorpus);
    }
    let golds: Vec<String> = instances
        .iter()
        .map(|inst| canonical_gold(inst, taxonomy))
        .collect::<Result<_, _>>()?;

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.max_parallel)
        .build()
        .expect("thread pool construction");
    let sampled: Vec<(Vec<RawModelReply>, Option<PredictionSet>)> = pool.install(|| {
        use rayon::prelude::*;
        instances
            .par_iter()
            .map(|inst| {
                let (raw, result) = sample_and_aggregate(inst, taxonomy, cfg, backend);
                (raw, result.ok())
            })
            .collect()
    });

    let mut raw_replies = Vec::new();
    let mut items = Vec::with_capacity(instances.len());
    for ((inst, gold), (raw, prediction)) in
        instances.iter().zip(golds).zip(sampled)
    {
        raw_replies.extend(raw);
        items.push(RunItem { instance_id: inst.id.clone(), gold, prediction });
    }
    let run = assemble_run(taxonomy, cfg, items);
    let report = build_report(&run, taxonomy, cfg)?;
    Ok(EvalOutcome { report, run, raw_replies })
}

/// Recomputes a report from a persisted audit log, mirroring the live retry
/// semantics: per (instance, sample), the first parseable attempt wins; a
/// sample with no parseable attempt excludes its instance.
pub fn replay_taxonomy(
    instances: &[SingleErrorInstance],
    taxonomy: &Taxonomy,
    cfg: &EvalConfig,
    audit: &[AuditRecord],
) -> Result<EvalOutcome, PipelineError> {
    cfg.validate()?;
    if instances.is_empty() {
        return Err(PipelineError::EmptyCorpus);
    }
    let mut by_instance: BTreeMap<&str, BTreeMap<usize, Vec<&AuditRecord>>> = BTreeMap::new();
    for record in audit {
        if record.sample_index >= cfg.samples {
            return Err(PipelineError::AuditSampleMismatch {
                found: record.sample_index,
                samples: cfg.samples,
            });
        }
        by_instance
            .entry(record.instance_id.as_str())
            .or_default()
            .entry(record.sample_index)
            .or_default()
            .push(record);
    }

    let mut items = Vec::with_capacity(instances.len());
    for inst in instances {
        let gold = canonical_gold(inst, taxonomy)?;
        let prediction = by_instance.get(inst.id.as_str()).and_then(|samples| {
            let mut sets = Vec::with_capacity(cfg.samples);
            for sample_index in 0..cfg.samples {
                let attempts = samples.get(&sample_index)?;
                let set = attempts
                    .iter()
                    .find_map(|r| parse_reply(&r.text, taxonomy, cfg.k, &inst.id).ok())?;
                sets.push(set);
            }
            Some(aggregate_avg_conf(&sets, cfg.k).expect("samples >= 1"))
        });
        items.push(RunItem { instance_id: inst.id.clone(), gold, prediction });
    }
    let run = assemble_run(taxonomy, cfg, items);
    let report = build_report(&run, taxonomy, cfg)?;
    Ok(EvalOutcome { report, run, raw_replies: Vec::new() })
}

/// Convenience wrapper: replay from audit-file text.
pub fn replay_from_text(
    instances: &[SingleErrorInstance],
    taxonomy: &Taxonomy,
    cfg: &EvalConfig,
    audit_text: &str,
) -> Result<EvalOutcome, PipelineError> {
    let records = read_audit(audit_text)?;
    replay_taxonomy(instances, taxonomy, cfg, &records)
}
