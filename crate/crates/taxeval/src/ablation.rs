//! Category-fusion ablation: relabel a corpus under a fusion map, re-run the
//! pipeline, and compare metrics before and after.

use crate::corpus::SingleErrorInstance;
use crate::llm::{Backend, EvalConfig, LabelConfidence, PredictionSet, RawModelReply};
use crate::metrics::LabeledRun;
use crate::pipeline::{evaluate_taxonomy, EvalOutcome, PipelineError};
use crate::report::{
    AblationReport, ConfigEcho, FusionSummary, MergeSummary, MetricReport, ScoreBlock,
};
use crate::taxonomy::{fuse, FusionMap, LabelRewrite, RewriteError, Taxonomy, TaxonomyError};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum AblationError {
    #[error(transparent)]
    Taxonomy(#[from] TaxonomyError),
    #[error(transparent)]
    Rewrite(#[from] RewriteError),
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
}

/// Maps every gold label of `taxonomy_id` through the rewrite. `"Other"` is a
/// fixed point; labels outside the rewrite domain are an error.
pub fn relabel(
    instances: &[SingleErrorInstance],
    taxonomy_id: &str,
    rewrite: &LabelRewrite,
) -> Result<Vec<SingleErrorInstance>, RewriteError> {
    let mut out = Vec::with_capacity(instances.len());
    for inst in instances {
        let mut relabeled = inst.clone();
        if let Some(label) = relabeled.gold_labels.get_mut(taxonomy_id) {
            *label = rewrite.apply(label)?;
        }
        out.push(relabeled);
    }
    Ok(out)
}

/// Rewrites prediction labels into the fused label space. Labels that merge
/// onto one leaf keep their maximum confidence, mirroring reply parsing.
fn relabel_prediction(
    set: &PredictionSet,
    rewrite: &LabelRewrite,
    k: usize,
) -> Result<PredictionSet, RewriteError> {
    let mut entries = Vec::with_capacity(set.entries.len());
    for entry in &set.entries {
        entries.push(LabelConfidence {
            label: rewrite.apply(&entry.label)?,
            confidence: entry.confidence,
        });
    }
    Ok(PredictionSet::new(set.instance_id.clone(), entries, k))
}

/// Full fusion ablation. By default the fused side re-queries the backend
/// with the fused label menu (same seed and config); with `relabel_only` the
/// before-run's predictions are rewritten instead and no new queries happen.
pub fn run_ablation(
    instances: &[SingleErrorInstance],
    taxonomy: &Taxonomy,
    fusion: &FusionMap,
    cfg: &EvalConfig,
    backend: &dyn Backend,
    relabel_only: bool,
) -> Result<AblationOutcome, AblationError> {
    let before = evaluate_taxonomy(instances, taxonomy, cfg, backend)?;
    let (fused, rewrite) = fuse(taxonomy, fusion)?;
    let relabeled = relabel(instances, &taxonomy.id, &rewrite)?;

    let after = if relabel_only {
        let mut items = Vec::with_capacity(before.run.items.len());
        for item in &before.run.items {
            let prediction = item
                .prediction
                .as_ref()
                .map(|p| relabel_prediction(p, &rewrite, cfg.k))
                .transpose()?;
            items.push(crate::metrics::RunItem {
                instance_id: item.instance_id.clone(),
                gold: rewrite.apply(&item.gold)?,
                prediction,
            });
        }
        let run = LabeledRun {
            taxonomy_id: fused.id.clone(),
            tau: cfg.tau,
            k: cfg.k,
            excluded: before.run.excluded,
            items,
        };
        let report = MetricReport {
            taxonomy: fused.id.clone(),
            config: ConfigEcho { tau: cfg.tau, k: cfg.k, samples: cfg.samples, seed: cfg.seed },
            scores: ScoreBlock {
                exclusivity: crate::metrics::exclusivity(&run).map_err(PipelineError::from)?,
                coverage: crate::metrics::coverage(&run).map_err(PipelineError::from)?,
                balance: crate::metrics::balance(&run, &fused).map_err(PipelineError::from)?,
                macro_f1: crate::metrics::macro_f1(&run, &fused).map_err(PipelineError::from)?,
                micro_f1: crate::metrics::micro_f1(&run).map_err(PipelineError::from)?,
            },
            per_class: crate::metrics::per_class_scores(&run, &fused)
                .map_err(PipelineError::from)?,
            excluded: run.excluded,
        };
        EvalOutcome { report, run, raw_replies: Vec::new() }
    } else {
        evaluate_taxonomy(&relabeled, &fused, cfg, backend)?
    };

    let summary = FusionSummary {
        merges: fusion
            .merges
            .iter()
            .map(|m| MergeSummary {
                new_code: m.replacement.code.clone(),
                new_name: m.replacement.name.clone(),
                absorbed: m.absorb.clone(),
            })
            .collect(),
        label_count_before: taxonomy.label_count(),
        label_count_after: fused.label_count(),
        mode: if relabel_only { "relabel-only" } else { "repredict" }.to_string(),
    };
    let deltas = ScoreBlock::delta(&after.report.scores, &before.report.scores);
    let report = AblationReport {
        taxonomy: taxonomy.id.clone(),
        fusion: summary,
        before: before.report.clone(),
        after: after.report.clone(),
        deltas,
        manifest: crate::report::RunManifest::new("fuse", serde_json::Value::Null, cfg.seed),
    };
    Ok(AblationOutcome { report, before, after, fused, rewrite })
}

/// Everything a fusion ablation produced, including the fused taxonomy and
/// rewrite for further inspection.
pub struct AblationOutcome {
    pub report: AblationReport,
    pub before: EvalOutcome,
    pub after: EvalOutcome,
    pub fused: Taxonomy,
    pub rewrite: LabelRewrite,
}

/// Raw replies of both sides for audit persistence.
impl AblationOutcome {
    pub fn all_raw_replies(&self) -> Vec<RawModelReply> {
        let mut out = self.before.raw_replies.clone();
        out.extend(self.after.raw_replies.iter().cloned());
        out
    }
}
