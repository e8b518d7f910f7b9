//! Per-instance sampling with retries.

use super::{
    aggregate_avg_conf, build_prompt, parse_reply, Backend, EvalConfig, GenRequest, ParseStatus,
    PredictionSet, RawModelReply,
};
use crate::corpus::SingleErrorInstance;
use crate::taxonomy::Taxonomy;
use thiserror::Error;

/// Attempts per (instance, sample) before the instance is excluded.
pub const RETRY_BUDGET: usize = 3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SampleFailure {
    #[error("instance {instance_id:?}: sample {sample_index} failed {attempts} attempts: {last}")]
    RetriesExhausted {
        instance_id: String,
        sample_index: usize,
        attempts: usize,
        last: String,
    },
}

/// Raw replies plus the per-sample prediction sets (or the failure that
/// excludes the instance). Raw replies are kept even on failure so the audit
/// log stays complete.
#[derive(Debug)]
pub struct InstanceSampling {
    pub raw: Vec<RawModelReply>,
    pub result: Result<Vec<PredictionSet>, SampleFailure>,
}

/// Issues the same prompt `cfg.samples` times, retrying each sample up to
/// [`RETRY_BUDGET`] attempts on transport or parse failure.
pub fn sample_predictions(
    instance: &SingleErrorInstance,
    taxonomy: &Taxonomy,
    cfg: &EvalConfig,
    backend: &dyn Backend,
) -> InstanceSampling {
    let prompt = build_prompt(instance, taxonomy, cfg.k);
    let mut raw = Vec::new();
    let mut sets = Vec::with_capacity(cfg.samples);
    for sample_index in 0..cfg.samples {
        let request = GenRequest {
            instance,
            taxonomy,
            prompt: &prompt,
            k: cfg.k,
            temperature: cfg.temperature,
            seed: cfg.seed,
            sample_index,
        };
        let mut last_error = String::new();
        let mut parsed = None;
        for _ in 0..RETRY_BUDGET {
            match backend.generate(&request) {
                Ok(text) => match parse_reply(&text, taxonomy, cfg.k, &instance.id) {
                    Ok(set) => {
                        raw.push(RawModelReply {
                            instance_id: instance.id.clone(),
                            sample_index,
                            text,
                            parse_status: ParseStatus::Parsed,
                        });
                        parsed = Some(set);
                        break;
                    }
                    Err(failure) => {
                        raw.push(RawModelReply {
                            instance_id: instance.id.clone(),
                            sample_index,
                            text,
                            parse_status: ParseStatus::Failed,
                        });
                        last_error = failure.to_string();
                    }
                },
                Err(transport) => {
                    last_error = transport.to_string();
                }
            }
        }
        match parsed {
            Some(set) => sets.push(set),
            None => {
                return InstanceSampling {
                    raw,
                    result: Err(SampleFailure::RetriesExhausted {
                        instance_id: instance.id.clone(),
                        sample_index,
                        attempts: RETRY_BUDGET,
                        last: last_error,
                    }),
                }
            }
        }
    }
    InstanceSampling { raw, result: Ok(sets) }
}

/// Samples and aggregates in one step.
pub fn sample_and_aggregate(
    instance: &SingleErrorInstance,
    taxonomy: &Taxonomy,
    cfg: &EvalConfig,
    backend: &dyn Backend,
) -> (Vec<RawModelReply>, Result<PredictionSet, SampleFailure>) {
    let sampling = sample_predictions(instance, taxonomy, cfg, backend);
    let result = sampling.result.map(|sets| {
        aggregate_avg_conf(&sets, cfg.k).expect("samples >= 1 guarantees a non-empty list")
    });
    (sampling.raw, result)
}
