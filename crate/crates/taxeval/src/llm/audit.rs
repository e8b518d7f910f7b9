//! JSON-lines audit log of raw model replies.
//!
//! Every reply attempt is persisted as `{"instance_id","sample_index","text"}`
//! so metrics can be recomputed without re-querying the backend.

use super::RawModelReply;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditRecord {
    pub instance_id: String,
    pub sample_index: usize,
    pub text: String,
}

#[derive(Debug, Error)]
pub enum AuditError {
    #[error("audit line {line}: {source}")]
    BadLine {
        line: usize,
        #[source]
        source: serde_json::Error,
    },
}

/// Serializes replies in canonical order: (instance id, sample index), with
/// retry attempts kept in generation order.
pub fn write_audit(replies: &[RawModelReply]) -> String {
    let mut sorted: Vec<&RawModelReply> = replies.iter().collect();
    sorted.sort_by(|a, b| {
        (&a.instance_id, a.sample_index).cmp(&(&b.instance_id, b.sample_index))
    });
    let mut out = String::new();
    for reply in sorted {
        let record = AuditRecord {
            instance_id: reply.instance_id.clone(),
            sample_index: reply.sample_index,
            text: reply.text.clone(),
        };
        out.push_str(&serde_json::to_string(&record).expect("audit serialization"));
        out.push('\n');
    }
    out
}

pub fn read_audit(text: &str) -> Result<Vec<AuditRecord>, AuditError> {
    let mut records = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let record: AuditRecord = serde_json::from_str(line)
            .map_err(|source| AuditError::BadLine { line: idx + 1, source })?;
        records.push(record);
    }
    Ok(records)
}
