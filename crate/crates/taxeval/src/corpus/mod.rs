//! GEC corpus ingestion: M2 files, token-level edits, single-error instances.
//!
//! Corpora are stored pre-tokenized (space-separated); this module never
//! re-tokenizes raw text.

mod align;
mod decompose;
mod m2;

pub use align::{apply_edits, extract_edits, EditApplyError};
pub use decompose::{decompose, DecomposeError};
pub use m2::{parse_m2, parse_m2_with_annotator, render_m2, M2Error};

use crate::taxonomy::{Taxonomy, OTHER_LABEL};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

/// A span replacement over source tokens: the half-open interval
/// `[start, end)` is replaced by `replacement`. `start == end` is a pure
/// insertion before token `start`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Edit {
    pub start: usize,
    pub end: usize,
    pub replacement: Vec<String>,
    /// M2 error-type field, passed through untouched.
    pub type_hint: Option<String>,
}

impl Edit {
    pub fn new(start: usize, end: usize, replacement: Vec<String>) -> Edit {
        Edit { start, end, replacement, type_hint: None }
    }

    pub fn is_insertion(&self) -> bool {
        self.start == self.end
    }

    /// Span and replacement equality, ignoring the type hint.
    pub fn same_change(&self, other: &Edit) -> bool {
        self.start == other.start && self.end == other.end && self.replacement == other.replacement
    }

    /// Token-count change introduced by this edit.
    pub fn len_delta(&self) -> isize {
        self.replacement.len() as isize - (self.end - self.start) as isize
    }
}

/// A source sentence with all of its annotated edits, sorted and
/// non-overlapping.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MultiEditSentence {
    pub id: String,
    pub source_tokens: Vec<String>,
    pub edits: Vec<Edit>,
}

/// A sentence pair containing exactly one remaining edit, plus one gold label
/// per taxonomy (a leaf code or the sentinel `"Other"`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SingleErrorInstance {
    pub id: String,
    pub source_tokens: Vec<String>,
    pub target_tokens: Vec<String>,
    pub edit: Edit,
    pub gold_labels: BTreeMap<String, String>,
}

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("corpus schema violation: {0}")]
    Schema(#[from] serde_json::Error),
    #[error("instance {id:?}: edit span {start}..{end} out of range for {len} source tokens")]
    EditOutOfRange { id: String, start: usize, end: usize, len: usize },
    #[error("instance {id:?}: edit replaces span with identical tokens")]
    NoopEdit { id: String },
    #[error("instance {id:?}: applying the edit does not reproduce the target")]
    EditTargetMismatch { id: String },
    #[error("instance {id:?}: duplicate instance id")]
    DuplicateId { id: String },
    #[error("instance {id:?}: gold label references unknown taxonomy {taxonomy:?}")]
    UnknownTaxonomy { id: String, taxonomy: String },
    #[error("instance {id:?}: label {label:?} is not a leaf of {taxonomy:?} and not {OTHER_LABEL:?}")]
    InvalidLabel { id: String, taxonomy: String, label: String },
}

#[derive(Debug, Serialize, Deserialize)]
struct CorpusDoc {
    instances: Vec<InstanceDoc>,
}

#[derive(Debug, Serialize, Deserialize)]
struct InstanceDoc {
    id: String,
    source: String,
    target: String,
    edit: EditDoc,
    gold: BTreeMap<String, String>,
}

#[derive(Debug, Serialize, Deserialize)]
struct EditDoc {
    start: usize,
    end: usize,
    replacement: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    type_hint: Option<String>,
}

fn tokenize(s: &str) -> Vec<String> {
    s.split_whitespace().map(str::to_string).collect()
}

/// Parses the native JSON corpus format and checks structural invariants:
/// edit spans in range, no no-op edits, edit application reproduces the
/// target, unique instance ids.
pub fn load_corpus(text: &str) -> Result<Vec<SingleErrorInstance>, CorpusError> {
    let doc: CorpusDoc = serde_json::from_str(text)?;
    let mut seen = std::collections::BTreeSet::new();
    let mut out = Vec::with_capacity(doc.instances.len());
    for inst in doc.instances {
        if !seen.insert(inst.id.clone()) {
            return Err(CorpusError::DuplicateId { id: inst.id });
        }
        let source_tokens = tokenize(&inst.source);
        let target_tokens = tokenize(&inst.target);
        let edit = Edit {
            start: inst.edit.start,
            end: inst.edit.end,
            replacement: tokenize(&inst.edit.replacement),
            type_hint: inst.edit.type_hint,
        };
        if edit.start > edit.end || edit.end > source_tokens.len() {
            return Err(CorpusError::EditOutOfRange {
                id: inst.id,
                start: edit.start,
                end: edit.end,
                len: source_tokens.len(),
            });
        }
        if edit.replacement == source_tokens[edit.start..edit.end] {
            return Err(CorpusError::NoopEdit { id: inst.id });
        }
        let applied = apply_edits(&source_tokens, std::slice::from_ref(&edit))
            .expect("span validated above");
        if applied != target_tokens {
            return Err(CorpusError::EditTargetMismatch { id: inst.id });
        }
        out.push(SingleErrorInstance {
            id: inst.id,
            source_tokens,
            target_tokens,
            edit,
            gold_labels: inst.gold,
        });
    }
    Ok(out)
}

/// Serializes instances to the native JSON corpus format.
pub fn save_corpus(instances: &[SingleErrorInstance]) -> String {
    let doc = CorpusDoc {
        instances: instances
            .iter()
            .map(|inst| InstanceDoc {
                id: inst.id.clone(),
                source: inst.source_tokens.join(" "),
                target: inst.target_tokens.join(" "),
                edit: EditDoc {
                    start: inst.edit.start,
                    end: inst.edit.end,
                    replacement: inst.edit.replacement.join(" "),
                    type_hint: inst.edit.type_hint.clone(),
                },
                gold: inst.gold_labels.clone(),
            })
            .collect(),
    };
    let mut out = serde_json::to_string_pretty(&doc).expect("corpus serialization");
    out.push('\n');
    out
}

/// Checks every gold label against the provided taxonomies. Each gold key
/// must name one of the taxonomies, and each label must resolve to a leaf or
/// be the `"Other"` sentinel.
pub fn validate_gold_labels(
    instances: &[SingleErrorInstance],
    taxonomies: &[&Taxonomy],
) -> Result<(), CorpusError> {
    for inst in instances {
        for (tid, label) in &inst.gold_labels {
            let taxonomy = taxonomies
                .iter()
                .find(|t| &t.id == tid)
                .ok_or_else(|| CorpusError::UnknownTaxonomy {
                    id: inst.id.clone(),
                    taxonomy: tid.clone(),
                })?;
            if taxonomy.canonical_label(label).is_none() {
                return Err(CorpusError::InvalidLabel {
                    id: inst.id.clone(),
                    taxonomy: tid.clone(),
                    label: label.clone(),
                });
            }
        }
    }
    Ok(())
}

/// Gold-label histogram for one taxonomy, keyed by canonical label.
pub fn label_histogram(
    instances: &[SingleErrorInstance],
    taxonomy: &Taxonomy,
) -> BTreeMap<String, usize> {
    let mut hist = BTreeMap::new();
    for inst in instances {
        if let Some(raw) = inst.gold_labels.get(&taxonomy.id) {
            if let Some(label) = taxonomy.canonical_label(raw) {
                *hist.entry(label).or_insert(0) += 1;
            }
        }
    }
    hist
}
