//! Decomposition of multi-error sentences into single-error instances.
//!
//! A sentence with n edits yields n instances. Instance i keeps edit i and
//! applies every other edit to the source, so all siblings share one target
//! and each instance carries exactly one remaining error.

use super::{apply_edits, Edit, EditApplyError, MultiEditSentence, SingleErrorInstance};
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DecomposeError {
    #[error("sentence {id:?} has no edits to decompose")]
    NoEdits { id: String },
    #[error("sentence {id:?}: {source}")]
    BadEdits {
        id: String,
        #[source]
        source: EditApplyError,
    },
}

pub fn decompose(sentence: &MultiEditSentence) -> Result<Vec<SingleErrorInstance>, DecomposeError> {
    if sentence.edits.is_empty() {
        return Err(DecomposeError::NoEdits { id: sentence.id.clone() });
    }
    let wrap = |source: EditApplyError| DecomposeError::BadEdits {
        id: sentence.id.clone(),
        source,
    };
    let target = apply_edits(&sentence.source_tokens, &sentence.edits).map_err(wrap)?;

    let mut instances = Vec::with_capacity(sentence.edits.len());
    for (i, kept) in sentence.edits.iter().enumerate() {
        let others: Vec<Edit> = sentence
            .edits
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != i)
            .map(|(_, e)| e.clone())
            .collect();
        let source = apply_edits(&sentence.source_tokens, &others).map_err(wrap)?;

        // Re-index the kept edit into the new coordinate frame: edits to its
        // left have shifted token positions by their length delta.
        let offset: isize = sentence.edits[..i].iter().map(Edit::len_delta).sum();
        let edit = Edit {
            start: (kept.start as isize + offset) as usize,
            end: (kept.end as isize + offset) as usize,
            replacement: kept.replacement.clone(),
            type_hint: kept.type_hint.clone(),
        };
        instances.push(SingleErrorInstance {
            id: format!("{}#{}", sentence.id, i),
            source_tokens: source,
            target_tokens: target.clone(),
            edit,
            gold_labels: BTreeMap::new(),
        });
    }
    Ok(instances)
}
