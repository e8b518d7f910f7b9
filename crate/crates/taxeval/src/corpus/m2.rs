//! Reader and writer for the M2 annotation format.
//!
//! Grammar (bit-exact): sentence line `S <tokens>`; annotation line
//! `A <start> <end>|||<type>|||<replacement>|||<required>|||<comment>|||<annotator>`;
//! blocks separated by blank lines. Type `noop` with replacement `-NONE-`
//! denotes an edit-free sentence.

use super::{Edit, MultiEditSentence};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum M2Error {
    #[error("line {line}: annotation before any sentence line")]
    AnnotationBeforeSentence { line: usize },
    #[error("line {line}: second sentence line inside one block")]
    UnexpectedSentenceLine { line: usize },
    #[error("line {line}: expected 'S ' or 'A ' line, got {text:?}")]
    MalformedLine { line: usize, text: String },
    #[error("line {line}: annotation has {got} '|||' fields, expected 6")]
    BadFieldCount { line: usize, got: usize },
    #[error("line {line}: bad span {text:?} (expected two integers)")]
    BadSpan { line: usize, text: String },
    #[error("line {line}: bad annotator field {text:?}")]
    BadAnnotator { line: usize, text: String },
    #[error("sentence {id:?}: span {start}..{end} out of range for {len} tokens")]
    SpanOutOfRange { id: String, start: i64, end: i64, len: usize },
    #[error("sentence {id:?}: edits {a_start}..{a_end} and {b_start}..{b_end} overlap")]
    OverlappingEdits { id: String, a_start: usize, a_end: usize, b_start: usize, b_end: usize },
    #[error("sentence {id:?}: edit at {start}..{end} replaces span with identical tokens")]
    NoopEdit { id: String, start: usize, end: usize },
}

/// Parses an M2 file, keeping annotator 0's edits.
pub fn parse_m2(text: &str) -> Result<Vec<MultiEditSentence>, M2Error> {
    parse_m2_with_annotator(text, 0)
}

/// Parses an M2 file, keeping only edits by the given annotator.
pub fn parse_m2_with_annotator(
    text: &str,
    annotator: u32,
) -> Result<Vec<MultiEditSentence>, M2Error> {
    let mut sentences: Vec<MultiEditSentence> = Vec::new();
    let mut current: Option<MultiEditSentence> = None;

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.strip_suffix('\r').unwrap_or(raw);
        if line.trim().is_empty() {
            if let Some(sentence) = current.take() {
                sentences.push(finish_sentence(sentence)?);
            }
            continue;
        }
        if let Some(rest) = line.strip_prefix("S ").or(if line == "S" { Some("") } else { None }) {
            if current.is_some() {
                return Err(M2Error::UnexpectedSentenceLine { line: line_no });
            }
            current = Some(MultiEditSentence {
                id: format!("s{}", sentences.len()),
                source_tokens: rest.split_whitespace().map(str::to_string).collect(),
                edits: Vec::new(),
            });
        } else if let Some(rest) = line.strip_prefix("A ") {
            let sentence = current
                .as_mut()
                .ok_or(M2Error::AnnotationBeforeSentence { line: line_no })?;
            if let Some(edit) = parse_annotation(rest, line_no, annotator, sentence)? {
                sentence.edits.push(edit);
            }
        } else {
            return Err(M2Error::MalformedLine { line: line_no, text: line.to_string() });
        }
    }
    if let Some(sentence) = current.take() {
        sentences.push(finish_sentence(sentence)?);
    }
    Ok(sentences)
}

fn parse_annotation(
    rest: &str,
    line_no: usize,
    annotator: u32,
    sentence: &MultiEditSentence,
) -> Result<Option<Edit>, M2Error> {
    let fields: Vec<&str> = rest.split("|||").collect();
    if fields.len() != 6 {
        return Err(M2Error::BadFieldCount { line: line_no, got: fields.len() });
    }
    let span: Vec<&str> = fields[0].split_whitespace().collect();
    if span.len() != 2 {
        return Err(M2Error::BadSpan { line: line_no, text: fields[0].to_string() });
    }
    let start: i64 = span[0]
        .parse()
        .map_err(|_| M2Error::BadSpan { line: line_no, text: fields[0].to_string() })?;
    let end: i64 = span[1]
        .parse()
        .map_err(|_| M2Error::BadSpan { line: line_no, text: fields[0].to_string() })?;
    let edit_type = fields[1];
    let replacement = fields[2];
    let edit_annotator: u32 = fields[5]
        .trim()
        .parse()
        .map_err(|_| M2Error::BadAnnotator { line: line_no, text: fields[5].to_string() })?;

    if edit_annotator != annotator {
        return Ok(None);
    }
    if edit_type == "noop" && replacement == "-NONE-" {
        return Ok(None);
    }
    let len = sentence.source_tokens.len();
    if start < 0 || end < start || end as usize > len {
        return Err(M2Error::SpanOutOfRange { id: sentence.id.clone(), start, end, len });
    }
    Ok(Some(Edit {
        start: start as usize,
        end: end as usize,
        replacement: replacement.split_whitespace().map(str::to_string).collect(),
        type_hint: Some(edit_type.to_string()),
    }))
}

fn finish_sentence(mut sentence: MultiEditSentence) -> Result<MultiEditSentence, M2Error> {
    sentence.edits.sort_by_key(|e| (e.start, e.end));
    for pair in sentence.edits.windows(2) {
        if pair[1].start < pair[0].end
            || (pair[0].start == pair[1].start && pair[0].end == pair[1].end)
        {
            return Err(M2Error::OverlappingEdits {
                id: sentence.id,
                a_start: pair[0].start,
                a_end: pair[0].end,
                b_start: pair[1].start,
                b_end: pair[1].end,
            });
        }
    }
    for edit in &sentence.edits {
        if edit.replacement == sentence.source_tokens[edit.start..edit.end] {
            return Err(M2Error::NoopEdit {
                id: sentence.id,
                start: edit.start,
                end: edit.end,
            });
        }
    }
    Ok(sentence)
}

/// Writes sentences in canonical M2 form: annotator 0, sorted edits, one
/// blank line between blocks, `noop` lines for edit-free sentences.
/// `parse_m2(render_m2(x)) == x` up to regenerated sentence ids.
pub fn render_m2(sentences: &[MultiEditSentence]) -> String {
    let mut out = String::new();
    for (i, sentence) in sentences.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        out.push_str("S ");
        out.push_str(&sentence.source_tokens.join(" "));
        out.push('\n');
        if sentence.edits.is_empty() {
            out.push_str("A -1 -1|||noop|||-NONE-|||REQUIRED|||-NONE-|||0\n");
        } else {
            for edit in &sentence.edits {
                out.push_str(&format!(
                    "A {} {}|||{}|||{}|||REQUIRED|||-NONE-|||0\n",
                    edit.start,
                    edit.end,
                    edit.type_hint.as_deref().unwrap_or("UNK"),
                    edit.replacement.join(" "),
                ));
            }
        }
    }
    out
}
