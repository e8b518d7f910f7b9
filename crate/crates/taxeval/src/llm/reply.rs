//! Tolerant parsing of model replies into prediction sets.

use super::{LabelConfidence, PredictionSet};
use crate::taxonomy::{Taxonomy, OTHER_LABEL};
use regex::Regex;
use std::sync::OnceLock;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
#[error("no (label, confidence) pair found in reply for instance {instance_id:?}")]
pub struct ParseFailure {
    pub instance_id: String,
}

fn number_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"(\d+(?:\.\d+)?|\.\d+)\s*(%?)").expect("static regex"))
}

fn marker_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    // List markers like "1. " or "2) " need trailing whitespace so that
    // dotted numeric codes ("2.1.4") survive intact.
    RE.get_or_init(|| Regex::new(r"^\s*(?:\d+\s*[.)\]:-]\s+|[-*•]\s*)").expect("static regex"))
}

/// One candidate surface form for a label, with the leaf code it resolves to.
struct Candidate<'a> {
    surface: String,
    canonical: &'a str,
}

fn candidates(taxonomy: &Taxonomy) -> Vec<Candidate<'_>> {
    let mut out = Vec::new();
    for leaf in taxonomy.leaf_types() {
        out.push(Candidate { surface: leaf.code.to_lowercase(), canonical: &leaf.code });
        out.push(Candidate { surface: leaf.name.to_lowercase(), canonical: &leaf.code });
        for op in &leaf.edit_ops {
            out.push(Candidate {
                surface: format!("{}:{}", op.prefix().to_lowercase(), leaf.code.to_lowercase()),
                canonical: &leaf.code,
            });
        }
    }
    out.push(Candidate { surface: OTHER_LABEL.to_lowercase(), canonical: OTHER_LABEL });
    out
}

fn is_boundary(text: &str, byte: usize) -> bool {
    if byte == 0 || byte >= text.len() {
        return true;
    }
    text[..byte].chars().next_back().map(|c| !c.is_alphanumeric()).unwrap_or(true)
}

fn is_end_boundary(text: &str, byte: usize) -> bool {
    if byte >= text.len() {
        return true;
    }
    text[byte..].chars().next().map(|c| !c.is_alphanumeric()).unwrap_or(true)
}

/// Longest label surface form found in the line, with its byte span.
fn find_label<'a>(line_lower: &str, cands: &'a [Candidate<'a>]) -> Option<(&'a str, usize, usize)> {
    let mut best: Option<(&str, usize, usize)> = None;
    for cand in cands {
        let mut from = 0;
        while let Some(pos) = line_lower[from..].find(&cand.surface) {
            let start = from + pos;
            let end = start + cand.surface.len();
            if is_boundary(line_lower, start) && is_end_boundary(line_lower, end) {
                let better = match best {
                    Some((_, bs, be)) => {
                        let len = end - start;
                        let blen = be - bs;
                        len > blen || (len == blen && start < bs)
                    }
                    None => true,
                };
                if better {
                    best = Some((cand.canonical, start, end));
                }
            }
            from = end.max(from + 1);
        }
    }
    best
}

/// Confidence from the text around the label: the last number after the label
/// (falling back to the region before it), with `%` and bare percentages
/// normalized into [0, 1].
fn find_confidence(line: &str, label_start: usize, label_end: usize) -> Option<f64> {
    let pick = |segment: &str| -> Option<f64> {
        let mut found = None;
        for cap in number_re().captures_iter(segment) {
            let value: f64 = cap[1].parse().ok()?;
            let percent = !cap[2].is_empty();
            found = Some((value, percent));
        }
        let (value, percent) = found?;
        // Bare values above 1 are read as percentages too.
        let value = if percent || (value > 1.0 && value <= 100.0) { value / 100.0 } else { value };
        (0.0..=1.0).contains(&value).then_some(value)
    };
    pick(&line[label_end..]).or_else(|| pick(&line[..label_start]))
}

/// Extracts up to k (label, confidence) pairs from a raw reply. Labels are
/// matched case-insensitively against leaf codes, operation-prefixed codes,
/// and leaf names; percentages are divided by 100; duplicates keep the
/// highest confidence. Replies with no parseable pair are a failure.
pub fn parse_reply(
    text: &str,
    taxonomy: &Taxonomy,
    k: usize,
    instance_id: &str,
) -> Result<PredictionSet, ParseFailure> {
    let cands = candidates(taxonomy);
    let mut entries = Vec::new();
    for raw_line in text.lines() {
        // Work entirely on the case-folded line: case mappings can change
        // byte lengths, so offsets must not cross between the two strings.
        let line = marker_re().replace(raw_line, "").to_lowercase();
        let Some((canonical, start, end)) = find_label(&line, &cands) else { continue };
        let Some(confidence) = find_confidence(&line, start, end) else { continue };
        entries.push(LabelConfidence { label: canonical.to_string(), confidence });
    }
    if entries.is_empty() {
        return Err(ParseFailure { instance_id: instance_id.to_string() });
    }
    Ok(PredictionSet::new(instance_id.to_string(), entries, k))
}
