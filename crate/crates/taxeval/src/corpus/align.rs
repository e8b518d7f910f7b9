//! Token-level edit application and extraction.
//!
//! Extraction is plain Levenshtein alignment (match 0, substitution 1,
//! insertion 1, deletion 1) with adjacent non-match operations merged into a
//! single edit, so multi-token rewrites stay atomic. Ties prefer substitution
//! over insert+delete and place edits leftmost.

use super::Edit;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EditApplyError {
    #[error("edits are not sorted by start position")]
    Unsorted,
    #[error("edits {first}..{first_end} and {second}..{second_end} overlap")]
    Overlap { first: usize, first_end: usize, second: usize, second_end: usize },
    #[error("edit span {start}..{end} out of range for {len} tokens")]
    OutOfRange { start: usize, end: usize, len: usize },
}

/// Replaces every edit span right-to-left, producing the target tokens.
pub fn apply_edits(source: &[String], edits: &[Edit]) -> Result<Vec<String>, EditApplyError> {
    for edit in edits {
        if edit.start > edit.end || edit.end > source.len() {
            return Err(EditApplyError::OutOfRange {
                start: edit.start,
                end: edit.end,
                len: source.len(),
            });
        }
    }
    for pair in edits.windows(2) {
        if pair[1].start < pair[0].start {
            return Err(EditApplyError::Unsorted);
        }
        // Equal empty spans at the same point have no defined order.
        if pair[1].start < pair[0].end
            || (pair[0].start == pair[1].start && pair[0].end == pair[1].end)
        {
            return Err(EditApplyError::Overlap {
                first: pair[0].start,
                first_end: pair[0].end,
                second: pair[1].start,
                second_end: pair[1].end,
            });
        }
    }
    let mut target: Vec<String> = source.to_vec();
    for edit in edits.iter().rev() {
        target.splice(edit.start..edit.end, edit.replacement.iter().cloned());
    }
    Ok(target)
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum AlignOp {
    Match,
    Substitute,
    Delete,
    Insert,
}

/// Extracts the minimal edit list turning `source` into `target`.
///
/// Identical sequences yield an empty list. For all inputs,
/// `apply_edits(source, extract_edits(source, target)) == target`.
pub fn extract_edits(source: &[String], target: &[String]) -> Vec<Edit> {
    let n = source.len();
    let m = target.len();
    let mut dist = vec![vec![0u32; m + 1]; n + 1];
    for (i, row) in dist.iter_mut().enumerate() {
        row[0] = i as u32;
    }
    for (j, cell) in dist[0].iter_mut().enumerate() {
        *cell = j as u32;
    }
    for i in 1..=n {
        for j in 1..=m {
            let sub = dist[i - 1][j - 1] + u32::from(source[i - 1] != target[j - 1]);
            let del = dist[i - 1][j] + 1;
            let ins = dist[i][j - 1] + 1;
            dist[i][j] = sub.min(del).min(ins);
        }
    }

    // Traceback from the end, preferring diagonal moves so that ties resolve
    // to substitutions and edits land leftmost.
    let mut ops = Vec::with_capacity(n.max(m));
    let (mut i, mut j) = (n, m);
    while i > 0 || j > 0 {
        if i > 0 && j > 0 {
            let sub_cost = u32::from(source[i - 1] != target[j - 1]);
            if dist[i][j] == dist[i - 1][j - 1] + sub_cost {
                ops.push(if sub_cost == 0 { AlignOp::Match } else { AlignOp::Substitute });
                i -= 1;
                j -= 1;
                continue;
            }
        }
        if i > 0 && dist[i][j] == dist[i - 1][j] + 1 {
            ops.push(AlignOp::Delete);
            i -= 1;
        } else {
            ops.push(AlignOp::Insert);
            j -= 1;
        }
    }
    ops.reverse();

    // Merge runs of non-match operations into single edits.
    let mut edits = Vec::new();
    let (mut src_pos, mut tgt_pos) = (0usize, 0usize);
    let mut run: Option<(usize, usize, usize)> = None; // (src_start, tgt_start, tgt_end)
    for op in ops {
        match op {
            AlignOp::Match => {
                if let Some((start, tgt_start, tgt_end)) = run.take() {
                    edits.push(Edit::new(start, src_pos, target[tgt_start..tgt_end].to_vec()));
                }
                src_pos += 1;
                tgt_pos += 1;
            }
            AlignOp::Substitute => {
                run.get_or_insert((src_pos, tgt_pos, tgt_pos)).2 = tgt_pos + 1;
                src_pos += 1;
                tgt_pos += 1;
            }
            AlignOp::Delete => {
                run.get_or_insert((src_pos, tgt_pos, tgt_pos));
                src_pos += 1;
            }
            AlignOp::Insert => {
                run.get_or_insert((src_pos, tgt_pos, tgt_pos)).2 = tgt_pos + 1;
                tgt_pos += 1;
            }
        }
    }
    if let Some((start, tgt_start, tgt_end)) = run {
        edits.push(Edit::new(start, src_pos, target[tgt_start..tgt_end].to_vec()));
    }
    edits
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn toks(s: &str) -> Vec<String> {
        s.split_whitespace().map(str::to_string).collect()
    }

    #[test]
    fn apply_single_substitution() {
        let out = apply_edits(&toks("He go home"), &[Edit::new(1, 2, toks("went"))]).unwrap();
        assert_eq!(out, toks("He went home"));
    }

    #[test]
    fn apply_empty_edit_list_is_identity() {
        let src = toks("a b c");
        assert_eq!(apply_edits(&src, &[]).unwrap(), src);
    }

    #[test]
    fn apply_plural_fix() {
        let out =
            apply_edits(&toks("She has many friend"), &[Edit::new(3, 4, toks("friends"))]).unwrap();
        assert_eq!(out, toks("She has many friends"));
    }

    #[test]
    fn apply_rejects_overlap_and_range() {
        let src = toks("a b c");
        let err = apply_edits(&src, &[Edit::new(0, 2, toks("x")), Edit::new(1, 3, toks("y"))]);
        assert!(matches!(err, Err(EditApplyError::Overlap { .. })));
        let err = apply_edits(&src, &[Edit::new(2, 5, toks("x"))]);
        assert!(matches!(err, Err(EditApplyError::OutOfRange { .. })));
        let err = apply_edits(&src, &[Edit::new(2, 3, toks("x")), Edit::new(0, 1, toks("y"))]);
        assert!(matches!(err, Err(EditApplyError::Unsorted)));
    }

    #[test]
    fn extract_single_substitution() {
        let edits = extract_edits(&toks("He go to school"), &toks("He goes to school"));
        assert_eq!(edits, vec![Edit::new(1, 2, toks("goes"))]);
    }

    #[test]
    fn extract_identity_is_empty() {
        assert!(extract_edits(&toks("a b c"), &toks("a b c")).is_empty());
    }

    #[test]
    fn extract_merges_adjacent_operations() {
        // Frozen against a brute-force minimal-alignment check (see below):
        // the substitution plus insertion merge into one atomic edit.
        let source = toks("I isn't ready");
        let target = toks("I 'm not ready");
        let edits = extract_edits(&source, &target);
        assert_eq!(edits, vec![Edit::new(1, 2, toks("'m not"))]);
        assert_eq!(brute_force_cost(&source, &target), 2);
        assert_eq!(apply_edits(&source, &edits).unwrap(), target);
    }

    #[test]
    fn extract_prefers_substitution_over_insert_delete() {
        let edits = extract_edits(&toks("a b"), &toks("b a"));
        assert_eq!(edits, vec![Edit::new(0, 2, toks("b a"))]);
    }

    #[test]
    fn extract_places_deletions_leftmost() {
        let edits = extract_edits(&toks("x x"), &toks("x"));
        assert_eq!(edits, vec![Edit::new(0, 1, vec![])]);
    }

    /// Minimal alignment cost over all monotone alignments, by exhaustive
    /// recursion. Independent of the DP implementation above.
    fn brute_force_cost(source: &[String], target: &[String]) -> u32 {
        fn go(s: &[String], t: &[String]) -> u32 {
            match (s.is_empty(), t.is_empty()) {
                (true, true) => 0,
                (true, false) => t.len() as u32,
                (false, true) => s.len() as u32,
                (false, false) => {
                    let sub = go(&s[1..], &t[1..]) + u32::from(s[0] != t[0]);
                    let del = go(&s[1..], t) + 1;
                    let ins = go(s, &t[1..]) + 1;
                    sub.min(del).min(ins)
                }
            }
        }
        go(source, target)
    }

    #[test]
    fn extract_cost_matches_brute_force_on_small_inputs() {
        let vocab = ["a", "b", "c"];
        let mut cases = Vec::new();
        for n in 0..4usize {
            for m in 0..4usize {
                for seed in 0..9usize {
                    let s: Vec<String> =
                        (0..n).map(|i| vocab[(seed + i) % vocab.len()].to_string()).collect();
                    let t: Vec<String> =
                        (0..m).map(|i| vocab[(seed * 2 + i * i) % vocab.len()].to_string()).collect();
                    cases.push((s, t));
                }
            }
        }
        for (s, t) in cases {
            let edits = extract_edits(&s, &t);
            let cost: u32 = edits
                .iter()
                .map(|e| {
                    let span = e.end - e.start;
                    let repl = e.replacement.len();
                    // Merged runs contain no matches, so the run cost is
                    // max(span, repl): substitutions overlap, the rest are
                    // pure inserts or deletes.
                    span.max(repl) as u32
                })
                .sum();
            assert_eq!(cost, brute_force_cost(&s, &t), "source {s:?} target {t:?}");
            assert_eq!(apply_edits(&s, &edits).unwrap(), t);
        }
    }

    proptest! {
        #[test]
        fn extraction_duality(
            source in proptest::collection::vec("[abcd]", 0..12),
            target in proptest::collection::vec("[abcd]", 0..12),
        ) {
            let source: Vec<String> = source;
            let target: Vec<String> = target;
            let edits = extract_edits(&source, &target);
            let rebuilt = apply_edits(&source, &edits).unwrap();
            prop_assert_eq!(rebuilt, target);
            // Edits are sorted, non-overlapping, and never no-ops.
            for pair in edits.windows(2) {
                prop_assert!(pair[0].end <= pair[1].start);
            }
            for edit in &edits {
                prop_assert_ne!(&edit.replacement[..], &source[edit.start..edit.end]);
            }
        }
    }
}
