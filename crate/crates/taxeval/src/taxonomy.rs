//! Hierarchical error-classification taxonomies.
//!
//! A taxonomy is a rooted tree of [`ErrorType`] nodes. Only leaf nodes are
//! assignable labels; internal nodes are organizational. The reserved label
//! `"Other"` is a corpus-level sentinel and may never appear as a node.

use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use thiserror::Error;

/// Sentinel label for errors outside the taxonomy. Never a node.
pub const OTHER_LABEL: &str = "Other";

/// Edit-operation tag carried by taxonomies that distinguish missing,
/// replacement, and unnecessary edits (the `[R/U/M]` prefixes).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum EditOp {
    Missing,
    Replacement,
    Unnecessary,
}

impl EditOp {
    pub fn prefix(self) -> &'static str {
        match self {
            EditOp::Missing => "M",
            EditOp::Replacement => "R",
            EditOp::Unnecessary => "U",
        }
    }

    pub fn from_prefix(p: &str) -> Option<EditOp> {
        match p.to_ascii_uppercase().as_str() {
            "M" => Some(EditOp::Missing),
            "R" => Some(EditOp::Replacement),
            "U" => Some(EditOp::Unnecessary),
            _ => None,
        }
    }
}

/// A (source, target) sentence pair illustrating an error type.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Example {
    pub source: String,
    pub target: String,
}

/// One category in a taxonomy tree.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorType {
    /// Short stable identifier, unique within the taxonomy ("2.1.4", "NOUN:NUM").
    pub code: String,
    pub name: String,
    pub definition: String,
    /// Operation tags, non-empty only for taxonomies that declare them.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub edit_ops: Vec<EditOp>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub examples: Vec<Example>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub children: Vec<ErrorType>,
}

impl ErrorType {
    pub fn is_leaf(&self) -> bool {
        self.children.is_empty()
    }
}

/// A validated taxonomy: unique codes, at least two leaf labels, no reserved
/// names. Immutable after load.
#[derive(Debug, Clone, PartialEq)]
pub struct Taxonomy {
    pub id: String,
    pub name: String,
    pub roots: Vec<ErrorType>,
    leaf_codes: Vec<String>,
}

#[derive(Debug, Serialize, Deserialize)]
struct TaxonomyDoc {
    id: String,
    name: String,
    nodes: Vec<ErrorType>,
}

/// Errors raised while loading, validating, or fusing a taxonomy.
#[derive(Debug, Error)]
pub enum TaxonomyError {
    #[error("taxonomy schema violation: {0}")]
    Schema(#[from] serde_json::Error),
    #[error("duplicate error-type code {code:?}")]
    DuplicateCode { code: String },
    #[error("node {code:?} has an empty {field}")]
    EmptyField { code: String, field: &'static str },
    #[error("taxonomy has {m} leaf label(s); at least 2 are required")]
    TooFewLabels { m: usize },
    #[error("reserved label {OTHER_LABEL:?} used as node {code:?}")]
    ReservedLabel { code: String },
    #[error("example of {code:?} has identical source and target")]
    ExampleSourceEqualsTarget { code: String },
    #[error("fusion map targets taxonomy {expected:?}, got {found:?}")]
    FusionTargetMismatch { expected: String, found: String },
    #[error("absorbed code {code:?} does not exist in the taxonomy")]
    AbsorbedCodeNotFound { code: String },
    #[error("absorbed code {code:?} is not a leaf")]
    AbsorbedCodeNotLeaf { code: String },
    #[error("code {code:?} absorbed by more than one merge")]
    AbsorbedCodeReused { code: String },
    #[error("merge target {code:?} must be a leaf (no children)")]
    MergeTargetHasChildren { code: String },
}

impl Taxonomy {
    /// Validates a tree and derives the leaf label set.
    pub fn new(id: String, name: String, roots: Vec<ErrorType>) -> Result<Taxonomy, TaxonomyError> {
        let mut seen = BTreeSet::new();
        let mut leaf_codes = Vec::new();
        for root in &roots {
            validate_node(root, &mut seen, &mut leaf_codes)?;
        }
        if leaf_codes.len() < 2 {
            return Err(TaxonomyError::TooFewLabels { m: leaf_codes.len() });
        }
        Ok(Taxonomy { id, name, roots, leaf_codes })
    }

    /// All leaf error types in depth-first order; their codes are the label space.
    pub fn leaf_types(&self) -> Vec<&ErrorType> {
        let mut out = Vec::with_capacity(self.leaf_codes.len());
        fn walk<'a>(node: &'a ErrorType, out: &mut Vec<&'a ErrorType>) {
            if node.is_leaf() {
                out.push(node);
            } else {
                for child in &node.children {
                    walk(child, out);
                }
            }
        }
        for root in &self.roots {
            walk(root, &mut out);
        }
        out
    }

    /// Leaf codes in depth-first order.
    pub fn leaf_codes(&self) -> &[String] {
        &self.leaf_codes
    }

    /// Number of assignable labels (the taxonomy's `m`).
    pub fn label_count(&self) -> usize {
        self.leaf_codes.len()
    }

    pub fn declares_edit_ops(&self) -> bool {
        self.leaf_types().iter().any(|t| !t.edit_ops.is_empty())
    }

    /// Maps a raw label to its canonical form: a leaf code or [`OTHER_LABEL`].
    ///
    /// Accepts leaf codes and leaf names case-insensitively, and operation
    /// prefixes ("R:NOUN:NUM") when the leaf declares the operation.
    pub fn canonical_label(&self, raw: &str) -> Option<String> {
        let raw = raw.trim();
        if raw.is_empty() {
            return None;
        }
        if raw.eq_ignore_ascii_case(OTHER_LABEL) {
            return Some(OTHER_LABEL.to_string());
        }
        let leaves = self.leaf_types();
        for leaf in &leaves {
            if leaf.code.eq_ignore_ascii_case(raw) {
                return Some(leaf.code.clone());
            }
        }
        if let Some((prefix, rest)) = raw.split_once(':') {
            if let Some(op) = EditOp::from_prefix(prefix) {
                for leaf in &leaves {
                    if leaf.code.eq_ignore_ascii_case(rest) && leaf.edit_ops.contains(&op) {
                        return Some(leaf.code.clone());
                    }
                }
            }
        }
        for leaf in &leaves {
            if leaf.name.eq_ignore_ascii_case(raw) {
                return Some(leaf.code.clone());
            }
        }
        None
    }

    /// Serializes to the canonical taxonomy file format.
    pub fn to_json(&self) -> String {
        let doc = TaxonomyDoc {
            id: self.id.clone(),
            name: self.name.clone(),
            nodes: self.roots.clone(),
        };
        let mut out = serde_json::to_string_pretty(&doc).expect("taxonomy serialization");
        out.push('\n');
        out
    }
}

fn validate_node(
    node: &ErrorType,
    seen: &mut BTreeSet<String>,
    leaf_codes: &mut Vec<String>,
) -> Result<(), TaxonomyError> {
    if node.code.trim().is_empty() {
        return Err(TaxonomyError::EmptyField { code: node.name.clone(), field: "code" });
    }
    if node.name.trim().is_empty() {
        return Err(TaxonomyError::EmptyField { code: node.code.clone(), field: "name" });
    }
    if node.code.eq_ignore_ascii_case(OTHER_LABEL) || node.name.eq_ignore_ascii_case(OTHER_LABEL) {
        return Err(TaxonomyError::ReservedLabel { code: node.code.clone() });
    }
    if !seen.insert(node.code.clone()) {
        return Err(TaxonomyError::DuplicateCode { code: node.code.clone() });
    }
    for ex in &node.examples {
        if ex.source == ex.target {
            return Err(TaxonomyError::ExampleSourceEqualsTarget { code: node.code.clone() });
        }
    }
    if node.is_leaf() {
        leaf_codes.push(node.code.clone());
    }
    for child in &node.children {
        validate_node(child, seen, leaf_codes)?;
    }
    Ok(())
}

/// Parses and validates a taxonomy file.
pub fn load_taxonomy(text: &str) -> Result<Taxonomy, TaxonomyError> {
    let doc: TaxonomyDoc = serde_json::from_str(text)?;
    Taxonomy::new(doc.id, doc.name, doc.nodes)
}

/// One merge step: a set of current leaves absorbed into a new leaf.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Merge {
    #[serde(rename = "new")]
    pub replacement: ErrorType,
    pub absorb: Vec<String>,
}

/// A category-fusion recipe for one taxonomy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FusionMap {
    pub taxonomy_id: String,
    pub merges: Vec<Merge>,
}

/// Parses and structurally checks a fusion-map file.
pub fn load_fusion_map(text: &str) -> Result<FusionMap, TaxonomyError> {
    let map: FusionMap = serde_json::from_str(text)?;
    let mut seen = BTreeSet::new();
    for merge in &map.merges {
        if !merge.replacement.is_leaf() {
            return Err(TaxonomyError::MergeTargetHasChildren {
                code: merge.replacement.code.clone(),
            });
        }
        for code in &merge.absorb {
            if !seen.insert(code.clone()) {
                return Err(TaxonomyError::AbsorbedCodeReused { code: code.clone() });
            }
        }
    }
    Ok(map)
}

/// Total mapping from the old label alphabet onto the fused one.
///
/// Identity on untouched leaves and on [`OTHER_LABEL`]; absorbed leaves map
/// to their merge's replacement code. Raw labels are resolved against the
/// pre-fusion taxonomy, so operation-prefixed forms are accepted.
#[derive(Debug, Clone)]
pub struct LabelRewrite {
    old: Taxonomy,
    map: BTreeMap<String, String>,
}

#[derive(Debug, Error)]
#[error("label {label:?} is outside the rewrite domain of taxonomy {taxonomy:?}")]
pub struct RewriteError {
    pub label: String,
    pub taxonomy: String,
}

impl LabelRewrite {
    pub fn apply(&self, label: &str) -> Result<String, RewriteError> {
        let canonical = self.old.canonical_label(label).ok_or_else(|| RewriteError {
            label: label.to_string(),
            taxonomy: self.old.id.clone(),
        })?;
        if canonical == OTHER_LABEL {
            return Ok(canonical);
        }
        Ok(self.map.get(&canonical).cloned().unwrap_or(canonical))
    }

    /// The underlying leaf-code mapping (old code -> new code), identity
    /// entries included.
    pub fn mapping(&self) -> &BTreeMap<String, String> {
        &self.map
    }
}

/// Applies a fusion map, returning the fused taxonomy and the label rewrite.
///
/// Each absorbed group is replaced by its merge's new leaf: when the group
/// exhausts all children of one parent, the new leaf takes the parent's place;
/// otherwise it is appended to the children of the group's lowest common
/// ancestor. Emptied internal nodes never survive as accidental labels.
pub fn fuse(t: &Taxonomy, f: &FusionMap) -> Result<(Taxonomy, LabelRewrite), TaxonomyError> {
    if f.taxonomy_id != t.id {
        return Err(TaxonomyError::FusionTargetMismatch {
            expected: t.id.clone(),
            found: f.taxonomy_id.clone(),
        });
    }

    let mut absorbed_by: BTreeMap<String, String> = BTreeMap::new();
    for merge in &f.merges {
        if !merge.replacement.is_leaf() {
            return Err(TaxonomyError::MergeTargetHasChildren {
                code: merge.replacement.code.clone(),
            });
        }
        for code in &merge.absorb {
            if absorbed_by.insert(code.clone(), merge.replacement.code.clone()).is_some() {
                return Err(TaxonomyError::AbsorbedCodeReused { code: code.clone() });
            }
        }
    }

    let leaf_set: BTreeSet<&str> = t.leaf_codes.iter().map(String::as_str).collect();
    for merge in &f.merges {
        for code in &merge.absorb {
            if !leaf_set.contains(code.as_str()) {
                if find_node(&t.roots, code).is_some() {
                    return Err(TaxonomyError::AbsorbedCodeNotLeaf { code: code.clone() });
                }
                return Err(TaxonomyError::AbsorbedCodeNotFound { code: code.clone() });
            }
        }
    }

    let mut roots = t.roots.clone();
    for merge in &f.merges {
        let absorb: BTreeSet<&str> = merge.absorb.iter().map(String::as_str).collect();
        // Parent path of each absorbed leaf, before removal. Empty path = root level.
        let mut parent_paths: Vec<Vec<String>> = Vec::new();
        for code in &absorb {
            parent_paths.push(path_to(&roots, code).expect("leaf located above"));
        }
        remove_leaves(&mut roots, &absorb);

        let same_parent =
            parent_paths.windows(2).all(|w| w[0] == w[1]) && !parent_paths.is_empty();
        if same_parent && !parent_paths[0].is_empty() {
            let parent_code = parent_paths[0].last().unwrap().clone();
            let emptied = find_node(&roots, &parent_code).map(ErrorType::is_leaf).unwrap_or(false);
            if emptied {
                replace_node(&mut roots, &parent_code, merge.replacement.clone());
            } else {
                find_node_mut(&mut roots, &parent_code)
                    .expect("parent survives leaf removal")
                    .children
                    .push(merge.replacement.clone());
            }
        } else {
            // Root-level groups and cross-parent groups: append to the lowest
            // common ancestor, then prune emptied internal nodes.
            let lca = lowest_common_path(&parent_paths);
            match lca.last() {
                Some(code) => {
                    let code = code.clone();
                    find_node_mut(&mut roots, &code)
                        .expect("ancestor survives leaf removal")
                        .children
                        .push(merge.replacement.clone());
                }
                None => roots.push(merge.replacement.clone()),
            }
            prune_emptied(&mut roots, &t.roots);
        }
    }

    let fused = Taxonomy::new(t.id.clone(), t.name.clone(), roots)?;
    let mut map = BTreeMap::new();
    for code in &t.leaf_codes {
        let target = absorbed_by.get(code).cloned().unwrap_or_else(|| code.clone());
        map.insert(code.clone(), target);
    }
    Ok((fused, LabelRewrite { old: t.clone(), map }))
}

fn find_node<'a>(nodes: &'a [ErrorType], code: &str) -> Option<&'a ErrorType> {
    for node in nodes {
        if node.code == code {
            return Some(node);
        }
        if let Some(found) = find_node(&node.children, code) {
            return Some(found);
        }
    }
    None
}

fn find_node_mut<'a>(nodes: &'a mut [ErrorType], code: &str) -> Option<&'a mut ErrorType> {
    for node in nodes {
        if node.code == code {
            return Some(node);
        }
        if let Some(found) = find_node_mut(&mut node.children, code) {
            return Some(found);
        }
    }
    None
}

/// Codes of the ancestors of `code`, outermost first (empty for roots).
fn path_to(nodes: &[ErrorType], code: &str) -> Option<Vec<String>> {
    for node in nodes {
        if node.code == code {
            return Some(Vec::new());
        }
        if let Some(mut path) = path_to(&node.children, code) {
            path.insert(0, node.code.clone());
            return Some(path);
        }
    }
    None
}

fn remove_leaves(nodes: &mut Vec<ErrorType>, codes: &BTreeSet<&str>) {
    nodes.retain(|n| !(n.is_leaf() && codes.contains(n.code.as_str())));
    for node in nodes {
        remove_leaves(&mut node.children, codes);
    }
}

fn replace_node(nodes: &mut [ErrorType], code: &str, replacement: ErrorType) -> bool {
    for node in nodes.iter_mut() {
        if node.code == code {
            *node = replacement;
            return true;
        }
        if replace_node(&mut node.children, code, replacement.clone()) {
            return true;
        }
    }
    false
}

fn lowest_common_path(paths: &[Vec<String>]) -> Vec<String> {
    let mut lca: Vec<String> = paths.first().cloned().unwrap_or_default();
    for path in paths.iter().skip(1) {
        let common = lca.iter().zip(path.iter()).take_while(|(a, b)| a == b).count();
        lca.truncate(common);
    }
    lca
}

/// Drops nodes that lost all their children to absorption; nodes that were
/// leaves in the original tree are kept.
fn prune_emptied(nodes: &mut Vec<ErrorType>, original: &[ErrorType]) {
    loop {
        let mut changed = false;
        prune_pass(nodes, original, &mut changed);
        if !changed {
            break;
        }
    }
}

fn prune_pass(nodes: &mut Vec<ErrorType>, original: &[ErrorType], changed: &mut bool) {
    let before = nodes.len();
    nodes.retain(|n| {
        let was_internal = find_node(original, &n.code).map(|o| !o.is_leaf()).unwrap_or(false);
        !(n.is_leaf() && was_internal)
    });
    if nodes.len() != before {
        *changed = true;
    }
    for node in nodes {
        prune_pass(&mut node.children, original, changed);
    }
}

/// The four taxonomy files and fusion maps shipped with the crate.
pub mod builtin {
    use super::{load_fusion_map, load_taxonomy, FusionMap, Taxonomy};

    pub const POL73_JSON: &str = include_str!("../data/taxonomies/pol73.json");
    pub const TUC74_JSON: &str = include_str!("../data/taxonomies/tuc74.json");
    pub const BRY17_JSON: &str = include_str!("../data/taxonomies/bry17.json");
    pub const FEI23_JSON: &str = include_str!("../data/taxonomies/fei23.json");

    pub const POL73_FUSION_JSON: &str = include_str!("../data/fusion/pol73.json");
    pub const TUC74_FUSION_JSON: &str = include_str!("../data/fusion/tuc74.json");
    pub const BRY17_FUSION_JSON: &str = include_str!("../data/fusion/bry17.json");
    pub const FEI23_FUSION_JSON: &str = include_str!("../data/fusion/fei23.json");

    /// Canonical order used in reports and tables.
    pub const IDS: [&str; 4] = ["POL73", "TUC74", "BRY17", "FEI23"];

    pub fn taxonomy(id: &str) -> Option<Taxonomy> {
        let text = match id.to_ascii_uppercase().as_str() {
            "POL73" => POL73_JSON,
            "TUC74" => TUC74_JSON,
            "BRY17" => BRY17_JSON,
            "FEI23" => FEI23_JSON,
            _ => return None,
        };
        Some(load_taxonomy(text).expect("shipped taxonomy is valid"))
    }

    pub fn fusion_map(id: &str) -> Option<FusionMap> {
        let text = match id.to_ascii_uppercase().as_str() {
            "POL73" => POL73_FUSION_JSON,
            "TUC74" => TUC74_FUSION_JSON,
            "BRY17" => BRY17_FUSION_JSON,
            "FEI23" => FEI23_FUSION_JSON,
            _ => return None,
        };
        Some(load_fusion_map(text).expect("shipped fusion map is valid"))
    }
}
