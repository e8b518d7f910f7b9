//! Classification prompt construction.

use crate::corpus::SingleErrorInstance;
use crate::taxonomy::{Taxonomy, OTHER_LABEL};
use std::fmt::Write;

/// Builds the top-k classification prompt for one instance: the sentence
/// pair, the marked edit, the full leaf-label menu with one-line definitions,
/// an `"Other"` escape option, and the output-format instruction. Byte-
/// deterministic for fixed inputs.
pub fn build_prompt(instance: &SingleErrorInstance, taxonomy: &Taxonomy, k: usize) -> String {
    let mut marked = Vec::with_capacity(instance.source_tokens.len() + 2);
    for (i, token) in instance.source_tokens.iter().enumerate() {
        if i == instance.edit.start && !instance.edit.is_insertion() {
            marked.push(format!(">>{token}"));
        } else {
            marked.push(token.clone());
        }
        if i + 1 == instance.edit.end && !instance.edit.is_insertion() {
            let last = marked.last_mut().expect("span start pushed above");
            last.push_str("<<");
        }
    }
    if instance.edit.is_insertion() {
        marked.insert(instance.edit.start, ">><<".to_string());
    }

    let removed = instance.source_tokens[instance.edit.start..instance.edit.end].join(" ");
    let inserted = instance.edit.replacement.join(" ");
    let describe = |tokens: &str| {
        if tokens.is_empty() { "(nothing)".to_string() } else { format!("\"{tokens}\"") }
    };

    let mut prompt = String::new();
    prompt.push_str(
        "You are an expert in grammatical error analysis. A learner sentence and its \
         correction are given; the sentences contain exactly one error, marked with >> <<.\n\n",
    );
    writeln!(prompt, "Source: {}", marked.join(" ")).unwrap();
    writeln!(prompt, "Correction: {}", instance.target_tokens.join(" ")).unwrap();
    writeln!(
        prompt,
        "Edit: {} is corrected to {} (source tokens {}..{})",
        describe(&removed),
        describe(&inserted),
        instance.edit.start,
        instance.edit.end
    )
    .unwrap();
    writeln!(
        prompt,
        "\nClassify the marked error using the \"{}\" taxonomy ({}). Choose only from these \
         categories:",
        taxonomy.id, taxonomy.name
    )
    .unwrap();
    for leaf in taxonomy.leaf_types() {
        writeln!(prompt, "- {} ({}): {}", leaf.code, leaf.name, leaf.definition).unwrap();
    }
    writeln!(prompt, "- {OTHER_LABEL}: the error fits none of the categories above.").unwrap();
    writeln!(
        prompt,
        "\nRespond with exactly {k} distinct categories, most likely first, one per line, \
         each formatted as:\n<category code> | <confidence between 0 and 1>"
    )
    .unwrap();
    prompt
}
