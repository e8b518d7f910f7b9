//! Rationality evaluation for grammatical-error classification taxonomies.
//!
//! Four dimensions over an annotated learner-error corpus:
//!
//! - **Exclusivity** — how rarely a model assigns high confidence to several
//!   categories at once (top-k elicitation with verbalized confidence).
//! - **Coverage** — the fraction of instances labeled with a defined category
//!   rather than `"Other"`.
//! - **Balance** — entropy of the gold label distribution, normalized by
//!   log(m).
//! - **Usability** — Macro/Micro F1 of model predictions plus Cohen's kappa
//!   between annotators.
//!
//! Coverage and Balance come straight from gold annotations; Exclusivity and
//! the F1 scores consume model predictions. The [`llm`] module elicits
//! predictions with top-k prompting, self-random sampling, and
//! average-confidence aggregation, and persists raw replies to an audit log
//! so every report can be recomputed offline.
//!
//! ```
//! use taxeval::taxonomy::{builtin, fuse};
//!
//! let bry17 = builtin::taxonomy("BRY17").unwrap();
//! assert_eq!(bry17.label_count(), 23);
//! // Operation-prefixed labels resolve onto their leaf.
//! assert_eq!(bry17.canonical_label("R:NOUN:NUM").as_deref(), Some("NOUN:NUM"));
//!
//! let (fused, rewrite) = fuse(&bry17, &builtin::fusion_map("BRY17").unwrap()).unwrap();
//! assert_eq!(fused.label_count(), 21);
//! assert_eq!(rewrite.apply("PREP").unwrap(), "FUNC:WORD");
//! ```

pub mod ablation;
pub mod corpus;
pub mod llm;
pub mod metrics;
pub mod pipeline;
pub mod report;
pub mod taxonomy;

pub use corpus::{Edit, MultiEditSentence, SingleErrorInstance};
pub use llm::{BackendSpec, EvalConfig, PredictionSet};
pub use metrics::{LabeledRun, RunItem};
pub use report::{AblationReport, AgreementReport, MetricReport, RunManifest};
pub use taxonomy::{ErrorType, FusionMap, Taxonomy, OTHER_LABEL};
