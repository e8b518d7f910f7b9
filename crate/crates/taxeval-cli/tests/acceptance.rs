//! Acceptance suite: one test per release criterion, each printing a PASS
//! line. Run with `cargo test -p taxeval-cli --test acceptance -- --nocapture`.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::process::Command;
use std::time::Instant;

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use taxeval::ablation::{relabel, run_ablation};
use taxeval::corpus::{
    apply_edits, decompose, extract_edits, parse_m2, render_m2, save_corpus,
};
use taxeval::llm::{write_audit, BackendSpec, EvalConfig, LabelConfidence, MockBackend};
use taxeval::metrics::{
    balance, cohens_kappa, coverage, exclusivity, macro_f1, micro_f1, LabeledRun, RunItem,
};
use taxeval::pipeline::{evaluate_taxonomy, replay_from_text};
use taxeval::taxonomy::{builtin, fuse, load_taxonomy, ErrorType, FusionMap, Taxonomy};
use taxeval::{Edit, MultiEditSentence, PredictionSet, SingleErrorInstance, OTHER_LABEL};

const TOL: f64 = 1e-12;

fn leaf(code: &str) -> ErrorType {
    ErrorType {
        code: code.to_string(),
        name: format!("label {code}"),
        definition: format!("definition of {code}"),
        edit_ops: vec![],
        examples: vec![],
        children: vec![],
    }
}

fn flat_taxonomy(m: usize) -> Taxonomy {
    let roots = (0..m).map(|i| leaf(&format!("L{i:02}"))).collect();
    Taxonomy::new("SYN".into(), "synthetic".into(), roots).unwrap()
}

fn toks(s: &str) -> Vec<String> {
    s.split_whitespace().map(str::to_string).collect()
}

// ---------------------------------------------------------------------------
// Criterion 1: metric oracle equivalence on randomized synthetic runs.
// ---------------------------------------------------------------------------

struct OracleItems<'a>(&'a [RunItem]);

impl OracleItems<'_> {
    fn exclusivity(&self, tau: f64, k: usize) -> f64 {
        let mut total = 0.0;
        for item in self.0 {
            let p = item.prediction.as_ref().unwrap();
            let mut ov = 0usize;
            for e in &p.entries {
                if e.confidence > tau {
                    ov += 1;
                }
            }
            if ov > 0 {
                total += 1.0 - (ov as f64 - 1.0) / (k as f64 - 1.0);
            }
        }
        total / self.0.len() as f64
    }

    fn coverage(&self) -> f64 {
        let mut covered = 0usize;
        for item in self.0 {
            if item.gold != OTHER_LABEL {
                covered += 1;
            }
        }
        covered as f64 / self.0.len() as f64
    }

    fn balance(&self, m: usize) -> f64 {
        let mut counts: HashMap<&str, usize> = HashMap::new();
        let mut total = 0usize;
        for item in self.0 {
            if item.gold != OTHER_LABEL {
                *counts.entry(item.gold.as_str()).or_insert(0) += 1;
                total += 1;
            }
        }
        let mut entropy = 0.0;
        for count in counts.values() {
            let p = *count as f64 / total as f64;
            entropy += -p * p.ln();
        }
        entropy / (m as f64).ln()
    }

    /// Accuracy; for single-label classification this IS micro F1.
    fn micro(&self) -> f64 {
        let mut agree = 0usize;
        for item in self.0 {
            let top = &item.prediction.as_ref().unwrap().entries[0].label;
            if *top == item.gold {
                agree += 1;
            }
        }
        agree as f64 / self.0.len() as f64
    }

    fn macro_f1(&self, leaf_codes: &[String]) -> f64 {
        let mut sum = 0.0;
        for code in leaf_codes {
            let (mut tp, mut fp, mut fn_) = (0usize, 0usize, 0usize);
            for item in self.0 {
                let top = &item.prediction.as_ref().unwrap().entries[0].label;
                let predicted = top == code;
                let gold = item.gold == *code;
                match (predicted, gold) {
                    (true, true) => tp += 1,
                    (true, false) => fp += 1,
                    (false, true) => fn_ += 1,
                    (false, false) => {}
                }
            }
            if tp > 0 {
                sum += 2.0 * tp as f64 / (2.0 * tp as f64 + fp as f64 + fn_ as f64);
            }
        }
        sum / leaf_codes.len() as f64
    }
}

fn random_run(rng: &mut StdRng) -> (LabeledRun, Taxonomy) {
    let m = rng.gen_range(2..=30);
    let taxonomy = flat_taxonomy(m);
    let codes = taxonomy.leaf_codes().to_vec();
    let d = rng.gen_range(1..=200);
    let k = rng.gen_range(2..=5);
    let tau = [0.5, 0.7, 0.9][rng.gen_range(0..3)];

    let mut items = Vec::with_capacity(d);
    for i in 0..d {
        let gold = if i > 0 && rng.gen_bool(0.15) {
            OTHER_LABEL.to_string()
        } else {
            codes[rng.gen_range(0..m)].clone()
        };
        let mut pool: Vec<String> = codes.clone();
        pool.push(OTHER_LABEL.to_string());
        let n_entries = rng.gen_range(1..=k.min(pool.len()));
        let mut entries = Vec::with_capacity(n_entries);
        for _ in 0..n_entries {
            let label = pool.swap_remove(rng.gen_range(0..pool.len()));
            entries.push(LabelConfidence { label, confidence: rng.gen_range(0.0..1.0) });
        }
        entries.sort_by(|a, b| b.confidence.partial_cmp(&a.confidence).unwrap());
        items.push(RunItem {
            instance_id: format!("i{i:04}"),
            gold,
            prediction: Some(PredictionSet { instance_id: format!("i{i:04}"), entries }),
        });
    }
    let run =
        LabeledRun { taxonomy_id: taxonomy.id.clone(), tau, k, items, excluded: 0 };
    (run, taxonomy)
}

#[test]
fn criterion_1_metric_oracle_equivalence() {
    let started = Instant::now();
    let mut rng = StdRng::seed_from_u64(0xC0FFEE);
    for trial in 0..1000 {
        let (run, taxonomy) = random_run(&mut rng);
        let oracle = OracleItems(&run.items);
        let checks = [
            ("exclusivity", exclusivity(&run).unwrap(), oracle.exclusivity(run.tau, run.k)),
            ("coverage", coverage(&run).unwrap(), oracle.coverage()),
            ("balance", balance(&run, &taxonomy).unwrap(), oracle.balance(taxonomy.label_count())),
            ("micro_f1", micro_f1(&run).unwrap(), oracle.micro()),
            ("macro_f1", macro_f1(&run, &taxonomy).unwrap(), oracle.macro_f1(taxonomy.leaf_codes())),
        ];
        for (name, got, expected) in checks {
            assert!(
                (got - expected).abs() <= TOL,
                "trial {trial}: {name} = {got}, oracle = {expected}"
            );
        }
    }
    let elapsed = started.elapsed();
    assert!(elapsed.as_secs_f64() < 10.0, "oracle sweep took {elapsed:?}");
    eprintln!("ACCEPTANCE 1 PASS: 1000 randomized runs match the brute-force oracle (<= 1e-12, {elapsed:?})");
}

// ---------------------------------------------------------------------------
// Criterion 2: closed-form anchors.
// ---------------------------------------------------------------------------

fn gold_only_run(golds: &[&str]) -> LabeledRun {
    let items = golds
        .iter()
        .enumerate()
        .map(|(i, gold)| RunItem {
            instance_id: format!("i{i:03}"),
            gold: gold.to_string(),
            prediction: None,
        })
        .collect();
    LabeledRun { taxonomy_id: "SYN".into(), tau: 0.7, k: 3, items, excluded: 0 }
}

fn run_with_overlaps(overlaps: &[usize], k: usize) -> LabeledRun {
    let items = overlaps
        .iter()
        .enumerate()
        .map(|(i, &ov)| {
            let mut entries = Vec::new();
            for j in 0..k {
                let confidence = if j < ov { 0.9 - j as f64 * 0.01 } else { 0.1 };
                entries.push(LabelConfidence { label: format!("L{j:02}"), confidence });
            }
            RunItem {
                instance_id: format!("i{i:03}"),
                gold: "L00".into(),
                prediction: Some(PredictionSet { instance_id: format!("i{i:03}"), entries }),
            }
        })
        .collect();
    LabeledRun { taxonomy_id: "SYN".into(), tau: 0.7, k, items, excluded: 0 }
}

#[test]
fn criterion_2_closed_form_anchors() {
    // Balance(uniform) = 1, Balance(degenerate) = 0, for several m.
    for m in [2usize, 5, 16, 30] {
        let taxonomy = flat_taxonomy(m);
        let codes = taxonomy.leaf_codes().to_vec();
        let mut uniform = Vec::new();
        for code in &codes {
            for _ in 0..3 {
                uniform.push(code.as_str());
            }
        }
        let run = gold_only_run(&uniform);
        assert!((balance(&run, &taxonomy).unwrap() - 1.0).abs() <= TOL, "uniform m={m}");

        let degenerate: Vec<&str> = vec![codes[0].as_str(); 9];
        let run = gold_only_run(&degenerate);
        assert!(balance(&run, &taxonomy).unwrap().abs() <= TOL, "degenerate m={m}");
    }

    // Exclusivity anchors.
    for k in [2usize, 3, 5] {
        let all_one = run_with_overlaps(&vec![1; 40], k);
        assert!((exclusivity(&all_one).unwrap() - 1.0).abs() <= TOL);
        let all_k = run_with_overlaps(&vec![k; 40], k);
        assert!(exclusivity(&all_k).unwrap().abs() <= TOL);
        let all_zero = run_with_overlaps(&vec![0; 40], k);
        assert!(exclusivity(&all_zero).unwrap().abs() <= TOL);
        let mixed: Vec<usize> = (0..40).map(|i| if i % 2 == 0 { 0 } else { k }).collect();
        let mixed = run_with_overlaps(&mixed, k);
        assert!(exclusivity(&mixed).unwrap().abs() <= TOL);
    }

    // Micro F1 equals accuracy on every single-label run.
    let mut rng = StdRng::seed_from_u64(42);
    for _ in 0..50 {
        let (run, _) = random_run(&mut rng);
        let oracle = OracleItems(&run.items);
        assert!((micro_f1(&run).unwrap() - oracle.micro()).abs() <= TOL);
    }
    eprintln!("ACCEPTANCE 2 PASS: balance/exclusivity anchors exact, micro F1 = accuracy (<= 1e-12)");
}

// ---------------------------------------------------------------------------
// Criterion 3: Cohen's kappa and the agreement command shape.
// ---------------------------------------------------------------------------

fn annotator_corpus(golds: &[&str]) -> Vec<SingleErrorInstance> {
    golds
        .iter()
        .enumerate()
        .map(|(i, gold)| SingleErrorInstance {
            id: format!("i{i:03}"),
            source_tokens: toks("She has many friend ."),
            target_tokens: toks("She has many friends ."),
            edit: Edit::new(3, 4, toks("friends")),
            gold_labels: BTreeMap::from([("BRY17".to_string(), gold.to_string())]),
        })
        .collect()
}

#[test]
fn criterion_3_kappa_and_agreement_shape() {
    let seq = |labels: &[&str]| labels.iter().map(|s| s.to_string()).collect::<Vec<_>>();
    // Hand-computed 2x2 example: p_o = 0.5, p_e = 0.5 -> kappa = 0.
    let a = seq(&["A", "A", "B", "B"]);
    let b = seq(&["A", "B", "A", "B"]);
    assert_eq!(cohens_kappa(&a, &b).unwrap(), 0.0);
    // Perfect agreement is exactly 1.
    let c = seq(&["X", "Y", "X", "Z"]);
    assert_eq!(cohens_kappa(&c, &c).unwrap(), 1.0);

    // Agreement command over three synthetic annotators.
    let dir = tempfile::tempdir().unwrap();
    let ann = [
        annotator_corpus(&["NOUN:NUM", "DET", "PREP", "Other", "VERB:SVA", "DET"]),
        annotator_corpus(&["NOUN:NUM", "DET", "CONJ", "Other", "VERB:SVA", "DET"]),
        annotator_corpus(&["NOUN:NUM", "ADJ", "PREP", "Other", "VERB", "DET"]),
    ];
    let mut paths = Vec::new();
    for (i, corpus) in ann.iter().enumerate() {
        let path = dir.path().join(format!("ann{i}.json"));
        std::fs::write(&path, save_corpus(corpus)).unwrap();
        paths.push(path);
    }
    let report_path = dir.path().join("agreement.json");
    let output = Command::new(env!("CARGO_BIN_EXE_taxeval"))
        .args(["agreement", "--a"])
        .arg(&paths[0])
        .arg("--b")
        .arg(&paths[1])
        .arg("--c")
        .arg(&paths[2])
        .args(["--taxonomy", "BRY17", "--out"])
        .arg(&report_path)
        .output()
        .unwrap();
    assert!(output.status.success(), "agreement failed: {output:?}");
    let stdout = String::from_utf8(output.stdout).unwrap();
    for row in ["Annotator 1 & 2", "Annotator 2 & 3", "Annotator 1 & 3", "Average"] {
        assert!(stdout.contains(row), "missing row {row:?} in:\n{stdout}");
    }
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&report_path).unwrap()).unwrap();
    assert_eq!(report["rows"].as_array().unwrap().len(), 3);
    assert!(report["average"]["BRY17"].is_f64() || report["average"]["BRY17"].is_number());
    eprintln!("ACCEPTANCE 3 PASS: kappa anchors exact; agreement emits 3 pairwise rows + average");
}

// ---------------------------------------------------------------------------
// Criterion 4: decomposition on a synthetic M2 file.
// ---------------------------------------------------------------------------

/// Sentences use globally unique tokens so alignment is unambiguous and every
/// decomposed instance extracts back to exactly its retained edit.
fn synthetic_m2(rng: &mut StdRng, sentences: usize) -> (String, usize) {
    let mut out = Vec::new();
    let mut total_edits = 0usize;
    for si in 0..sentences {
        let n_edits = rng.gen_range(1..=4);
        let mut tokens = Vec::new();
        let mut edits = Vec::new();
        let mut cursor = 0usize;
        for ei in 0..n_edits {
            let span_len = rng.gen_range(0..=2);
            let gap = if span_len == 0 { rng.gen_range(1..=2) } else { rng.gen_range(0..=2) };
            for _ in 0..gap {
                tokens.push(format!("w{si}p{}", tokens.len()));
            }
            let start = cursor + gap;
            for _ in 0..span_len {
                tokens.push(format!("w{si}p{}", tokens.len()));
            }
            let repl_len =
                if span_len == 0 { rng.gen_range(1..=2) } else { rng.gen_range(0..=2) };
            let replacement: Vec<String> =
                (0..repl_len).map(|t| format!("r{si}e{ei}t{t}")).collect();
            let mut edit = Edit::new(start, start + span_len, replacement);
            edit.type_hint = Some("R:SYN".to_string());
            edits.push(edit);
            cursor = start + span_len;
        }
        for _ in 0..rng.gen_range(1..=2) {
            tokens.push(format!("w{si}p{}", tokens.len()));
        }
        total_edits += n_edits;
        out.push(MultiEditSentence {
            id: format!("s{si}"),
            source_tokens: tokens,
            edits,
        });
    }
    (render_m2(&out), total_edits)
}

#[test]
fn criterion_4_decomposition_properties() {
    let started = Instant::now();
    let mut rng = StdRng::seed_from_u64(2024);
    let (m2_text, total_edits) = synthetic_m2(&mut rng, 50);
    let sentences = parse_m2(&m2_text).unwrap();
    assert_eq!(sentences.len(), 50);

    let mut instance_count = 0usize;
    for sentence in &sentences {
        let instances = decompose(sentence).unwrap();
        assert_eq!(instances.len(), sentence.edits.len());
        instance_count += instances.len();
        let shared_target = &instances[0].target_tokens;
        for inst in &instances {
            assert_eq!(&inst.target_tokens, shared_target, "siblings share one target");
            let extracted = extract_edits(&inst.source_tokens, &inst.target_tokens);
            assert_eq!(extracted.len(), 1, "instance {} has one remaining edit", inst.id);
            assert!(
                extracted[0].same_change(&inst.edit),
                "instance {}: extracted {:?} vs retained {:?}",
                inst.id,
                extracted[0],
                inst.edit
            );
        }
    }
    assert_eq!(instance_count, total_edits, "sum of n over sentences");
    let elapsed = started.elapsed();
    assert!(elapsed.as_secs_f64() < 1.0, "decomposition sweep took {elapsed:?}");
    eprintln!("ACCEPTANCE 4 PASS: 50 sentences -> {instance_count} instances, all single-edit with shared targets ({elapsed:?})");
}

// ---------------------------------------------------------------------------
// Criterion 5: alignment duality on random edit lists.
// ---------------------------------------------------------------------------

#[test]
fn criterion_5_alignment_duality() {
    let mut rng = StdRng::seed_from_u64(99);
    let vocab = ["t0", "t1", "t2", "t3", "t4", "t5"];
    for trial in 0..500 {
        let len = rng.gen_range(1..=14);
        let source: Vec<String> =
            (0..len).map(|_| vocab[rng.gen_range(0..vocab.len())].to_string()).collect();
        let mut edits = Vec::new();
        let mut cursor = 0usize;
        while cursor < source.len() && edits.len() < 4 {
            let gap = rng.gen_range(0..=3);
            let start = cursor + gap;
            if start > source.len() {
                break;
            }
            let span_len = rng.gen_range(0..=2.min(source.len() - start));
            let repl_len = if span_len == 0 { rng.gen_range(1..=2) } else { rng.gen_range(0..=2) };
            let replacement: Vec<String> =
                (0..repl_len).map(|_| vocab[rng.gen_range(0..vocab.len())].to_string()).collect();
            if replacement == source[start..start + span_len] {
                cursor = start + span_len.max(1);
                continue; // no-op spans are not edits
            }
            if span_len == 0 && edits.last().map(|e: &Edit| e.end == start && e.is_insertion()).unwrap_or(false) {
                cursor = start + 1;
                continue; // two insertions at one point have no defined order
            }
            edits.push(Edit::new(start, start + span_len, replacement));
            cursor = start + span_len.max(1);
        }
        let target = apply_edits(&source, &edits).unwrap();
        let extracted = extract_edits(&source, &target);
        let rebuilt = apply_edits(&source, &extracted).unwrap();
        assert_eq!(rebuilt, target, "trial {trial}: source {source:?} edits {edits:?}");
    }
    eprintln!("ACCEPTANCE 5 PASS: 500 random edit lists survive extract-then-apply exactly");
}

// ---------------------------------------------------------------------------
// Criterion 6: end-to-end mock pipeline reproducibility and exact anchors.
// ---------------------------------------------------------------------------

fn synthetic_corpus_100() -> Vec<SingleErrorInstance> {
    let bry17 = builtin::taxonomy("BRY17").unwrap();
    let leaves = bry17.leaf_codes().to_vec();
    (0..100)
        .map(|i| {
            let gold = if i % 11 == 7 {
                OTHER_LABEL.to_string()
            } else {
                leaves[i % leaves.len()].clone()
            };
            SingleErrorInstance {
                id: format!("i{i:03}"),
                source_tokens: toks("She has many friend ."),
                target_tokens: toks("She has many friends ."),
                edit: Edit::new(3, 4, toks("friends")),
                gold_labels: BTreeMap::from([("BRY17".to_string(), gold)]),
            }
        })
        .collect()
}

#[test]
fn criterion_6_mock_pipeline_reproducible_and_exact() {
    let instances = synthetic_corpus_100();
    let cfg = EvalConfig {
        seed: 7,
        backend: BackendSpec::Mock { ambiguity: 0.0 },
        ..EvalConfig::default()
    };
    let backend = MockBackend::new(0.0);

    let a = evaluate_taxonomy(&instances, &builtin::taxonomy("BRY17").unwrap(), &cfg, &backend)
        .unwrap();
    let b = evaluate_taxonomy(&instances, &builtin::taxonomy("BRY17").unwrap(), &cfg, &backend)
        .unwrap();
    assert_eq!(
        taxeval::report::to_canonical_json(&a.report),
        taxeval::report::to_canonical_json(&b.report)
    );
    assert_eq!(write_audit(&a.raw_replies), write_audit(&b.raw_replies));
    assert_eq!(a.report.scores.exclusivity, 1.0, "ambiguity 0 gives exact exclusivity 1");
    assert_eq!(a.report.scores.micro_f1, 1.0, "ambiguity 0 gives exact micro F1 1");

    // Byte-level reproducibility through the binary, manifest included.
    let dir = tempfile::tempdir().unwrap();
    let corpus_path = dir.path().join("corpus.json");
    std::fs::write(&corpus_path, save_corpus(&instances)).unwrap();
    let run = |out: &str| {
        let status = Command::new(env!("CARGO_BIN_EXE_taxeval"))
            .args(["evaluate", "--corpus"])
            .arg(&corpus_path)
            .args(["--taxonomy", "BRY17", "--backend", "mock", "--seed", "7", "--out"])
            .arg(dir.path().join(out))
            .env("SOURCE_DATE_EPOCH", "0")
            .status()
            .unwrap();
        assert!(status.success());
    };
    run("runA");
    run("runB");
    let read = |name: &str, file: &str| std::fs::read(dir.path().join(name).join(file)).unwrap();
    assert_eq!(read("runA", "report-BRY17.json"), read("runB", "report-BRY17.json"));
    assert_eq!(read("runA", "audit-BRY17.jsonl"), read("runB", "audit-BRY17.jsonl"));
    eprintln!("ACCEPTANCE 6 PASS: mock pipeline byte-reproducible; exclusivity = micro F1 = 1.0 exactly");
}

// ---------------------------------------------------------------------------
// Criterion 7: fusion properties.
// ---------------------------------------------------------------------------

#[test]
fn criterion_7_fusion_properties() {
    let instances = synthetic_corpus_100();
    let bry17 = builtin::taxonomy("BRY17").unwrap();
    let cfg = EvalConfig {
        seed: 3,
        samples: 2,
        backend: BackendSpec::Mock { ambiguity: 0.25 },
        ..EvalConfig::default()
    };
    let backend = MockBackend::new(0.25);

    // Identity fusion changes no metric.
    let identity = FusionMap { taxonomy_id: "BRY17".into(), merges: vec![] };
    let outcome = run_ablation(&instances, &bry17, &identity, &cfg, &backend, false).unwrap();
    assert_eq!(outcome.report.before, outcome.report.after, "identity fusion is a no-op");

    // The four shipped fusion maps load, validate, and hit the hand-counted m.
    let expected = [("POL73", 30, 28), ("TUC74", 63, 60), ("BRY17", 23, 21), ("FEI23", 20, 18)];
    for (id, before, after) in expected {
        let taxonomy = builtin::taxonomy(id).unwrap();
        let map = builtin::fusion_map(id).unwrap();
        assert_eq!(taxonomy.label_count(), before, "{id} m");
        let (fused, rewrite) = fuse(&taxonomy, &map).unwrap();
        assert_eq!(fused.label_count(), after, "{id} fused m");
        for merge in &map.merges {
            for code in &merge.absorb {
                assert_eq!(rewrite.apply(code).unwrap(), merge.replacement.code);
            }
        }
    }

    // Relabel-only leaves Coverage bit-for-bit unchanged and preserves the
    // instance and Other counts.
    let fusion = builtin::fusion_map("BRY17").unwrap();
    let outcome = run_ablation(&instances, &bry17, &fusion, &cfg, &backend, true).unwrap();
    assert_eq!(outcome.report.before.scores.coverage, outcome.report.after.scores.coverage);
    let (_, rewrite) = fuse(&bry17, &fusion).unwrap();
    let relabeled = relabel(&instances, "BRY17", &rewrite).unwrap();
    assert_eq!(relabeled.len(), instances.len());
    let others = |list: &[SingleErrorInstance]| {
        list.iter().filter(|i| i.gold_labels["BRY17"] == OTHER_LABEL).count()
    };
    assert_eq!(others(&instances), others(&relabeled));
    eprintln!("ACCEPTANCE 7 PASS: identity no-op; shipped maps validate; fused m = 28/60/21/18; relabel-only keeps coverage");
}

// ---------------------------------------------------------------------------
// Criterion 8: format fidelity.
// ---------------------------------------------------------------------------

#[test]
fn criterion_8_format_fidelity() {
    // M2 round trip on the golden file.
    let golden = include_str!("data/golden.m2");
    let sentences = parse_m2(golden).unwrap();
    assert_eq!(render_m2(&sentences), golden, "golden M2 file is a render fixpoint");
    assert_eq!(parse_m2(&render_m2(&sentences)).unwrap(), sentences);

    // Taxonomy JSON round trip on all four shipped files.
    for id in builtin::IDS {
        let taxonomy = builtin::taxonomy(id).unwrap();
        let json = taxonomy.to_json();
        let reloaded = load_taxonomy(&json).unwrap();
        assert_eq!(reloaded, taxonomy, "{id} value round trip");
        assert_eq!(reloaded.to_json(), json, "{id} serialization fixpoint");
    }

    // BRY17 label space: NOUN:NUM and VERB:SVA leaves, R:NOUN:NUM resolvable,
    // operation tags exactly as enumerated.
    let bry17 = builtin::taxonomy("BRY17").unwrap();
    let leaves: BTreeSet<&str> = bry17.leaf_codes().iter().map(String::as_str).collect();
    assert!(leaves.contains("NOUN:NUM") && leaves.contains("VERB:SVA"));
    assert_eq!(bry17.canonical_label("R:NOUN:NUM").as_deref(), Some("NOUN:NUM"));
    assert_eq!(bry17.canonical_label("VERB:SVA").as_deref(), Some("VERB:SVA"));
    use taxeval::taxonomy::EditOp::{Missing, Replacement, Unnecessary};
    let ops_of = |code: &str| {
        bry17.leaf_types().into_iter().find(|l| l.code == code).unwrap().edit_ops.clone()
    };
    assert_eq!(ops_of("NOUN:NUM"), vec![Replacement]);
    assert_eq!(ops_of("VERB:SVA"), vec![Replacement]);
    assert_eq!(ops_of("VERB:TENSE"), vec![Missing, Replacement, Unnecessary]);
    assert_eq!(ops_of("PREP"), vec![Missing, Replacement, Unnecessary]);
    assert_eq!(ops_of("SPELL"), vec![Replacement]);
    eprintln!("ACCEPTANCE 8 PASS: M2 and taxonomy files are round-trip fixpoints; BRY17 labels and R/U/M tags verified");
}

// ---------------------------------------------------------------------------
// Criterion 9: replay determinism.
// ---------------------------------------------------------------------------

#[test]
fn criterion_9_replay_determinism() {
    let instances = synthetic_corpus_100();
    let bry17 = builtin::taxonomy("BRY17").unwrap();
    let cfg = EvalConfig {
        seed: 21,
        samples: 3,
        backend: BackendSpec::Mock { ambiguity: 0.5 },
        ..EvalConfig::default()
    };
    let backend = MockBackend::new(0.5);
    let live = evaluate_taxonomy(&instances, &bry17, &cfg, &backend).unwrap();
    let audit_text = write_audit(&live.raw_replies);
    let replayed = replay_from_text(&instances, &bry17, &cfg, &audit_text).unwrap();
    assert_eq!(replayed.report, live.report, "replayed report equals live field-for-field");
    assert_eq!(replayed.run, live.run);
    eprintln!("ACCEPTANCE 9 PASS: audit replay reproduces the live report field-for-field");
}
