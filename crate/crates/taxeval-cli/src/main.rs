//! `taxeval`: rationality evaluation of grammatical-error classification
//! taxonomies over annotated learner-error corpora.

mod table;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use taxeval::ablation::run_ablation;
use taxeval::corpus::{decompose, load_corpus, parse_m2_with_annotator, save_corpus};
use taxeval::llm::{make_backend, write_audit, BackendSpec, EvalConfig};
use taxeval::metrics::cohens_kappa;
use taxeval::pipeline::{evaluate_taxonomy, replay_from_text, EvalOutcome};
use taxeval::report::{
    to_canonical_json, AgreementReport, EvalReportFile, KappaRow, RunManifest,
};
use taxeval::taxonomy::{builtin, load_fusion_map, load_taxonomy, FusionMap, Taxonomy};
use taxeval::SingleErrorInstance;

#[derive(Parser)]
#[command(name = "taxeval", version, about = "Evaluate error-classification taxonomies")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate taxonomies over a corpus and write metric reports
    Evaluate(EvaluateArgs),
    /// Split a multi-error M2 file into single-error instances
    Decompose(DecomposeArgs),
    /// Pairwise Cohen's kappa between annotator corpora
    Agreement(AgreementArgs),
    /// Category-fusion ablation: before/after metric comparison
    Fuse(FuseArgs),
    /// Recompute reports from a persisted audit log, no backend access
    Replay(ReplayArgs),
}

#[derive(Args)]
struct BackendFlags {
    /// Backend kind: mock or http
    #[arg(long, default_value = "mock")]
    backend: String,
    /// Endpoint URL for the http backend
    #[arg(long)]
    endpoint: Option<String>,
    /// Model name sent to the http backend
    #[arg(long)]
    model: Option<String>,
    /// Probability that the mock backend reports a second confident label
    #[arg(long, default_value_t = 0.0)]
    mock_ambiguity: f64,
}

#[derive(Args)]
struct ConfigFlags {
    /// Confidence threshold for Overlap (strictly exceeded)
    #[arg(long, default_value_t = 0.7)]
    tau: f64,
    /// Number of distinct labels requested per reply
    #[arg(long = "top-k", default_value_t = 3)]
    top_k: usize,
    /// Self-random samples per instance
    #[arg(long, default_value_t = 5)]
    samples: usize,
    /// Sampling temperature
    #[arg(long, default_value_t = 0.7)]
    temperature: f64,
    /// Seed for deterministic backends
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Concurrent instance evaluations
    #[arg(long, default_value_t = 4)]
    max_parallel: usize,
}

impl ConfigFlags {
    fn eval_config(&self, backend: BackendSpec) -> EvalConfig {
        EvalConfig {
            tau: self.tau,
            k: self.top_k,
            samples: self.samples,
            temperature: self.temperature,
            seed: self.seed,
            backend,
            max_parallel: self.max_parallel,
        }
    }
}

#[derive(Args)]
struct EvaluateArgs {
    /// Corpus JSON file
    #[arg(long)]
    corpus: PathBuf,
    /// Taxonomy file or builtin id (POL73, TUC74, BRY17, FEI23); repeatable
    #[arg(long, required = true)]
    taxonomy: Vec<String>,
    #[command(flatten)]
    backend: BackendFlags,
    #[command(flatten)]
    config: ConfigFlags,
    /// Output directory for reports and audit logs
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct DecomposeArgs {
    /// Input M2 file
    #[arg(long)]
    m2: PathBuf,
    /// Output corpus JSON file
    #[arg(long)]
    out: PathBuf,
    /// Annotator whose edits are kept
    #[arg(long, default_value_t = 0)]
    annotator: u32,
}

#[derive(Args)]
struct AgreementArgs {
    /// First annotator's corpus
    #[arg(long)]
    a: PathBuf,
    /// Second annotator's corpus
    #[arg(long)]
    b: PathBuf,
    /// Optional third annotator's corpus
    #[arg(long)]
    c: Option<PathBuf>,
    /// Taxonomy file or builtin id; repeatable
    #[arg(long, required = true)]
    taxonomy: Vec<String>,
    /// Optional JSON report path
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct FuseArgs {
    /// Corpus JSON file
    #[arg(long)]
    corpus: PathBuf,
    /// Taxonomy file or builtin id
    #[arg(long)]
    taxonomy: String,
    /// Fusion-map file or builtin id
    #[arg(long)]
    fusion: String,
    /// Relabel gold (and rewrite predictions) without re-querying the backend
    #[arg(long)]
    relabel_only: bool,
    #[command(flatten)]
    backend: BackendFlags,
    #[command(flatten)]
    config: ConfigFlags,
    /// Output report path (audit log lands next to it)
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ReplayArgs {
    /// Audit JSON-lines file from a previous run
    #[arg(long)]
    replay: PathBuf,
    /// Corpus JSON file
    #[arg(long)]
    corpus: PathBuf,
    /// Taxonomy file or builtin id
    #[arg(long)]
    taxonomy: String,
    #[command(flatten)]
    config: ConfigFlags,
    /// Output directory for the recomputed report
    #[arg(long)]
    out: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Evaluate(args) => cmd_evaluate(args),
        Command::Decompose(args) => cmd_decompose(args),
        Command::Agreement(args) => cmd_agreement(args),
        Command::Fuse(args) => cmd_fuse(args),
        Command::Replay(args) => cmd_replay(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(1)
        }
    }
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// RFC 3339 timestamp; honors SOURCE_DATE_EPOCH for reproducible runs.
fn timestamp() -> String {
    let now = std::env::var("SOURCE_DATE_EPOCH")
        .ok()
        .and_then(|v| v.parse::<i64>().ok())
        .and_then(|secs| chrono::DateTime::from_timestamp(secs, 0))
        .unwrap_or_else(chrono::Utc::now);
    now.to_rfc3339_opts(chrono::SecondsFormat::Secs, true)
}

struct LoadedTaxonomy {
    taxonomy: Taxonomy,
    input_key: String,
    digest: String,
}

/// A taxonomy argument is a file path when one exists, else a builtin id.
fn resolve_taxonomy(arg: &str) -> Result<LoadedTaxonomy> {
    if Path::new(arg).exists() {
        let text = std::fs::read_to_string(arg).with_context(|| format!("reading {arg}"))?;
        let taxonomy = load_taxonomy(&text).with_context(|| format!("loading taxonomy {arg}"))?;
        return Ok(LoadedTaxonomy {
            taxonomy,
            input_key: arg.to_string(),
            digest: sha256_hex(text.as_bytes()),
        });
    }
    let taxonomy = builtin::taxonomy(arg)
        .ok_or_else(|| anyhow!("taxonomy {arg:?} is neither a file nor a builtin id"))?;
    let text = match arg.to_ascii_uppercase().as_str() {
        "POL73" => builtin::POL73_JSON,
        "TUC74" => builtin::TUC74_JSON,
        "BRY17" => builtin::BRY17_JSON,
        _ => builtin::FEI23_JSON,
    };
    Ok(LoadedTaxonomy {
        taxonomy,
        input_key: format!("builtin:{}", arg.to_ascii_uppercase()),
        digest: sha256_hex(text.as_bytes()),
    })
}

fn resolve_fusion(arg: &str) -> Result<(FusionMap, String, String)> {
    if Path::new(arg).exists() {
        let text = std::fs::read_to_string(arg).with_context(|| format!("reading {arg}"))?;
        let map = load_fusion_map(&text).with_context(|| format!("loading fusion map {arg}"))?;
        return Ok((map, arg.to_string(), sha256_hex(text.as_bytes())));
    }
    let map = builtin::fusion_map(arg)
        .ok_or_else(|| anyhow!("fusion map {arg:?} is neither a file nor a builtin id"))?;
    let text = match arg.to_ascii_uppercase().as_str() {
        "POL73" => builtin::POL73_FUSION_JSON,
        "TUC74" => builtin::TUC74_FUSION_JSON,
        "BRY17" => builtin::BRY17_FUSION_JSON,
        _ => builtin::FEI23_FUSION_JSON,
    };
    Ok((map, format!("builtin-fusion:{}", arg.to_ascii_uppercase()), sha256_hex(text.as_bytes())))
}

fn read_corpus(path: &Path) -> Result<(Vec<SingleErrorInstance>, String)> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading corpus {}", path.display()))?;
    let instances = load_corpus(&text).context("loading corpus")?;
    Ok((instances, sha256_hex(text.as_bytes())))
}

fn backend_spec(flags: &BackendFlags) -> Result<BackendSpec> {
    match flags.backend.as_str() {
        "mock" => Ok(BackendSpec::Mock { ambiguity: flags.mock_ambiguity }),
        "http" => {
            let endpoint = flags
                .endpoint
                .clone()
                .ok_or_else(|| anyhow!("--endpoint is required with --backend http"))?;
            let model = flags
                .model
                .clone()
                .ok_or_else(|| anyhow!("--model is required with --backend http"))?;
            Ok(BackendSpec::Http { endpoint, model })
        }
        other => bail!("unknown backend {other:?} (expected mock or http)"),
    }
}

fn manifest_for(
    command: &str,
    cfg: &EvalConfig,
    inputs: BTreeMap<String, String>,
    extra: serde_json::Value,
) -> RunManifest {
    let mut config = serde_json::to_value(cfg).expect("config serialization");
    if let (serde_json::Value::Object(map), serde_json::Value::Object(extra)) =
        (&mut config, extra)
    {
        map.extend(extra);
    }
    let mut manifest = RunManifest::new(command, config, cfg.seed);
    manifest.inputs = inputs;
    manifest.timestamp = timestamp();
    manifest
}

fn ensure_parent_dir(path: &Path) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)
                .with_context(|| format!("creating {}", parent.display()))?;
        }
    }
    Ok(())
}

fn cmd_evaluate(args: EvaluateArgs) -> Result<()> {
    let spec = backend_spec(&args.backend)?;
    let cfg = args.config.eval_config(spec.clone());
    let (instances, corpus_digest) = read_corpus(&args.corpus)?;
    let backend = make_backend(&spec);

    let mut loaded: Vec<LoadedTaxonomy> =
        args.taxonomy.iter().map(|t| resolve_taxonomy(t)).collect::<Result<_>>()?;
    loaded.sort_by_key(|t| table::order_key(&t.taxonomy.id));

    let mut inputs = BTreeMap::from([(args.corpus.display().to_string(), corpus_digest)]);
    for t in &loaded {
        inputs.insert(t.input_key.clone(), t.digest.clone());
    }

    // Evaluate everything before writing anything, so failures leave no
    // partial output behind.
    let mut outcomes: Vec<(String, EvalOutcome)> = Vec::new();
    for t in &loaded {
        let outcome = evaluate_taxonomy(&instances, &t.taxonomy, &cfg, backend.as_ref())
            .with_context(|| format!("evaluating {}", t.taxonomy.id))?;
        outcomes.push((t.taxonomy.id.clone(), outcome));
    }

    std::fs::create_dir_all(&args.out)
        .with_context(|| format!("creating {}", args.out.display()))?;
    // The marker outlives any interrupted write; a directory without it holds
    // a complete result set.
    let marker = args.out.join("INCOMPLETE");
    std::fs::write(&marker, "evaluation in progress\n")?;
    let manifest = manifest_for("evaluate", &cfg, inputs, serde_json::json!({}));
    for (id, outcome) in &outcomes {
        let file = EvalReportFile { report: outcome.report.clone(), manifest: manifest.clone() };
        let report_path = args.out.join(format!("report-{id}.json"));
        std::fs::write(&report_path, to_canonical_json(&file))
            .with_context(|| format!("writing {}", report_path.display()))?;
        let audit_path = args.out.join(format!("audit-{id}.jsonl"));
        std::fs::write(&audit_path, write_audit(&outcome.raw_replies))
            .with_context(|| format!("writing {}", audit_path.display()))?;
    }
    std::fs::remove_file(&marker)?;

    let reports: Vec<&taxeval::MetricReport> = outcomes.iter().map(|(_, o)| &o.report).collect();
    print!("{}", table::metric_table(&reports));
    Ok(())
}

fn cmd_decompose(args: DecomposeArgs) -> Result<()> {
    let text = std::fs::read_to_string(&args.m2)
        .with_context(|| format!("reading {}", args.m2.display()))?;
    let sentences = parse_m2_with_annotator(&text, args.annotator).context("parsing M2 file")?;
    let mut instances = Vec::new();
    let mut skipped = 0usize;
    for sentence in &sentences {
        if sentence.edits.is_empty() {
            skipped += 1;
            continue;
        }
        instances.extend(decompose(sentence).context("decomposing sentence")?);
    }
    ensure_parent_dir(&args.out)?;
    std::fs::write(&args.out, save_corpus(&instances))
        .with_context(|| format!("writing {}", args.out.display()))?;
    println!(
        "{} sentences -> {} single-error instances ({} edit-free skipped)",
        sentences.len(),
        instances.len(),
        skipped
    );
    Ok(())
}

fn cmd_agreement(args: AgreementArgs) -> Result<()> {
    let mut corpora = Vec::new();
    let mut inputs = BTreeMap::new();
    for path in [Some(&args.a), Some(&args.b), args.c.as_ref()].into_iter().flatten() {
        let (mut instances, digest) = read_corpus(path)?;
        instances.sort_by(|x, y| x.id.cmp(&y.id));
        inputs.insert(path.display().to_string(), digest);
        corpora.push(instances);
    }
    let ids: Vec<&str> = corpora[0].iter().map(|i| i.id.as_str()).collect();
    for corpus in &corpora[1..] {
        let other: Vec<&str> = corpus.iter().map(|i| i.id.as_str()).collect();
        if other != ids {
            bail!("annotator corpora cover different instance ids");
        }
    }

    let mut loaded: Vec<LoadedTaxonomy> =
        args.taxonomy.iter().map(|t| resolve_taxonomy(t)).collect::<Result<_>>()?;
    loaded.sort_by_key(|t| table::order_key(&t.taxonomy.id));
    for t in &loaded {
        inputs.insert(t.input_key.clone(), t.digest.clone());
    }

    let labels = |corpus: &[SingleErrorInstance], taxonomy: &Taxonomy| -> Result<Vec<String>> {
        corpus
            .iter()
            .map(|inst| {
                let raw = inst.gold_labels.get(&taxonomy.id).ok_or_else(|| {
                    anyhow!("instance {:?} has no gold label for {}", inst.id, taxonomy.id)
                })?;
                taxonomy.canonical_label(raw).ok_or_else(|| {
                    anyhow!("instance {:?}: label {raw:?} invalid for {}", inst.id, taxonomy.id)
                })
            })
            .collect()
    };

    let pairs: Vec<(usize, usize)> =
        if corpora.len() == 3 { vec![(0, 1), (1, 2), (0, 2)] } else { vec![(0, 1)] };
    let mut rows = Vec::new();
    for (x, y) in &pairs {
        let mut kappa = BTreeMap::new();
        for t in &loaded {
            let a = labels(&corpora[*x], &t.taxonomy)?;
            let b = labels(&corpora[*y], &t.taxonomy)?;
            kappa.insert(t.taxonomy.id.clone(), cohens_kappa(&a, &b)?);
        }
        rows.push(KappaRow { pair: format!("Annotator {} & {}", x + 1, y + 1), kappa });
    }
    let mut average = BTreeMap::new();
    for t in &loaded {
        let sum: f64 = rows.iter().map(|r| r.kappa[&t.taxonomy.id]).sum();
        average.insert(t.taxonomy.id.clone(), sum / rows.len() as f64);
    }

    let cfg = EvalConfig::default();
    let report = AgreementReport {
        taxonomies: loaded.iter().map(|t| t.taxonomy.id.clone()).collect(),
        rows,
        average,
        manifest: manifest_for("agreement", &cfg, inputs, serde_json::json!({})),
    };
    if let Some(out) = &args.out {
        ensure_parent_dir(out)?;
        std::fs::write(out, to_canonical_json(&report))
            .with_context(|| format!("writing {}", out.display()))?;
    }
    print!("{}", table::agreement_table(&report));
    Ok(())
}

fn cmd_fuse(args: FuseArgs) -> Result<()> {
    let spec = backend_spec(&args.backend)?;
    let cfg = args.config.eval_config(spec.clone());
    let (instances, corpus_digest) = read_corpus(&args.corpus)?;
    let loaded = resolve_taxonomy(&args.taxonomy)?;
    let (fusion, fusion_key, fusion_digest) = resolve_fusion(&args.fusion)?;
    let backend = make_backend(&spec);

    let outcome = run_ablation(
        &instances,
        &loaded.taxonomy,
        &fusion,
        &cfg,
        backend.as_ref(),
        args.relabel_only,
    )
    .context("running fusion ablation")?;

    let inputs = BTreeMap::from([
        (args.corpus.display().to_string(), corpus_digest),
        (loaded.input_key.clone(), loaded.digest.clone()),
        (fusion_key, fusion_digest),
    ]);
    let mut report = outcome.report.clone();
    report.manifest = manifest_for(
        "fuse",
        &cfg,
        inputs,
        serde_json::json!({ "relabel_only": args.relabel_only }),
    );

    ensure_parent_dir(&args.out)?;
    // Audit first: the report's presence marks a complete run.
    let audit_path = args.out.with_extension("audit.jsonl");
    std::fs::write(&audit_path, write_audit(&outcome.all_raw_replies()))
        .with_context(|| format!("writing {}", audit_path.display()))?;
    std::fs::write(&args.out, to_canonical_json(&report))
        .with_context(|| format!("writing {}", args.out.display()))?;
    print!("{}", table::ablation_table(&report));
    Ok(())
}

fn cmd_replay(args: ReplayArgs) -> Result<()> {
    // Replay recomputes metrics from persisted replies; no backend is built.
    let cfg = args.config.eval_config(BackendSpec::Mock { ambiguity: 0.0 });
    let (instances, corpus_digest) = read_corpus(&args.corpus)?;
    let loaded = resolve_taxonomy(&args.taxonomy)?;
    let audit_text = std::fs::read_to_string(&args.replay)
        .with_context(|| format!("reading {}", args.replay.display()))?;

    let outcome = replay_from_text(&instances, &loaded.taxonomy, &cfg, &audit_text)
        .context("replaying audit log")?;

    let inputs = BTreeMap::from([
        (args.corpus.display().to_string(), corpus_digest),
        (loaded.input_key.clone(), loaded.digest.clone()),
        (args.replay.display().to_string(), sha256_hex(audit_text.as_bytes())),
    ]);
    let manifest = manifest_for("replay", &cfg, inputs, serde_json::json!({}));

    std::fs::create_dir_all(&args.out)
        .with_context(|| format!("creating {}", args.out.display()))?;
    let file = EvalReportFile { report: outcome.report.clone(), manifest };
    let report_path = args.out.join(format!("report-{}.json", loaded.taxonomy.id));
    std::fs::write(&report_path, to_canonical_json(&file))
        .with_context(|| format!("writing {}", report_path.display()))?;
    print!("{}", table::metric_table(&[&outcome.report]));
    Ok(())
}
