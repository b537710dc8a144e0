//! `wsi`: split, cluster, evaluate and compare word sense induction systems.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::json;

use wsi_core::augment::{
    exemplar_senses, lexicon_pool, llm_generate_pool, merge, sample_corpus_pool, AugmentationPool, PoolSource,
};
use wsi_core::clustering::{
    cluster_groups, list_layers, write_hard_clustering, read_clustering, Algorithm, ClusteringConfig, EmbeddingStore,
};
use wsi_core::corpus::{build_split, load_instances, read_instances, write_instances_to, LabelMode, LemmaGroup};
use wsi_core::evaluate::{evaluate_groups, Evaluation};
use wsi_core::lexicon::Lexicon;
use wsi_core::llm::mock::{EchoClient, EmptyClient, GoldEchoClient};
use wsi_core::llm::{mean_std, run_llm_wsi, Audited, Client, HttpClient, ModelParams, Variant, TOKEN_ENV};
use wsi_core::manifest::{manifest_path, write_atomic, RunManifest};
use wsi_core::metrics::{
    expected_sensitivity, sensitivity_matrix, EvalReport, FixedMetrics, MetricMap, MetricName, PosWeights, Property,
};
use wsi_core::significance::{
    bootstrap_compare, BaselinePipeline, BootstrapConfig, ClusterPipeline, DecisionRule, EmbeddingPipeline,
    GoldPipeline,
};

#[derive(Parser)]
#[command(name = "wsi", version, about = "Full-corpus word sense induction workbench")]
struct Cli {
    /// Worker threads for per-lemma parallelism (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// TOML file with [clustering], [bootstrap], [llm] and [split] tables.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// More log output on stderr (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build balanced dev/test splits from an instance file.
    Split(SplitArgs),
    /// Cluster every lemma of an instance file.
    Cluster(ClusterArgs),
    /// Score a clustering file against gold labels.
    Evaluate(EvaluateArgs),
    /// Bootstrap test of the metric difference between two systems.
    Significance(SignificanceArgs),
    /// Build an augmentation pool file.
    Augment(AugmentArgs),
    /// Sense induction by prompting a language model.
    Llm(LlmArgs),
    /// Print and check the metric property matrix.
    Props(PropsArgs),
}

#[derive(Args)]
struct SplitArgs {
    #[arg(long)]
    instances: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Original instances per part of speech in each split.
    #[arg(long)]
    target: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MustLink {
    None,
    Lexicon,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum KSource {
    Silhouette,
    Lexicon,
}

#[derive(Args)]
struct ClusterArgs {
    #[arg(long)]
    instances: PathBuf,
    /// Directory of layer_<n>.emb / layer_<n>.idx files.
    #[arg(long)]
    embeddings: Option<PathBuf>,
    /// Layer index, or `sweep` to pick the best layer by all-POS F-B³.
    #[arg(long)]
    layer: Option<String>,
    /// ag_silhouette, ag_fixed_k, xmeans, 1cpl or 1cpex.
    #[arg(long)]
    algorithm: Option<Algorithm>,
    #[arg(long)]
    k_min: Option<usize>,
    #[arg(long)]
    k_max: Option<usize>,
    #[arg(long)]
    fixed_k: Option<usize>,
    #[arg(long)]
    xmeans_tolerance: Option<f64>,
    #[arg(long, value_enum, default_value = "none")]
    must_link: MustLink,
    #[arg(long, value_enum, default_value = "silhouette")]
    k_source: KSource,
    #[arg(long)]
    lexicon: Option<PathBuf>,
    /// Occurrence file for corpus augmentation.
    #[arg(long)]
    corpus: Option<PathBuf>,
    /// Pool file produced by `wsi augment --source llm`.
    #[arg(long)]
    llm_pool: Option<PathBuf>,
    /// corpus:N, lexicon or llm; repeatable.
    #[arg(long)]
    augment: Vec<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// Repeat with seeds seed, seed+1, … (useful for xmeans).
    #[arg(long, default_value_t = 1)]
    runs: usize,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args)]
struct EvaluateArgs {
    #[arg(long)]
    instances: PathBuf,
    #[arg(long)]
    clustering: PathBuf,
    #[arg(long)]
    report: PathBuf,
    /// Score against all weighted gold senses instead of the first one.
    #[arg(long)]
    graded: bool,
}

#[derive(Args)]
struct SignificanceArgs {
    #[arg(long)]
    instances: PathBuf,
    /// gold, 1cpl, 1cpex, or ALGORITHM:DIR:LAYER.
    #[arg(long)]
    system_a: String,
    #[arg(long)]
    system_b: String,
    #[arg(long)]
    resamples: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    metric: Option<MetricName>,
    #[arg(long, value_enum)]
    rule: Option<RuleArg>,
    #[arg(long)]
    report: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum RuleArg {
    TwiceObserved,
    Percentile,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum GenMock {
    Echo,
}

#[derive(Args)]
struct AugmentArgs {
    #[arg(long)]
    source: PoolSource,
    /// Instance file whose lemmas (and, for llm, sentences) drive the pool.
    #[arg(long)]
    instances: PathBuf,
    /// Per-lemma cap for corpus pools.
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    corpus: Option<PathBuf>,
    #[arg(long)]
    lexicon: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    service: ServiceArgs,
    #[arg(long, value_enum)]
    mock: Option<GenMock>,
    /// Concurrent generation requests.
    #[arg(long, default_value_t = 8)]
    in_flight: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ServiceArgs {
    /// Chat-completion base URL; the bearer token is read from WSI_API_TOKEN.
    #[arg(long)]
    api_base: Option<String>,
    #[arg(long)]
    model: Option<String>,
    /// Append request/response records to this JSONL file.
    #[arg(long)]
    audit: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum LlmMock {
    Gold,
    Empty,
}

#[derive(Args)]
struct LlmArgs {
    #[arg(long)]
    instances: PathBuf,
    #[arg(long, value_enum, default_value = "hard")]
    variant: VariantArg,
    #[arg(long, default_value_t = 5)]
    runs: usize,
    #[arg(long)]
    seed: Option<u64>,
    #[command(flatten)]
    service: ServiceArgs,
    #[arg(long, value_enum)]
    mock: Option<LlmMock>,
    /// Write run r's clustering to STEM.run<r>.jsonl.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    report: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum VariantArg {
    Hard,
    Graded,
}

#[derive(Args)]
struct PropsArgs {
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct SplitConfig {
    target: Option<usize>,
    seed: u64,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct FileConfig {
    clustering: ClusteringConfig,
    bootstrap: BootstrapConfig,
    llm: ModelParams,
    split: SplitConfig,
}

fn load_config(path: Option<&Path>) -> Result<FileConfig> {
    match path {
        None => Ok(FileConfig::default()),
        Some(p) => {
            let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            toml::from_str(&text).with_context(|| format!("parsing {}", p.display()))
        }
    }
}

fn write_output(path: &Path, bytes: &[u8], manifest: &mut RunManifest) -> Result<()> {
    write_atomic(path, bytes)?;
    manifest.output(path)?;
    Ok(())
}

fn eval_report_json(config: serde_json::Value, eval: &Evaluation) -> Result<String> {
    let report = EvalReport {
        config,
        aggregate: eval.aggregate.clone(),
        flags: eval.flags.clone(),
    };
    Ok(report.to_json()? + "\n")
}

fn clustering_bytes(clustering: &wsi_core::metrics::HardClustering) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    write_hard_clustering(&mut buf, clustering)?;
    Ok(buf)
}

fn run_file(out: &Path, r: usize) -> PathBuf {
    let stem = out.file_stem().unwrap_or_default().to_string_lossy();
    let ext = out.extension().map(|e| e.to_string_lossy().into_owned()).unwrap_or_else(|| "jsonl".into());
    out.with_file_name(format!("{stem}.run{r}.{ext}"))
}

fn cmd_split(args: SplitArgs, file: FileConfig) -> Result<()> {
    let target = args
        .target
        .or(file.split.target)
        .context("--target is required (or [split] target in the config file)")?;
    let seed = args.seed.unwrap_or(file.split.seed);
    let corpus = load_instances(&args.instances)?;
    let (dev, test) = build_split(&corpus.groups, target, seed)?;
    std::fs::create_dir_all(&args.out).with_context(|| format!("creating {}", args.out.display()))?;

    let config = json!({"target": target, "seed": seed});
    let mut manifest = RunManifest::start("split", config, vec![seed]);
    manifest.input(&args.instances)?;
    for split in [&dev, &test] {
        let name = serde_json::to_value(split.name)?.as_str().unwrap_or("split").to_string();
        let mut buf = Vec::new();
        write_instances_to(&mut buf, split.groups.iter().flat_map(|g| &g.instances))?;
        write_output(&args.out.join(format!("{name}.jsonl")), &buf, &mut manifest)?;
        let meta = serde_json::to_string_pretty(&split.manifest())? + "\n";
        write_output(&args.out.join(format!("{name}.split.json")), meta.as_bytes(), &mut manifest)?;
        log::info!("{name}: {} lemmas, {} instances", split.groups.len(), split.instance_count());
    }
    manifest.finish(args.out.join("manifest.json"))?;
    Ok(())
}

fn parse_augment(spec: &str) -> Result<(PoolSource, Option<usize>)> {
    let (src, n) = match spec.split_once(':') {
        Some((s, n)) => (s, Some(n.parse::<usize>().with_context(|| format!("bad pool size in `{spec}`"))?)),
        None => (spec, None),
    };
    let source: PoolSource = src.parse()?;
    if source != PoolSource::Corpus && n.is_some() {
        bail!("only corpus augmentation takes a size (`{spec}`)");
    }
    if source == PoolSource::Corpus && n.is_none() {
        bail!("corpus augmentation needs a size, e.g. corpus:50");
    }
    Ok((source, n))
}

struct Augmented {
    groups: Vec<LemmaGroup>,
    senses: BTreeMap<String, String>,
}

fn build_pools(
    args: &ClusterArgs,
    groups: &[LemmaGroup],
    lexicon: Option<&Lexicon>,
    seed: u64,
    manifest: &mut RunManifest,
) -> Result<Augmented> {
    let keys: BTreeSet<_> = groups.iter().map(LemmaGroup::key).collect();
    let mut pools: Vec<AugmentationPool> = Vec::new();
    for spec in &args.augment {
        let (source, n) = parse_augment(spec)?;
        let pool = match source {
            PoolSource::Corpus => {
                let path = args.corpus.as_ref().context("--augment corpus needs --corpus")?;
                manifest.input(path)?;
                sample_corpus_pool(&read_instances(path)?, &keys, n.unwrap_or(0), seed)
            }
            PoolSource::Lexicon => lexicon_pool(lexicon.context("--augment lexicon needs --lexicon")?, &keys),
            PoolSource::Llm => {
                let path = args.llm_pool.as_ref().context("--augment llm needs --llm-pool")?;
                manifest.input(path)?;
                AugmentationPool::from_instances(PoolSource::Llm, read_instances(path)?)?
            }
        };
        log::info!("{spec}: {} pool instances", pool.len());
        pools.push(pool);
    }
    let refs: Vec<&AugmentationPool> = pools.iter().collect();
    let merged = groups.iter().map(|g| merge(g, &refs)).collect::<wsi_core::Result<Vec<_>>>()?;
    Ok(Augmented {
        groups: merged,
        senses: exemplar_senses(&refs),
    })
}

fn cmd_cluster(args: ClusterArgs, file: FileConfig) -> Result<()> {
    let mut config = file.clustering;
    if let Some(a) = args.algorithm {
        config.algorithm = a;
    }
    if let Some(k) = args.k_min {
        config.k_min = k;
    }
    if let Some(k) = args.k_max {
        config.k_max = k;
        config.xmeans_k_max = k;
    }
    if let Some(k) = args.fixed_k {
        config.fixed_k = Some(k);
    }
    if let Some(t) = args.xmeans_tolerance {
        config.xmeans_tolerance = t;
    }
    if let Some(s) = args.seed {
        config.seed = s;
    }
    if args.k_source == KSource::Lexicon {
        match config.algorithm {
            Algorithm::AgSilhouette | Algorithm::AgFixedK => config.algorithm = Algorithm::AgFixedK,
            other => bail!("--k-source lexicon does not apply to {other:?}"),
        }
    }
    config.lexicon_must_link = args.must_link == MustLink::Lexicon;
    config.validate()?;
    if args.runs == 0 {
        bail!("--runs must be at least 1");
    }

    let lexicon = args.lexicon.as_ref().map(Lexicon::load).transpose()?;
    if (args.k_source == KSource::Lexicon || config.lexicon_must_link) && lexicon.is_none() {
        bail!("lexicon-guided clustering needs --lexicon");
    }
    if config.lexicon_must_link && !args.augment.iter().any(|a| a == "lexicon") {
        bail!("--must-link lexicon needs --augment lexicon");
    }

    let mut manifest = RunManifest::start(
        "cluster",
        json!({"clustering": config, "layer": args.layer, "augment": args.augment, "runs": args.runs}),
        (0..args.runs as u64).map(|r| config.seed.wrapping_add(r)).collect(),
    );
    manifest.input(&args.instances)?;
    if let Some(p) = &args.lexicon {
        manifest.input(p)?;
    }
    let corpus = load_instances(&args.instances)?;
    let aug = build_pools(&args, &corpus.groups, lexicon.as_ref(), config.seed, &mut manifest)?;

    let baseline = matches!(config.algorithm, Algorithm::OneClusterPerLemma | Algorithm::OneClusterPerInstance);
    let mut layer_scores = BTreeMap::new();
    let store = if baseline {
        None
    } else {
        let dir = args.embeddings.as_ref().context("--embeddings is required for this algorithm")?;
        let layer = match args.layer.as_deref() {
            None => bail!("--layer is required for this algorithm"),
            Some("sweep") => {
                let mut best: Option<(usize, f64)> = None;
                for layer in list_layers(dir)? {
                    let store = EmbeddingStore::open_layer(dir, layer)?;
                    let c = cluster_groups(&aug.groups, Some(&store), &config, lexicon.as_ref(), &aug.senses)?;
                    let e = evaluate_groups(&corpus.groups, &c.to_graded(), LabelMode::FirstSense, &PosWeights::semcor())?;
                    let score = e.all_pos(MetricName::B3F);
                    log::info!("layer {layer}: all-POS F-B3 {score:.4}");
                    layer_scores.insert(layer, score);
                    if best.is_none_or(|(_, b)| score > b) {
                        best = Some((layer, score));
                    }
                }
                best.context("no layers found in the embedding directory")?.0
            }
            Some(n) => n.parse().with_context(|| format!("bad --layer `{n}`"))?,
        };
        let (emb, idx) = wsi_core::clustering::embeddings::layer_paths(dir, layer);
        manifest.input(&emb)?;
        manifest.input(&idx)?;
        Some(EmbeddingStore::open_layer(dir, layer)?)
    };

    let mut evals = Vec::new();
    for r in 0..args.runs {
        let run_config = ClusteringConfig {
            seed: config.seed.wrapping_add(r as u64),
            ..config.clone()
        };
        let c = cluster_groups(&aug.groups, store.as_ref(), &run_config, lexicon.as_ref(), &aug.senses)?;
        let path = if args.runs == 1 { args.out.clone() } else { run_file(&args.out, r) };
        write_output(&path, &clustering_bytes(&c)?, &mut manifest)?;
        if args.report.is_some() {
            evals.push(evaluate_groups(&corpus.groups, &c.to_graded(), LabelMode::FirstSense, &PosWeights::semcor())?);
        }
    }

    if let Some(report) = &args.report {
        let mut cfg = json!({"clustering": config, "augment": args.augment});
        if let Some(s) = &store {
            cfg["model"] = json!(s.model_id);
            cfg["layer"] = json!(s.layer);
        }
        if !layer_scores.is_empty() {
            cfg["layer_sweep_b3_f"] = json!(layer_scores);
        }
        let text = if evals.len() == 1 {
            eval_report_json(cfg, &evals[0])?
        } else {
            runs_report_json(cfg, &evals)?
        };
        write_output(report, text.as_bytes(), &mut manifest)?;
    }
    manifest.finish(manifest_path(&args.out))?;
    Ok(())
}

fn runs_report_json(config: serde_json::Value, evals: &[Evaluation]) -> Result<String> {
    #[derive(Serialize)]
    struct Out<'a> {
        config: serde_json::Value,
        runs: Vec<serde_json::Value>,
        mean: FixedMetrics<'a>,
        stddev: FixedMetrics<'a>,
    }
    let all: Vec<&MetricMap> = evals.iter().map(|e| &e.aggregate.all_pos).collect();
    let (mean, stddev) = mean_std(&all);
    let runs = evals
        .iter()
        .map(|e| Ok(serde_json::from_str(&eval_report_json(json!({}), e)?)?))
        .collect::<Result<Vec<_>>>()?;
    let out = Out {
        config,
        runs,
        mean: FixedMetrics(&mean),
        stddev: FixedMetrics(&stddev),
    };
    Ok(serde_json::to_string_pretty(&out)? + "\n")
}

fn cmd_evaluate(args: EvaluateArgs) -> Result<()> {
    let corpus = load_instances(&args.instances)?;
    let system = read_clustering(&args.clustering)?;
    let mode = if args.graded { LabelMode::Graded } else { LabelMode::FirstSense };
    let config = json!({"graded": args.graded, "weights": "semcor"});
    let mut manifest = RunManifest::start("evaluate", config.clone(), Vec::new());
    manifest.input(&args.instances)?;
    manifest.input(&args.clustering)?;
    let eval = evaluate_groups(&corpus.groups, &system, mode, &PosWeights::semcor())?;
    write_output(&args.report, eval_report_json(config, &eval)?.as_bytes(), &mut manifest)?;
    manifest.finish(manifest_path(&args.report))?;
    Ok(())
}

struct OwnedPipeline {
    store: Option<EmbeddingStore>,
    config: ClusteringConfig,
    kind: &'static str,
}

fn pipeline_spec(spec: &str, base: &ClusteringConfig, manifest: &mut RunManifest) -> Result<OwnedPipeline> {
    match spec {
        "gold" => Ok(OwnedPipeline {
            store: None,
            config: base.clone(),
            kind: "gold",
        }),
        "1cpl" | "1cpex" => Ok(OwnedPipeline {
            store: None,
            config: ClusteringConfig {
                algorithm: spec.parse()?,
                ..base.clone()
            },
            kind: "baseline",
        }),
        _ => {
            let mut parts = spec.splitn(3, ':');
            let (Some(alg), Some(dir), Some(layer)) = (parts.next(), parts.next(), parts.next()) else {
                bail!("system `{spec}` is not gold, 1cpl, 1cpex or ALGORITHM:DIR:LAYER");
            };
            let layer: usize = layer.parse().with_context(|| format!("bad layer in `{spec}`"))?;
            let (emb, idx) = wsi_core::clustering::embeddings::layer_paths(Path::new(dir), layer);
            manifest.input(&emb)?;
            manifest.input(&idx)?;
            Ok(OwnedPipeline {
                store: Some(EmbeddingStore::open_layer(dir, layer)?),
                config: ClusteringConfig {
                    algorithm: alg.parse()?,
                    ..base.clone()
                },
                kind: "embedding",
            })
        }
    }
}

fn as_pipeline(p: &OwnedPipeline) -> Box<dyn ClusterPipeline + '_> {
    match (p.kind, &p.store) {
        ("gold", _) => Box::new(GoldPipeline),
        ("baseline", _) => Box::new(BaselinePipeline(p.config.algorithm)),
        (_, Some(store)) => Box::new(EmbeddingPipeline {
            store,
            config: p.config.clone(),
        }),
        _ => unreachable!("embedding pipeline without a store"),
    }
}

fn cmd_significance(args: SignificanceArgs, file: FileConfig) -> Result<()> {
    let mut config = file.bootstrap;
    if let Some(r) = args.resamples {
        config.resamples = r;
    }
    if let Some(s) = args.seed {
        config.seed = s;
    }
    if let Some(a) = args.alpha {
        config.alpha = a;
    }
    if let Some(m) = args.metric {
        config.metric = m;
    }
    if let Some(r) = args.rule {
        config.rule = match r {
            RuleArg::TwiceObserved => DecisionRule::TwiceObserved,
            RuleArg::Percentile => DecisionRule::Percentile,
        };
    }
    config.validate()?;
    let mut manifest = RunManifest::start(
        "significance",
        json!({"bootstrap": config, "system_a": args.system_a, "system_b": args.system_b, "clustering": file.clustering}),
        vec![config.seed],
    );
    manifest.input(&args.instances)?;
    let corpus = load_instances(&args.instances)?;
    let a = pipeline_spec(&args.system_a, &file.clustering, &mut manifest)?;
    let b = pipeline_spec(&args.system_b, &file.clustering, &mut manifest)?;
    let result = bootstrap_compare(&corpus.groups, &*as_pipeline(&a), &*as_pipeline(&b), &config)?;
    log::info!("delta {:.4}, p = {:.4}", result.delta_obs, result.p_value);
    let text = serde_json::to_string_pretty(&result.to_json())? + "\n";
    write_output(&args.report, text.as_bytes(), &mut manifest)?;
    manifest.finish(manifest_path(&args.report))?;
    Ok(())
}

fn service_client(service: &ServiceArgs) -> Result<HttpClient> {
    let base = service.api_base.as_deref().context("--api-base is required without --mock")?;
    let model = service.model.as_deref().context("--model is required without --mock")?;
    if std::env::var_os(TOKEN_ENV).is_none() {
        log::warn!("{TOKEN_ENV} is not set; sending requests without a token");
    }
    Ok(HttpClient::new(base, model))
}

fn with_audit(client: Box<dyn Client>, audit: Option<&Path>) -> Result<Box<dyn Client>> {
    Ok(match audit {
        Some(path) => Box::new(Audited::new(client, path)?),
        None => client,
    })
}

fn cmd_augment(args: AugmentArgs) -> Result<()> {
    let corpus = load_instances(&args.instances)?;
    let keys: BTreeSet<_> = corpus.groups.iter().map(LemmaGroup::key).collect();
    let mut manifest = RunManifest::start(
        "augment",
        json!({"source": args.source, "n": args.n, "model": args.service.model, "mock": args.mock.is_some()}),
        vec![args.seed],
    );
    manifest.input(&args.instances)?;
    let pool = match args.source {
        PoolSource::Corpus => {
            let path = args.corpus.as_ref().context("--source corpus needs --corpus")?;
            let n = args.n.context("--source corpus needs --n")?;
            manifest.input(path)?;
            sample_corpus_pool(&read_instances(path)?, &keys, n, args.seed)
        }
        PoolSource::Lexicon => {
            let path = args.lexicon.as_ref().context("--source lexicon needs --lexicon")?;
            manifest.input(path)?;
            lexicon_pool(&Lexicon::load(path)?, &keys)
        }
        PoolSource::Llm => {
            let client: Box<dyn Client> = match args.mock {
                Some(GenMock::Echo) => Box::new(EchoClient),
                None => Box::new(service_client(&args.service)?),
            };
            let client = with_audit(client, args.service.audit.as_deref())?;
            let originals: Vec<_> = corpus.groups.iter().flat_map(|g| g.originals().cloned()).collect();
            llm_generate_pool(&originals, &*client, args.seed, args.in_flight)?
        }
    };
    let mut buf = Vec::new();
    write_instances_to(&mut buf, pool.instances())?;
    write_output(&args.out, &buf, &mut manifest)?;
    manifest.finish(manifest_path(&args.out))?;
    Ok(())
}

fn cmd_llm(args: LlmArgs, file: FileConfig) -> Result<()> {
    let corpus = load_instances(&args.instances)?;
    let variant = match args.variant {
        VariantArg::Hard => Variant::Hard,
        VariantArg::Graded => Variant::Graded,
    };
    let mut params = file.llm;
    if let Some(s) = args.seed {
        params.run_seed = s;
    }
    let client: Box<dyn Client> = match args.mock {
        Some(LlmMock::Gold) => Box::new(GoldEchoClient::new(&corpus.groups, variant)),
        Some(LlmMock::Empty) => Box::new(EmptyClient),
        None => Box::new(service_client(&args.service)?),
    };
    let client = with_audit(client, args.service.audit.as_deref())?;
    let config = json!({
        "variant": variant,
        "runs": args.runs,
        "params": params,
        "model": args.service.model,
        "mock": args.mock.map(|m| if m == LlmMock::Gold { "gold" } else { "empty" }),
    });
    let mut manifest = RunManifest::start(
        "llm",
        config.clone(),
        (0..args.runs as u64).map(|r| params.run_seed.wrapping_add(r)).collect(),
    );
    manifest.input(&args.instances)?;
    let report = run_llm_wsi(&corpus.groups, &*client, variant, args.runs, params, &PosWeights::semcor())?;
    if let Some(out) = &args.out {
        for (r, run) in report.runs.iter().enumerate() {
            let mut buf = Vec::new();
            wsi_core::clustering::write_graded_clustering(&mut buf, &run.clustering)?;
            write_output(&run_file(out, r), &buf, &mut manifest)?;
        }
    }
    write_output(&args.report, (report.to_json(config)? + "\n").as_bytes(), &mut manifest)?;
    manifest.finish(manifest_path(&args.report))?;
    Ok(())
}

fn cmd_props(args: PropsArgs) -> Result<bool> {
    let matrix = sensitivity_matrix()?;
    let header: Vec<&str> = Property::ALL.iter().map(|p| p.short()).collect();
    println!("{:<14} {}", "metric", header.join("  "));
    let mut ok = true;
    let mut rows = BTreeMap::new();
    for (metric, row) in &matrix {
        let expected = expected_sensitivity(*metric);
        let matches = expected.as_ref() == Some(row);
        ok &= matches;
        let marks: Vec<&str> = row.iter().map(|v| v.mark()).collect();
        println!(
            "{:<14} {}{}",
            metric.as_str(),
            marks.join("  "),
            if matches { "" } else { "  MISMATCH" }
        );
        rows.insert(metric.as_str(), marks);
    }
    if let Some(report) = &args.report {
        let mut manifest = RunManifest::start("props", json!({"scenario_size": 20}), Vec::new());
        let text = serde_json::to_string_pretty(&json!({"matrix": rows, "matches_reference": ok}))? + "\n";
        write_output(report, text.as_bytes(), &mut manifest)?;
        manifest.finish(manifest_path(report))?;
    }
    if !ok {
        eprintln!("property matrix differs from the reference");
    }
    Ok(ok)
}

fn run(cli: Cli) -> Result<bool> {
    if let Some(jobs) = cli.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .context("configuring worker threads")?;
    }
    let file = load_config(cli.config.as_deref())?;
    match cli.command {
        Command::Split(a) => cmd_split(a, file)?,
        Command::Cluster(a) => cmd_cluster(a, file)?,
        Command::Evaluate(a) => cmd_evaluate(a)?,
        Command::Significance(a) => cmd_significance(a, file)?,
        Command::Augment(a) => cmd_augment(a)?,
        Command::Llm(a) => cmd_llm(a, file)?,
        Command::Props(a) => return cmd_props(a),
    }
    Ok(true)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .target(env_logger::Target::Stderr)
        .init();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
