//! Command-line entry point wiring every stage of the pipeline.
//!
//! Settings resolve in a fixed order: built-in defaults, then the optional
//! `--config` file (`key = value` lines), then the `TOPICLAB_SEED`
//! environment variable (seed only), then explicit flags. Exit codes: 0 on
//! success, 1 on a runtime error (reported on stderr), 2 on a usage error.

use std::collections::{BTreeMap, BTreeSet};
use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use crate::broker::{serve, Broker, BrokerConfig};
use crate::coherence::{
    default_measure, select_k_detailed, write_coherence_csv, Algorithm, Measure, SelectKInputs,
    DEFAULT_SWEEP_LDA_ITERS, DEFAULT_WINDOW,
};
use crate::corpus::{
    bow_matrix, build_vocabulary, doc_to_bow, tfidf_weight, Vocabulary, DEFAULT_NO_ABOVE,
    DEFAULT_NO_BELOW,
};
use crate::eval::{
    accuracy, prefix_accuracies, random_baseline, read_annotations, topic_histogram,
    write_annotations, write_eval_report, write_histogram_csv,
};
use crate::ingest::{consume_documents, replay_produce, Document, KeywordSet};
use crate::lda::{
    default_alpha, dominant_topics, infer_theta, read_assignments, train_lda, write_assignments,
    DEFAULT_BETA, DEFAULT_INFER_ITERS, DEFAULT_TRAIN_ITERS,
};
use crate::lsa::train_lsa;
use crate::model_io::{load_model, save_lda, save_lsa, save_nmf, SavedModel};
use crate::nmf::{train_nmf, DEFAULT_MAX_ITERS, DEFAULT_TOL};
use crate::preprocess::{
    preprocess_corpus, read_tokenized, write_tokenized, StopwordSet, DEFAULT_PHRASE_MIN_COUNT,
    DEFAULT_PHRASE_THRESHOLD,
};
use crate::synth::{generate, SynthConfig};
use crate::visexport::{export_vis, write_vis_file, DEFAULT_LAMBDA};

pub const DEFAULT_SEED: u64 = 42;
pub const DEFAULT_BROKER_ADDR: &str = "127.0.0.1:7171";
pub const DEFAULT_TOPIC: &str = "health_tweets";

const CONFIG_KEYS: &[&str] = &[
    "seed",
    "broker_addr",
    "topic",
    "keywords",
    "stopwords",
    "phrase_min_count",
    "phrase_threshold",
    "no_below",
    "no_above",
    "algo",
    "measure",
    "window",
    "train_iters",
    "infer_iters",
    "nmf_iters",
    "nmf_tol",
    "lambda",
    "krange",
];

/// Settings shared across subcommands, loaded from an optional config file.
///
/// Values here sit between built-in defaults and explicit flags; the
/// `TOPICLAB_SEED` environment variable outranks the file for the seed.
#[derive(Debug, Default)]
pub struct PipelineConfig {
    values: BTreeMap<String, String>,
}

impl PipelineConfig {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let mut values = BTreeMap::new();
        let Some(path) = path else {
            return Ok(PipelineConfig { values });
        };
        let text = fs::read_to_string(path)
            .with_context(|| format!("cannot read config file {}", path.display()))?;
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                anyhow!(
                    "{}:{}: expected `key = value`, found {raw:?}",
                    path.display(),
                    idx + 1
                )
            })?;
            let key = key.trim();
            let value = value.trim();
            if !CONFIG_KEYS.contains(&key) {
                bail!("{}:{}: unknown config key {key:?}", path.display(), idx + 1);
            }
            values.insert(key.to_string(), value.to_string());
        }
        Ok(PipelineConfig { values })
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>> {
        match self.values.get(key) {
            None => Ok(None),
            Some(raw) => raw
                .parse::<T>()
                .map(Some)
                .map_err(|_| anyhow!("config key {key} has invalid value {raw:?}")),
        }
    }
}

fn resolve_seed_with(flag: Option<u64>, env: Option<&str>, cfg: &PipelineConfig) -> Result<u64> {
    if let Some(seed) = flag {
        return Ok(seed);
    }
    if let Some(raw) = env {
        return raw
            .trim()
            .parse::<u64>()
            .map_err(|_| anyhow!("TOPICLAB_SEED must be an unsigned integer, found {raw:?}"));
    }
    Ok(cfg.get::<u64>("seed")?.unwrap_or(DEFAULT_SEED))
}

fn resolve_seed(flag: Option<u64>, cfg: &PipelineConfig) -> Result<u64> {
    let env = std::env::var("TOPICLAB_SEED").ok();
    resolve_seed_with(flag, env.as_deref(), cfg)
}

fn require_file(path: &Path, what: &str) -> Result<()> {
    if !path.is_file() {
        bail!("{what} not found: {}", path.display());
    }
    Ok(())
}

#[derive(Debug, Clone)]
pub struct KRange {
    pub lo: usize,
    pub hi: usize,
}

fn parse_krange(s: &str) -> Result<KRange, String> {
    let (lo, hi) = s
        .split_once("..")
        .ok_or_else(|| format!("expected <lo>..<hi>, found {s:?}"))?;
    let lo: usize = lo.trim().parse().map_err(|_| format!("bad lower bound in {s:?}"))?;
    let hi: usize = hi.trim().parse().map_err(|_| format!("bad upper bound in {s:?}"))?;
    if lo < 1 || hi < lo {
        return Err(format!("range {s:?} must satisfy 1 <= lo <= hi"));
    }
    Ok(KRange { lo, hi })
}

#[derive(Parser, Debug)]
#[command(
    name = "topiclab",
    version,
    about = "Topic mining over streamed short texts",
    propagate_version = true
)]
struct Cli {
    /// Optional `key = value` settings file; flags override it.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Serve the append-only log broker over TCP.
    Broker(BrokerArgs),
    /// Replay a tweet JSONL file into the broker, keeping keyword matches.
    Ingest(IngestArgs),
    /// Fetch a topic's documents from the broker into a JSONL file.
    Consume(ConsumeArgs),
    /// Clean, tokenize, de-stopword, phrase and stem consumed documents.
    Preprocess(PreprocessArgs),
    /// Train a topic model and write a model container file.
    Train(TrainArgs),
    /// Sweep k over a range and score each model's topic coherence.
    #[command(name = "select-k")]
    SelectK(SelectKArgs),
    /// Assign dominant topics to documents with a trained LDA model.
    Infer(InferArgs),
    /// Compare topic assignments against gold annotations.
    Eval(EvalArgs),
    /// Accuracy of uniformly random assignment, for calibration.
    Baseline(BaselineArgs),
    /// Dominant and second topic counts over an assignment file.
    Histogram(HistogramArgs),
    /// Export a trained LDA model as a JSON visualization bundle.
    #[command(name = "export-vis")]
    ExportVis(ExportVisArgs),
    /// Generate a synthetic corpus with planted topics and gold labels.
    Synth(SynthArgs),
}

#[derive(Args, Debug)]
struct BrokerArgs {
    /// Listen address, host:port.
    #[arg(long)]
    addr: Option<String>,
    /// Persist topic logs under this directory and replay them on start.
    #[arg(long, value_name = "DIR")]
    data_dir: Option<PathBuf>,
    /// Maximum payload size in bytes.
    #[arg(long)]
    max_payload: Option<usize>,
}

#[derive(Args, Debug)]
struct IngestArgs {
    /// Tweet JSONL file to replay.
    #[arg(long = "in", value_name = "FILE")]
    input: PathBuf,
    #[arg(long)]
    addr: Option<String>,
    #[arg(long)]
    topic: Option<String>,
    /// Keyword list file, one keyword per line; defaults to the built-in set.
    #[arg(long, value_name = "FILE")]
    keywords: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ConsumeArgs {
    #[arg(long)]
    addr: Option<String>,
    #[arg(long)]
    topic: Option<String>,
    /// First offset to fetch.
    #[arg(long, default_value_t = 0)]
    from: u64,
    /// Output JSONL file, one document per line.
    #[arg(long, value_name = "FILE")]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct PreprocessArgs {
    /// Document JSONL file, as written by `consume`.
    #[arg(long = "in", value_name = "FILE")]
    input: PathBuf,
    /// Stopword list file, one word per line; defaults to the built-in set.
    #[arg(long, value_name = "FILE")]
    stopwords: Option<PathBuf>,
    /// Minimum bigram count for phrase promotion.
    #[arg(long)]
    min_count: Option<u64>,
    /// Phrase score threshold.
    #[arg(long)]
    threshold: Option<f64>,
    /// Output tokenized JSONL file.
    #[arg(long, value_name = "FILE")]
    out: PathBuf,
    /// Also save the learned phrase model.
    #[arg(long, value_name = "FILE")]
    phrases_out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct TrainArgs {
    /// Algorithm: lsa, nmf or lda.
    #[arg(long, value_parser = Algorithm::from_str)]
    algo: Option<Algorithm>,
    /// Number of topics.
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Tokenized JSONL input, as written by `preprocess` or `synth`.
    #[arg(long = "in", value_name = "FILE")]
    input: PathBuf,
    /// Output model container file.
    #[arg(long, value_name = "FILE")]
    out: PathBuf,
    /// Also save the vocabulary file for later stages.
    #[arg(long, value_name = "FILE")]
    vocab_out: Option<PathBuf>,
    /// Drop terms appearing in fewer than this many documents.
    #[arg(long)]
    no_below: Option<u64>,
    /// Drop terms appearing in more than this fraction of documents.
    #[arg(long)]
    no_above: Option<f64>,
    /// Training iterations (LDA sweeps or NMF update rounds).
    #[arg(long)]
    iters: Option<usize>,
    /// LDA document-topic prior; defaults to 50/k.
    #[arg(long)]
    alpha: Option<f64>,
    /// LDA topic-word prior.
    #[arg(long)]
    beta: Option<f64>,
    /// NMF convergence tolerance on the relative objective decrease.
    #[arg(long)]
    tol: Option<f64>,
    /// Include the document-side factor in saved NMF models.
    #[arg(long)]
    include_w: bool,
}

#[derive(Args, Debug)]
struct SelectKArgs {
    #[arg(long, value_parser = Algorithm::from_str)]
    algo: Option<Algorithm>,
    /// Coherence measure: umass, cv or tcw2v; defaults per algorithm.
    #[arg(long, value_parser = Measure::from_str)]
    measure: Option<Measure>,
    /// Inclusive k range, e.g. 2..8.
    #[arg(long, value_parser = parse_krange)]
    krange: Option<KRange>,
    #[arg(long = "in", value_name = "FILE")]
    input: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    /// Write per-topic and aggregate scores as CSV.
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
    /// Sliding window width for the cv measure.
    #[arg(long)]
    window: Option<usize>,
    /// LDA sweeps per candidate k.
    #[arg(long)]
    lda_iters: Option<usize>,
    /// NMF update rounds per candidate k.
    #[arg(long)]
    nmf_iters: Option<usize>,
    #[arg(long)]
    nmf_tol: Option<f64>,
    #[arg(long)]
    no_below: Option<u64>,
    #[arg(long)]
    no_above: Option<f64>,
}

#[derive(Args, Debug)]
struct InferArgs {
    /// Trained LDA model container.
    #[arg(long, value_name = "FILE")]
    model: PathBuf,
    /// Tokenized JSONL documents to assign.
    #[arg(long = "in", value_name = "FILE")]
    input: PathBuf,
    /// Vocabulary file saved at training time.
    #[arg(long, value_name = "FILE")]
    vocab: PathBuf,
    /// Sampling sweeps per document.
    #[arg(long)]
    iters: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output assignment CSV.
    #[arg(long, value_name = "FILE")]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct EvalArgs {
    /// Assignment CSV from `infer`.
    #[arg(long, value_name = "FILE")]
    assignments: PathBuf,
    /// Gold annotation CSV.
    #[arg(long, value_name = "FILE")]
    annotations: PathBuf,
    /// Model container; its vocabulary hash is checked against the
    /// annotation file header when both are present.
    #[arg(long, value_name = "FILE")]
    model: Option<PathBuf>,
    /// Write the evaluation report (with confusion matrix) as CSV.
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
    /// Report accuracy over growing prefixes with this step instead.
    #[arg(long, value_name = "N")]
    prefix_step: Option<usize>,
}

#[derive(Args, Debug)]
struct BaselineArgs {
    #[arg(long)]
    k: usize,
    /// Number of documents per trial.
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 1000)]
    trials: usize,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args, Debug)]
struct HistogramArgs {
    #[arg(long, value_name = "FILE")]
    assignments: PathBuf,
    /// Number of topics; defaults to the highest topic index seen.
    #[arg(long)]
    k: Option<usize>,
    /// Output CSV; printed to stdout when omitted.
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ExportVisArgs {
    #[arg(long, value_name = "FILE")]
    model: PathBuf,
    /// The tokenized training corpus, in training order.
    #[arg(long = "in", value_name = "FILE")]
    input: PathBuf,
    #[arg(long, value_name = "FILE")]
    vocab: PathBuf,
    /// Relevance interpolation weight in [0, 1].
    #[arg(long)]
    lambda: Option<f64>,
    /// Output JSON file.
    #[arg(long, value_name = "FILE")]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct SynthArgs {
    #[arg(long, default_value_t = 2000)]
    n_docs: usize,
    #[arg(long, default_value_t = 4)]
    k: usize,
    #[arg(long, default_value_t = 500)]
    vocab_size: usize,
    /// Dirichlet concentration for document-topic mixtures.
    #[arg(long, default_value_t = 0.1)]
    alpha: f64,
    /// Within-topic geometric rank decay.
    #[arg(long, default_value_t = 0.8)]
    decay: f64,
    #[arg(long, default_value_t = 40)]
    min_len: usize,
    #[arg(long, default_value_t = 60)]
    max_len: usize,
    #[arg(long)]
    seed: Option<u64>,
    /// Output tokenized JSONL file.
    #[arg(long, value_name = "FILE")]
    out: PathBuf,
    /// Also write the planted labels as an annotation CSV.
    #[arg(long, value_name = "FILE")]
    gold_out: Option<PathBuf>,
}

/// Parses `argv` and runs the selected subcommand.
///
/// Returns the process exit code: 0 success, 1 runtime error, 2 usage error.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e:#}");
            1
        }
    }
}

fn dispatch(cli: Cli) -> Result<()> {
    let cfg = PipelineConfig::load(cli.config.as_deref())?;
    match cli.cmd {
        Cmd::Broker(args) => cmd_broker(args, &cfg),
        Cmd::Ingest(args) => cmd_ingest(args, &cfg),
        Cmd::Consume(args) => cmd_consume(args, &cfg),
        Cmd::Preprocess(args) => cmd_preprocess(args, &cfg),
        Cmd::Train(args) => cmd_train(args, &cfg),
        Cmd::SelectK(args) => cmd_select_k(args, &cfg),
        Cmd::Infer(args) => cmd_infer(args, &cfg),
        Cmd::Eval(args) => cmd_eval(args),
        Cmd::Baseline(args) => cmd_baseline(args, &cfg),
        Cmd::Histogram(args) => cmd_histogram(args),
        Cmd::ExportVis(args) => cmd_export_vis(args, &cfg),
        Cmd::Synth(args) => cmd_synth(args, &cfg),
    }
}

fn broker_addr(flag: Option<String>, cfg: &PipelineConfig) -> Result<String> {
    Ok(flag
        .or(cfg.get("broker_addr")?)
        .unwrap_or_else(|| DEFAULT_BROKER_ADDR.to_string()))
}

fn topic_name(flag: Option<String>, cfg: &PipelineConfig) -> Result<String> {
    Ok(flag
        .or(cfg.get("topic")?)
        .unwrap_or_else(|| DEFAULT_TOPIC.to_string()))
}

fn cmd_broker(args: BrokerArgs, cfg: &PipelineConfig) -> Result<()> {
    let mut config = BrokerConfig::default();
    config.listen_address = broker_addr(args.addr, cfg)?;
    config.data_dir = args.data_dir;
    if let Some(max) = args.max_payload {
        config.max_payload_bytes = max;
    }
    let broker = Arc::new(Broker::open(config).context("cannot open broker")?);
    let handle = serve(broker).context("cannot start broker server")?;
    println!("listening on {}", handle.addr());
    loop {
        std::thread::park();
    }
}

fn cmd_ingest(args: IngestArgs, cfg: &PipelineConfig) -> Result<()> {
    require_file(&args.input, "input file")?;
    let keyword_path = match args.keywords {
        Some(p) => Some(p),
        None => cfg.get::<PathBuf>("keywords")?,
    };
    let keywords = match &keyword_path {
        Some(path) => {
            require_file(path, "keyword file")?;
            KeywordSet::load(path)
                .with_context(|| format!("cannot read keyword file {}", path.display()))?
        }
        None => KeywordSet::standard(),
    };
    let addr = broker_addr(args.addr, cfg)?;
    let topic = topic_name(args.topic, cfg)?;
    let published = replay_produce(&args.input, addr.as_str(), &topic, &keywords)
        .with_context(|| format!("ingest from {} failed", args.input.display()))?;
    println!("published {published} documents to {topic}");
    Ok(())
}

fn cmd_consume(args: ConsumeArgs, cfg: &PipelineConfig) -> Result<()> {
    let addr = broker_addr(args.addr, cfg)?;
    let topic = topic_name(args.topic, cfg)?;
    let docs = consume_documents(addr.as_str(), &topic, args.from)
        .with_context(|| format!("consume from {topic} failed"))?;
    let mut out = String::new();
    for doc in &docs {
        out.push_str(&serde_json::to_string(doc)?);
        out.push('\n');
    }
    fs::write(&args.out, out)
        .with_context(|| format!("cannot write {}", args.out.display()))?;
    println!("fetched {} documents from {topic}", docs.len());
    Ok(())
}

fn read_documents(path: &Path) -> Result<Vec<Document>> {
    require_file(path, "input file")?;
    let text =
        fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    let mut docs = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let doc: Document = serde_json::from_str(line)
            .with_context(|| format!("{}:{}: malformed document", path.display(), idx + 1))?;
        docs.push(doc);
    }
    Ok(docs)
}

fn cmd_preprocess(args: PreprocessArgs, cfg: &PipelineConfig) -> Result<()> {
    let docs = read_documents(&args.input)?;
    let stopword_path = match args.stopwords {
        Some(p) => Some(p),
        None => cfg.get::<PathBuf>("stopwords")?,
    };
    let stops = match &stopword_path {
        Some(path) => {
            require_file(path, "stopword file")?;
            StopwordSet::load(path)
                .with_context(|| format!("cannot read stopword file {}", path.display()))?
        }
        None => StopwordSet::standard(),
    };
    let min_count = args
        .min_count
        .or(cfg.get("phrase_min_count")?)
        .unwrap_or(DEFAULT_PHRASE_MIN_COUNT);
    let threshold = args
        .threshold
        .or(cfg.get("phrase_threshold")?)
        .unwrap_or(DEFAULT_PHRASE_THRESHOLD);
    let (tokenized, phrases) = preprocess_corpus(&docs, &stops, min_count, threshold);
    write_tokenized(&args.out, &tokenized)
        .with_context(|| format!("cannot write {}", args.out.display()))?;
    if let Some(path) = &args.phrases_out {
        phrases
            .save(path)
            .with_context(|| format!("cannot write {}", path.display()))?;
    }
    let promoted: BTreeSet<&str> = tokenized
        .iter()
        .flat_map(|d| d.tokens.iter())
        .filter(|t| t.contains('_'))
        .map(String::as_str)
        .collect();
    println!(
        "preprocessed {} documents, {} phrases promoted",
        tokenized.len(),
        promoted.len()
    );
    Ok(())
}

struct CorpusOnDisk {
    docs: Vec<crate::preprocess::TokenizedDoc>,
    vocab: Vocabulary,
}

fn load_corpus(
    input: &Path,
    no_below: Option<u64>,
    no_above: Option<f64>,
    cfg: &PipelineConfig,
) -> Result<CorpusOnDisk> {
    require_file(input, "input file")?;
    let docs = read_tokenized(input)
        .with_context(|| format!("cannot read tokenized file {}", input.display()))?;
    let no_below = no_below.or(cfg.get("no_below")?).unwrap_or(DEFAULT_NO_BELOW);
    let no_above = no_above.or(cfg.get("no_above")?).unwrap_or(DEFAULT_NO_ABOVE);
    if !(no_above > 0.0 && no_above <= 1.0) {
        bail!("no_above must lie in (0, 1], got {no_above}");
    }
    let vocab = build_vocabulary(&docs, no_below, no_above)?;
    Ok(CorpusOnDisk { docs, vocab })
}

fn cmd_train(args: TrainArgs, cfg: &PipelineConfig) -> Result<()> {
    let algo = match args.algo {
        Some(a) => a,
        None => cfg
            .get("algo")?
            .ok_or_else(|| anyhow!("--algo is required (or set `algo` in the config file)"))?,
    };
    let k = match args.k {
        Some(k) => k,
        None => bail!("--k is required"),
    };
    if k < 1 {
        bail!("--k must be at least 1");
    }
    let seed = resolve_seed(args.seed, cfg)?;
    let corpus = load_corpus(&args.input, args.no_below, args.no_above, cfg)?;
    let hash = corpus.vocab.content_hash();
    match algo {
        Algorithm::Lsa => {
            let tfidf = tfidf_weight(&bow_matrix(&corpus.docs, &corpus.vocab), &corpus.vocab);
            let model = train_lsa(&tfidf, k, seed)?;
            save_lsa(&model, &hash, &args.out)?;
        }
        Algorithm::Nmf => {
            let iters = args
                .iters
                .or(cfg.get("nmf_iters")?)
                .unwrap_or(DEFAULT_MAX_ITERS);
            let tol = args.tol.or(cfg.get("nmf_tol")?).unwrap_or(DEFAULT_TOL);
            let tfidf = tfidf_weight(&bow_matrix(&corpus.docs, &corpus.vocab), &corpus.vocab);
            let model = train_nmf(&tfidf, k, iters, tol, seed)?;
            save_nmf(&model, &hash, args.include_w, &args.out)?;
        }
        Algorithm::Lda => {
            let iters = args
                .iters
                .or(cfg.get("train_iters")?)
                .unwrap_or(DEFAULT_TRAIN_ITERS);
            let alpha = args.alpha.unwrap_or_else(|| default_alpha(k));
            let beta = args.beta.unwrap_or(DEFAULT_BETA);
            if alpha <= 0.0 || beta <= 0.0 {
                bail!("priors must be positive: alpha={alpha}, beta={beta}");
            }
            let bow = bow_matrix(&corpus.docs, &corpus.vocab);
            let model = train_lda(&bow, k, alpha, beta, iters, seed)?;
            save_lda(&model, &hash, &args.out)?;
        }
    }
    if let Some(path) = &args.vocab_out {
        corpus
            .vocab
            .save(path)
            .with_context(|| format!("cannot write {}", path.display()))?;
    }
    println!(
        "trained {algo} k={k} on {} documents, {} terms -> {}",
        corpus.docs.len(),
        corpus.vocab.len(),
        args.out.display()
    );
    Ok(())
}

fn cmd_select_k(args: SelectKArgs, cfg: &PipelineConfig) -> Result<()> {
    let algo = match args.algo {
        Some(a) => a,
        None => cfg
            .get("algo")?
            .ok_or_else(|| anyhow!("--algo is required (or set `algo` in the config file)"))?,
    };
    let measure = match args.measure {
        Some(m) => m,
        None => cfg.get("measure")?.unwrap_or_else(|| default_measure(algo)),
    };
    let krange = match args.krange {
        Some(r) => r,
        None => cfg
            .get::<String>("krange")?
            .map(|raw| parse_krange(&raw).map_err(|e| anyhow!("config key krange: {e}")))
            .transpose()?
            .ok_or_else(|| anyhow!("--krange is required (or set `krange` in the config file)"))?,
    };
    let seed = resolve_seed(args.seed, cfg)?;
    let corpus = load_corpus(&args.input, args.no_below, args.no_above, cfg)?;
    let bow = bow_matrix(&corpus.docs, &corpus.vocab);
    let tfidf = tfidf_weight(&bow, &corpus.vocab);
    let mut inputs = SelectKInputs::new(&corpus.docs, &bow, &tfidf, &corpus.vocab);
    inputs.window = args.window.or(cfg.get("window")?).unwrap_or(DEFAULT_WINDOW);
    inputs.lda_iters = args
        .lda_iters
        .or(cfg.get("train_iters")?)
        .unwrap_or(DEFAULT_SWEEP_LDA_ITERS);
    if let Some(iters) = args.nmf_iters.or(cfg.get("nmf_iters")?) {
        inputs.nmf_max_iters = iters;
    }
    if let Some(tol) = args.nmf_tol.or(cfg.get("nmf_tol")?) {
        inputs.nmf_tol = tol;
    }
    let (result, reports) = select_k_detailed(algo, krange.lo..=krange.hi, measure, &inputs, seed)?;
    for (k, score) in &result.scores {
        println!("k={k} {measure}={score}");
    }
    println!("best k = {}", result.best_k);
    if let Some(path) = &args.out {
        write_coherence_csv(path, &reports)
            .with_context(|| format!("cannot write {}", path.display()))?;
    }
    Ok(())
}

fn load_lda_model(path: &Path) -> Result<(String, crate::lda::LdaModel)> {
    require_file(path, "model file")?;
    let file = load_model(path)?;
    match file.model {
        SavedModel::Lda(model) => Ok((file.vocab_hash, model)),
        other => bail!(
            "{} holds a {} model; this command requires lda",
            path.display(),
            other.kind()
        ),
    }
}

fn load_vocab_checked(path: &Path, expected_hash: &str) -> Result<Vocabulary> {
    require_file(path, "vocabulary file")?;
    let vocab = Vocabulary::load(path)
        .with_context(|| format!("cannot read vocabulary file {}", path.display()))?;
    let hash = vocab.content_hash();
    if hash != expected_hash {
        bail!(
            "vocabulary hash mismatch: model was trained against {expected_hash}, {} has {hash}",
            path.display()
        );
    }
    Ok(vocab)
}

fn cmd_infer(args: InferArgs, cfg: &PipelineConfig) -> Result<()> {
    let (vocab_hash, model) = load_lda_model(&args.model)?;
    let vocab = load_vocab_checked(&args.vocab, &vocab_hash)?;
    require_file(&args.input, "input file")?;
    let docs = read_tokenized(&args.input)
        .with_context(|| format!("cannot read tokenized file {}", args.input.display()))?;
    let iters = args
        .iters
        .or(cfg.get("infer_iters")?)
        .unwrap_or(DEFAULT_INFER_ITERS);
    let seed = resolve_seed(args.seed, cfg)?;
    let mut assignments = Vec::with_capacity(docs.len());
    for (idx, doc) in docs.iter().enumerate() {
        let bow_doc = doc_to_bow(doc, &vocab);
        let theta = infer_theta(&model, &bow_doc, iters, seed.wrapping_add(idx as u64))?;
        assignments.push(dominant_topics(&theta, &doc.doc_id));
    }
    write_assignments(&args.out, &assignments)
        .with_context(|| format!("cannot write {}", args.out.display()))?;
    println!("assigned {} documents -> {}", assignments.len(), args.out.display());
    Ok(())
}

fn cmd_eval(args: EvalArgs) -> Result<()> {
    require_file(&args.assignments, "assignment file")?;
    require_file(&args.annotations, "annotation file")?;
    let assignments = read_assignments(&args.assignments)
        .with_context(|| format!("cannot read {}", args.assignments.display()))?;
    let (ann_hash, gold) = read_annotations(&args.annotations)
        .with_context(|| format!("cannot read {}", args.annotations.display()))?;
    if let (Some(model_path), Some(ann_hash)) = (&args.model, &ann_hash) {
        require_file(model_path, "model file")?;
        let file = load_model(model_path)?;
        if &file.vocab_hash != ann_hash {
            bail!(
                "annotation file was made for model hash {ann_hash}, {} has {}",
                model_path.display(),
                file.vocab_hash
            );
        }
    }
    if let Some(step) = args.prefix_step {
        if step < 1 {
            bail!("--prefix-step must be at least 1");
        }
        let rows = prefix_accuracies(&assignments, &gold, step)?;
        let mut out = String::from("n,top1_accuracy,top2_accuracy\n");
        for (n, report) in &rows {
            out.push_str(&format!(
                "{n},{},{}\n",
                report.top1_accuracy, report.top2_accuracy
            ));
        }
        match &args.out {
            Some(path) => fs::write(path, out)
                .with_context(|| format!("cannot write {}", path.display()))?,
            None => print!("{out}"),
        }
        return Ok(());
    }
    let report = accuracy(&assignments, &gold)?;
    println!(
        "n={} k={} top1={} top2={}",
        report.n, report.k, report.top1_accuracy, report.top2_accuracy
    );
    if let Some(path) = &args.out {
        write_eval_report(path, &report)
            .with_context(|| format!("cannot write {}", path.display()))?;
    }
    Ok(())
}

fn cmd_baseline(args: BaselineArgs, cfg: &PipelineConfig) -> Result<()> {
    if args.k < 1 || args.n < 1 || args.trials < 1 {
        bail!("k, n and trials must all be at least 1");
    }
    let seed = resolve_seed(args.seed, cfg)?;
    let mean = random_baseline(args.k, args.n, args.trials, seed);
    println!("mean_accuracy = {mean}");
    Ok(())
}

fn cmd_histogram(args: HistogramArgs) -> Result<()> {
    require_file(&args.assignments, "assignment file")?;
    let assignments = read_assignments(&args.assignments)
        .with_context(|| format!("cannot read {}", args.assignments.display()))?;
    let k = match args.k {
        Some(k) if k >= 1 => k,
        Some(_) => bail!("--k must be at least 1"),
        None => assignments
            .iter()
            .map(|a| {
                (a.dominant_topic + 1).max(a.second_topic.map(|t| t + 1).unwrap_or(0))
            })
            .max()
            .unwrap_or(1),
    };
    let (dominant, second) = topic_histogram(&assignments, k);
    match &args.out {
        Some(path) => write_histogram_csv(path, &dominant, &second)
            .with_context(|| format!("cannot write {}", path.display()))?,
        None => {
            println!("topic,dominant_count,second_count");
            for topic in dominant.keys() {
                println!("{topic},{},{}", dominant[topic], second[topic]);
            }
        }
    }
    Ok(())
}

fn cmd_export_vis(args: ExportVisArgs, cfg: &PipelineConfig) -> Result<()> {
    let (vocab_hash, model) = load_lda_model(&args.model)?;
    let vocab = load_vocab_checked(&args.vocab, &vocab_hash)?;
    require_file(&args.input, "input file")?;
    let docs = read_tokenized(&args.input)
        .with_context(|| format!("cannot read tokenized file {}", args.input.display()))?;
    let bow = bow_matrix(&docs, &vocab);
    let lambda = match args.lambda {
        Some(l) => l,
        None => cfg.get("lambda")?.unwrap_or(DEFAULT_LAMBDA),
    };
    let vis = export_vis(&model, &bow, &vocab, lambda)?;
    write_vis_file(&vis, &args.out)?;
    println!(
        "exported {} topics, {} default terms -> {}",
        vis.topics.len(),
        vis.default_terms.len(),
        args.out.display()
    );
    Ok(())
}

fn cmd_synth(args: SynthArgs, cfg: &PipelineConfig) -> Result<()> {
    if args.min_len > args.max_len {
        bail!("--min-len must not exceed --max-len");
    }
    if args.k < 1 || args.n_docs < 1 || args.vocab_size < args.k {
        bail!("need n_docs >= 1 and vocab_size >= k >= 1");
    }
    if args.alpha <= 0.0 {
        bail!("--alpha must be positive");
    }
    if !(args.decay > 0.0 && args.decay <= 1.0) {
        bail!("--decay must lie in (0, 1]");
    }
    let seed = resolve_seed(args.seed, cfg)?;
    let config = SynthConfig {
        n_docs: args.n_docs,
        k: args.k,
        vocab_size: args.vocab_size,
        alpha: args.alpha,
        min_len: args.min_len,
        max_len: args.max_len,
        decay: args.decay,
    };
    let corpus = generate(&config, seed);
    write_tokenized(&args.out, &corpus.docs)
        .with_context(|| format!("cannot write {}", args.out.display()))?;
    if let Some(path) = &args.gold_out {
        write_annotations(path, None, &corpus.gold)
            .with_context(|| format!("cannot write {}", path.display()))?;
    }
    println!(
        "generated {} documents over {} planted topics -> {}",
        corpus.docs.len(),
        args.k,
        args.out.display()
    );
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write as _;

    #[test]
    fn config_file_parses_keys_and_skips_comments() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.conf");
        let mut f = fs::File::create(&path).unwrap();
        writeln!(f, "# pipeline settings").unwrap();
        writeln!(f).unwrap();
        writeln!(f, "seed = 7").unwrap();
        writeln!(f, "no_above = 0.4").unwrap();
        writeln!(f, "topic = wellness").unwrap();
        drop(f);
        let cfg = PipelineConfig::load(Some(&path)).unwrap();
        assert_eq!(cfg.get::<u64>("seed").unwrap(), Some(7));
        assert_eq!(cfg.get::<f64>("no_above").unwrap(), Some(0.4));
        assert_eq!(cfg.get::<String>("topic").unwrap(), Some("wellness".to_string()));
        assert_eq!(cfg.get::<u64>("no_below").unwrap(), None);
    }

    #[test]
    fn config_file_rejects_unknown_keys_and_bad_lines() {
        let dir = tempfile::tempdir().unwrap();
        let bad_key = dir.path().join("bad_key.conf");
        fs::write(&bad_key, "sede = 7\n").unwrap();
        let err = PipelineConfig::load(Some(&bad_key)).unwrap_err();
        assert!(err.to_string().contains("sede"));

        let bad_line = dir.path().join("bad_line.conf");
        fs::write(&bad_line, "just some words\n").unwrap();
        let err = PipelineConfig::load(Some(&bad_line)).unwrap_err();
        assert!(err.to_string().contains("key = value"));
    }

    #[test]
    fn missing_config_path_means_empty_config() {
        let cfg = PipelineConfig::load(None).unwrap();
        assert_eq!(cfg.get::<u64>("seed").unwrap(), None);
    }

    #[test]
    fn seed_resolution_prefers_flag_then_env_then_config() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.conf");
        fs::write(&path, "seed = 5\n").unwrap();
        let cfg = PipelineConfig::load(Some(&path)).unwrap();

        assert_eq!(resolve_seed_with(Some(1), Some("9"), &cfg).unwrap(), 1);
        assert_eq!(resolve_seed_with(None, Some("9"), &cfg).unwrap(), 9);
        assert_eq!(resolve_seed_with(None, None, &cfg).unwrap(), 5);
        let empty = PipelineConfig::default();
        assert_eq!(resolve_seed_with(None, None, &empty).unwrap(), DEFAULT_SEED);
        assert!(resolve_seed_with(None, Some("lots"), &empty).is_err());
    }

    #[test]
    fn krange_parses_inclusive_bounds() {
        let r = parse_krange("2..8").unwrap();
        assert_eq!((r.lo, r.hi), (2, 8));
        let r = parse_krange("4..4").unwrap();
        assert_eq!((r.lo, r.hi), (4, 4));
        assert!(parse_krange("8..2").is_err());
        assert!(parse_krange("0..3").is_err());
        assert!(parse_krange("3").is_err());
        assert!(parse_krange("a..b").is_err());
    }

    #[test]
    fn unknown_flag_is_a_usage_error() {
        let code = run(["topiclab", "baseline", "--frobnicate"]);
        assert_eq!(code, 2);
    }

    #[test]
    fn missing_input_file_is_a_runtime_error() {
        let code = run([
            "topiclab",
            "train",
            "--algo",
            "lda",
            "--k",
            "2",
            "--in",
            "definitely_missing.jsonl",
            "--out",
            "/dev/null",
        ]);
        assert_eq!(code, 1);
    }

    #[test]
    fn baseline_runs_and_succeeds() {
        let code = run([
            "topiclab", "baseline", "--k", "4", "--n", "50", "--trials", "20", "--seed", "1",
        ]);
        assert_eq!(code, 0);
    }

    #[test]
    fn synth_train_infer_eval_chain_works() {
        let dir = tempfile::tempdir().unwrap();
        let tokens = dir.path().join("tokens.jsonl");
        let gold = dir.path().join("gold.csv");
        let model = dir.path().join("model.tlab");
        let vocab = dir.path().join("vocab.tsv");
        let assignments = dir.path().join("assignments.csv");
        let report = dir.path().join("report.csv");

        let code = run([
            "topiclab",
            "synth",
            "--n-docs",
            "120",
            "--k",
            "3",
            "--vocab-size",
            "60",
            "--seed",
            "5",
            "--out",
            tokens.to_str().unwrap(),
            "--gold-out",
            gold.to_str().unwrap(),
        ]);
        assert_eq!(code, 0);
        assert!(tokens.is_file() && gold.is_file());

        let code = run([
            "topiclab",
            "train",
            "--algo",
            "lda",
            "--k",
            "3",
            "--seed",
            "5",
            "--iters",
            "150",
            "--no-below",
            "1",
            "--no-above",
            "1.0",
            "--in",
            tokens.to_str().unwrap(),
            "--out",
            model.to_str().unwrap(),
            "--vocab-out",
            vocab.to_str().unwrap(),
        ]);
        assert_eq!(code, 0);
        assert!(model.is_file() && vocab.is_file());

        let code = run([
            "topiclab",
            "infer",
            "--model",
            model.to_str().unwrap(),
            "--vocab",
            vocab.to_str().unwrap(),
            "--in",
            tokens.to_str().unwrap(),
            "--iters",
            "40",
            "--seed",
            "5",
            "--out",
            assignments.to_str().unwrap(),
        ]);
        assert_eq!(code, 0);

        let code = run([
            "topiclab",
            "eval",
            "--assignments",
            assignments.to_str().unwrap(),
            "--annotations",
            gold.to_str().unwrap(),
            "--out",
            report.to_str().unwrap(),
        ]);
        assert_eq!(code, 0);
        let text = fs::read_to_string(&report).unwrap();
        assert!(text.contains("top1_accuracy"));
    }

    #[test]
    fn wrong_model_kind_is_reported() {
        let dir = tempfile::tempdir().unwrap();
        let tokens = dir.path().join("tokens.jsonl");
        let model = dir.path().join("model.tlab");
        let vocab = dir.path().join("vocab.tsv");
        assert_eq!(
            run([
                "topiclab",
                "synth",
                "--n-docs",
                "40",
                "--k",
                "2",
                "--vocab-size",
                "30",
                "--seed",
                "3",
                "--out",
                tokens.to_str().unwrap(),
            ]),
            0
        );
        assert_eq!(
            run([
                "topiclab",
                "train",
                "--algo",
                "nmf",
                "--k",
                "2",
                "--seed",
                "3",
                "--iters",
                "30",
                "--no-below",
                "1",
                "--no-above",
                "1.0",
                "--in",
                tokens.to_str().unwrap(),
                "--out",
                model.to_str().unwrap(),
                "--vocab-out",
                vocab.to_str().unwrap(),
            ]),
            0
        );
        let code = run([
            "topiclab",
            "infer",
            "--model",
            model.to_str().unwrap(),
            "--vocab",
            vocab.to_str().unwrap(),
            "--in",
            tokens.to_str().unwrap(),
            "--out",
            dir.path().join("a.csv").to_str().unwrap(),
        ]);
        assert_eq!(code, 1);
    }
}
