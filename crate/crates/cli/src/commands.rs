//! Subcommands.

use std::collections::BTreeSet;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::net::SocketAddr;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use motret::config::{TrainConfig, CONFIG_ENV};
use motret::data::synthetic::assign_splits;
use motret::data::{generate_synthetic, Dataset, Split};
use motret::eval::RelevanceMatrix;
use motret::index::EmbeddingStore;
use motret::motion_encoder::MotionVariant;
use motret::pipeline::{encode_captions, encode_motions, encode_text, evaluate_split, training_pairs, TextInputs};
use motret::space::{fit_with, LossKind, RetrievalModel, TrainState};
use motret::sweep::{run_sweep, SweepGrid};

use crate::serve::{serve, ServiceConfig};

#[derive(Debug, Parser)]
#[command(name = "motret", version, about = "Text-to-motion retrieval")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a synthetic captioned motion dataset.
    Synth(SynthArgs),
    /// Train a model and write its checkpoint.
    Train(TrainArgs),
    /// Encode motions into a common-space index file.
    EncodeMotions(EncodeMotionsArgs),
    /// Encode captions or free text into common-space vectors (JSON lines).
    EncodeTexts(EncodeTextsArgs),
    /// Merge encoded motion files into one index snapshot.
    Index(IndexArgs),
    /// Top-k motions for a free-text query.
    Search(SearchArgs),
    /// Retrieval metrics on one split.
    Evaluate(EvaluateArgs),
    /// Train and evaluate a grid of configurations.
    Sweep(SweepArgs),
    /// Serve the HTTP query API.
    Serve(ServeArgs),
}

fn existing_file(s: &str) -> Result<PathBuf, String> {
    let p = PathBuf::from(s);
    if p.is_file() {
        Ok(p)
    } else {
        Err(format!("no such file: {s}"))
    }
}

fn existing_dir(s: &str) -> Result<PathBuf, String> {
    let p = PathBuf::from(s);
    if p.is_dir() {
        Ok(p)
    } else {
        Err(format!("no such directory: {s}"))
    }
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long, default_value_t = 32)]
    pub pairs: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Fraction of motions moved to the val split.
    #[arg(long, default_value_t = 0.0)]
    pub val: f64,
    /// Fraction of motions moved to the test split.
    #[arg(long, default_value_t = 0.0)]
    pub test: f64,
    /// Output directory; receives `manifest.json` and `motions/`.
    #[arg(long)]
    pub out: PathBuf,
}

/// Precomputed caption embeddings, overriding the checkpoint's featurizer.
#[derive(Debug, Args)]
pub struct TextFiles {
    /// `SENT` file keyed by caption id.
    #[arg(long, value_parser = existing_file, conflicts_with = "tokens")]
    pub sentences: Option<PathBuf>,
    /// `TOKE` file keyed by caption id.
    #[arg(long, value_parser = existing_file)]
    pub tokens: Option<PathBuf>,
}

impl TextFiles {
    fn inputs(&self) -> anyhow::Result<TextInputs> {
        Ok(match (&self.sentences, &self.tokens) {
            (Some(p), _) => TextInputs::load_sentences(p)?,
            (None, Some(p)) => TextInputs::load_tokens(p)?,
            (None, None) => TextInputs::Free,
        })
    }
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Dataset manifest.
    #[arg(long, value_parser = existing_file)]
    pub data: PathBuf,
    /// Training configuration (JSON); defaults apply without one.
    #[arg(long, env = CONFIG_ENV, value_parser = existing_file)]
    pub config: Option<PathBuf>,
    /// Checkpoint directory.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub steps: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Print the loss every this many steps (0 disables).
    #[arg(long, default_value_t = 100)]
    pub log_every: u64,
}

#[derive(Debug, Args)]
pub struct EncodeMotionsArgs {
    #[arg(long, value_parser = existing_dir)]
    pub checkpoint: PathBuf,
    #[arg(long, value_parser = existing_file)]
    pub data: PathBuf,
    /// Restrict to one split; every motion otherwise.
    #[arg(long)]
    pub split: Option<Split>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EncodeTextsArgs {
    #[arg(long, value_parser = existing_dir)]
    pub checkpoint: PathBuf,
    /// Free-text queries; repeatable.
    #[arg(long, conflicts_with = "data")]
    pub text: Vec<String>,
    /// Encode the captions of this dataset instead.
    #[arg(long, value_parser = existing_file)]
    pub data: Option<PathBuf>,
    #[arg(long, requires = "data")]
    pub split: Option<Split>,
    #[command(flatten)]
    pub files: TextFiles,
    /// JSON-lines output; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct IndexArgs {
    /// Encoded motion files to merge.
    #[arg(long, required = true, num_args = 1.., value_parser = existing_file)]
    pub embeddings: Vec<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SearchArgs {
    #[arg(long, value_parser = existing_file)]
    pub index: PathBuf,
    /// Checkpoint directory; defaults to the index file's directory.
    #[arg(long, value_parser = existing_dir)]
    pub checkpoint: Option<PathBuf>,
    #[arg(long)]
    pub text: String,
    #[arg(long, default_value_t = 10, value_parser = clap::value_parser!(u64).range(1..))]
    pub k: u64,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long, value_parser = existing_dir)]
    pub checkpoint: PathBuf,
    #[arg(long, value_parser = existing_file)]
    pub data: PathBuf,
    #[arg(long, default_value = "test")]
    pub split: Split,
    /// External relevance matrices (`RELV`); repeatable.
    #[arg(long, value_parser = existing_file)]
    pub relevance: Vec<PathBuf>,
    /// Skip the built-in lexical relevance.
    #[arg(long)]
    pub no_lexical: bool,
    #[command(flatten)]
    pub files: TextFiles,
    /// Also write the report as JSON.
    #[arg(long)]
    pub json: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long, value_parser = existing_file)]
    pub data: PathBuf,
    #[arg(long, env = CONFIG_ENV, value_parser = existing_file)]
    pub config: Option<PathBuf>,
    #[arg(long, value_delimiter = ',', default_value = "8,16,64,256")]
    pub d_common: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_value = "infonce")]
    pub losses: Vec<LossKind>,
    #[arg(long, value_delimiter = ',', default_value = "mot")]
    pub encoders: Vec<MotionVariant>,
    #[arg(long, default_value = "test")]
    pub eval_split: Split,
    #[arg(long)]
    pub steps: Option<u64>,
    #[arg(long, value_parser = existing_file)]
    pub relevance: Vec<PathBuf>,
    #[arg(long)]
    pub csv: Option<PathBuf>,
    #[arg(long)]
    pub json: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long, value_parser = existing_dir)]
    pub checkpoint: PathBuf,
    #[arg(long, value_parser = existing_file)]
    pub index: PathBuf,
    /// Dataset manifest whose motions back the playback endpoint.
    #[arg(long, value_parser = existing_file)]
    pub data: PathBuf,
    #[arg(long, default_value = "127.0.0.1:8080")]
    pub bind: SocketAddr,
    /// `k` used when a query omits it.
    #[arg(long, default_value_t = 10, value_parser = clap::value_parser!(u64).range(1..))]
    pub k_default: u64,
    /// Longest accepted query, in bytes.
    #[arg(long, default_value_t = 1024)]
    pub max_query_len: usize,
}

pub fn execute(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Synth(a) => synth(a),
        Command::Train(a) => train(a),
        Command::EncodeMotions(a) => encode_motions_cmd(a),
        Command::EncodeTexts(a) => encode_texts_cmd(a),
        Command::Index(a) => index(a),
        Command::Search(a) => search(a),
        Command::Evaluate(a) => evaluate(a),
        Command::Sweep(a) => sweep(a),
        Command::Serve(a) => {
            let cfg = ServiceConfig {
                checkpoint: a.checkpoint,
                index: a.index,
                data: a.data,
                bind: a.bind,
                k_default: a.k_default as usize,
                max_query_len: a.max_query_len,
            };
            let rt = tokio::runtime::Runtime::new().context("starting the async runtime")?;
            rt.block_on(serve(cfg))
        }
    }
}

fn load_model(dir: &Path) -> anyhow::Result<RetrievalModel> {
    RetrievalModel::load(dir).with_context(|| format!("loading checkpoint {}", dir.display()))
}

fn load_dataset(path: &Path) -> anyhow::Result<Dataset> {
    Dataset::load(path).with_context(|| format!("loading dataset {}", path.display()))
}

fn load_config(path: Option<&Path>) -> anyhow::Result<TrainConfig> {
    match path {
        Some(p) => TrainConfig::load(p).with_context(|| format!("loading config {}", p.display())),
        None => Ok(TrainConfig::default()),
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> anyhow::Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    std::fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display()))
}

fn synth(a: SynthArgs) -> anyhow::Result<()> {
    if !(0.0..=1.0).contains(&a.val) || !(0.0..=1.0).contains(&a.test) || a.val + a.test > 1.0 {
        bail!("--val and --test must be fractions summing to at most 1");
    }
    let mut ds = generate_synthetic(a.pairs, a.seed)?;
    if a.val > 0.0 || a.test > 0.0 {
        assign_splits(&mut ds, a.val, a.test, a.seed);
    }
    let manifest = ds.save(&a.out)?;
    println!("wrote {} motions to {}", ds.motions.len(), manifest.display());
    Ok(())
}

fn train(a: TrainArgs) -> anyhow::Result<()> {
    let mut cfg = load_config(a.config.as_deref())?;
    if let Some(s) = a.steps {
        cfg.steps = s;
        cfg.epochs = None;
    }
    if let Some(s) = a.seed {
        cfg.seed = s;
    }
    let ds = load_dataset(&a.data)?;
    let inputs = cfg.text_inputs()?;
    let model = cfg.init_model(&ds, &inputs)?;
    let data = training_pairs(&model, &ds, Split::Train, &inputs)?;
    let schedule = cfg.schedule(data.len());
    let mut state = TrainState::new(model, cfg.adam, cfg.seed);
    let log = fit_with(&mut state, &data, schedule, |step, loss| {
        if a.log_every > 0 && (step + 1) % a.log_every == 0 {
            eprintln!("step {:>6}  loss {loss:.6}", step + 1);
        }
    })?;
    state.model.save(&a.out)?;
    write_json(&a.out.join("train_log.json"), &log)?;
    println!(
        "trained {} steps on {} pairs: loss {:.6} -> {:.6}; checkpoint in {}",
        log.losses.len(),
        data.len(),
        log.first().unwrap_or(f64::NAN),
        log.losses.last().copied().unwrap_or(f64::NAN),
        a.out.display()
    );
    Ok(())
}

fn encode_motions_cmd(a: EncodeMotionsArgs) -> anyhow::Result<()> {
    let model = load_model(&a.checkpoint)?;
    let ds = load_dataset(&a.data)?;
    let ids: Vec<String> = match a.split {
        Some(s) => ds.split(s).0,
        None => ds.motions.keys().cloned().collect(),
    };
    if ids.is_empty() {
        bail!("no motions to encode");
    }
    let store = encode_motions(&model, &ds, &ids)?;
    store.save(&a.out)?;
    println!("encoded {} motions (d = {}) to {}", store.len(), store.dim(), a.out.display());
    Ok(())
}

#[derive(Serialize)]
struct EncodedText<'a> {
    caption_id: &'a str,
    text: &'a str,
    embedding: &'a [f64],
}

fn encode_texts_cmd(a: EncodeTextsArgs) -> anyhow::Result<()> {
    let model = load_model(&a.checkpoint)?;
    let mut out: Box<dyn Write> = match &a.out {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("creating {}", p.display()))?,
        )),
        None => Box::new(std::io::stdout().lock()),
    };
    if let Some(data) = &a.data {
        let ds = load_dataset(data)?;
        let captions = match a.split {
            Some(s) => ds.split(s).1,
            None => ds.captions(),
        };
        let encoded = encode_captions(&model, &a.files.inputs()?, &captions)?;
        for (c, q) in captions.iter().zip(&encoded) {
            let line = EncodedText {
                caption_id: &c.caption_id,
                text: &c.text,
                embedding: &q.embedding,
            };
            writeln!(out, "{}", serde_json::to_string(&line)?)?;
        }
    } else {
        if a.text.is_empty() {
            bail!("give --text at least once, or --data");
        }
        for (i, t) in a.text.iter().enumerate() {
            let e = encode_text(&model, t)?;
            let id = format!("query-{i}");
            let line = EncodedText {
                caption_id: &id,
                text: t,
                embedding: &e,
            };
            writeln!(out, "{}", serde_json::to_string(&line)?)?;
        }
    }
    out.flush()?;
    Ok(())
}

fn index(a: IndexArgs) -> anyhow::Result<()> {
    let mut dim = None;
    let mut rows: Vec<(String, Vec<f64>)> = Vec::new();
    let mut seen = BTreeSet::new();
    for p in &a.embeddings {
        let s = EmbeddingStore::load(p).with_context(|| format!("loading {}", p.display()))?;
        match dim {
            None => dim = Some(s.dim()),
            Some(d) if d != s.dim() => bail!("{} has d = {}, expected {d}", p.display(), s.dim()),
            _ => {}
        }
        for (i, id) in s.ids().iter().enumerate() {
            if !seen.insert(id.clone()) {
                bail!("motion `{id}` appears in more than one input");
            }
            rows.push((id.clone(), s.vector(i).iter().map(|&v| v as f64).collect()));
        }
    }
    let store = EmbeddingStore::build(dim.unwrap_or(0), rows)?;
    store.save(&a.out)?;
    println!("indexed {} motions (d = {}) in {}", store.len(), store.dim(), a.out.display());
    Ok(())
}

fn search(a: SearchArgs) -> anyhow::Result<()> {
    let store = EmbeddingStore::load(&a.index).with_context(|| format!("loading {}", a.index.display()))?;
    let dir = match a.checkpoint {
        Some(d) => d,
        None => a.index.parent().map(Path::to_path_buf).unwrap_or_else(|| PathBuf::from(".")),
    };
    let model = load_model(&dir)?;
    let q = encode_text(&model, &a.text)?;
    let ranked = store.knn_query("query", &q, a.k as usize)?;
    for (r, h) in ranked.hits.iter().enumerate() {
        println!("{} {} {:.6}", r + 1, h.motion_id, h.score);
    }
    Ok(())
}

fn load_relevance(paths: &[PathBuf]) -> anyhow::Result<Vec<RelevanceMatrix>> {
    paths
        .iter()
        .map(|p| RelevanceMatrix::load(p).with_context(|| format!("loading {}", p.display())))
        .collect()
}

fn evaluate(a: EvaluateArgs) -> anyhow::Result<()> {
    let model = load_model(&a.checkpoint)?;
    let ds = load_dataset(&a.data)?;
    let rels = load_relevance(&a.relevance)?;
    let report = evaluate_split(&model, &ds, a.split, &a.files.inputs()?, &rels, !a.no_lexical)?;
    print!("{}", report.to_table());
    if let Some(p) = &a.json {
        write_json(p, &report)?;
    }
    Ok(())
}

fn sweep(a: SweepArgs) -> anyhow::Result<()> {
    let mut cfg = load_config(a.config.as_deref())?;
    if let Some(s) = a.steps {
        cfg.steps = s;
        cfg.epochs = None;
    }
    let ds = load_dataset(&a.data)?;
    let inputs = cfg.text_inputs()?;
    let rels = load_relevance(&a.relevance)?;
    let grid = SweepGrid {
        d_common: a.d_common,
        losses: a.losses,
        encoders: a.encoders,
    };
    let result = run_sweep(&cfg, &grid, &ds, &inputs, a.eval_split, &rels, |c| {
        eprintln!(
            "{:?} {:?} d={}: loss {:.4} -> {:.4}, r@1 {:.1}",
            c.encoder,
            c.loss,
            c.d_common,
            c.initial_loss,
            c.final_loss,
            c.report.recall_at(1).unwrap_or(f64::NAN)
        );
    })?;
    print!("{}", result.to_table());
    if let Some(p) = &a.csv {
        std::fs::write(p, result.to_delimited(',')).with_context(|| format!("writing {}", p.display()))?;
    }
    if let Some(p) = &a.json {
        write_json(p, &result)?;
    }
    Ok(())
}
