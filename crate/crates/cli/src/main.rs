//! Command-line front end: train embeddings, craft poisoning perturbations,
//! apply them, evaluate, or run the whole experiment in one go.

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use kgpoison::graph::{load_triples, load_triples_with_vocab, write_triples, TripleFormat};
use kgpoison::pipeline::{
    self, apply_perturbations, generate_log, run_pipeline, run_sweep, sample_targets,
    write_checkpoint_with_meta, ConfigOverlay, ExperimentConfig, TargetLog,
};
use kgpoison::scoring::EmbeddingStore;
use kgpoison::synth::{generate, SynthConfig};
use kgpoison::train::train_parallel;
use kgpoison::{aggregate_side, rank_targets};
use std::fs;
use std::path::PathBuf;

#[derive(Parser)]
#[command(
    name = "kgpoison",
    about = "Knowledge-graph embedding training and data-poisoning experiments",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a model and write a checkpoint
    Train(TrainArgs),
    /// Generate perturbations against a trained checkpoint
    Attack(AttackArgs),
    /// Apply a perturbation log to a training file
    Poison(PoisonArgs),
    /// Evaluate a checkpoint on sampled targets
    Eval(EvalArgs),
    /// Full experiment: train, attack, poison, retrain, evaluate
    Pipeline(PipelineArgs),
    /// Pipeline repeated over a list of budgets, sharing the clean model
    Sweep(SweepArgs),
    /// Generate a synthetic benchmark-shaped dataset
    Synth(SynthArgs),
}

/// Flags shared by every stage that reads an experiment configuration.
/// Each one mirrors a config-file key; flags win over the file.
#[derive(Args, Clone, Default)]
struct CommonFlags {
    /// Key-value config file with data/model/train/attack/run sections
    #[arg(long)]
    config: Option<PathBuf>,
    /// Training triples file
    #[arg(long)]
    dataset: Option<PathBuf>,
    /// Test triples file (target pool)
    #[arg(long)]
    test: Option<PathBuf>,
    /// Triple file layout: name-tsv | id-tsv
    #[arg(long)]
    format: Option<String>,
    /// Model kind: transe | transr | rescal
    #[arg(long)]
    model: Option<String>,
    /// Embedding dimension
    #[arg(long)]
    dim: Option<usize>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    learning_rate: Option<f64>,
    #[arg(long)]
    margin: Option<f64>,
    /// Negative samples per positive
    #[arg(long)]
    negatives: Option<usize>,
    /// Project entity vectors onto the unit ball after each epoch
    #[arg(long)]
    normalize: Option<bool>,
    /// Attack strategy: direct-add | direct-delete | indirect-add |
    /// indirect-delete | random-da | random-dd | random-ia | random-id
    #[arg(long)]
    strategy: Option<String>,
    /// Perturbation budget M per target
    #[arg(long)]
    budget: Option<usize>,
    /// Attacked side of the target triple: head | tail
    #[arg(long)]
    side: Option<String>,
    /// Desired-shift step size
    #[arg(long)]
    eps_h: Option<f64>,
    #[arg(long)]
    lambda1: Option<f64>,
    #[arg(long)]
    lambda2: Option<f64>,
    /// Path-penalty weight for indirect scoring
    #[arg(long)]
    lambda: Option<f64>,
    /// Hop count K for indirect attacks
    #[arg(long)]
    k_hops: Option<usize>,
    /// Paths kept after penalty pre-selection (P)
    #[arg(long)]
    paths: Option<usize>,
    /// Add-candidate downsample size (0 = exhaustive)
    #[arg(long)]
    sample: Option<usize>,
    /// Targets to sample from the test set
    #[arg(long)]
    num_targets: Option<usize>,
    /// Global seed; train/attack streams derive from it unless set
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; 1 = deterministic
    #[arg(long)]
    threads: Option<usize>,
    /// Output directory
    #[arg(long)]
    out: Option<PathBuf>,
    /// Retrain once per target instead of once per strategy
    #[arg(long)]
    per_target_retrain: bool,
    /// Rank only one replacement side: head | tail
    #[arg(long)]
    side_only: Option<String>,
}

impl CommonFlags {
    fn resolve(&self) -> Result<ExperimentConfig> {
        self.resolve_over(ConfigOverlay::default())
    }

    /// Layering: built-in defaults under `base`, then the config file, then
    /// the flags.
    fn resolve_over(&self, base: ConfigOverlay) -> Result<ExperimentConfig> {
        let mut layers = vec![base];
        if let Some(path) = &self.config {
            let text = fs::read_to_string(path)
                .with_context(|| format!("reading config {}", path.display()))?;
            layers.push(ConfigOverlay::parse(&text)?);
        }
        let mut flags = ConfigOverlay::default();
        fn opt_set(flags: &mut ConfigOverlay, sec: &str, key: &str, val: Option<String>) {
            if let Some(v) = val {
                flags.set(sec, key, v);
            }
        }
        let mut set =
            |sec: &str, key: &str, val: Option<String>| opt_set(&mut flags, sec, key, val);
        set(
            "data",
            "train",
            self.dataset.as_ref().map(|p| p.display().to_string()),
        );
        set(
            "data",
            "test",
            self.test.as_ref().map(|p| p.display().to_string()),
        );
        set("data", "format", self.format.clone());
        set("model", "kind", self.model.clone());
        set("model", "dim", self.dim.map(|v| v.to_string()));
        set("train", "epochs", self.epochs.map(|v| v.to_string()));
        set(
            "train",
            "batch_size",
            self.batch_size.map(|v| v.to_string()),
        );
        set(
            "train",
            "learning_rate",
            self.learning_rate.map(|v| v.to_string()),
        );
        set("train", "margin", self.margin.map(|v| v.to_string()));
        set("train", "negatives", self.negatives.map(|v| v.to_string()));
        set("train", "normalize", self.normalize.map(|v| v.to_string()));
        set("attack", "strategy", self.strategy.clone());
        set("attack", "budget", self.budget.map(|v| v.to_string()));
        set("attack", "side", self.side.clone());
        set("attack", "eps_h", self.eps_h.map(|v| v.to_string()));
        set("attack", "lambda1", self.lambda1.map(|v| v.to_string()));
        set("attack", "lambda2", self.lambda2.map(|v| v.to_string()));
        set("attack", "lambda", self.lambda.map(|v| v.to_string()));
        set("attack", "k_hops", self.k_hops.map(|v| v.to_string()));
        set("attack", "paths", self.paths.map(|v| v.to_string()));
        set("attack", "sample", self.sample.map(|v| v.to_string()));
        set(
            "run",
            "num_targets",
            self.num_targets.map(|v| v.to_string()),
        );
        set("run", "seed", self.seed.map(|v| v.to_string()));
        set("run", "threads", self.threads.map(|v| v.to_string()));
        set(
            "run",
            "out",
            self.out.as_ref().map(|p| p.display().to_string()),
        );
        set(
            "run",
            "per_target_retrain",
            self.per_target_retrain.then(|| "true".to_string()),
        );
        set("run", "side_only", self.side_only.clone());
        layers.push(flags);
        Ok(ExperimentConfig::from_layers(&layers)?)
    }
}

#[derive(Args)]
struct TrainArgs {
    #[command(flatten)]
    common: CommonFlags,
    /// Checkpoint path to write (default `out`/clean.kgeb)
    #[arg(long)]
    checkpoint: Option<PathBuf>,
}

#[derive(Args)]
struct AttackArgs {
    #[command(flatten)]
    common: CommonFlags,
    /// Trained checkpoint of the clean model
    #[arg(long)]
    checkpoint: PathBuf,
}

#[derive(Args)]
struct PoisonArgs {
    /// Training triples file
    #[arg(long)]
    dataset: PathBuf,
    /// Triple file layout: name-tsv | id-tsv
    #[arg(long, default_value = "name-tsv")]
    format: String,
    /// Perturbation log produced by `attack` or `pipeline`
    #[arg(long)]
    perturbations: PathBuf,
    /// Poisoned training file to write
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EvalArgs {
    #[command(flatten)]
    common: CommonFlags,
    /// Checkpoint to evaluate
    #[arg(long)]
    checkpoint: PathBuf,
    /// Report path (default `out`/eval.json)
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args)]
struct PipelineArgs {
    #[command(flatten)]
    common: CommonFlags,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    common: CommonFlags,
    /// Comma-separated budget list, e.g. 1,2,4,6
    #[arg(long, value_delimiter = ',')]
    budgets: Vec<usize>,
}

#[derive(Args)]
struct SynthArgs {
    /// Directory for train.tsv / test.tsv
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 600)]
    entities: usize,
    #[arg(long, default_value_t = 18)]
    relations: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Mean out-degree of the generated graph
    #[arg(long, default_value_t = 3.0)]
    degree: f64,
    /// Fraction of uniformly random noise facts
    #[arg(long, default_value_t = 0.05)]
    noise: f64,
    /// Probability that a slot co-emits its twin fact into training
    #[arg(long, default_value_t = 0.45)]
    co_pair: f64,
    /// Probability that a slot holds its twin out as a test fact
    #[arg(long, default_value_t = 0.25)]
    test_fraction: f64,
    /// Fraction of the test set drawn as unsupported random facts
    #[arg(long, default_value_t = 0.2)]
    unsupported: f64,
    /// Triple file layout: name-tsv | id-tsv
    #[arg(long, default_value = "name-tsv")]
    format: String,
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Train(args) => cmd_train(args),
        Command::Attack(args) => cmd_attack(args),
        Command::Poison(args) => cmd_poison(args),
        Command::Eval(args) => cmd_eval(args),
        Command::Pipeline(args) => cmd_pipeline(args),
        Command::Sweep(args) => cmd_sweep(args),
        Command::Synth(args) => cmd_synth(args),
    }
}

fn cmd_train(args: TrainArgs) -> Result<()> {
    let mut common = args.common.clone();
    // the target pool is not needed to train; reuse the train file
    if common.test.is_none() {
        common.test = common.dataset.clone();
    }
    // per-epoch loss lines on stderr unless the config turns them off
    let mut base = ConfigOverlay::default();
    base.set("train", "log", "true");
    let cfg = common.resolve_over(base)?;
    let (_, store, report) = load_triples(&cfg.train_path, cfg.format)?;
    if report.duplicates > 0 {
        eprintln!("note: dropped {} duplicate triples", report.duplicates);
    }
    let emb = train_parallel(&store, cfg.model, &cfg.train, cfg.threads)?;
    let path = args
        .checkpoint
        .unwrap_or_else(|| cfg.out_dir.join("clean.kgeb"));
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    write_checkpoint_with_meta(&emb, &store, &cfg.train, &path)?;
    println!("wrote checkpoint {}", path.display());
    Ok(())
}

fn cmd_attack(args: AttackArgs) -> Result<()> {
    let cfg = args.common.resolve()?;
    let (vocab, store, _) = load_triples(&cfg.train_path, cfg.format)?;
    let (test, skipped) = load_triples_with_vocab(&cfg.test_path, cfg.format, &vocab, true)?;
    if skipped.skipped_unknown > 0 {
        eprintln!(
            "warning: skipped {} test lines outside the training vocabulary",
            skipped.skipped_unknown
        );
    }
    let emb = EmbeddingStore::load(&args.checkpoint)?;
    if emb.num_entities() != store.num_entities() {
        bail!(
            "checkpoint has {} entities but the dataset has {}",
            emb.num_entities(),
            store.num_entities()
        );
    }
    let targets = sample_targets(&test, &store, cfg.num_targets, cfg.seed)?;
    let (log, outcomes, timing) = generate_log(&store, &emb, &targets, &cfg)?;
    fs::create_dir_all(&cfg.out_dir)?;
    let path = cfg.out_dir.join("perturbations.json");
    fs::write(&path, serde_json::to_vec_pretty(&log)?)?;
    let aborted = outcomes.iter().filter(|o| !o.attacked).count();
    println!(
        "wrote {} ({} targets, {} aborted, {:.4} s/target)",
        path.display(),
        outcomes.len(),
        aborted,
        timing.mean_seconds_per_target
    );
    Ok(())
}

fn cmd_poison(args: PoisonArgs) -> Result<()> {
    let format: TripleFormat = args.format.parse().map_err(anyhow::Error::msg)?;
    let (vocab, store, _) = load_triples(&args.dataset, format)?;
    let text = fs::read_to_string(&args.perturbations)?;
    let log: Vec<TargetLog> = serde_json::from_str(&text)?;
    let (batch, dropped) = pipeline::reconcile(&log);
    let poisoned = apply_perturbations(&store, &batch)?;
    if let Some(parent) = args.out.parent() {
        fs::create_dir_all(parent)?;
    }
    write_triples(&args.out, format, &vocab, &poisoned)?;
    println!(
        "applied {} edits ({} dropped as duplicates/conflicts): {} -> {} triples",
        batch.len(),
        dropped,
        store.len(),
        poisoned.len()
    );
    Ok(())
}

fn cmd_eval(args: EvalArgs) -> Result<()> {
    let cfg = args.common.resolve()?;
    let (vocab, store, _) = load_triples(&cfg.train_path, cfg.format)?;
    let (test, _) = load_triples_with_vocab(&cfg.test_path, cfg.format, &vocab, true)?;
    let emb = EmbeddingStore::load(&args.checkpoint)?;
    let targets = sample_targets(&test, &store, cfg.num_targets, cfg.seed)?;
    let ranks = rank_targets(&emb, &targets, cfg.threads > 1);
    let report = aggregate_side(&ranks, cfg.eval_side_only)?;
    let path = args.report.unwrap_or_else(|| cfg.out_dir.join("eval.json"));
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    fs::write(&path, serde_json::to_vec_pretty(&report)?)?;
    println!(
        "mrr {:.4}, hits@10 {:.4} over {} targets -> {}",
        report.mrr,
        report.hits_at_10,
        targets.len(),
        path.display()
    );
    Ok(())
}

fn cmd_pipeline(args: PipelineArgs) -> Result<()> {
    let cfg = args.common.resolve()?;
    let out = run_pipeline(&cfg)?;
    let r = &out.report;
    println!(
        "{} / {} / budget {}: clean mrr {:.4} h@10 {:.4} -> poisoned mrr {:.4} h@10 {:.4} ({} edits, reports in {})",
        r.meta.dataset,
        r.meta.strategy.name(),
        r.meta.budget,
        r.clean.mrr,
        r.clean.hits_at_10,
        r.poisoned.mrr,
        r.poisoned.hits_at_10,
        r.perturbations_applied,
        cfg.out_dir.display()
    );
    Ok(())
}

fn cmd_sweep(args: SweepArgs) -> Result<()> {
    if args.budgets.is_empty() {
        bail!("--budgets needs at least one value");
    }
    let cfg = args.common.resolve()?;
    let outs = run_sweep(&cfg, &args.budgets)?;
    for out in &outs {
        let r = &out.report;
        println!(
            "budget {}: clean mrr {:.4} -> poisoned mrr {:.4}",
            r.meta.budget, r.clean.mrr, r.poisoned.mrr
        );
    }
    println!(
        "summary rows in {}",
        cfg.out_dir.join("summary.csv").display()
    );
    Ok(())
}

fn cmd_synth(args: SynthArgs) -> Result<()> {
    let format: TripleFormat = args.format.parse().map_err(anyhow::Error::msg)?;
    let ds = generate(&SynthConfig {
        num_entities: args.entities,
        num_relations: args.relations,
        seed: args.seed,
        mean_out_degree: args.degree,
        noise_fraction: args.noise,
        co_pair_fraction: args.co_pair,
        test_fraction: args.test_fraction,
        unsupported_test_fraction: args.unsupported,
    });
    fs::create_dir_all(&args.out)?;
    let train_path = args.out.join("train.tsv");
    let test_path = args.out.join("test.tsv");
    write_triples(&train_path, format, &ds.vocab, &ds.train)?;
    write_triples(&test_path, format, &ds.vocab, &ds.test)?;
    println!(
        "wrote {} ({} triples) and {} ({} triples), {} entities, {} relations",
        train_path.display(),
        ds.train.len(),
        test_path.display(),
        ds.test.len(),
        args.entities,
        args.relations
    );
    Ok(())
}
