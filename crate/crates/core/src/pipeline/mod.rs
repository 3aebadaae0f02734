//! End-to-end experiment orchestration: ingest, target sampling, clean
//! training, per-target attack generation, poisoning, retraining from
//! scratch, evaluation, and report emission.
//!
//! One strategy run retrains once on the union of all targets'
//! perturbations (the reported default); `per_target_retrain` instead
//! retrains per target on just that target's edits, which is what the
//! brute-force oracle checks use.

mod config;

pub use config::{ConfigError, ConfigOverlay, ExperimentConfig};

use crate::attack::{
    direct_attack, indirect_attack, AttackError, PerturbAction, Perturbation, Side,
};
use crate::baselines::{random_direct, random_indirect};
use crate::eval::{aggregate_side, rank_target, rank_targets, EvalError, EvalReport};
use crate::graph::{
    load_triples, load_triples_with_vocab, write_triples, GraphError, Triple, TripleStore,
    Vocabulary,
};
use crate::scoring::{CheckpointError, EmbeddingStore, ModelKind, ScoringError};
use crate::seeds;
use crate::train::{train, train_parallel, TrainConfig, TrainError};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::fs;
use std::io::Write;
use std::path::Path;
use std::time::Instant;
use thiserror::Error;

/// The four informed strategies and their four random baselines.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Strategy {
    DirectAdd,
    DirectDelete,
    IndirectAdd,
    IndirectDelete,
    RandomDa,
    RandomDd,
    RandomIa,
    RandomId,
}

impl Strategy {
    pub const ALL: [Strategy; 8] = [
        Strategy::DirectAdd,
        Strategy::DirectDelete,
        Strategy::IndirectAdd,
        Strategy::IndirectDelete,
        Strategy::RandomDa,
        Strategy::RandomDd,
        Strategy::RandomIa,
        Strategy::RandomId,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Strategy::DirectAdd => "direct-add",
            Strategy::DirectDelete => "direct-delete",
            Strategy::IndirectAdd => "indirect-add",
            Strategy::IndirectDelete => "indirect-delete",
            Strategy::RandomDa => "random-da",
            Strategy::RandomDd => "random-dd",
            Strategy::RandomIa => "random-ia",
            Strategy::RandomId => "random-id",
        }
    }

    pub fn mode(self) -> PerturbAction {
        match self {
            Strategy::DirectAdd
            | Strategy::IndirectAdd
            | Strategy::RandomDa
            | Strategy::RandomIa => PerturbAction::Add,
            _ => PerturbAction::Delete,
        }
    }

    pub fn is_indirect(self) -> bool {
        matches!(
            self,
            Strategy::IndirectAdd
                | Strategy::IndirectDelete
                | Strategy::RandomIa
                | Strategy::RandomId
        )
    }

    /// The uninformed counterpart used for comparisons.
    pub fn baseline(self) -> Strategy {
        match self {
            Strategy::DirectAdd => Strategy::RandomDa,
            Strategy::DirectDelete => Strategy::RandomDd,
            Strategy::IndirectAdd => Strategy::RandomIa,
            Strategy::IndirectDelete => Strategy::RandomId,
            other => other,
        }
    }
}

impl std::str::FromStr for Strategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Strategy::ALL
            .iter()
            .copied()
            .find(|st| st.name() == s)
            .ok_or_else(|| format!("unknown strategy `{s}`"))
    }
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("insufficient eligible targets: wanted {wanted}, available {available}")]
    InsufficientEligibleTargets { wanted: usize, available: usize },
    #[error("conflicting perturbation: {0}")]
    ConflictingPerturbation(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Train(#[from] TrainError),
    #[error(transparent)]
    Attack(#[from] AttackError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Checkpoint(#[from] CheckpointError),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// Uniform sample of test triples usable as attack targets: present in the
/// test store, absent from the training store.
pub fn sample_targets(
    test: &TripleStore,
    train_store: &TripleStore,
    n: usize,
    seed: u64,
) -> Result<Vec<Triple>, PipelineError> {
    let eligible: Vec<Triple> = test
        .triples()
        .iter()
        .copied()
        .filter(|t| !train_store.contains(t))
        .collect();
    if eligible.len() < n {
        return Err(PipelineError::InsufficientEligibleTargets {
            wanted: n,
            available: eligible.len(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seeds::mix2(seed, 0x7A26));
    Ok(rand::seq::index::sample(&mut rng, eligible.len(), n)
        .into_iter()
        .map(|i| eligible[i])
        .collect())
}

/// Apply a batch of edits to a store, returning the poisoned copy.
///
/// Every triple may be touched at most once per batch; deletes must hit
/// members and adds must hit non-members, otherwise the batch is rejected.
pub fn apply_perturbations(
    store: &TripleStore,
    perts: &[Perturbation],
) -> Result<TripleStore, PipelineError> {
    let mut touched = std::collections::HashSet::new();
    let mut deletes = std::collections::HashSet::new();
    let mut adds = Vec::new();
    for p in perts {
        if !touched.insert(p.triple) {
            return Err(PipelineError::ConflictingPerturbation(format!(
                "triple {:?} edited twice in one batch",
                p.triple
            )));
        }
        match p.action {
            PerturbAction::Delete => {
                if !store.contains(&p.triple) {
                    return Err(PipelineError::ConflictingPerturbation(format!(
                        "delete of absent triple {:?}",
                        p.triple
                    )));
                }
                deletes.insert(p.triple);
            }
            PerturbAction::Add => {
                if store.contains(&p.triple) {
                    return Err(PipelineError::ConflictingPerturbation(format!(
                        "add of existing triple {:?}",
                        p.triple
                    )));
                }
                adds.push(p.triple);
            }
        }
    }
    let kept = store
        .triples()
        .iter()
        .copied()
        .filter(|t| !deletes.contains(t))
        .chain(adds);
    let (poisoned, dups) =
        TripleStore::from_triples(store.num_entities(), store.num_relations(), kept);
    debug_assert_eq!(dups, 0);
    Ok(poisoned)
}

/// One perturbation as written to `perturbations.json`; indirect runs carry
/// the path diagnostics.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PerturbationRecord {
    pub action: PerturbAction,
    pub head: usize,
    pub relation: usize,
    pub tail: usize,
    pub benefit: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub psi: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub penalty: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub proxy: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub path: Option<Vec<usize>>,
}

impl PerturbationRecord {
    fn from_plain(p: &Perturbation) -> Self {
        Self {
            action: p.action,
            head: p.triple.head,
            relation: p.triple.relation,
            tail: p.triple.tail,
            benefit: p.benefit,
            psi: None,
            eta: None,
            penalty: None,
            proxy: None,
            path: None,
        }
    }

    fn perturbation(&self) -> Perturbation {
        Perturbation {
            action: self.action,
            triple: Triple::new(self.head, self.relation, self.tail),
            benefit: self.benefit,
        }
    }
}

/// Per-target slice of the perturbation log.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TargetLog {
    pub target: Triple,
    pub strategy: Strategy,
    pub perturbations: Vec<PerturbationRecord>,
}

/// How a target fared during attack generation.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TargetOutcome {
    pub target: Triple,
    pub attacked: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub abort_reason: Option<String>,
    pub perturbations: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct TimingSummary {
    pub strategy: Strategy,
    pub targets: usize,
    pub mean_seconds_per_target: f64,
    pub total_seconds: f64,
}

/// Run metadata echoed into `report.json`; deliberately free of wall-clock
/// data so identical runs produce identical bytes.
#[derive(Debug, Clone, Serialize)]
pub struct RunMeta {
    pub dataset: String,
    pub dataset_hash: String,
    pub model: ModelKind,
    pub strategy: Strategy,
    pub budget: usize,
    pub num_targets: usize,
    pub seed: u64,
    pub train_seed: u64,
    pub attack_seed: u64,
    pub threads: usize,
    /// `per-strategy` (one retraining on the merged edits) or `per-target`.
    pub retrain_mode: &'static str,
    pub eval_side: &'static str,
    pub skipped_test_lines: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct PipelineReport {
    pub meta: RunMeta,
    pub clean: EvalReport,
    pub poisoned: EvalReport,
    pub targets: Vec<TargetOutcome>,
    pub perturbations_applied: usize,
    pub perturbations_dropped: usize,
}

#[derive(Debug)]
pub struct PipelineOutput {
    pub report: PipelineReport,
    pub log: Vec<TargetLog>,
    pub timing: TimingSummary,
    /// Poisoned training set and the model retrained on it; absent in
    /// per-target mode, which trains one model per target.
    pub poisoned: Option<(TripleStore, EmbeddingStore)>,
}

impl PipelineOutput {
    /// Mean wall-clock seconds spent generating perturbations per target,
    /// training excluded.
    pub fn report_timing(&self) -> &TimingSummary {
        &self.timing
    }
}

/// Loaded data plus the clean model, reusable across strategies/budgets.
pub struct Workbench {
    pub vocab: Vocabulary,
    pub train_store: TripleStore,
    pub test_store: TripleStore,
    pub targets: Vec<Triple>,
    pub clean_emb: EmbeddingStore,
    pub clean_report: EvalReport,
    pub skipped_test_lines: usize,
    dataset_name: String,
}

impl Workbench {
    /// Load the datasets named by the config, sample targets, train the
    /// clean model, and evaluate it.
    pub fn prepare(cfg: &ExperimentConfig) -> Result<Self, PipelineError> {
        let (vocab, train_store, _) = load_triples(&cfg.train_path, cfg.format)?;
        let (test_store, test_report) =
            load_triples_with_vocab(&cfg.test_path, cfg.format, &vocab, true)?;
        if test_report.skipped_unknown > 0 {
            eprintln!(
                "warning: skipped {} test lines outside the training vocabulary",
                test_report.skipped_unknown
            );
        }
        let dataset_name = cfg
            .train_path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "dataset".to_string());
        Self::from_parts(
            cfg,
            vocab,
            train_store,
            test_store,
            test_report.skipped_unknown,
            dataset_name,
        )
    }

    /// Same as [`Workbench::prepare`] but with the stores already in memory.
    pub fn from_parts(
        cfg: &ExperimentConfig,
        vocab: Vocabulary,
        train_store: TripleStore,
        test_store: TripleStore,
        skipped_test_lines: usize,
        dataset_name: String,
    ) -> Result<Self, PipelineError> {
        let targets = sample_targets(&test_store, &train_store, cfg.num_targets, cfg.seed)?;
        let clean_emb = fit(&train_store, cfg)?;
        let clean_report = evaluate(&clean_emb, &targets, cfg)?;
        Ok(Self {
            vocab,
            train_store,
            test_store,
            targets,
            clean_emb,
            clean_report,
            skipped_test_lines,
            dataset_name,
        })
    }

    /// Generate perturbations for every target under the configured
    /// strategy, poison, retrain, evaluate.
    pub fn run_strategy(&self, cfg: &ExperimentConfig) -> Result<PipelineOutput, PipelineError> {
        let (log, outcomes, timing) =
            generate_log(&self.train_store, &self.clean_emb, &self.targets, cfg)?;

        let (poisoned_report, applied, dropped, poisoned) = if cfg.per_target_retrain {
            let (report, applied, dropped) = self.per_target_retrain_eval(cfg, &log)?;
            (report, applied, dropped, None)
        } else {
            let (batch, dropped) = reconcile(&log);
            let poisoned_store = apply_perturbations(&self.train_store, &batch)?;
            let poisoned_emb = fit(&poisoned_store, cfg)?;
            let report = evaluate(&poisoned_emb, &self.targets, cfg)?;
            (
                report,
                batch.len(),
                dropped,
                Some((poisoned_store, poisoned_emb)),
            )
        };

        let report = PipelineReport {
            meta: RunMeta {
                dataset: self.dataset_name.clone(),
                dataset_hash: format!("{:016x}", self.train_store.content_hash()),
                model: cfg.model,
                strategy: cfg.strategy,
                budget: budget_of(cfg),
                num_targets: self.targets.len(),
                seed: cfg.seed,
                train_seed: cfg.train.seed,
                attack_seed: cfg.attack.rng_seed,
                threads: cfg.threads,
                retrain_mode: if cfg.per_target_retrain {
                    "per-target"
                } else {
                    "per-strategy"
                },
                eval_side: match cfg.eval_side_only {
                    None => "both",
                    Some(Side::Head) => "head",
                    Some(Side::Tail) => "tail",
                },
                skipped_test_lines: self.skipped_test_lines,
            },
            clean: self.clean_report.clone(),
            poisoned: poisoned_report,
            targets: outcomes,
            perturbations_applied: applied,
            perturbations_dropped: dropped,
        };
        Ok(PipelineOutput {
            report,
            log,
            timing,
            poisoned,
        })
    }

    /// Oracle mode: each target's edits are applied alone, the model is
    /// retrained, and only that target is re-ranked.
    fn per_target_retrain_eval(
        &self,
        cfg: &ExperimentConfig,
        log: &[TargetLog],
    ) -> Result<(EvalReport, usize, usize), PipelineError> {
        let mut ranks = Vec::with_capacity(log.len());
        let mut applied = 0usize;
        for entry in log {
            let batch: Vec<Perturbation> = entry
                .perturbations
                .iter()
                .map(|r| r.perturbation())
                .collect();
            applied += batch.len();
            let store = apply_perturbations(&self.train_store, &batch)?;
            let emb = fit(&store, cfg)?;
            ranks.push(rank_target(&emb, entry.target));
        }
        let report = aggregate_side(&ranks, cfg.eval_side_only)?;
        Ok((report, applied, 0))
    }
}

fn budget_of(cfg: &ExperimentConfig) -> usize {
    if cfg.strategy.is_indirect() {
        cfg.indirect.budget_m
    } else {
        cfg.attack.budget_m
    }
}

fn is_abort(e: &AttackError) -> bool {
    matches!(
        e,
        AttackError::NoCandidates
            | AttackError::NoPaths(_)
            | AttackError::ZeroGradient
            | AttackError::Scoring(ScoringError::ZeroResidual)
    )
}

/// Generate the per-target perturbation log for one strategy against a
/// frozen embedding snapshot. Targets whose attack aborts (zero residual,
/// no candidates, no paths) come back flagged with an empty edit list.
pub fn generate_log(
    store: &TripleStore,
    emb: &EmbeddingStore,
    targets: &[Triple],
    cfg: &ExperimentConfig,
) -> Result<(Vec<TargetLog>, Vec<TargetOutcome>, TimingSummary), PipelineError> {
    let started = Instant::now();
    let attack_one = |&target: &Triple| -> Result<(TargetLog, TargetOutcome, f64), PipelineError> {
        let t0 = Instant::now();
        let generated = generate_for_target(store, emb, target, cfg);
        let seconds = t0.elapsed().as_secs_f64();
        match generated {
            Ok(records) => {
                let n = records.len();
                Ok((
                    TargetLog {
                        target,
                        strategy: cfg.strategy,
                        perturbations: records,
                    },
                    TargetOutcome {
                        target,
                        attacked: true,
                        abort_reason: None,
                        perturbations: n,
                    },
                    seconds,
                ))
            }
            // a target the strategy cannot touch is evaluated unattacked
            Err(e) if is_abort(&e) => Ok((
                TargetLog {
                    target,
                    strategy: cfg.strategy,
                    perturbations: Vec::new(),
                },
                TargetOutcome {
                    target,
                    attacked: false,
                    abort_reason: Some(e.to_string()),
                    perturbations: 0,
                },
                seconds,
            )),
            Err(e) => Err(e.into()),
        }
    };
    let results: Vec<(TargetLog, TargetOutcome, f64)> = if cfg.threads > 1 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.threads)
            .build()
            .expect("thread pool");
        pool.install(|| {
            targets
                .par_iter()
                .map(attack_one)
                .collect::<Result<Vec<_>, PipelineError>>()
        })?
    } else {
        targets
            .iter()
            .map(attack_one)
            .collect::<Result<Vec<_>, PipelineError>>()?
    };
    let total_gen: f64 = results.iter().map(|(_, _, s)| s).sum();
    let mut log = Vec::with_capacity(results.len());
    let mut outcomes = Vec::with_capacity(results.len());
    for (l, o, _) in results {
        log.push(l);
        outcomes.push(o);
    }
    let timing = TimingSummary {
        strategy: cfg.strategy,
        targets: targets.len(),
        mean_seconds_per_target: total_gen / targets.len().max(1) as f64,
        total_seconds: started.elapsed().as_secs_f64(),
    };
    Ok((log, outcomes, timing))
}

fn generate_for_target(
    store: &TripleStore,
    emb: &EmbeddingStore,
    target: Triple,
    cfg: &ExperimentConfig,
) -> Result<Vec<PerturbationRecord>, AttackError> {
    let side = cfg.attack.target_side;
    match cfg.strategy {
        Strategy::DirectAdd | Strategy::DirectDelete => {
            let perts = direct_attack(store, emb, target, &cfg.attack, cfg.strategy.mode())?;
            Ok(perts.iter().map(PerturbationRecord::from_plain).collect())
        }
        Strategy::IndirectAdd | Strategy::IndirectDelete => {
            let perts = indirect_attack(store, emb, target, &cfg.indirect, cfg.strategy.mode())?;
            Ok(perts
                .iter()
                .map(|p| PerturbationRecord {
                    action: p.action,
                    head: p.triple.head,
                    relation: p.triple.relation,
                    tail: p.triple.tail,
                    benefit: p.psi,
                    psi: Some(p.psi),
                    eta: Some(p.eta),
                    penalty: Some(p.penalty),
                    proxy: Some(p.proxy),
                    path: Some(p.path.clone()),
                })
                .collect())
        }
        Strategy::RandomDa | Strategy::RandomDd => {
            let perts = random_direct(
                store,
                target,
                side,
                cfg.attack.budget_m,
                cfg.strategy.mode(),
                cfg.attack.rng_seed,
            )?;
            Ok(perts.iter().map(PerturbationRecord::from_plain).collect())
        }
        Strategy::RandomIa | Strategy::RandomId => {
            let perts = random_indirect(
                store,
                target,
                side,
                cfg.indirect.k_hops,
                cfg.indirect.budget_m,
                cfg.strategy.mode(),
                cfg.attack.rng_seed,
            )?;
            Ok(perts.iter().map(PerturbationRecord::from_plain).collect())
        }
    }
}

/// Merge all targets' edits into one batch. The first edit of a triple
/// wins; duplicates and opposite-action conflicts are dropped and counted.
pub fn reconcile(log: &[TargetLog]) -> (Vec<Perturbation>, usize) {
    let mut first: HashMap<Triple, PerturbAction> = HashMap::new();
    let mut batch = Vec::new();
    let mut dropped = 0usize;
    for entry in log {
        for rec in &entry.perturbations {
            let p = rec.perturbation();
            match first.get(&p.triple) {
                None => {
                    first.insert(p.triple, p.action);
                    batch.push(p);
                }
                Some(_) => dropped += 1,
            }
        }
    }
    (batch, dropped)
}

fn fit(store: &TripleStore, cfg: &ExperimentConfig) -> Result<EmbeddingStore, PipelineError> {
    let emb = if cfg.threads > 1 {
        train_parallel(store, cfg.model, &cfg.train, cfg.threads)?
    } else {
        train(store, cfg.model, &cfg.train)?
    };
    Ok(emb)
}

fn evaluate(
    emb: &EmbeddingStore,
    targets: &[Triple],
    cfg: &ExperimentConfig,
) -> Result<EvalReport, PipelineError> {
    let ranks = rank_targets(emb, targets, cfg.threads > 1);
    Ok(aggregate_side(&ranks, cfg.eval_side_only)?)
}

/// Sidecar written next to each checkpoint.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CheckpointMeta {
    pub model: ModelKind,
    pub dataset_hash: String,
    pub seed: u64,
    pub train: TrainConfig,
}

pub fn write_checkpoint_with_meta(
    emb: &EmbeddingStore,
    store: &TripleStore,
    train_cfg: &TrainConfig,
    path: &Path,
) -> Result<(), PipelineError> {
    emb.save(path)?;
    let meta = CheckpointMeta {
        model: emb.model(),
        dataset_hash: format!("{:016x}", store.content_hash()),
        seed: train_cfg.seed,
        train: train_cfg.clone(),
    };
    let mut sidecar = path.as_os_str().to_owned();
    sidecar.push(".json");
    fs::write(sidecar, serde_json::to_vec_pretty(&meta)?)?;
    Ok(())
}

/// Full single-strategy pipeline: prepare, attack, poison, retrain,
/// evaluate, and write every artifact into the config's output directory.
pub fn run_pipeline(cfg: &ExperimentConfig) -> Result<PipelineOutput, PipelineError> {
    let bench = Workbench::prepare(cfg)?;
    let out = bench.run_strategy(cfg)?;
    write_outputs(cfg, &bench, std::slice::from_ref(&out), "")?;
    Ok(out)
}

/// Budget sweep sharing one clean training run; each budget gets its own
/// report and one row in the shared summary/timing CSVs.
pub fn run_sweep(
    cfg: &ExperimentConfig,
    budgets: &[usize],
) -> Result<Vec<PipelineOutput>, PipelineError> {
    let bench = Workbench::prepare(cfg)?;
    let mut outs = Vec::with_capacity(budgets.len());
    for &m in budgets {
        let mut c = cfg.clone();
        c.attack.budget_m = m;
        c.indirect.budget_m = m;
        outs.push(bench.run_strategy(&c)?);
    }
    write_outputs(cfg, &bench, &outs, "sweep")?;
    Ok(outs)
}

fn write_outputs(
    cfg: &ExperimentConfig,
    bench: &Workbench,
    outs: &[PipelineOutput],
    tag: &str,
) -> Result<(), PipelineError> {
    fs::create_dir_all(&cfg.out_dir)?;
    let dir = &cfg.out_dir;

    write_checkpoint_with_meta(
        &bench.clean_emb,
        &bench.train_store,
        &cfg.train,
        &dir.join("clean.kgeb"),
    )?;

    let mut summary = String::from(
        "dataset,model,strategy,budget,clean_mrr,poisoned_mrr,clean_h10,poisoned_h10\n",
    );
    let mut timing =
        String::from("strategy,budget,targets,mean_seconds_per_target,total_seconds\n");

    for out in outs {
        let budget = out.report.meta.budget;
        let suffix = if tag.is_empty() {
            String::new()
        } else {
            format!("_m{budget}")
        };
        fs::write(
            dir.join(format!("report{suffix}.json")),
            serde_json::to_vec_pretty(&out.report)?,
        )?;
        fs::write(
            dir.join(format!("perturbations{suffix}.json")),
            serde_json::to_vec_pretty(&out.log)?,
        )?;

        if let Some((poisoned_store, poisoned_emb)) = &out.poisoned {
            write_triples(
                &dir.join(format!("poisoned_train{suffix}.tsv")),
                cfg.format,
                &bench.vocab,
                poisoned_store,
            )?;
            write_checkpoint_with_meta(
                poisoned_emb,
                poisoned_store,
                &cfg.train,
                &dir.join(format!("poisoned{suffix}.kgeb")),
            )?;
        }

        let r = &out.report;
        summary.push_str(&format!(
            "{},{},{},{},{:.6},{:.6},{:.6},{:.6}\n",
            r.meta.dataset,
            r.meta.model.name(),
            r.meta.strategy.name(),
            r.meta.budget,
            r.clean.mrr,
            r.poisoned.mrr,
            r.clean.hits_at_10,
            r.poisoned.hits_at_10,
        ));
        timing.push_str(&format!(
            "{},{},{},{:.6},{:.6}\n",
            out.timing.strategy.name(),
            budget,
            out.timing.targets,
            out.timing.mean_seconds_per_target,
            out.timing.total_seconds,
        ));
    }
    let mut f = fs::File::create(dir.join("summary.csv"))?;
    f.write_all(summary.as_bytes())?;
    let mut f = fs::File::create(dir.join("timing.csv"))?;
    f.write_all(timing.as_bytes())?;
    Ok(())
}
