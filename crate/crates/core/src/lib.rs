//! Knowledge-graph embedding toolkit with a data-poisoning attack engine.
//!
//! The crate trains TransE / TransR / RESCAL embeddings over fact triples,
//! crafts add/delete perturbations of the training set that degrade the
//! plausibility of chosen target facts (directly on the targeted entity or
//! indirectly through K-hop proxy entities), retrains on the poisoned data,
//! and measures the damage with raw link-prediction MRR / Hits@10.

pub mod attack;
pub mod baselines;
pub mod eval;
pub mod graph;
pub mod pipeline;
pub mod scoring;
mod seeds;
pub mod synth;
pub mod train;

pub use attack::{
    direct_attack, indirect_attack, AttackConfig, AttackError, IndirectConfig,
    IndirectPerturbation, PerturbAction, Perturbation, Side,
};
pub use eval::{
    aggregate, aggregate_side, rank_target, rank_targets, EvalError, EvalReport, RankResult,
};
pub use graph::{
    load_triples, DirectedHop, GraphError, Orientation, PathCandidate, Triple, TripleFormat,
    TripleStore, Vocabulary,
};
pub use pipeline::{
    apply_perturbations, run_pipeline, sample_targets, ExperimentConfig, PipelineError, Strategy,
};
pub use scoring::{EmbeddingStore, ModelKind, ScoreGradient, ScoringError};
pub use train::{init_embeddings, train, TrainConfig, TrainError};
