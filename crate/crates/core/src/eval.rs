//! Raw link-prediction ranking and MRR / Hits@10 aggregation.
//!
//! A target is ranked by replacing its head (then its tail) with every
//! entity and counting the corruptions that score strictly higher than the
//! truth; ties count in the truth's favor. Corruptions that happen to be
//! observed facts are not filtered out (raw protocol).

use crate::attack::Side;
use crate::graph::Triple;
use crate::scoring::{mat_t_vec, mat_vec, EmbeddingStore, ModelKind};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RankResult {
    pub target: Triple,
    pub head_rank: usize,
    pub tail_rank: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub mrr: f64,
    pub hits_at_10: f64,
    pub per_target: Vec<RankResult>,
}

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("cannot aggregate an empty result list")]
    EmptyResults,
}

/// Rank the true head and tail of `target` among all entities.
pub fn rank_target(emb: &EmbeddingStore, target: Triple) -> RankResult {
    let head_scores = side_scores(emb, target, Side::Head);
    let tail_scores = side_scores(emb, target, Side::Tail);
    RankResult {
        target,
        head_rank: optimistic_rank(&head_scores, target.head),
        tail_rank: optimistic_rank(&tail_scores, target.tail),
    }
}

/// Rank many targets; order of the results matches the input.
pub fn rank_targets(emb: &EmbeddingStore, targets: &[Triple], parallel: bool) -> Vec<RankResult> {
    if parallel {
        targets.par_iter().map(|&t| rank_target(emb, t)).collect()
    } else {
        targets.iter().map(|&t| rank_target(emb, t)).collect()
    }
}

/// 1 + number of entities scoring strictly above the truth.
fn optimistic_rank(scores: &[f64], truth: usize) -> usize {
    let true_score = scores[truth];
    1 + scores
        .iter()
        .enumerate()
        .filter(|&(e, &s)| e != truth && s > true_score)
        .count()
}

/// Scores of every candidate entity substituted on `side` of the target.
fn side_scores(emb: &EmbeddingStore, target: Triple, side: Side) -> Vec<f64> {
    let dim = emb.dim();
    let n = emb.num_entities();
    let r = target.relation;
    match emb.model() {
        ModelKind::TransE => {
            // head side: -||e' - (t - r)||, tail side: -||(h + r) - e'||
            let fixed = match side {
                Side::Head => emb.entity(target.tail),
                Side::Tail => emb.entity(target.head),
            };
            let rv = emb.rel_vec(r);
            let query: Vec<f64> = match side {
                Side::Head => fixed.iter().zip(rv).map(|(t, r)| t - r).collect(),
                Side::Tail => fixed.iter().zip(rv).map(|(h, r)| h + r).collect(),
            };
            (0..n)
                .map(|e| {
                    let row = emb.entity(e);
                    let mut s = 0.0;
                    for i in 0..dim {
                        let d = row[i] - query[i];
                        s += d * d;
                    }
                    -s.sqrt()
                })
                .collect()
        }
        ModelKind::TransR => {
            let m = emb.rel_mat(r);
            let rv = emb.rel_vec(r);
            let mut proj_fixed = vec![0.0; dim];
            let fixed = match side {
                Side::Head => emb.entity(target.tail),
                Side::Tail => emb.entity(target.head),
            };
            mat_vec(m, fixed, &mut proj_fixed);
            let query: Vec<f64> = match side {
                Side::Head => proj_fixed.iter().zip(rv).map(|(t, r)| t - r).collect(),
                Side::Tail => proj_fixed.iter().zip(rv).map(|(h, r)| h + r).collect(),
            };
            let mut proj = vec![0.0; dim];
            (0..n)
                .map(|e| {
                    mat_vec(m, emb.entity(e), &mut proj);
                    let mut s = 0.0;
                    for i in 0..dim {
                        let d = proj[i] - query[i];
                        s += d * d;
                    }
                    -s.sqrt()
                })
                .collect()
        }
        ModelKind::Rescal => {
            // head side: e'^T (M t); tail side: (h^T M) e'
            let m = emb.rel_mat(r);
            let mut query = vec![0.0; dim];
            match side {
                Side::Head => mat_vec(m, emb.entity(target.tail), &mut query),
                Side::Tail => mat_t_vec(m, emb.entity(target.head), &mut query),
            }
            (0..n)
                .map(|e| {
                    let row = emb.entity(e);
                    let mut s = 0.0;
                    for i in 0..dim {
                        s += row[i] * query[i];
                    }
                    s
                })
                .collect()
        }
    }
}

/// Pool head and tail ranks (two per target) into MRR and Hits@10.
pub fn aggregate(results: &[RankResult]) -> Result<EvalReport, EvalError> {
    aggregate_side(results, None)
}

/// Like [`aggregate`] but optionally restricted to one replacement side.
pub fn aggregate_side(results: &[RankResult], side: Option<Side>) -> Result<EvalReport, EvalError> {
    if results.is_empty() {
        return Err(EvalError::EmptyResults);
    }
    let ranks: Vec<usize> = results
        .iter()
        .flat_map(|r| match side {
            None => vec![r.head_rank, r.tail_rank],
            Some(Side::Head) => vec![r.head_rank],
            Some(Side::Tail) => vec![r.tail_rank],
        })
        .collect();
    let mrr = ranks.iter().map(|&r| 1.0 / r as f64).sum::<f64>() / ranks.len() as f64;
    let hits_at_10 = ranks.iter().filter(|&&r| r <= 10).count() as f64 / ranks.len() as f64;
    Ok(EvalReport {
        mrr,
        hits_at_10,
        per_target: results.to_vec(),
    })
}
