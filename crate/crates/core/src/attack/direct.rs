//! Direct attack: rank add/delete edits on facts incident to the targeted
//! entity.
//!
//! The desired displacement of the attacked entity's embedding is the
//! negated score gradient scaled by a step size ([`shift_vector`]). Delete
//! candidates are scored by how much they hold the clean embedding in place
//! versus the shifted one ([`score_delete`]); add candidates by how much
//! more plausible they become once the embedding is shifted
//! ([`score_add`]). The top-M candidates by benefit form the perturbation
//! budget.

use super::{
    add_candidates, delete_candidates, sort_perturbations, target_rng, AttackError, PerturbAction,
    Perturbation, Side,
};
use crate::graph::{EntityId, Triple, TripleStore};
use crate::scoring::EmbeddingStore;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AttackConfig {
    /// Perturbations per target (M).
    pub budget_m: usize,
    /// Step size of the desired embedding shift.
    pub step_eps_h: f64,
    /// Weight of the shifted-score term in delete benefits.
    pub lambda1: f64,
    /// Weight of the clean-score term in add benefits.
    pub lambda2: f64,
    /// Add-candidate downsample size; 0 scans the whole relation-entity
    /// product.
    pub add_candidate_sample: usize,
    pub target_side: Side,
    pub rng_seed: u64,
    /// Extend delete candidates to the opposite-side incidences.
    pub both_orientations: bool,
    /// Flip the objective: push the target's plausibility up instead of
    /// down. Exposed for completeness; untested against any reference
    /// results.
    pub promote: bool,
}

impl Default for AttackConfig {
    fn default() -> Self {
        Self {
            budget_m: 1,
            step_eps_h: 1.0,
            lambda1: 1.0,
            lambda2: 1.0,
            add_candidate_sample: 10_000,
            target_side: Side::Head,
            rng_seed: 0,
            both_orientations: false,
            promote: false,
        }
    }
}

/// Optimal embedding shifting vector for the attacked entity: the negated
/// partial derivative of the target's score with respect to that entity's
/// embedding, scaled by `eps_h`.
pub fn shift_vector(
    emb: &EmbeddingStore,
    target: Triple,
    side: Side,
    eps_h: f64,
) -> Result<Vec<f64>, AttackError> {
    let g = emb.grad(target.head, target.relation, target.tail)?;
    let partial = match side {
        Side::Head => g.d_head,
        Side::Tail => g.d_tail,
    };
    Ok(partial.iter().map(|v| -eps_h * v).collect())
}

/// Benefit of deleting `cand`: how plausible it is for the clean embedding
/// minus how plausible it stays once the attacked entity is shifted.
pub fn score_delete(
    emb: &EmbeddingStore,
    target_entity: EntityId,
    eps_star: &[f64],
    cand: Triple,
    lambda1: f64,
) -> Result<f64, AttackError> {
    let (clean, shifted) = scores_with_shift(emb, target_entity, eps_star, cand)?;
    Ok(clean - lambda1 * shifted)
}

/// Benefit of adding `cand`: how plausible it becomes under the shifted
/// embedding minus its plausibility for the clean one.
pub fn score_add(
    emb: &EmbeddingStore,
    target_entity: EntityId,
    eps_star: &[f64],
    cand: Triple,
    lambda2: f64,
) -> Result<f64, AttackError> {
    let (clean, shifted) = scores_with_shift(emb, target_entity, eps_star, cand)?;
    Ok(shifted - lambda2 * clean)
}

fn scores_with_shift(
    emb: &EmbeddingStore,
    target_entity: EntityId,
    eps_star: &[f64],
    cand: Triple,
) -> Result<(f64, f64), AttackError> {
    assert!(
        cand.head == target_entity || cand.tail == target_entity,
        "candidate must involve the perturbed entity"
    );
    let shifted: Vec<f64> = emb
        .entity(target_entity)
        .iter()
        .zip(eps_star)
        .map(|(v, e)| v + e)
        .collect();
    let clean = emb.score(cand.head, cand.relation, cand.tail);
    let shifted_score = if cand.head == target_entity {
        emb.score_with(&shifted, cand.relation, emb.entity(cand.tail))?
    } else {
        emb.score_with(emb.entity(cand.head), cand.relation, &shifted)?
    };
    Ok((clean, shifted_score))
}

/// Rank all direct perturbation candidates for `target` and return the top
/// `budget_m` by benefit, ties broken by ascending ids.
pub fn direct_attack(
    store: &TripleStore,
    emb: &EmbeddingStore,
    target: Triple,
    cfg: &AttackConfig,
    mode: PerturbAction,
) -> Result<Vec<Perturbation>, AttackError> {
    debug_assert!(cfg.budget_m >= 1 && cfg.step_eps_h > 0.0);
    if store.contains(&target) {
        return Err(AttackError::TargetInTrainingSet);
    }
    let entity = cfg.target_side.entity_of(target);
    let mut eps_star = shift_vector(emb, target, cfg.target_side, cfg.step_eps_h)?;
    if cfg.promote {
        for v in &mut eps_star {
            *v = -*v;
        }
    }

    let mut scored = match mode {
        PerturbAction::Delete => {
            let cands = delete_candidates(store, entity, cfg.target_side, cfg.both_orientations);
            if cands.is_empty() {
                return Err(AttackError::NoCandidates);
            }
            let mut out = Vec::with_capacity(cands.len());
            for (cand, _side) in cands {
                let benefit = score_delete(emb, entity, &eps_star, cand, cfg.lambda1)?;
                out.push(Perturbation {
                    action: PerturbAction::Delete,
                    triple: cand,
                    benefit,
                });
            }
            out
        }
        PerturbAction::Add => {
            let mut rng = target_rng(cfg.rng_seed, target, 0xADD);
            let cands = add_candidates(
                store,
                entity,
                cfg.target_side,
                target,
                cfg.add_candidate_sample,
                &mut rng,
            );
            if cands.is_empty() {
                return Err(AttackError::NoCandidates);
            }
            let mut out = Vec::with_capacity(cands.len());
            for cand in cands {
                let benefit = score_add(emb, entity, &eps_star, cand, cfg.lambda2)?;
                out.push(Perturbation {
                    action: PerturbAction::Add,
                    triple: cand,
                    benefit,
                });
            }
            out
        }
    };
    sort_perturbations(&mut scored, entity);
    scored.truncate(cfg.budget_m);
    Ok(scored)
}
