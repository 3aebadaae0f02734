//! Perturbation selection against a frozen clean embedding snapshot.
//!
//! [`direct`] ranks add/delete edits on facts incident to the targeted
//! entity itself; [`indirect`] propagates the desired embedding shift
//! through K-hop paths and perturbs proxy entities instead.

pub mod direct;
pub mod indirect;

pub use direct::{direct_attack, score_add, score_delete, shift_vector, AttackConfig};
pub use indirect::{
    build_shift_chain, indirect_attack, path_penalty, transfer_shift, IndirectConfig,
    IndirectPerturbation, ShiftChain,
};

use crate::graph::{EntityId, RelationId, Triple, TripleStore};
use crate::scoring::ScoringError;
use crate::seeds;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Which entity of the target triple the attack shifts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Head,
    Tail,
}

impl Side {
    pub fn entity_of(self, t: Triple) -> EntityId {
        match self {
            Side::Head => t.head,
            Side::Tail => t.tail,
        }
    }
}

impl std::str::FromStr for Side {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "head" => Ok(Side::Head),
            "tail" => Ok(Side::Tail),
            other => Err(format!("unknown side `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PerturbAction {
    Add,
    Delete,
}

impl std::str::FromStr for PerturbAction {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "add" => Ok(PerturbAction::Add),
            "delete" => Ok(PerturbAction::Delete),
            other => Err(format!("unknown action `{other}`")),
        }
    }
}

/// One add-or-delete edit of the training set with its benefit score.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Perturbation {
    pub action: PerturbAction,
    pub triple: Triple,
    pub benefit: f64,
}

#[derive(Debug, Error)]
pub enum AttackError {
    #[error("target triple is already in the training set")]
    TargetInTrainingSet,
    #[error("no perturbation candidates for the attacked entity")]
    NoCandidates,
    #[error("no usable {0}-hop path from the attacked entity")]
    NoPaths(usize),
    #[error("transfer gradient vanished; path cannot carry the shift")]
    ZeroGradient,
    #[error(transparent)]
    Scoring(#[from] ScoringError),
}

/// Deterministic per-target RNG: same seed and target, same stream, no
/// matter how many targets ran before.
pub(crate) fn target_rng(seed: u64, target: Triple, stream: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seeds::mix3(seed, seeds::triple_tag(target), stream))
}

/// Stored facts with `entity` on the attacked side; with `both_orientations`
/// the opposite-side incidences are included too. Each candidate carries the
/// side `entity` occupies in it.
pub(crate) fn delete_candidates(
    store: &TripleStore,
    entity: EntityId,
    side: Side,
    both_orientations: bool,
) -> Vec<(Triple, Side)> {
    let mut out = Vec::new();
    let mut push_side = |positions: &[u32], s: Side| {
        for &p in positions {
            out.push((store.triples()[p as usize], s));
        }
    };
    match side {
        Side::Head => {
            push_side(store.head_positions(entity), Side::Head);
            if both_orientations {
                push_side(store.tail_positions(entity), Side::Tail);
            }
        }
        Side::Tail => {
            push_side(store.tail_positions(entity), Side::Tail);
            if both_orientations {
                push_side(store.head_positions(entity), Side::Head);
            }
        }
    }
    out
}

/// The (relation, other-entity) add space for `entity` on `side`, excluding
/// existing triples, self-loop adds, and the target triple itself.
///
/// `sample == 0` enumerates the whole space; otherwise `sample` pairs are
/// drawn uniformly without replacement before the exclusions are applied.
pub(crate) fn add_candidates(
    store: &TripleStore,
    entity: EntityId,
    side: Side,
    target: Triple,
    sample: usize,
    rng: &mut ChaCha8Rng,
) -> Vec<Triple> {
    let num_e = store.num_entities();
    let num_r = store.num_relations();
    let space = num_r * num_e;
    let build = |pair_idx: usize| -> Triple {
        let r = pair_idx / num_e;
        let other = pair_idx % num_e;
        match side {
            Side::Head => Triple::new(entity, r as RelationId, other),
            Side::Tail => Triple::new(other, r as RelationId, entity),
        }
    };
    let valid = |t: &Triple| {
        let other = match side {
            Side::Head => t.tail,
            Side::Tail => t.head,
        };
        other != entity && *t != target && !store.contains(t)
    };
    if sample == 0 || sample >= space {
        (0..space).map(build).filter(|t| valid(t)).collect()
    } else {
        rand::seq::index::sample(rng, space, sample)
            .into_iter()
            .map(build)
            .filter(|t| valid(t))
            .collect()
    }
}

/// Total order used for final rankings: benefit descending, then
/// (relation, other entity, head) ascending so ties are stable.
pub(crate) fn sort_perturbations(perts: &mut [Perturbation], entity: EntityId) {
    perts.sort_by(|a, b| {
        b.benefit
            .total_cmp(&a.benefit)
            .then_with(|| a.triple.relation.cmp(&b.triple.relation))
            .then_with(|| other_entity(a.triple, entity).cmp(&other_entity(b.triple, entity)))
            .then_with(|| a.triple.head.cmp(&b.triple.head))
    });
}

fn other_entity(t: Triple, entity: EntityId) -> EntityId {
    if t.head == entity {
        t.tail
    } else {
        t.head
    }
}
