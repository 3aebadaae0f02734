//! Random perturbation baselines: the same candidate spaces as the informed
//! strategies, but selections drawn uniformly instead of ranked by benefit.

use crate::attack::{
    add_candidates, delete_candidates, target_rng, AttackError, PerturbAction, Perturbation, Side,
};
use crate::graph::{Triple, TripleStore};
use rand::seq::SliceRandom;
use rand::Rng;
use std::collections::HashSet;

/// Uniform direct baseline (random-dd / random-da). Benefit fields are 0.
pub fn random_direct(
    store: &TripleStore,
    target: Triple,
    side: Side,
    budget_m: usize,
    mode: PerturbAction,
    seed: u64,
) -> Result<Vec<Perturbation>, AttackError> {
    if store.contains(&target) {
        return Err(AttackError::TargetInTrainingSet);
    }
    let entity = side.entity_of(target);
    let mut rng = target_rng(seed, target, 0xBA5E);
    let chosen: Vec<Triple> = match mode {
        PerturbAction::Delete => {
            let mut cands: Vec<Triple> = delete_candidates(store, entity, side, false)
                .into_iter()
                .map(|(t, _)| t)
                .collect();
            if cands.is_empty() {
                return Err(AttackError::NoCandidates);
            }
            cands.shuffle(&mut rng);
            cands.truncate(budget_m);
            cands
        }
        PerturbAction::Add => {
            let space = store.num_relations() * store.num_entities();
            // small spaces are enumerated outright; large ones are
            // rejection-sampled for distinct valid pairs
            if space <= 4 * budget_m.max(64) {
                let mut cands = add_candidates(store, entity, side, target, 0, &mut rng);
                if cands.is_empty() {
                    return Err(AttackError::NoCandidates);
                }
                cands.shuffle(&mut rng);
                cands.truncate(budget_m);
                cands
            } else {
                let mut seen = HashSet::new();
                let mut out = Vec::new();
                let mut attempts = 0usize;
                let max_attempts = 200 * budget_m.max(1);
                while out.len() < budget_m && attempts < max_attempts {
                    attempts += 1;
                    let r = rng.random_range(0..store.num_relations());
                    let other = rng.random_range(0..store.num_entities());
                    let t = match side {
                        Side::Head => Triple::new(entity, r, other),
                        Side::Tail => Triple::new(other, r, entity),
                    };
                    if other == entity || t == target || store.contains(&t) || !seen.insert(t) {
                        continue;
                    }
                    out.push(t);
                }
                if out.is_empty() {
                    return Err(AttackError::NoCandidates);
                }
                out
            }
        }
    };
    Ok(chosen
        .into_iter()
        .map(|triple| Perturbation {
            action: mode,
            triple,
            benefit: 0.0,
        })
        .collect())
}

/// Uniform indirect baseline (random-id / random-ia): random path, then a
/// random valid edit on its proxy, repeated without duplicates.
pub fn random_indirect(
    store: &TripleStore,
    target: Triple,
    side: Side,
    k_hops: usize,
    budget_m: usize,
    mode: PerturbAction,
    seed: u64,
) -> Result<Vec<Perturbation>, AttackError> {
    if store.contains(&target) {
        return Err(AttackError::TargetInTrainingSet);
    }
    let origin = side.entity_of(target);
    let mut paths = store.enumerate_paths(origin, k_hops);
    paths.retain(|p| {
        let proxy = p.proxy();
        proxy != target.head && proxy != target.tail
    });
    if paths.is_empty() {
        return Err(AttackError::NoPaths(k_hops));
    }
    let blocked = [target.head, target.tail];
    let mut rng = target_rng(seed, target, 0x1BA5E);
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    let mut attempts = 0usize;
    let max_attempts = 400 * budget_m.max(1);
    while out.len() < budget_m && attempts < max_attempts {
        attempts += 1;
        let path = &paths[rng.random_range(0..paths.len())];
        let proxy = path.proxy();
        let triple = match mode {
            PerturbAction::Delete => {
                let path_edges: Vec<Triple> = path.edge_triples();
                let cands: Vec<Triple> = delete_candidates(store, proxy, Side::Head, false)
                    .into_iter()
                    .map(|(t, _)| t)
                    .filter(|t| !path_edges.contains(t))
                    .filter(|t| !blocked.contains(&t.head) && !blocked.contains(&t.tail))
                    .collect();
                if cands.is_empty() {
                    continue;
                }
                cands[rng.random_range(0..cands.len())]
            }
            PerturbAction::Add => {
                let r = rng.random_range(0..store.num_relations());
                let other = rng.random_range(0..store.num_entities());
                let t = Triple::new(proxy, r, other);
                if other == proxy
                    || t == target
                    || store.contains(&t)
                    || blocked.contains(&t.head)
                    || blocked.contains(&t.tail)
                {
                    continue;
                }
                t
            }
        };
        if seen.insert((mode, triple)) {
            out.push(Perturbation {
                action: mode,
                triple,
                benefit: 0.0,
            });
        }
    }
    Ok(out)
}
