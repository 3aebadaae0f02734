//! Indirect attack: perturb proxy entities K hops away and let the effect
//! propagate back to the targeted entity.
//!
//! For each path the desired shift is carried hop by hop: given the shift
//! wanted on the current entity, [`transfer_shift`] finds the direction the
//! next entity should move so that the shifted version of the current one
//! looks more plausible than the unshifted version; its first-order solution
//! on the sphere of radius `eps_h` is the normalized difference of the two
//! score gradients. Paths are pre-selected by a degree penalty (dilution
//! through well-connected intermediates), and proxy-level candidates are
//! scored like the direct attack, discounted by that penalty.

use super::{
    add_candidates, delete_candidates, direct::shift_vector, score_add, score_delete, target_rng,
    AttackError, PerturbAction, Perturbation, Side,
};
use crate::graph::{DirectedHop, EntityId, Orientation, PathCandidate, Triple, TripleStore};
use crate::scoring::EmbeddingStore;
use crate::seeds;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::{HashMap, HashSet};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IndirectConfig {
    /// Path length K; proxies sit exactly this many hops out.
    pub k_hops: usize,
    /// Number of best paths kept after the penalty pre-selection (P).
    pub path_count: usize,
    /// Weight of the path penalty in the final score.
    pub lambda: f64,
    /// Weights inside the proxy-level delete/add benefits, as in the direct
    /// attack.
    pub lambda1: f64,
    pub lambda2: f64,
    pub budget_m: usize,
    pub step_eps_h: f64,
    pub add_candidate_sample: usize,
    pub target_side: Side,
    pub rng_seed: u64,
    /// Flip the objective to promotion; see the direct attack.
    pub promote: bool,
}

impl Default for IndirectConfig {
    fn default() -> Self {
        Self {
            k_hops: 2,
            path_count: 5,
            lambda: 1.0,
            lambda1: 1.0,
            lambda2: 1.0,
            budget_m: 1,
            step_eps_h: 1.0,
            add_candidate_sample: 10_000,
            target_side: Side::Head,
            rng_seed: 0,
            promote: false,
        }
    }
}

/// A path together with the desired shift for every entity past the origin.
#[derive(Debug, Clone)]
pub struct ShiftChain {
    pub path: PathCandidate,
    /// `shifts[i]` is the displacement wanted on the (i+1)-th path entity;
    /// each has L2 norm equal to the step size.
    pub shifts: Vec<Vec<f64>>,
}

/// A selected proxy perturbation with its scoring breakdown.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndirectPerturbation {
    pub action: PerturbAction,
    pub triple: Triple,
    /// Final score: eta - lambda * penalty.
    pub psi: f64,
    /// Proxy-level add/delete benefit.
    pub eta: f64,
    /// Degree penalty of the carrying path.
    pub penalty: f64,
    pub proxy: EntityId,
    /// Entities of the carrying path, origin first.
    pub path: Vec<EntityId>,
}

impl IndirectPerturbation {
    pub fn to_perturbation(&self) -> Perturbation {
        Perturbation {
            action: self.action,
            triple: self.triple,
            benefit: self.psi,
        }
    }
}

/// Direction the hop's far entity should move so that the shifted version of
/// `known_entity` beats its unshifted version on the connecting triple;
/// scaled to norm `eps_h`.
pub fn transfer_shift(
    emb: &EmbeddingStore,
    known_entity: EntityId,
    known_shift: &[f64],
    hop: DirectedHop,
    eps_h: f64,
) -> Result<Vec<f64>, AttackError> {
    let known = emb.entity(known_entity);
    let shifted: Vec<f64> = known.iter().zip(known_shift).map(|(v, s)| v + s).collect();
    let nbr = emb.entity(hop.neighbor);
    // gradient of the plausibility gap with respect to the neighbor vector,
    // evaluated at zero neighbor displacement
    let g: Vec<f64> = match hop.orientation {
        Orientation::NeighborIsTail => {
            let with_shift = emb.grad_with(&shifted, hop.relation, nbr)?;
            let without = emb.grad_with(known, hop.relation, nbr)?;
            with_shift
                .d_tail
                .iter()
                .zip(&without.d_tail)
                .map(|(a, b)| a - b)
                .collect()
        }
        Orientation::NeighborIsHead => {
            let with_shift = emb.grad_with(nbr, hop.relation, &shifted)?;
            let without = emb.grad_with(nbr, hop.relation, known)?;
            with_shift
                .d_head
                .iter()
                .zip(&without.d_head)
                .map(|(a, b)| a - b)
                .collect()
        }
    };
    let norm: f64 = g.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm <= 1e-12 {
        return Err(AttackError::ZeroGradient);
    }
    Ok(g.iter().map(|v| eps_h * v / norm).collect())
}

/// Carry the target-level shift along `path`, one transfer per hop.
pub fn build_shift_chain(
    emb: &EmbeddingStore,
    target: Triple,
    side: Side,
    path: &PathCandidate,
    eps_h: f64,
    promote: bool,
) -> Result<ShiftChain, AttackError> {
    assert_eq!(
        path.origin,
        side.entity_of(target),
        "path must start at the attacked entity"
    );
    let mut seed_shift = shift_vector(emb, target, side, eps_h)?;
    if promote {
        for v in &mut seed_shift {
            *v = -*v;
        }
    }
    let mut shifts = Vec::with_capacity(path.hops.len());
    let mut known = path.origin;
    let mut known_shift = seed_shift;
    for &hop in &path.hops {
        let next = transfer_shift(emb, known, &known_shift, hop, eps_h)?;
        known = hop.neighbor;
        known_shift = next.clone();
        shifts.push(next);
    }
    Ok(ShiftChain {
        path: path.clone(),
        shifts,
    })
}

/// Propagation-capability penalty of a path: log of (mean + max) of the
/// intermediate entities' degrees. Zero for one-hop paths, which have no
/// intermediates.
pub fn path_penalty(path: &PathCandidate) -> f64 {
    let degs = &path.intermediate_degrees;
    if degs.is_empty() {
        return 0.0;
    }
    let mean = degs.iter().sum::<usize>() as f64 / degs.len() as f64;
    let max = *degs.iter().max().expect("non-empty") as f64;
    (mean + max).ln()
}

/// Run the full indirect scheme for one target: enumerate K-hop paths, keep
/// the `path_count` best by penalty, build shift chains, score proxy-level
/// add/delete candidates, and return the global top `budget_m` by psi.
pub fn indirect_attack(
    store: &TripleStore,
    emb: &EmbeddingStore,
    target: Triple,
    cfg: &IndirectConfig,
    mode: PerturbAction,
) -> Result<Vec<IndirectPerturbation>, AttackError> {
    debug_assert!(cfg.k_hops >= 1 && cfg.path_count >= 1 && cfg.budget_m >= 1);
    if store.contains(&target) {
        return Err(AttackError::TargetInTrainingSet);
    }
    let origin = cfg.target_side.entity_of(target);
    let mut paths = store.enumerate_paths(origin, cfg.k_hops);
    // perturbing a target-triple entity would make the attack direct
    paths.retain(|p| {
        let proxy = p.proxy();
        proxy != target.head && proxy != target.tail
    });
    if paths.is_empty() {
        return Err(AttackError::NoPaths(cfg.k_hops));
    }

    let mut ranked: Vec<(f64, Vec<EntityId>, PathCandidate)> = paths
        .into_iter()
        .map(|p| (path_penalty(&p), p.entities(), p))
        .collect();
    ranked.sort_by(|a, b| a.0.total_cmp(&b.0).then_with(|| a.1.cmp(&b.1)));
    ranked.truncate(cfg.path_count);

    let per_path: Vec<Result<Vec<IndirectPerturbation>, AttackError>> = ranked
        .par_iter()
        .map(|(penalty, entities, path)| {
            score_path(store, emb, target, cfg, mode, path, *penalty, entities)
        })
        .collect();

    let mut pool = Vec::new();
    let mut chain_errors = 0usize;
    for res in per_path {
        match res {
            Ok(perts) => pool.extend(perts),
            // a dead path is skipped, not fatal
            Err(AttackError::ZeroGradient) | Err(AttackError::NoCandidates) => chain_errors += 1,
            Err(AttackError::Scoring(crate::scoring::ScoringError::ZeroResidual)) => {
                chain_errors += 1
            }
            Err(e) => return Err(e),
        }
    }
    if pool.is_empty() {
        let _ = chain_errors;
        return Err(AttackError::NoPaths(cfg.k_hops));
    }

    // the same edit reachable via two paths keeps its best-scoring entry
    let mut best: HashMap<(PerturbAction, Triple), IndirectPerturbation> = HashMap::new();
    for p in pool {
        match best.entry((p.action, p.triple)) {
            std::collections::hash_map::Entry::Vacant(v) => {
                v.insert(p);
            }
            std::collections::hash_map::Entry::Occupied(mut o) => {
                if rank_order(&p, o.get()) == std::cmp::Ordering::Less {
                    o.insert(p);
                }
            }
        }
    }
    let mut out: Vec<IndirectPerturbation> = best.into_values().collect();
    out.sort_by(rank_order);
    out.truncate(cfg.budget_m);
    Ok(out)
}

fn other_of(p: &IndirectPerturbation) -> EntityId {
    if p.triple.head == p.proxy {
        p.triple.tail
    } else {
        p.triple.head
    }
}

/// psi descending, then ascending ids so the order is total and stable.
fn rank_order(a: &IndirectPerturbation, b: &IndirectPerturbation) -> std::cmp::Ordering {
    b.psi
        .total_cmp(&a.psi)
        .then_with(|| a.triple.relation.cmp(&b.triple.relation))
        .then_with(|| other_of(a).cmp(&other_of(b)))
        .then_with(|| a.proxy.cmp(&b.proxy))
        .then_with(|| a.path.cmp(&b.path))
}

#[allow(clippy::too_many_arguments)]
fn score_path(
    store: &TripleStore,
    emb: &EmbeddingStore,
    target: Triple,
    cfg: &IndirectConfig,
    mode: PerturbAction,
    path: &PathCandidate,
    penalty: f64,
    path_entities: &[EntityId],
) -> Result<Vec<IndirectPerturbation>, AttackError> {
    let chain = build_shift_chain(
        emb,
        target,
        cfg.target_side,
        path,
        cfg.step_eps_h,
        cfg.promote,
    )?;
    let proxy = path.proxy();
    let proxy_shift = chain.shifts.last().expect("K >= 1");
    let blocked: HashSet<EntityId> = [target.head, target.tail].into_iter().collect();

    let candidates: Vec<Triple> = match mode {
        PerturbAction::Delete => {
            let path_edges: HashSet<Triple> = path.edge_triples().into_iter().collect();
            delete_candidates(store, proxy, Side::Head, false)
                .into_iter()
                .map(|(t, _)| t)
                .filter(|t| !path_edges.contains(t))
                .filter(|t| !blocked.contains(&t.head) && !blocked.contains(&t.tail))
                .collect()
        }
        PerturbAction::Add => {
            let mut rng = target_rng(cfg.rng_seed, target, seeds::mix2(0xADD, proxy as u64));
            add_candidates(
                store,
                proxy,
                Side::Head,
                target,
                cfg.add_candidate_sample,
                &mut rng,
            )
            .into_iter()
            .filter(|t| !blocked.contains(&t.head) && !blocked.contains(&t.tail))
            .collect()
        }
    };
    if candidates.is_empty() {
        return Err(AttackError::NoCandidates);
    }
    let entities = path_entities.to_vec();
    let mut out = Vec::with_capacity(candidates.len());
    for cand in candidates {
        let eta = match mode {
            PerturbAction::Delete => score_delete(emb, proxy, proxy_shift, cand, cfg.lambda1)?,
            PerturbAction::Add => score_add(emb, proxy, proxy_shift, cand, cfg.lambda2)?,
        };
        out.push(IndirectPerturbation {
            action: mode,
            triple: cand,
            psi: eta - cfg.lambda * penalty,
            eta,
            penalty,
            proxy,
            path: entities.clone(),
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scoring::ModelKind;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn transe_store(entities: &[Vec<f64>], rels: &[Vec<f64>]) -> EmbeddingStore {
        let dim = entities[0].len();
        let mut s = EmbeddingStore::zeros(ModelKind::TransE, entities.len(), rels.len(), dim);
        for (e, v) in entities.iter().enumerate() {
            s.entity_mut(e).copy_from_slice(v);
        }
        for (r, v) in rels.iter().enumerate() {
            s.rel_vec_mut(r).copy_from_slice(v);
        }
        s
    }

    fn random_vecs(n: usize, dim: usize, rng: &mut StdRng) -> Vec<Vec<f64>> {
        (0..n)
            .map(|_| (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect()
    }

    /// The transfer objective: plausibility gap between the shifted and
    /// unshifted known entity, as a function of the neighbor displacement.
    fn gap_objective(
        emb: &EmbeddingStore,
        known: EntityId,
        known_shift: &[f64],
        hop: DirectedHop,
        eps: &[f64],
    ) -> f64 {
        let shifted: Vec<f64> = emb
            .entity(known)
            .iter()
            .zip(known_shift)
            .map(|(v, s)| v + s)
            .collect();
        let moved: Vec<f64> = emb
            .entity(hop.neighbor)
            .iter()
            .zip(eps)
            .map(|(v, e)| v + e)
            .collect();
        match hop.orientation {
            Orientation::NeighborIsTail => {
                emb.score_with(&shifted, hop.relation, &moved).unwrap()
                    - emb
                        .score_with(emb.entity(known), hop.relation, &moved)
                        .unwrap()
            }
            Orientation::NeighborIsHead => {
                emb.score_with(&moved, hop.relation, &shifted).unwrap()
                    - emb
                        .score_with(&moved, hop.relation, emb.entity(known))
                        .unwrap()
            }
        }
    }

    /// Oracle: projected gradient ascent on the sphere, started from zero
    /// (first step lands on the sphere), fixed step and iteration count.
    pub(super) fn pga_transfer(
        emb: &EmbeddingStore,
        known: EntityId,
        known_shift: &[f64],
        hop: DirectedHop,
        eps_h: f64,
        steps: usize,
    ) -> Vec<f64> {
        let dim = emb.dim();
        let fd = 1e-6;
        let mut eps = vec![0.0; dim];
        for _ in 0..steps {
            let mut g = vec![0.0; dim];
            for i in 0..dim {
                let mut p = eps.clone();
                let mut m = eps.clone();
                p[i] += fd;
                m[i] -= fd;
                g[i] = (gap_objective(emb, known, known_shift, hop, &p)
                    - gap_objective(emb, known, known_shift, hop, &m))
                    / (2.0 * fd);
            }
            for i in 0..dim {
                eps[i] += 0.1 * eps_h * g[i];
            }
            let n: f64 = eps.iter().map(|v| v * v).sum::<f64>().sqrt();
            if n > 0.0 {
                for v in &mut eps {
                    *v *= eps_h / n;
                }
            }
        }
        eps
    }

    pub(super) fn cosine(a: &[f64], b: &[f64]) -> f64 {
        let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
        let na: f64 = a.iter().map(|v| v * v).sum::<f64>().sqrt();
        let nb: f64 = b.iter().map(|v| v * v).sum::<f64>().sqrt();
        dot / (na * nb).max(1e-300)
    }

    #[test]
    fn zero_known_shift_gives_zero_gradient() {
        let mut rng = StdRng::seed_from_u64(1);
        let emb = transe_store(&random_vecs(2, 4, &mut rng), &random_vecs(1, 4, &mut rng));
        let hop = DirectedHop {
            neighbor: 1,
            relation: 0,
            orientation: Orientation::NeighborIsTail,
        };
        assert!(matches!(
            transfer_shift(&emb, 0, &[0.0; 4], hop, 0.5),
            Err(AttackError::ZeroGradient)
        ));
    }

    #[test]
    fn transfer_output_norm_is_step_size() {
        let mut rng = StdRng::seed_from_u64(2);
        for _ in 0..20 {
            let emb = transe_store(&random_vecs(2, 6, &mut rng), &random_vecs(1, 6, &mut rng));
            let shift: Vec<f64> = (0..6).map(|_| rng.random_range(-0.5..0.5)).collect();
            for orientation in [Orientation::NeighborIsTail, Orientation::NeighborIsHead] {
                let hop = DirectedHop {
                    neighbor: 1,
                    relation: 0,
                    orientation,
                };
                let eps_h = 0.3;
                match transfer_shift(&emb, 0, &shift, hop, eps_h) {
                    Ok(eps) => {
                        let n: f64 = eps.iter().map(|v| v * v).sum::<f64>().sqrt();
                        assert!((n - eps_h).abs() < 1e-9, "norm {n}");
                    }
                    Err(AttackError::ZeroGradient) => {}
                    Err(e) => panic!("unexpected error {e:?}"),
                }
            }
        }
    }

    #[test]
    fn transfer_direction_matches_fd_gradient_of_gap() {
        // the returned direction must equal the normalized finite-difference
        // gradient of the gap objective at zero displacement
        let mut rng = StdRng::seed_from_u64(3);
        for trial in 0..30usize {
            let dim = 5;
            let emb = transe_store(
                &random_vecs(2, dim, &mut rng),
                &random_vecs(1, dim, &mut rng),
            );
            let shift: Vec<f64> = (0..dim).map(|_| rng.random_range(-0.6..0.6)).collect();
            let hop = DirectedHop {
                neighbor: 1,
                relation: 0,
                orientation: if trial.is_multiple_of(2) {
                    Orientation::NeighborIsTail
                } else {
                    Orientation::NeighborIsHead
                },
            };
            let eps_h = 0.2;
            let Ok(got) = transfer_shift(&emb, 0, &shift, hop, eps_h) else {
                continue;
            };
            let fd = 1e-6;
            let zero = vec![0.0; dim];
            let mut g = vec![0.0; dim];
            for i in 0..dim {
                let mut p = zero.clone();
                let mut m = zero.clone();
                p[i] += fd;
                m[i] -= fd;
                g[i] = (gap_objective(&emb, 0, &shift, hop, &p)
                    - gap_objective(&emb, 0, &shift, hop, &m))
                    / (2.0 * fd);
            }
            let n: f64 = g.iter().map(|v| v * v).sum::<f64>().sqrt();
            if n < 1e-9 {
                continue;
            }
            let want: Vec<f64> = g.iter().map(|v| eps_h * v / n).collect();
            for i in 0..dim {
                assert!(
                    (got[i] - want[i]).abs() < 1e-4,
                    "coordinate {i}: {} vs {}",
                    got[i],
                    want[i]
                );
            }
        }
    }

    #[test]
    fn transfer_agrees_with_projected_ascent() {
        let mut rng = StdRng::seed_from_u64(4);
        let mut checked = 0;
        while checked < 25 {
            let dim = 6;
            let emb = transe_store(
                &random_vecs(2, dim, &mut rng),
                &random_vecs(1, dim, &mut rng),
            );
            let shift: Vec<f64> = (0..dim).map(|_| rng.random_range(-0.8..0.8)).collect();
            let hop = DirectedHop {
                neighbor: 1,
                relation: 0,
                orientation: Orientation::NeighborIsTail,
            };
            let eps_h = 0.1;
            let Ok(closed) = transfer_shift(&emb, 0, &shift, hop, eps_h) else {
                continue;
            };
            let iterated = pga_transfer(&emb, 0, &shift, hop, eps_h, 20);
            let cos = cosine(&closed, &iterated);
            assert!(cos >= 0.95, "cosine {cos}");
            checked += 1;
        }
    }

    #[test]
    fn penalty_arithmetic_matches_contract() {
        let mk = |degs: Vec<usize>| PathCandidate {
            origin: 0,
            hops: vec![
                DirectedHop {
                    neighbor: 1,
                    relation: 0,
                    orientation: Orientation::NeighborIsTail,
                };
                degs.len() + 1
            ],
            intermediate_degrees: degs,
        };
        assert!((path_penalty(&mk(vec![2, 4])) - 7.0f64.ln()).abs() < 1e-12);
        assert!((path_penalty(&mk(vec![1])) - 2.0f64.ln()).abs() < 1e-12);
        assert_eq!(path_penalty(&mk(vec![])), 0.0);
    }

    /// chain graph 0 -r0-> 1 -r0-> 2 plus one extra deletable fact on the
    /// proxy 2, and a spare entity 3 for the target tail.
    fn chain_fixture() -> (TripleStore, EmbeddingStore, Triple) {
        let mut rng = StdRng::seed_from_u64(7);
        let entities = random_vecs(5, 6, &mut rng);
        let rels = random_vecs(2, 6, &mut rng);
        let emb = transe_store(&entities, &rels);
        let (store, _) = TripleStore::from_triples(
            5,
            2,
            [
                Triple::new(0, 0, 1),
                Triple::new(1, 0, 2),
                Triple::new(2, 1, 4),
            ],
        );
        let target = Triple::new(0, 1, 3);
        (store, emb, target)
    }

    #[test]
    fn chain_of_one_hop_has_single_shift() {
        let (store, emb, target) = chain_fixture();
        let paths = store.enumerate_paths(0, 1);
        let chain = build_shift_chain(&emb, target, Side::Head, &paths[0], 0.5, false).unwrap();
        assert_eq!(chain.shifts.len(), 1);
    }

    #[test]
    fn chain_recurrence_recomputes_independently() {
        let (store, emb, target) = chain_fixture();
        let paths = store.enumerate_paths(0, 2);
        let path = paths
            .iter()
            .find(|p| p.entities() == vec![0, 1, 2])
            .expect("chain path");
        let eps_h = 0.4;
        let chain = build_shift_chain(&emb, target, Side::Head, path, eps_h, false).unwrap();
        assert_eq!(chain.shifts.len(), 2);
        // re-derive by hand: seed shift, then two transfers
        let seed = shift_vector(&emb, target, Side::Head, eps_h).unwrap();
        let s1 = transfer_shift(&emb, 0, &seed, path.hops[0], eps_h).unwrap();
        let s2 = transfer_shift(&emb, 1, &s1, path.hops[1], eps_h).unwrap();
        assert_eq!(chain.shifts[0], s1);
        assert_eq!(chain.shifts[1], s2);
    }

    #[test]
    fn shared_prefix_shares_first_shift() {
        // diamond: 0->1, 1->2 and 1->4 (two 2-hop paths through hop 1)
        let mut rng = StdRng::seed_from_u64(9);
        let entities = random_vecs(6, 5, &mut rng);
        let rels = random_vecs(2, 5, &mut rng);
        let emb = transe_store(&entities, &rels);
        let (store, _) = TripleStore::from_triples(
            6,
            2,
            [
                Triple::new(0, 0, 1),
                Triple::new(1, 0, 2),
                Triple::new(1, 1, 4),
            ],
        );
        let target = Triple::new(0, 1, 5);
        let paths = store.enumerate_paths(0, 2);
        assert_eq!(paths.len(), 2);
        let a = build_shift_chain(&emb, target, Side::Head, &paths[0], 0.3, false).unwrap();
        let b = build_shift_chain(&emb, target, Side::Head, &paths[1], 0.3, false).unwrap();
        assert_eq!(a.shifts[0], b.shifts[0]);
        assert_ne!(a.shifts[1], b.shifts[1]);
    }

    #[test]
    fn tiny_chain_delete_matches_hand_computation() {
        let (store, emb, target) = chain_fixture();
        let cfg = IndirectConfig {
            k_hops: 2,
            path_count: 3,
            budget_m: 4,
            step_eps_h: 0.4,
            lambda: 0.7,
            ..IndirectConfig::default()
        };
        let perts = indirect_attack(&store, &emb, target, &cfg, PerturbAction::Delete).unwrap();
        // single path 0-1-2; its own edge (1,0,2) excluded, so the only
        // delete candidate on proxy 2 is (2,1,4)
        assert_eq!(perts.len(), 1);
        let p = &perts[0];
        assert_eq!(p.triple, Triple::new(2, 1, 4));
        assert_eq!(p.proxy, 2);
        assert_eq!(p.path, vec![0, 1, 2]);
        // psi must equal eta - lambda * ln(mean + max) with one intermediate
        // of degree 2
        let expected_penalty = (2.0f64 + 2.0).ln();
        assert!((p.penalty - expected_penalty).abs() < 1e-12);
        let seed = shift_vector(&emb, target, Side::Head, cfg.step_eps_h).unwrap();
        let path = store
            .enumerate_paths(0, 2)
            .into_iter()
            .find(|p| p.entities() == vec![0, 1, 2])
            .unwrap();
        let s1 = transfer_shift(&emb, 0, &seed, path.hops[0], cfg.step_eps_h).unwrap();
        let s2 = transfer_shift(&emb, 1, &s1, path.hops[1], cfg.step_eps_h).unwrap();
        let eta = score_delete(&emb, 2, &s2, Triple::new(2, 1, 4), 1.0).unwrap();
        assert!((p.eta - eta).abs() < 1e-12);
        assert!((p.psi - (eta - cfg.lambda * expected_penalty)).abs() < 1e-12);
    }

    #[test]
    fn lambda_zero_ranks_by_eta() {
        let mut rng = StdRng::seed_from_u64(21);
        let entities = random_vecs(12, 5, &mut rng);
        let rels = random_vecs(2, 5, &mut rng);
        let emb = transe_store(&entities, &rels);
        let mut triples = Vec::new();
        for i in 0..10 {
            triples.push(Triple::new(i, 0, (i + 1) % 10));
            triples.push(Triple::new(i, 1, (i + 4) % 10));
        }
        let (store, _) = TripleStore::from_triples(12, 2, triples);
        let target = Triple::new(0, 1, 11);
        let cfg = IndirectConfig {
            k_hops: 2,
            path_count: 4,
            budget_m: 8,
            lambda: 0.0,
            add_candidate_sample: 0,
            ..IndirectConfig::default()
        };
        let perts = indirect_attack(&store, &emb, target, &cfg, PerturbAction::Add).unwrap();
        assert!(!perts.is_empty());
        for w in perts.windows(2) {
            assert!(
                w[0].eta >= w[1].eta,
                "psi order must be eta order at lambda 0"
            );
            assert!((w[0].psi - w[0].eta).abs() < 1e-12);
        }
    }

    #[test]
    fn returned_edits_avoid_target_entities_and_path_edges() {
        let mut rng = StdRng::seed_from_u64(33);
        let entities = random_vecs(14, 5, &mut rng);
        let rels = random_vecs(3, 5, &mut rng);
        let emb = transe_store(&entities, &rels);
        let mut triples = Vec::new();
        for i in 0..12 {
            triples.push(Triple::new(i, 0, (i + 1) % 12));
            triples.push(Triple::new((i + 5) % 12, 1, i));
            triples.push(Triple::new(i, 2, (i + 3) % 12));
        }
        let (store, _) = TripleStore::from_triples(14, 3, triples);
        let target = Triple::new(0, 1, 13);
        for mode in [PerturbAction::Add, PerturbAction::Delete] {
            let cfg = IndirectConfig {
                k_hops: 2,
                path_count: 6,
                budget_m: 10,
                add_candidate_sample: 0,
                ..IndirectConfig::default()
            };
            let perts = indirect_attack(&store, &emb, target, &cfg, mode).unwrap();
            assert!(!perts.is_empty());
            for p in &perts {
                assert_ne!(p.triple.head, target.head);
                assert_ne!(p.triple.tail, target.head);
                assert_ne!(p.triple.head, target.tail);
                assert_ne!(p.triple.tail, target.tail);
                match mode {
                    PerturbAction::Delete => assert!(store.contains(&p.triple)),
                    PerturbAction::Add => assert!(!store.contains(&p.triple)),
                }
                let n: f64 = p.path.len() as f64;
                assert_eq!(n as usize, cfg.k_hops + 1);
            }
        }
    }

    #[test]
    fn member_target_is_rejected() {
        let (store, emb, _) = chain_fixture();
        let member = store.triples()[0];
        assert!(matches!(
            indirect_attack(
                &store,
                &emb,
                member,
                &IndirectConfig::default(),
                PerturbAction::Add
            ),
            Err(AttackError::TargetInTrainingSet)
        ));
    }

    #[test]
    fn no_paths_errors_out() {
        let mut rng = StdRng::seed_from_u64(5);
        let entities = random_vecs(4, 4, &mut rng);
        let rels = random_vecs(1, 4, &mut rng);
        let emb = transe_store(&entities, &rels);
        let (store, _) = TripleStore::from_triples(4, 1, [Triple::new(1, 0, 2)]);
        let target = Triple::new(0, 0, 3);
        assert!(matches!(
            indirect_attack(
                &store,
                &emb,
                target,
                &IndirectConfig::default(),
                PerturbAction::Delete
            ),
            Err(AttackError::NoPaths(2))
        ));
    }

    #[test]
    fn penalty_is_stable_under_unrelated_insertions() {
        let (store, _, _) = {
            let (s, e, t) = chain_fixture();
            (s, e, t)
        };
        let path = store
            .enumerate_paths(0, 2)
            .into_iter()
            .find(|p| p.entities() == vec![0, 1, 2])
            .unwrap();
        let before = path_penalty(&path);
        // add a triple touching none of the path's entities
        let mut grown = store.clone();
        grown.insert(Triple::new(3, 0, 4));
        let path_after = grown
            .enumerate_paths(0, 2)
            .into_iter()
            .find(|p| p.entities() == vec![0, 1, 2])
            .unwrap();
        assert_eq!(before, path_penalty(&path_after));
    }
}
