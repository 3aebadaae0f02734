//! Vocabulary management, triple storage, adjacency/degree indexing, and
//! K-hop path enumeration over the training graph.

mod io;

pub use io::{
    load_triples, load_triples_with_vocab, write_triples, GraphError, LoadReport, TripleFormat,
};

use serde::{Deserialize, Serialize};
use std::collections::{HashMap, HashSet};

/// Dense 0-based entity identifier.
pub type EntityId = usize;
/// Dense 0-based relation identifier.
pub type RelationId = usize;

/// Bidirectional name <-> id mapping for entities and relations.
///
/// Ids are dense, 0-based, and assigned in first-appearance order.
#[derive(Debug, Clone, Default)]
pub struct Vocabulary {
    entity_names: Vec<String>,
    relation_names: Vec<String>,
    entity_ids: HashMap<String, EntityId>,
    relation_ids: HashMap<String, RelationId>,
}

impl Vocabulary {
    pub fn new() -> Self {
        Self::default()
    }

    /// Vocabulary with decimal-string names, for id-mapped inputs that carry
    /// no name table.
    pub fn synthetic(num_entities: usize, num_relations: usize) -> Self {
        let mut v = Self::new();
        for e in 0..num_entities {
            v.intern_entity(&e.to_string());
        }
        for r in 0..num_relations {
            v.intern_relation(&r.to_string());
        }
        v
    }

    pub fn intern_entity(&mut self, name: &str) -> EntityId {
        if let Some(&id) = self.entity_ids.get(name) {
            return id;
        }
        let id = self.entity_names.len();
        self.entity_names.push(name.to_string());
        self.entity_ids.insert(name.to_string(), id);
        id
    }

    pub fn intern_relation(&mut self, name: &str) -> RelationId {
        if let Some(&id) = self.relation_ids.get(name) {
            return id;
        }
        let id = self.relation_names.len();
        self.relation_names.push(name.to_string());
        self.relation_ids.insert(name.to_string(), id);
        id
    }

    pub fn entity_id(&self, name: &str) -> Option<EntityId> {
        self.entity_ids.get(name).copied()
    }

    pub fn relation_id(&self, name: &str) -> Option<RelationId> {
        self.relation_ids.get(name).copied()
    }

    pub fn entity_name(&self, id: EntityId) -> &str {
        &self.entity_names[id]
    }

    pub fn relation_name(&self, id: RelationId) -> &str {
        &self.relation_names[id]
    }

    pub fn num_entities(&self) -> usize {
        self.entity_names.len()
    }

    pub fn num_relations(&self) -> usize {
        self.relation_names.len()
    }
}

/// A (head entity, relation, tail entity) fact.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Triple {
    pub head: EntityId,
    pub relation: RelationId,
    pub tail: EntityId,
}

impl Triple {
    pub fn new(head: EntityId, relation: RelationId, tail: EntityId) -> Self {
        Self {
            head,
            relation,
            tail,
        }
    }
}

/// Whether a neighbor sits on the head or tail side of the connecting triple.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Orientation {
    /// Triple is (neighbor, relation, center).
    NeighborIsHead,
    /// Triple is (center, relation, neighbor).
    NeighborIsTail,
}

/// One directed incidence of an entity: the neighbor, the relation, and which
/// side the neighbor occupies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct DirectedHop {
    pub neighbor: EntityId,
    pub relation: RelationId,
    pub orientation: Orientation,
}

impl DirectedHop {
    /// Reconstruct the stored triple this hop came from, given the center
    /// entity the hop was taken at.
    pub fn to_triple(self, center: EntityId) -> Triple {
        match self.orientation {
            Orientation::NeighborIsHead => Triple::new(self.neighbor, self.relation, center),
            Orientation::NeighborIsTail => Triple::new(center, self.relation, self.neighbor),
        }
    }
}

/// A simple directed-hop path of exactly K hops starting at `origin`.
#[derive(Debug, Clone, PartialEq)]
pub struct PathCandidate {
    pub origin: EntityId,
    pub hops: Vec<DirectedHop>,
    /// Degrees of the intermediate entities (first hop target through the
    /// next-to-last hop target); empty for K = 1.
    pub intermediate_degrees: Vec<usize>,
}

impl PathCandidate {
    /// Endpoint of the path: the proxy entity where perturbations land.
    pub fn proxy(&self) -> EntityId {
        self.hops
            .last()
            .expect("paths have at least one hop")
            .neighbor
    }

    /// Entities along the path, origin first, proxy last (K + 1 entries).
    pub fn entities(&self) -> Vec<EntityId> {
        let mut out = Vec::with_capacity(self.hops.len() + 1);
        out.push(self.origin);
        out.extend(self.hops.iter().map(|h| h.neighbor));
        out
    }

    /// The K stored triples the path traverses.
    pub fn edge_triples(&self) -> Vec<Triple> {
        let mut center = self.origin;
        self.hops
            .iter()
            .map(|h| {
                let t = h.to_triple(center);
                center = h.neighbor;
                t
            })
            .collect()
    }
}

/// Ordered, deduplicated triple set with adjacency indexes and exact
/// membership lookup. Immutable after construction; poisoning builds a new
/// store from an edited triple list.
#[derive(Debug, Clone)]
pub struct TripleStore {
    triples: Vec<Triple>,
    by_head: Vec<Vec<u32>>,
    by_tail: Vec<Vec<u32>>,
    members: HashSet<Triple>,
    num_relations: usize,
}

impl TripleStore {
    pub fn new(num_entities: usize, num_relations: usize) -> Self {
        Self {
            triples: Vec::new(),
            by_head: vec![Vec::new(); num_entities],
            by_tail: vec![Vec::new(); num_entities],
            members: HashSet::new(),
            num_relations,
        }
    }

    /// Build a store from an iterator, dropping duplicates. Returns the store
    /// and the number of duplicate entries skipped.
    pub fn from_triples<I>(num_entities: usize, num_relations: usize, triples: I) -> (Self, usize)
    where
        I: IntoIterator<Item = Triple>,
    {
        let mut store = Self::new(num_entities, num_relations);
        let mut duplicates = 0;
        for t in triples {
            if !store.insert(t) {
                duplicates += 1;
            }
        }
        (store, duplicates)
    }

    /// Insert a triple; returns false if it was already present.
    pub fn insert(&mut self, t: Triple) -> bool {
        assert!(
            t.head < self.num_entities() && t.tail < self.num_entities(),
            "entity id out of range"
        );
        assert!(t.relation < self.num_relations, "relation id out of range");
        if !self.members.insert(t) {
            return false;
        }
        let pos = self.triples.len() as u32;
        self.triples.push(t);
        self.by_head[t.head].push(pos);
        self.by_tail[t.tail].push(pos);
        true
    }

    pub fn len(&self) -> usize {
        self.triples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triples.is_empty()
    }

    pub fn triples(&self) -> &[Triple] {
        &self.triples
    }

    pub fn contains(&self, t: &Triple) -> bool {
        self.members.contains(t)
    }

    pub fn num_entities(&self) -> usize {
        self.by_head.len()
    }

    pub fn num_relations(&self) -> usize {
        self.num_relations
    }

    /// Positions of triples with `e` as head, in insertion order.
    pub fn head_positions(&self, e: EntityId) -> &[u32] {
        &self.by_head[e]
    }

    /// Positions of triples with `e` as tail, in insertion order.
    pub fn tail_positions(&self, e: EntityId) -> &[u32] {
        &self.by_tail[e]
    }

    /// Incidence count: head slots plus tail slots (a self-loop counts twice).
    pub fn degree(&self, e: EntityId) -> usize {
        self.by_head[e].len() + self.by_tail[e].len()
    }

    /// One hop per stored incidence of `e`, ordered by triple position; for a
    /// self-loop the head-side hop comes first.
    pub fn neighbors(&self, e: EntityId) -> Vec<DirectedHop> {
        let heads = &self.by_head[e];
        let tails = &self.by_tail[e];
        let mut out = Vec::with_capacity(heads.len() + tails.len());
        let (mut i, mut j) = (0, 0);
        while i < heads.len() || j < tails.len() {
            let take_head = match (heads.get(i), tails.get(j)) {
                (Some(&h), Some(&t)) => h <= t,
                (Some(_), None) => true,
                (None, _) => false,
            };
            if take_head {
                let t = self.triples[heads[i] as usize];
                out.push(DirectedHop {
                    neighbor: t.tail,
                    relation: t.relation,
                    orientation: Orientation::NeighborIsTail,
                });
                i += 1;
            } else {
                let t = self.triples[tails[j] as usize];
                out.push(DirectedHop {
                    neighbor: t.head,
                    relation: t.relation,
                    orientation: Orientation::NeighborIsHead,
                });
                j += 1;
            }
        }
        out
    }

    /// All simple directed-hop paths of exactly `k` hops from `origin`.
    ///
    /// Self-loops are skipped (they cannot carry influence to another entity)
    /// and no entity repeats along a path. Order is depth-first following
    /// `neighbors` order at every level, so it is deterministic for a given
    /// insertion order.
    pub fn enumerate_paths(&self, origin: EntityId, k: usize) -> Vec<PathCandidate> {
        assert!(k >= 1, "paths need at least one hop");
        let mut out = Vec::new();
        let mut visited = vec![false; self.num_entities()];
        visited[origin] = true;
        let mut hops = Vec::with_capacity(k);
        self.dfs_paths(origin, origin, k, &mut hops, &mut visited, &mut out);
        out
    }

    fn dfs_paths(
        &self,
        origin: EntityId,
        current: EntityId,
        remaining: usize,
        hops: &mut Vec<DirectedHop>,
        visited: &mut [bool],
        out: &mut Vec<PathCandidate>,
    ) {
        for hop in self.neighbors(current) {
            if hop.neighbor == current || visited[hop.neighbor] {
                continue;
            }
            hops.push(hop);
            if remaining == 1 {
                let interim = &hops[..hops.len() - 1];
                out.push(PathCandidate {
                    origin,
                    hops: hops.clone(),
                    intermediate_degrees: interim.iter().map(|h| self.degree(h.neighbor)).collect(),
                });
            } else {
                visited[hop.neighbor] = true;
                self.dfs_paths(origin, hop.neighbor, remaining - 1, hops, visited, out);
                visited[hop.neighbor] = false;
            }
            hops.pop();
        }
    }

    /// Order-independent fingerprint of the triple set.
    pub fn content_hash(&self) -> u64 {
        let mut sorted = self.triples.clone();
        sorted.sort_unstable();
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        let mut eat = |v: u64| {
            for byte in v.to_le_bytes() {
                h ^= byte as u64;
                h = h.wrapping_mul(0x1000_0000_01b3);
            }
        };
        eat(sorted.len() as u64);
        for t in sorted {
            eat(t.head as u64);
            eat(t.relation as u64);
            eat(t.tail as u64);
        }
        h
    }
}
