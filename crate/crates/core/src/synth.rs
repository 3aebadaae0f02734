//! Deterministic synthetic knowledge graphs with benchmark-like behavior.
//!
//! Relations come in synonym pairs, the way lexical benchmarks carry
//! inverse/near-duplicate relations. Each entity gets a few fact slots; a
//! slot picks a relation pair and a uniform tail, always emits the fact
//! under one relation of the pair into the training set, and then either
//! co-emits its twin under the paired relation (teaching the model that the
//! two relations coincide) or holds the twin out as a test fact. A held-out
//! twin is thus predictable exactly as long as its aligned base fact
//! survives in training, which is the leverage data poisoning exploits. A
//! slice of unsupported random test facts and some noise triples keep the
//! clean metrics off the ceiling.
//!
//! Used by the test suites and the `synth` CLI command; real datasets drop
//! in through the same TSV loaders.

use crate::graph::{Triple, TripleStore, Vocabulary};
use crate::seeds;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::HashSet;

#[derive(Debug, Clone)]
pub struct SynthConfig {
    pub num_entities: usize,
    /// Rounded down to an even count; relations 2j and 2j+1 are synonyms.
    pub num_relations: usize,
    /// Mean of the (geometric) out-degree distribution; minimum is 1.
    pub mean_out_degree: f64,
    /// Probability that a slot co-emits its twin into training.
    pub co_pair_fraction: f64,
    /// Probability that a slot holds its twin out as a test fact instead.
    pub test_fraction: f64,
    /// Fraction of the final test set drawn as unsupported random facts.
    pub unsupported_test_fraction: f64,
    /// Fraction of uniformly random extra training triples.
    pub noise_fraction: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            num_entities: 600,
            num_relations: 18,
            mean_out_degree: 3.0,
            co_pair_fraction: 0.45,
            test_fraction: 0.25,
            unsupported_test_fraction: 0.2,
            noise_fraction: 0.05,
            seed: 0,
        }
    }
}

#[derive(Debug)]
pub struct SynthDataset {
    pub vocab: Vocabulary,
    pub train: TripleStore,
    pub test: TripleStore,
}

/// Generate a dataset; identical config and seed give identical splits.
pub fn generate(cfg: &SynthConfig) -> SynthDataset {
    assert!(cfg.num_entities >= 8);
    let num_pairs = (cfg.num_relations / 2).max(1);
    let num_relations = num_pairs * 2;
    let mut rng = ChaCha8Rng::seed_from_u64(seeds::mix2(cfg.seed, 0x5E17));

    let mut train: Vec<Triple> = Vec::new();
    let mut test: Vec<Triple> = Vec::new();

    let p = 1.0 / cfg.mean_out_degree.max(1.0);
    let cap = 10usize;
    for h in 0..cfg.num_entities {
        let u: f64 = rng.random_range(0.0..1.0);
        let extra = if p >= 1.0 {
            0
        } else {
            ((1.0 - u).ln() / (1.0 - p).ln()).floor() as usize
        };
        let out_deg = (1 + extra).min(cap);
        for _ in 0..out_deg {
            let pair = rng.random_range(0..num_pairs);
            let flip = rng.random_range(0..2u8) == 1;
            let (base_rel, twin_rel) = if flip {
                (2 * pair + 1, 2 * pair)
            } else {
                (2 * pair, 2 * pair + 1)
            };
            let t = loop {
                let t = rng.random_range(0..cfg.num_entities);
                if t != h {
                    break t;
                }
            };
            train.push(Triple::new(h, base_rel, t));
            let roll: f64 = rng.random_range(0.0..1.0);
            if roll < cfg.co_pair_fraction {
                train.push(Triple::new(h, twin_rel, t));
            } else if roll < cfg.co_pair_fraction + cfg.test_fraction {
                test.push(Triple::new(h, twin_rel, t));
            }
        }
    }

    let noise_count = (train.len() as f64 * cfg.noise_fraction).round() as usize;
    for _ in 0..noise_count {
        let h = rng.random_range(0..cfg.num_entities);
        let t = rng.random_range(0..cfg.num_entities);
        if h == t {
            continue;
        }
        train.push(Triple::new(h, rng.random_range(0..num_relations), t));
    }

    // dedup train; drop test facts that leaked into train
    let mut seen: HashSet<Triple> = HashSet::new();
    train.retain(|t| seen.insert(*t));
    let mut test_seen: HashSet<Triple> = HashSet::new();
    test.retain(|t| !seen.contains(t) && test_seen.insert(*t));

    // unsupported targets: random facts the model has no basis to predict
    let supported = test.len();
    let f = cfg.unsupported_test_fraction.clamp(0.0, 0.9);
    let wanted_unsupported = ((supported as f64) * f / (1.0 - f)).round() as usize;
    let mut added = 0usize;
    let mut guard = 0usize;
    while added < wanted_unsupported && guard < wanted_unsupported * 100 + 100 {
        guard += 1;
        let h = rng.random_range(0..cfg.num_entities);
        let t = rng.random_range(0..cfg.num_entities);
        if h == t {
            continue;
        }
        let cand = Triple::new(h, rng.random_range(0..num_relations), t);
        if !seen.contains(&cand) && test_seen.insert(cand) {
            test.push(cand);
            added += 1;
        }
    }
    train.shuffle(&mut rng);
    test.shuffle(&mut rng);

    let vocab = {
        let mut v = Vocabulary::new();
        for e in 0..cfg.num_entities {
            v.intern_entity(&format!("e{e}"));
        }
        for r in 0..num_relations {
            v.intern_relation(&format!("r{r}"));
        }
        v
    };
    let (train, _) = TripleStore::from_triples(cfg.num_entities, num_relations, train);
    let (test, _) = TripleStore::from_triples(cfg.num_entities, num_relations, test);
    SynthDataset { vocab, train, test }
}
