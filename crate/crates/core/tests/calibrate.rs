//! Manual calibration probe: `cargo test -p kgpoison --test calibrate -- --ignored --nocapture`
//! Prints fit quality on train facts, held-out ranking, and attack response
//! for the current synthetic-dataset defaults.

use kgpoison::eval::{aggregate, rank_targets};
use kgpoison::synth::{generate, SynthConfig};
use kgpoison::train::{epoch_loss, train, TrainConfig};
use kgpoison::ModelKind;

#[test]
#[ignore]
fn probe_fit_and_ranking() {
    let ds = generate(&SynthConfig {
        seed: 7,
        ..SynthConfig::default()
    });
    eprintln!(
        "train {} triples, test {} triples, {} entities",
        ds.train.len(),
        ds.test.len(),
        ds.train.num_entities()
    );
    for (epochs, lr, margin) in [
        (300, 0.02, 0.5),
        (300, 0.05, 0.5),
        (600, 0.02, 0.5),
        (300, 0.02, 0.25),
        (300, 0.02, 1.0),
    ] {
        let cfg = TrainConfig {
            dim: 50,
            epochs,
            learning_rate: lr,
            margin,
            seed: 42,
            ..TrainConfig::default()
        };
        let emb = train(&ds.train, ModelKind::TransE, &cfg).unwrap();
        let loss = epoch_loss(&ds.train, &emb, &cfg, usize::MAX);
        let train_sample: Vec<_> = ds.train.triples().iter().copied().take(100).collect();
        let train_rep = aggregate(&rank_targets(&emb, &train_sample, false)).unwrap();
        let test_sample: Vec<_> = ds.test.triples().iter().copied().take(100).collect();
        let test_rep = aggregate(&rank_targets(&emb, &test_sample, false)).unwrap();
        eprintln!(
            "epochs {epochs} lr {lr} margin {margin}: loss {loss:.4} | train mrr {:.3} h10 {:.3} | test mrr {:.3} h10 {:.3}",
            train_rep.mrr, train_rep.hits_at_10, test_rep.mrr, test_rep.hits_at_10
        );
    }
}

#[test]
#[ignore]
fn probe_add_oracle_damage_table() {
    use kgpoison::attack::{
        direct_attack, score_add, shift_vector, AttackConfig, PerturbAction, Perturbation, Side,
    };
    use kgpoison::pipeline::apply_perturbations;
    use kgpoison::Triple;

    let relations: usize = std::env::var("PROBE_RELS")
        .ok()
        .and_then(|v| v.parse().ok())
        .unwrap_or(4);
    let normalize: bool = std::env::var("PROBE_NORM")
        .map(|v| v == "1")
        .unwrap_or(true);
    for trial in [0u64, 1, 2, 3, 4] {
        let ds = generate(&SynthConfig {
            num_entities: 20,
            num_relations: relations,
            mean_out_degree: 2.0,
            co_pair_fraction: 0.4,
            test_fraction: 0.5,
            unsupported_test_fraction: 0.0,
            noise_fraction: 0.03,
            seed: 0xF00 + trial,
        });
        let store = ds.train;
        let twin_rel = |r: usize| if r.is_multiple_of(2) { r + 1 } else { r - 1 };
        let target = *ds
            .test
            .triples()
            .iter()
            .filter(|t| store.contains(&Triple::new(t.head, twin_rel(t.relation), t.tail)))
            .max_by_key(|t| (store.head_positions(t.head).len(), std::cmp::Reverse(**t)))
            .unwrap();
        let cfg = TrainConfig {
            dim: 12,
            epochs: 400,
            learning_rate: 0.02,
            margin: 0.5,
            seed: 7,
            normalize_entities: normalize,
            ..TrainConfig::default()
        };
        let clean = train(&store, ModelKind::TransE, &cfg).unwrap();
        let clean_score = clean.score(target.head, target.relation, target.tail);
        let acfg = AttackConfig {
            budget_m: 1,
            add_candidate_sample: 0,
            rng_seed: trial,
            ..AttackConfig::default()
        };
        let informed =
            direct_attack(&store, &clean, target, &acfg, PerturbAction::Add).unwrap()[0].triple;
        let eps = shift_vector(&clean, target, Side::Head, 1.0).unwrap();
        let mut rows = Vec::new();
        for r in 0..store.num_relations() {
            for e in 0..store.num_entities() {
                let cand = Triple::new(target.head, r, e);
                if e == target.head || cand == target || store.contains(&cand) {
                    continue;
                }
                let edit = Perturbation {
                    action: PerturbAction::Add,
                    triple: cand,
                    benefit: 0.0,
                };
                let poisoned = apply_perturbations(&store, std::slice::from_ref(&edit)).unwrap();
                let emb = train(&poisoned, ModelKind::TransE, &cfg).unwrap();
                let damage = clean_score - emb.score(target.head, target.relation, target.tail);
                let eta = score_add(&clean, target.head, &eps, cand, 1.0).unwrap();
                rows.push((cand, eta, damage));
            }
        }
        rows.sort_by(|a, b| b.2.total_cmp(&a.2));
        let rank = rows.iter().position(|(c, _, _)| *c == informed).unwrap() + 1;
        eprintln!("--- trial {trial}: target {target:?}, informed {informed:?} true-damage rank {rank}/{}", rows.len());
        eprintln!(
            "damage max {:.3} p75 {:.3} median {:.3} min {:.3}",
            rows[0].2,
            rows[rows.len() / 4].2,
            rows[rows.len() / 2].2,
            rows[rows.len() - 1].2
        );
        for (c, eta, dmg) in rows.iter().take(5) {
            eprintln!("  top-damage {c:?} eta {eta:.3} damage {dmg:.3}");
        }
        let mut by_eta = rows.clone();
        by_eta.sort_by(|a, b| b.1.total_cmp(&a.1));
        for (c, eta, dmg) in by_eta.iter().take(5) {
            eprintln!("  top-eta    {c:?} eta {eta:.3} damage {dmg:.3}");
        }
    }
}
