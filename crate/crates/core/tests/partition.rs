use std::collections::HashMap;

use echoscope_core::partition::*;
use echoscope_core::synth::{generate_sbm, PlantedGraph, SbmConfig};
use echoscope_core::{DirectedWeightedGraph, UserId};
use proptest::prelude::*;

fn planted(sizes: (usize, usize), seed: u64) -> (DirectedWeightedGraph, Vec<usize>) {
    let PlantedGraph { graph, blocks } = generate_sbm(&SbmConfig {
        block_sizes: sizes,
        seed,
        ..Default::default()
    })
    .unwrap();
    let g = graph.giant_component();
    let truth = g.ids().iter().map(|id| blocks[id]).collect();
    (g, truth)
}

/// Share of nodes whose side matches the planted block, up to polarity.
fn agreement(sides: &[u8], truth: &[usize]) -> f64 {
    let same = sides.iter().zip(truth).filter(|(&s, &t)| s as usize == t).count();
    same.max(sides.len() - same) as f64 / sides.len() as f64
}

#[test]
fn single_bisection_recovers_planted_blocks() {
    for seed in 0..5 {
        let (g, truth) = planted((100, 100), seed);
        let b = bipartition_once(&g, 1.0, &PartitionConfig::default(), 0).unwrap();
        assert!(agreement(&b.sides, &truth) >= 0.98, "seed {seed}");
    }
}

#[test]
fn ensemble_on_planted_blocks_is_extreme() {
    for seed in 0..3 {
        let (g, truth) = planted((100, 100), seed);
        let scores = ensemble_leaning(&g, &PartitionConfig::default()).unwrap();
        assert!(extreme_count(&scores, 0.05) as f64 >= 0.95 * g.node_count() as f64);
        let sides: Vec<u8> = scores.iter().map(|s| u8::from(s.score >= 0.5)).collect();
        assert!(agreement(&sides, &truth) >= 0.98);
    }
}

#[test]
fn tuning_finds_the_planted_ratio() {
    for seed in 0..3 {
        let (g, _) = planted((200, 308), seed);
        let cfg = PartitionConfig {
            runs: 50,
            ..Default::default()
        };
        let result = tune_balance(&g, &[1.0, 1.54], &cfg).unwrap();
        assert_eq!(result.best_ratio, 1.54, "seed {seed}");
    }
}

#[test]
fn seeds_label_extreme_users_by_planted_side() {
    let (g, truth) = planted((100, 154), 4);
    let cfg = PartitionConfig {
        balance_ratio: 1.54,
        ..Default::default()
    };
    let scores = ensemble_leaning(&g, &cfg).unwrap();
    let planted_label = |b: usize| if b == 0 { StanceLabel::Skeptic } else { StanceLabel::Advocate };
    // three highest in-degree users per block
    let mut seeds: HashMap<UserId, StanceLabel> = HashMap::new();
    for block in 0..2 {
        let mut members: Vec<usize> = (0..g.node_count()).filter(|&v| truth[v] == block).collect();
        members.sort_by_key(|&v| (std::cmp::Reverse(g.in_degree(v)), v));
        for &v in &members[..3] {
            seeds.insert(g.id(v).clone(), planted_label(block));
        }
    }
    let assigned = assign_stances(&scores, &seeds, 0.05).unwrap();
    for (v, id) in g.ids().iter().enumerate() {
        let l = assigned.labels[id];
        if l != StanceLabel::Unassigned {
            assert_eq!(l, planted_label(truth[v]), "{id}");
        }
    }
    let oriented = orient_scores(&scores, assigned.zero_side);
    for s in &oriented {
        match assigned.labels[&s.user] {
            StanceLabel::Skeptic => assert!(s.score <= 0.05),
            StanceLabel::Advocate => assert!(s.score >= 0.95),
            StanceLabel::Unassigned => {}
        }
    }
}

#[test]
fn scores_do_not_depend_on_thread_count() {
    let (g, _) = planted((60, 90), 1);
    let cfg = PartitionConfig {
        runs: 16,
        ..Default::default()
    };
    let pool = |n| rayon::ThreadPoolBuilder::new().num_threads(n).build().unwrap();
    let one = pool(1).install(|| ensemble_leaning(&g, &cfg).unwrap());
    let three = pool(3).install(|| ensemble_leaning(&g, &cfg).unwrap());
    assert_eq!(one, three);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn parts_respect_the_balance_target(seed in 0u64..1000, ratio in 1.0f64..2.5) {
        let (g, _) = planted((50, 70), seed);
        let cfg = PartitionConfig::default();
        let b = bipartition_once(&g, ratio, &cfg, seed).unwrap();
        let n = g.node_count() as f64;
        let [_, ones] = b.part_sizes();
        let target = n * ratio / (1.0 + ratio);
        prop_assert!((ones as f64 - target).abs() <= cfg.balance_tolerance * n + 1.0);
        prop_assert!(b.part_sizes().iter().all(|&s| s > 0));
    }

    #[test]
    fn refinement_never_worsens_the_cut(seed in 0u64..1000) {
        let (g, _) = planted((80, 80), seed);
        let b = bipartition_once(&g, 1.0, &PartitionConfig::default(), seed).unwrap();
        prop_assert!(!b.trace.is_empty());
        for level in &b.trace {
            prop_assert!(level.cut_after <= level.cut_before);
        }
        prop_assert_eq!(b.trace.last().unwrap().cut_after as u64, b.cut);
    }

    #[test]
    fn ensemble_is_reproducible(seed in 0u64..1000) {
        let (g, _) = planted((30, 40), seed);
        let cfg = PartitionConfig { runs: 8, rng_seed: seed, ..Default::default() };
        let a = ensemble_leaning(&g, &cfg).unwrap();
        prop_assert_eq!(&a, &ensemble_leaning(&g, &cfg).unwrap());
        for s in &a {
            prop_assert!((0.0..=1.0).contains(&s.score));
            prop_assert_eq!(s.runs, 8);
        }
    }

    #[test]
    fn flipping_polarity_mirrors_scores(scores in prop::collection::vec(0.0f64..=1.0, 1..40)) {
        let rows: Vec<LeaningScore> = scores
            .iter()
            .enumerate()
            .map(|(i, &score)| LeaningScore { user: UserId::from(format!("u{i}")), score, runs: 100 })
            .collect();
        let flipped = orient_scores(&rows, StanceLabel::Advocate);
        for (a, b) in rows.iter().zip(&flipped) {
            prop_assert!((a.score + b.score - 1.0).abs() < 1e-15);
            prop_assert_eq!(a.is_extreme(0.05), b.is_extreme(0.05));
        }
    }
}
