mod oracles;

use std::collections::HashMap;

use echoscope_core::echo::*;
use echoscope_core::synth::{generate_gnp, generate_multiblock, generate_sbm, SbmConfig};
use echoscope_core::{DirectedWeightedGraph, UserId};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_instance(seed: u64) -> DirectedWeightedGraph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(5..=200);
    let p = rng.gen_range(0.005..0.15);
    generate_gnp(n, p, true, seed)
}

#[test]
fn reciprocity_clustering_and_knn_match_brute_force() {
    for seed in 0..50 {
        let g = random_instance(seed);
        let r = g.reciprocity();
        match oracles::reciprocity(&g) {
            Some(want) => assert!((r.value - want).abs() <= 1e-12 && !r.undefined),
            None => assert!(r.undefined),
        }
        for (a, b) in local_clustering(&g).iter().zip(oracles::clustering(&g)) {
            assert!((a - b).abs() <= 1e-12, "seed {seed}: {a} vs {b}");
        }
        for (a, b) in out_neighbor_degree(&g).iter().zip(oracles::knn(&g)) {
            match (a, b) {
                (Some(a), Some(b)) => assert!((a - b).abs() <= 1e-12),
                (None, None) => {}
                other => panic!("seed {seed}: {other:?}"),
            }
        }
    }
}

#[test]
fn density_equals_brute_binning() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let records: Vec<NeighborLeaning> = (0..100)
        .map(|i| NeighborLeaning {
            user: UserId::from(format!("u{i}")),
            own: rng.gen(),
            in_avg: (i % 7 != 0).then(|| rng.gen()),
            out_avg: if i % 11 == 0 { None } else { Some(if i % 5 == 0 { 1.0 } else { rng.gen() }) },
        })
        .collect();
    let bins = 8;
    let d = leaning_density(&records, bins).unwrap();
    let mut want = vec![vec![0u64; bins]; bins];
    for r in &records {
        if let (Some(i), Some(o)) = (r.in_avg, r.out_avg) {
            let bi = (0..bins).find(|&b| i < (b + 1) as f64 / bins as f64).unwrap_or(bins - 1);
            let bo = (0..bins).find(|&b| o < (b + 1) as f64 / bins as f64).unwrap_or(bins - 1);
            want[bi][bo] += 1;
        }
    }
    for i in 0..bins {
        for o in 0..bins {
            assert_eq!(d.get(i, o), want[i][o]);
        }
    }
}

#[test]
fn out_neighbors_share_the_leaning_of_their_block() {
    let pg = generate_sbm(&SbmConfig {
        block_sizes: (400, 616),
        p_in: 0.02,
        p_out: 0.001,
        seed: 3,
        ..Default::default()
    })
    .unwrap();
    let scores: HashMap<UserId, f64> = pg.blocks.iter().map(|(u, &b)| (u.clone(), b as f64)).collect();
    let records = neighbor_leanings(&pg.graph, &scores);
    let r = own_out_correlation(&records).unwrap();
    assert!(r >= 0.9, "correlation {r}");
}

#[test]
fn planted_blocks_become_communities() {
    let pg = generate_multiblock(&[50, 50, 50, 50], 0.2, 0.005, false, 8);
    let c = detect_communities(&pg.graph).unwrap();
    let blocks = pg.block_vec();
    let n = blocks.len();
    let (mut agree, mut pairs) = (0u64, 0u64);
    for i in 0..n {
        for j in i + 1..n {
            pairs += 1;
            if (blocks[i] == blocks[j]) == (c.assignment[i] == c.assignment[j]) {
                agree += 1;
            }
        }
    }
    assert!(agree as f64 / pairs as f64 >= 0.95);
    let singletons: Vec<usize> = (0..n).collect();
    assert!(c.modularity >= modularity(&pg.graph, &singletons));
}

#[test]
fn louvain_is_deterministic() {
    let g = generate_gnp(150, 0.04, true, 2);
    assert_eq!(detect_communities(&g).unwrap(), detect_communities(&g).unwrap());
}

/// Modularity straight from the definition over all node pairs.
fn modularity_oracle(g: &DirectedWeightedGraph, c: &[usize]) -> f64 {
    let n = g.node_count();
    let a = |u: usize, v: usize| (g.edge_weight(u, v).unwrap_or(0) + g.edge_weight(v, u).unwrap_or(0)) as f64;
    let k: Vec<f64> = (0..n).map(|u| (0..n).map(|v| a(u, v)).sum()).collect();
    let m2: f64 = k.iter().sum();
    if m2 == 0.0 {
        return 0.0;
    }
    let mut q = 0.0;
    for u in 0..n {
        for v in 0..n {
            if c[u] == c[v] {
                q += a(u, v) - k[u] * k[v] / m2;
            }
        }
    }
    q / m2
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn communities_partition_nodes_and_beat_singletons(seed in 0u64..1000, n in 2usize..60, p in 0.02f64..0.3) {
        let g = generate_gnp(n, p, true, seed);
        let c = detect_communities(&g).unwrap();
        prop_assert_eq!(c.assignment.len(), n);
        prop_assert!(c.assignment.iter().all(|&k| k < c.count));
        let summaries = summarize_communities(&g, &c, &HashMap::new());
        prop_assert_eq!(summaries.iter().map(|s| s.size).sum::<usize>(), n);
        prop_assert!(summaries.windows(2).all(|w| w[0].size >= w[1].size));
        let singletons: Vec<usize> = (0..n).collect();
        prop_assert!((c.modularity - modularity_oracle(&g, &c.assignment)).abs() < 1e-9);
        prop_assert!(c.modularity >= modularity_oracle(&g, &singletons) - 1e-12);
    }

    #[test]
    fn spectrum_counts_cover_eligible_nodes(seed in 0u64..1000, n in 1usize..80, linear in any::<bool>()) {
        let g = generate_gnp(n, 0.08, true, seed);
        let binning = if linear { Binning::Linear(3) } else { Binning::Log2 };
        let cs = clustering_spectrum(&g, binning, true);
        prop_assert_eq!(cs.iter().map(|p| p.count).sum::<usize>(), n);
        prop_assert!(cs.windows(2).all(|w| w[0].bin_hi <= w[1].bin_lo));
        let ks = knn_spectrum(&g, binning);
        let eligible = (0..n).filter(|&v| g.out_degree(v) > 0).count();
        prop_assert_eq!(ks.iter().map(|p| p.count).sum::<usize>(), eligible);
        prop_assert!(ks.iter().all(|p| p.count >= 1 && p.bin_hi > 1));
    }

    #[test]
    fn flipping_polarity_flips_averages(seed in 0u64..1000, n in 2usize..50) {
        let g = generate_gnp(n, 0.1, true, seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let scores: HashMap<UserId, f64> = g.ids().iter().map(|id| (id.clone(), rng.gen())).collect();
        let flipped: HashMap<UserId, f64> = scores.iter().map(|(k, v)| (k.clone(), 1.0 - v)).collect();
        let a = neighbor_leanings(&g, &scores);
        let b = neighbor_leanings(&g, &flipped);
        for (x, y) in a.iter().zip(&b) {
            prop_assert_eq!(&x.user, &y.user);
            for (p, q) in [(x.in_avg, y.in_avg), (x.out_avg, y.out_avg)] {
                match (p, q) {
                    (Some(p), Some(q)) => prop_assert!((p - (1.0 - q)).abs() < 1e-12),
                    (None, None) => {}
                    _ => prop_assert!(false, "definedness changed"),
                }
            }
        }
    }

    #[test]
    fn averages_stay_within_neighbor_range(seed in 0u64..1000, n in 2usize..50) {
        let g = generate_gnp(n, 0.15, true, seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 7);
        let by_index: Vec<f64> = (0..n).map(|_| rng.gen()).collect();
        let scores: HashMap<UserId, f64> = g.ids().iter().cloned().zip(by_index.iter().copied()).collect();
        for (v, r) in neighbor_leanings(&g, &scores).iter().enumerate() {
            let outs: Vec<f64> = g.out_neighbors(v).iter().map(|&u| by_index[u]).collect();
            prop_assert_eq!(r.out_avg.is_some(), !outs.is_empty());
            if let Some(avg) = r.out_avg {
                let lo = outs.iter().cloned().fold(f64::INFINITY, f64::min);
                let hi = outs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                prop_assert!(avg >= lo - 1e-12 && avg <= hi + 1e-12);
            }
        }
    }
}
