mod common;

use std::collections::{BTreeSet, HashSet};

use persona_core::generators::{barabasi_albert, erdos_renyi, planted_partition};
use persona_core::linkpred::{evaluate_scores, mean_stderr};
use persona_core::rngs::{self, tags};
use persona_core::{
    largest_component, roc_auc, run_experiment, run_experiments, sample_negatives, score_pair,
    split_edges, Aggregation, EmbeddingMatrix, Error, EvalConfig, Graph, LinkPredSplit, Method,
    NodeEmbedding, Persona2VecConfig, StageConfig,
};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::Rng;

use common::{chi_square_p, connected_by_bfs};

/// Visits edges in the split's order and re-checks connectivity by BFS for
/// every candidate.
fn sequential_split(g: &Graph, fraction: f64, seed: u64) -> Vec<usize> {
    let m = g.n_edges();
    let target = ((fraction * m as f64).round() as usize).max(1);
    let mut order: Vec<usize> = (0..m).collect();
    order.shuffle(&mut rngs::stream(seed, tags::SPLIT, &[]));
    let pairs: Vec<_> = g.edges().iter().map(|e| (e.src, e.dst)).collect();
    let mut removed = BTreeSet::new();
    let mut accepted = Vec::new();
    for i in order {
        if accepted.len() == target {
            break;
        }
        removed.insert(i);
        if connected_by_bfs(g.n_nodes(), &pairs, &removed) {
            accepted.push(i);
        } else {
            removed.remove(&i);
        }
    }
    accepted
}

fn connected_graphs() -> Vec<Graph> {
    (0..40u64)
        .map(|i| {
            let mut rng = rngs::stream(12, 0, &[i]);
            let g = match i % 3 {
                0 => erdos_renyi(30 + i as usize, 0.12, false, &mut rng),
                1 => erdos_renyi(25, 0.1, true, &mut rng),
                _ => barabasi_albert(40, 1 + (i as usize % 3), &mut rng),
            };
            largest_component(&g).unwrap()
        })
        .filter(|g| g.n_edges() >= g.n_nodes())
        .collect()
}

#[test]
fn split_matches_sequential_rejection() {
    let graphs = connected_graphs();
    assert!(graphs.len() >= 30);
    for (i, g) in graphs.iter().enumerate() {
        for seed in 0..3 {
            for fraction in [0.1, 0.5, 0.9] {
                let split = split_edges(g, fraction, seed).unwrap();
                assert_eq!(
                    split.test,
                    sequential_split(g, fraction, seed),
                    "graph {i} seed {seed} fraction {fraction}"
                );
            }
        }
    }
}

#[test]
fn split_partitions_edges_and_keeps_train_connected() {
    for g in connected_graphs() {
        let split = split_edges(&g, 0.5, 7).unwrap();
        let mut all: Vec<usize> = split.train.iter().chain(&split.test).copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..g.n_edges()).collect::<Vec<_>>());
        let pairs: Vec<_> = g.edges().iter().map(|e| (e.src, e.dst)).collect();
        let removed: BTreeSet<usize> = split.test.iter().copied().collect();
        assert!(connected_by_bfs(g.n_nodes(), &pairs, &removed));
        let removable = g.n_edges() - (g.n_nodes() - 1);
        let target = ((0.5 * g.n_edges() as f64).round() as usize).max(1);
        assert_eq!(split.test.len(), target.min(removable));
    }
}

#[test]
fn split_examples() {
    let tri = Graph::from_pairs(3, false, &[(0, 1), (1, 2), (0, 2)]);
    let mut seen = BTreeSet::new();
    for seed in 0..30 {
        let s = split_edges(&tri, 1.0 / 3.0, seed).unwrap();
        assert_eq!(s.test.len(), 1);
        seen.insert(s.test[0]);
    }
    assert_eq!(seen.len(), 3);

    let tree = Graph::from_pairs(5, false, &[(0, 1), (1, 2), (1, 3), (3, 4)]);
    assert!(matches!(
        split_edges(&tree, 0.5, 0),
        Err(Error::NoRemovableEdges)
    ));
    assert!(split_edges(&tree, 0.5, 0)
        .unwrap_err()
        .to_string()
        .starts_with("no removable edges"));
}

#[test]
fn split_is_seed_reproducible() {
    let g = &connected_graphs()[0];
    assert_eq!(
        split_edges(g, 0.5, 3).unwrap(),
        split_edges(g, 0.5, 3).unwrap()
    );
    assert_ne!(
        split_edges(g, 0.5, 3).unwrap(),
        split_edges(g, 0.5, 4).unwrap()
    );
}

#[test]
fn negatives_never_hit_edges() {
    let graphs: Vec<Graph> = (0..10u64)
        .map(|i| erdos_renyi(20, 0.2, i % 2 == 1, &mut rngs::stream(3, 0, &[i])))
        .collect();
    for seed in 0..1000u64 {
        let g = &graphs[(seed % 10) as usize];
        let edges: HashSet<(usize, usize)> = g.edges().iter().map(|e| (e.src, e.dst)).collect();
        let count = 1 + (seed as usize % 40);
        let neg = sample_negatives(g, count, seed).unwrap();
        assert_eq!(neg.len(), count);
        let distinct: HashSet<_> = neg.iter().copied().collect();
        assert_eq!(distinct.len(), count);
        for &(u, v) in &neg {
            assert_ne!(u, v);
            assert!(!edges.contains(&(u, v)));
            if !g.is_directed() {
                assert!(!edges.contains(&(v, u)));
            }
        }
    }
}

#[test]
fn negatives_are_uniform() {
    // path 0-1-2-3-4 has 6 non-adjacent pairs
    let g = Graph::from_pairs(5, false, &[(0, 1), (1, 2), (2, 3), (3, 4)]);
    let cells = [(0, 2), (0, 3), (0, 4), (1, 3), (1, 4), (2, 4)];
    let mut counts = [0u64; 6];
    for seed in 0..30_000 {
        let (u, v) = sample_negatives(&g, 1, seed).unwrap()[0];
        counts[cells.iter().position(|&c| c == (u, v)).unwrap()] += 1;
    }
    assert!(chi_square_p(&counts, &[1.0 / 6.0; 6]) > 0.01);
}

#[test]
fn negative_sampling_limits() {
    let k4 = Graph::from_pairs(4, false, &[(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]);
    assert!(matches!(
        sample_negatives(&k4, 1, 0),
        Err(Error::NoNegativePairs { available: 0, .. })
    ));
    let empty = Graph::from_pairs(3, false, &[]);
    let mut all = sample_negatives(&empty, 3, 0).unwrap();
    all.sort_unstable();
    assert_eq!(all, vec![(0, 1), (0, 2), (1, 2)]);
}

fn auc_oracle(pos: &[f64], neg: &[f64]) -> f64 {
    let mut wins = 0.0;
    for &p in pos {
        for &n in neg {
            if p > n {
                wins += 1.0;
            } else if p == n {
                wins += 0.5;
            }
        }
    }
    wins / (pos.len() * neg.len()) as f64
}

#[test]
fn auc_examples() {
    assert_eq!(roc_auc(&[1.0], &[0.0]), 1.0);
    assert_eq!(roc_auc(&[0.3; 4], &[0.3; 7]), 0.5);
    assert_eq!(roc_auc(&[0.9, 0.4], &[0.6, 0.1]), 0.75);
    assert!(roc_auc(&[], &[1.0]).is_nan());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn auc_matches_pair_count(
        pos in prop::collection::vec(0i32..20, 1..40),
        neg in prop::collection::vec(0i32..20, 1..40),
    ) {
        let pos: Vec<f64> = pos.into_iter().map(f64::from).collect();
        let neg: Vec<f64> = neg.into_iter().map(f64::from).collect();
        prop_assert_eq!(roc_auc(&pos, &neg), auc_oracle(&pos, &neg));
    }

    #[test]
    fn auc_is_invariant_under_monotone_maps(
        pos in prop::collection::vec(-5.0f64..5.0, 1..50),
        neg in prop::collection::vec(-5.0f64..5.0, 1..50),
        scale in 0.1f64..10.0,
        shift in -3.0f64..3.0,
    ) {
        let base = roc_auc(&pos, &neg);
        let maps: [&dyn Fn(f64) -> f64; 3] = [
            &|x| scale * x + shift,
            &|x| x.exp(),
            &|x| 1.0 / (1.0 + (-x).exp()),
        ];
        for f in maps {
            let p: Vec<f64> = pos.iter().map(|&x| f(x)).collect();
            let n: Vec<f64> = neg.iter().map(|&x| f(x)).collect();
            prop_assert_eq!(roc_auc(&p, &n), base);
        }
        let p: Vec<f64> = pos.iter().map(|x| -x).collect();
        let n: Vec<f64> = neg.iter().map(|x| -x).collect();
        prop_assert!((roc_auc(&p, &n) - (1.0 - base)).abs() < 1e-12);
    }
}

#[test]
fn aggregation_examples() {
    // u has personas scoring 0.2 and 0.9 against v's single persona
    let m = EmbeddingMatrix::from_parts(3, 1, vec![0.2, 0.9, 1.0], vec![0.0; 3]).unwrap();
    let emb = NodeEmbedding {
        v2p: vec![vec![0, 1], vec![2]],
        matrix: m,
    };
    assert!((score_pair(&emb, 0, 1, Aggregation::Max).unwrap() - 0.9).abs() < 1e-7);
    assert!((score_pair(&emb, 0, 1, Aggregation::Min).unwrap() - 0.2).abs() < 1e-7);
    assert!((score_pair(&emb, 0, 1, Aggregation::Mean).unwrap() - 0.55).abs() < 1e-7);
    assert!(matches!(
        score_pair(&emb, 0, 5, Aggregation::Max),
        Err(Error::UnknownNode(5))
    ));

    let single = NodeEmbedding::single(
        EmbeddingMatrix::from_parts(2, 2, vec![1.0, 2.0, 3.0, -1.0], vec![0.0; 4]).unwrap(),
    );
    for agg in [Aggregation::Max, Aggregation::Min, Aggregation::Mean] {
        assert_eq!(score_pair(&single, 0, 1, agg).unwrap(), 1.0);
    }
}

#[test]
fn aggregations_are_ordered() {
    let mut rng = rngs::stream(8, 0, &[]);
    for _ in 0..1000 {
        let (nu, nv, dim) = (
            rng.gen_range(1..5),
            rng.gen_range(1..5),
            rng.gen_range(1..6),
        );
        let rows = nu + nv;
        let phi: Vec<f32> = (0..rows * dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let m = EmbeddingMatrix::from_parts(rows, dim, phi.clone(), vec![0.0; rows * dim]).unwrap();
        let emb = NodeEmbedding {
            v2p: vec![(0..nu).collect(), (nu..rows).collect()],
            matrix: m,
        };
        let mut brute = Vec::new();
        for p in 0..nu {
            for q in nu..rows {
                let d: f64 = (0..dim)
                    .map(|k| phi[p * dim + k] as f64 * phi[q * dim + k] as f64)
                    .sum();
                brute.push(d);
            }
        }
        let max = score_pair(&emb, 0, 1, Aggregation::Max).unwrap();
        let min = score_pair(&emb, 0, 1, Aggregation::Min).unwrap();
        let mean = score_pair(&emb, 0, 1, Aggregation::Mean).unwrap();
        let bmax = brute.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let bmin = brute.iter().cloned().fold(f64::INFINITY, f64::min);
        let bmean = brute.iter().sum::<f64>() / brute.len() as f64;
        assert!((max - bmax).abs() < 1e-6 && (min - bmin).abs() < 1e-6);
        assert!((mean - bmean).abs() < 1e-6);
        assert!(min <= mean + 1e-12 && mean <= max + 1e-12);
    }
}

#[test]
fn oracle_and_constant_scorers() {
    let g =
        largest_component(&erdos_renyi(200, 0.05, false, &mut rngs::stream(2, 0, &[]))).unwrap();
    let split = LinkPredSplit::new(&g, 0.5, 1).unwrap();
    let edges: HashSet<(usize, usize)> = split.test_pairs(&g).into_iter().collect();
    let oracle = evaluate_scores(&split, &g, |u, v| {
        Ok(if edges.contains(&(u, v)) { 1.0 } else { 0.0 })
    })
    .unwrap();
    assert_eq!(oracle, 1.0);
    assert_eq!(evaluate_scores(&split, &g, |_, _| Ok(0.25)).unwrap(), 0.5);
}

#[test]
fn random_scorer_is_near_one_half() {
    let g = barabasi_albert(3000, 4, &mut rngs::stream(6, 0, &[]));
    let split = LinkPredSplit::new(&g, 0.5, 2).unwrap();
    assert!(split.test.len() >= 5000);
    assert_eq!(split.negatives.len(), split.test.len());
    for seed in 0..5u64 {
        let auc = evaluate_scores(&split, &g, |u, v| {
            Ok(rngs::mix(seed, 0, &[u as u64, v as u64]) as f64)
        })
        .unwrap();
        assert!((0.47..=0.53).contains(&auc), "seed {seed}: {auc}");
    }
}

fn small_cfg() -> Persona2VecConfig {
    Persona2VecConfig {
        dim: 16,
        base: StageConfig {
            walks_per_node: 5,
            walk_length: 20,
            window: 3,
            epochs: 1,
        },
        persona: StageConfig {
            walks_per_node: 3,
            walk_length: 30,
            window: 2,
            epochs: 1,
        },
        ..Persona2VecConfig::default()
    }
}

#[test]
fn experiment_is_leak_free_and_reproducible() {
    let g = planted_partition(4, 25, 0.3, 0.01, &mut rngs::stream(1, 0, &[]));
    let g = largest_component(&g).unwrap();
    let cfg = small_cfg();
    for method in [Method::Persona, Method::Baseline] {
        let eval = EvalConfig {
            method,
            ..EvalConfig::default()
        };
        let a = run_experiment(&g, &cfg, &eval, 5).unwrap();
        let b = run_experiment(&g, &cfg, &eval, 5).unwrap();
        assert_eq!(a.auc, b.auc);
        assert!(a.auc > 0.6, "{method:?}: {}", a.auc);
        assert_eq!(a.n_train_edges + a.n_test_edges, g.n_edges());
        assert_eq!(a.n_negative_edges, a.n_test_edges);

        let split = LinkPredSplit::new(&g, 0.5, 5).unwrap();
        let train = split.train_graph(&g);
        for (u, v) in split.test_pairs(&g) {
            assert!(!train.has_edge(u, v));
        }
    }
    let summary = run_experiments(&g, &cfg, &EvalConfig::default(), &[1, 2, 3]).unwrap();
    assert_eq!(summary.runs.len(), 3);
    let aucs: Vec<f64> = summary.runs.iter().map(|r| r.auc).collect();
    assert_eq!(mean_stderr(&aucs), (summary.mean_auc, summary.stderr_auc));
}

#[test]
fn mean_and_standard_error() {
    let (m, s) = mean_stderr(&[1.0, 2.0, 3.0, 4.0]);
    assert_eq!(m, 2.5);
    assert!((s - (5.0f64 / 3.0 / 4.0).sqrt()).abs() < 1e-12);
    assert_eq!(mean_stderr(&[0.7]), (0.7, 0.0));
    assert!(mean_stderr(&[]).0.is_nan());
}
