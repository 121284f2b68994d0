//! Random graph models for tests and benchmarks.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::graph::{Graph, NodeId};
use crate::rngs::StreamRng;

/// G(n, p) on nodes `0..n`.
pub fn erdos_renyi(n: usize, p: f64, directed: bool, rng: &mut StreamRng) -> Graph {
    let mut pairs = Vec::new();
    for u in 0..n {
        let start = if directed { 0 } else { u + 1 };
        for v in start..n {
            if u != v && rng.gen::<f64>() < p {
                pairs.push((u, v));
            }
        }
    }
    Graph::from_pairs(n, directed, &pairs)
}

/// Preferential attachment: each new node links to `m` distinct earlier nodes
/// chosen proportionally to degree, starting from a clique on `m + 1` nodes.
pub fn barabasi_albert(n: usize, m: usize, rng: &mut StreamRng) -> Graph {
    assert!(m >= 1 && n > m, "need n > m >= 1");
    let mut pairs: Vec<(NodeId, NodeId)> = Vec::new();
    let mut ends: Vec<NodeId> = Vec::new();
    for u in 0..=m {
        for v in u + 1..=m {
            pairs.push((u, v));
            ends.extend([u, v]);
        }
    }
    for u in m + 1..n {
        let mut chosen: Vec<NodeId> = Vec::with_capacity(m);
        while chosen.len() < m {
            let t = *ends.choose(rng).expect("seed clique has edges");
            if !chosen.contains(&t) {
                chosen.push(t);
            }
        }
        for t in chosen {
            pairs.push((u, t));
            ends.extend([u, t]);
        }
    }
    Graph::from_pairs(n, false, &pairs)
}

/// Planted partition: `groups` blocks of `size` nodes, edge probability
/// `p_in` inside a block and `p_out` across blocks.
pub fn planted_partition(
    groups: usize,
    size: usize,
    p_in: f64,
    p_out: f64,
    rng: &mut StreamRng,
) -> Graph {
    let n = groups * size;
    let mut pairs = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            let p = if u / size == v / size { p_in } else { p_out };
            if rng.gen::<f64>() < p {
                pairs.push((u, v));
            }
        }
    }
    Graph::from_pairs(n, false, &pairs)
}

/// `communities` random groups of `size` distinct nodes drawn from `0..n`
/// (groups may overlap); edge probability `p_in` within each group plus
/// G(n, `p_out`) background noise.
pub fn overlapping_communities(
    n: usize,
    communities: usize,
    size: usize,
    p_in: f64,
    p_out: f64,
    rng: &mut StreamRng,
) -> Graph {
    assert!(size <= n, "community larger than node set");
    let mut pairs = Vec::new();
    let all: Vec<NodeId> = (0..n).collect();
    for _ in 0..communities {
        let members: Vec<NodeId> = all.choose_multiple(rng, size).copied().collect();
        for (i, &u) in members.iter().enumerate() {
            for &v in &members[i + 1..] {
                if rng.gen::<f64>() < p_in {
                    pairs.push((u.min(v), u.max(v)));
                }
            }
        }
    }
    for u in 0..n {
        for v in u + 1..n {
            if rng.gen::<f64>() < p_out {
                pairs.push((u, v));
            }
        }
    }
    pairs.sort_unstable();
    pairs.dedup();
    Graph::from_pairs(n, false, &pairs)
}

/// Two cliques of size `k` joined by a single edge between node `0` and node `k`.
pub fn two_cliques(k: usize, bridged: bool) -> Graph {
    let mut pairs = Vec::new();
    for offset in [0, k] {
        for u in 0..k {
            for v in u + 1..k {
                pairs.push((offset + u, offset + v));
            }
        }
    }
    if bridged {
        pairs.push((0, k));
    }
    Graph::from_pairs(2 * k, false, &pairs)
}
