//! Brute-force oracles shared by the integration tests. None of these call
//! into the code paths they check.

#![allow(dead_code)]

use std::collections::{BTreeSet, HashMap, VecDeque};

use persona_core::generators::{barabasi_albert, erdos_renyi};
use persona_core::{rngs, EdgeKind, Graph, NodeId, PersonaGraph};

/// Neighbors of `v` ignoring direction, from a scan of the edge list.
pub fn neighbors_by_scan(g: &Graph, v: NodeId) -> BTreeSet<NodeId> {
    let mut out = BTreeSet::new();
    for e in g.edges() {
        if e.src == v {
            out.insert(e.dst);
        }
        if e.dst == v {
            out.insert(e.src);
        }
    }
    out
}

/// Connected components of the ego-network of `v` (direction ignored), by
/// BFS over an adjacency rebuilt from the raw edge list.
pub fn ego_components(g: &Graph, v: NodeId) -> Vec<BTreeSet<NodeId>> {
    let members = neighbors_by_scan(g, v);
    let mut adj: HashMap<NodeId, Vec<NodeId>> = HashMap::new();
    for e in g.edges() {
        if members.contains(&e.src) && members.contains(&e.dst) {
            adj.entry(e.src).or_default().push(e.dst);
            adj.entry(e.dst).or_default().push(e.src);
        }
    }
    let mut seen = BTreeSet::new();
    let mut comps = Vec::new();
    for &s in &members {
        if !seen.insert(s) {
            continue;
        }
        let mut comp = BTreeSet::from([s]);
        let mut queue = VecDeque::from([s]);
        while let Some(x) = queue.pop_front() {
            for &y in adj.get(&x).map(Vec::as_slice).unwrap_or(&[]) {
                if seen.insert(y) {
                    comp.insert(y);
                    queue.push_back(y);
                }
            }
        }
        comps.push(comp);
    }
    comps
}

/// Weak connectivity by BFS over the raw edge list, skipping `removed`.
pub fn connected_by_bfs(n: usize, edges: &[(NodeId, NodeId)], removed: &BTreeSet<usize>) -> bool {
    if n == 0 {
        return true;
    }
    let mut adj = vec![Vec::new(); n];
    for (i, &(a, b)) in edges.iter().enumerate() {
        if !removed.contains(&i) {
            adj[a].push(b);
            adj[b].push(a);
        }
    }
    let mut seen = vec![false; n];
    seen[0] = true;
    let mut stack = vec![0];
    let mut count = 1;
    while let Some(x) = stack.pop() {
        for &y in &adj[x] {
            if !seen[y] {
                seen[y] = true;
                count += 1;
                stack.push(y);
            }
        }
    }
    count == n
}

/// Checks every structural property of a persona graph against `g`:
/// persona bookkeeping, cluster partition, edge inheritance (each original
/// arc matched to persona clusters exhaustively), weight preservation and the
/// persona cliques. Returns the first violation found.
pub fn check_persona_graph(g: &Graph, pg: &PersonaGraph) -> Result<(), String> {
    let n = g.n_nodes();
    if pg.n_original_nodes() != n {
        return Err(format!(
            "{} original nodes, expected {n}",
            pg.n_original_nodes()
        ));
    }
    let total: usize = (0..n).map(|v| pg.personas_of(v).len()).sum();
    if total != pg.n_personas() || pg.graph().n_nodes() != total {
        return Err("persona count does not match v2p".into());
    }
    if !pg.graph().is_directed() {
        return Err("persona graph must be directed".into());
    }
    let mut seen = vec![false; total];
    for v in 0..n {
        let ps = pg.personas_of(v);
        if ps.is_empty() {
            return Err(format!("node {v} has no persona"));
        }
        for &p in ps {
            if seen[p] || pg.owner(p) != v {
                return Err(format!("persona {p} listed twice or owned elsewhere"));
            }
            seen[p] = true;
        }
        // partition of the neighbor set
        let nbrs = neighbors_by_scan(g, v);
        let mut union = BTreeSet::new();
        for &p in ps {
            for &u in pg.cluster(p) {
                if !union.insert(u) {
                    return Err(format!("node {v}: neighbor {u} in two clusters"));
                }
            }
        }
        if union != nbrs {
            return Err(format!("node {v}: clusters do not cover its neighbors"));
        }
        if nbrs.is_empty() {
            if ps.len() != 1 || !pg.cluster(ps[0]).is_empty() {
                return Err(format!("isolated node {v} must have one empty persona"));
            }
        } else if ps.len() > nbrs.len() || ps.iter().any(|&p| pg.cluster(p).is_empty()) {
            return Err(format!(
                "node {v}: more personas than neighbors or empty cluster"
            ));
        }
    }

    let mut arcs: HashMap<(usize, usize), (f64, EdgeKind)> = HashMap::new();
    for (e, &k) in pg.graph().edges().iter().zip(pg.edge_kinds()) {
        if arcs.insert((e.src, e.dst), (e.weight, k)).is_some() {
            return Err("duplicate persona-graph arc".into());
        }
    }
    if arcs.len() != pg.edge_kinds().len() {
        return Err("edge kinds misaligned".into());
    }

    // inheritance: exactly one persona pair per original edge
    let mut expected_original: HashMap<(usize, usize), f64> = HashMap::new();
    let (mut weight_in, mut weight_out) = (Vec::new(), Vec::new());
    for e in g.edges() {
        let mut matches = Vec::new();
        for &p in pg.personas_of(e.src) {
            for &q in pg.personas_of(e.dst) {
                if pg.cluster(p).contains(&e.dst) && pg.cluster(q).contains(&e.src) {
                    matches.push((p, q));
                }
            }
        }
        if matches.len() != 1 {
            return Err(format!(
                "edge {}-{} matches {} persona pairs",
                e.src,
                e.dst,
                matches.len()
            ));
        }
        let (p, q) = matches[0];
        expected_original.insert((p, q), e.weight);
        weight_in.push(e.weight);
        if !g.is_directed() {
            expected_original.insert((q, p), e.weight);
            weight_in.push(e.weight);
        }
    }
    let mut k_out = vec![0usize; total];
    for (&(p, q), &(w, kind)) in &arcs {
        if kind == EdgeKind::Original {
            match expected_original.get(&(p, q)) {
                Some(&ew) if ew == w => {}
                _ => return Err(format!("unexpected original arc {p}->{q} weight {w}")),
            }
            k_out[p] += 1;
            weight_out.push(w);
        }
    }
    if weight_out.len() != expected_original.len() {
        return Err("missing inherited arcs".into());
    }
    weight_in.sort_by(f64::total_cmp);
    weight_out.sort_by(f64::total_cmp);
    if weight_in.iter().sum::<f64>() != weight_out.iter().sum::<f64>() {
        return Err("total original weight changed".into());
    }

    // persona cliques
    let lambda = pg.lambda();
    for v in 0..n {
        let ps = pg.personas_of(v);
        let mut count = 0;
        for &p in ps {
            if pg.original_out_degree(p) != k_out[p] {
                return Err(format!("persona {p}: reported out-degree differs"));
            }
            for &q in ps {
                if p == q {
                    continue;
                }
                match arcs.get(&(p, q)) {
                    Some(&(w, EdgeKind::Persona)) => {
                        let expected = lambda * k_out[p].max(1) as f64;
                        if (w - expected).abs() > 1e-12 * expected.max(1.0) {
                            return Err(format!(
                                "persona arc {p}->{q} weight {w}, expected {expected}"
                            ));
                        }
                        count += 1;
                    }
                    _ => return Err(format!("missing persona arc {p}->{q}")),
                }
            }
        }
        if count != ps.len() * (ps.len() - 1) {
            return Err(format!("node {v}: persona clique incomplete"));
        }
    }
    let persona_total: usize = (0..n)
        .map(|v| {
            let k = pg.personas_of(v).len();
            k * (k - 1)
        })
        .sum();
    if persona_total + expected_original.len() != arcs.len() {
        return Err("persona graph has extra arcs".into());
    }
    Ok(())
}

/// 100 graphs alternating ER (undirected and directed) and BA models, with
/// varying sizes and densities.
pub fn random_graph_corpus(seed: u64) -> Vec<Graph> {
    (0..100u64)
        .map(|i| {
            let mut rng = rngs::stream(seed, 0, &[i]);
            let n = 10 + (i as usize * 7) % 60;
            match i % 4 {
                0 => erdos_renyi(n, 0.08 + (i % 5) as f64 * 0.03, false, &mut rng),
                1 => erdos_renyi(n, 0.05 + (i % 3) as f64 * 0.03, true, &mut rng),
                2 => barabasi_albert(n, 1 + (i as usize % 3), &mut rng),
                _ => barabasi_albert(n, 2, &mut rng),
            }
        })
        .collect()
}

/// Pearson chi-square p-value of `observed` counts against `probs`.
pub fn chi_square_p(observed: &[u64], probs: &[f64]) -> f64 {
    use statrs::distribution::{ChiSquared, ContinuousCDF};
    let total: u64 = observed.iter().sum();
    let mut stat = 0.0;
    let mut cells = 0;
    for (&o, &p) in observed.iter().zip(probs) {
        let e = p * total as f64;
        if e > 0.0 {
            stat += (o as f64 - e).powi(2) / e;
            cells += 1;
        } else if o > 0 {
            return 0.0;
        }
    }
    let dist = ChiSquared::new((cells - 1) as f64).expect("at least two cells");
    1.0 - dist.cdf(stat)
}

/// Synthetic ego node 0 whose neighborhood falls into `n_p` groups of `k`
/// mutually path-connected leaves, so each persona of node 0 has exactly `k`
/// original out-arcs.
pub fn star_of_groups(n_p: usize, k: usize) -> Graph {
    let mut pairs = Vec::new();
    let mut next = 1;
    for _ in 0..n_p {
        let first = next;
        for j in 0..k {
            pairs.push((0, first + j));
            if j > 0 {
                pairs.push((first + j - 1, first + j));
            }
        }
        next += k;
    }
    Graph::from_pairs(next, false, &pairs)
}

/// SGNS loss for one positive and its negatives, in f64.
pub fn sgns_loss(center: &[f64], context: &[f64], negatives: &[Vec<f64>]) -> f64 {
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    let log_sigmoid = |x: f64| -(1.0 + (-x).exp()).ln();
    -log_sigmoid(dot(center, context))
        - negatives
            .iter()
            .map(|n| log_sigmoid(-dot(center, n)))
            .sum::<f64>()
}

/// Relative error between the gradient implied by one SGD step of size 1 and
/// central finite differences of [`sgns_loss`], over all touched coordinates.
pub fn sgns_gradient_error(center: &[f64], context: &[f64], negatives: &[Vec<f64>]) -> f64 {
    let mut c = center.to_vec();
    let mut x = context.to_vec();
    let mut ns = negatives.to_vec();
    persona_core::skipgram::sgns_step(&mut c, &mut x, &mut ns, 1.0);
    // a unit step moves every vector by minus its gradient
    let mut analytic: Vec<f64> = Vec::new();
    analytic.extend(c.iter().zip(center).map(|(a, b)| b - a));
    analytic.extend(x.iter().zip(context).map(|(a, b)| b - a));
    for (new, old) in ns.iter().zip(negatives) {
        analytic.extend(new.iter().zip(old).map(|(a, b)| b - a));
    }

    let h = 1e-6;
    let mut numeric = Vec::with_capacity(analytic.len());
    let n_vectors = 2 + negatives.len();
    for which in 0..n_vectors {
        let dim = center.len();
        for i in 0..dim {
            let eval = |delta: f64| {
                let mut c = center.to_vec();
                let mut x = context.to_vec();
                let mut ns = negatives.to_vec();
                match which {
                    0 => c[i] += delta,
                    1 => x[i] += delta,
                    k => ns[k - 2][i] += delta,
                }
                sgns_loss(&c, &x, &ns)
            };
            numeric.push((eval(h) - eval(-h)) / (2.0 * h));
        }
    }
    let diff: f64 = analytic
        .iter()
        .zip(&numeric)
        .map(|(a, b)| (a - b).powi(2))
        .sum::<f64>()
        .sqrt();
    let norm_a: f64 = analytic.iter().map(|a| a * a).sum::<f64>().sqrt();
    let norm_n: f64 = numeric.iter().map(|a| a * a).sum::<f64>().sqrt();
    diff / norm_a.max(norm_n).max(1e-300)
}

/// Random SGNS configuration: dimension 1..=32, 1..=10 negatives, entries of
/// magnitude up to 1.
pub fn random_sgns_point(i: u64) -> (Vec<f64>, Vec<f64>, Vec<Vec<f64>>) {
    use rand::Rng;
    let mut rng = rngs::stream(i, 99, &[]);
    let dim = rng.gen_range(1..=32);
    let k = rng.gen_range(1..=10);
    let draw = |rng: &mut rngs::StreamRng| -> Vec<f64> {
        (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect()
    };
    let c = draw(&mut rng);
    let x = draw(&mut rng);
    let ns = (0..k).map(|_| draw(&mut rng)).collect();
    (c, x, ns)
}
