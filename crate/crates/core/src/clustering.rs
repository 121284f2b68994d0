//! Ego-network extraction and non-overlapping local clustering.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::graph::{Edge, Graph, NodeId};
use crate::rngs;
use crate::unionfind::UnionFind;

/// Sweep limit for label propagation.
pub const LABEL_PROPAGATION_MAX_SWEEPS: usize = 100;

/// Local clustering used to split an ego-network into roles.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LocalClustering {
    #[default]
    ConnectedComponents,
    LabelPropagation,
}

impl LocalClustering {
    pub fn short_name(self) -> &'static str {
        match self {
            LocalClustering::ConnectedComponents => "cc",
            LocalClustering::LabelPropagation => "lp",
        }
    }
}

impl fmt::Display for LocalClustering {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.short_name())
    }
}

impl FromStr for LocalClustering {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "cc" | "connected-components" => Ok(LocalClustering::ConnectedComponents),
            "lp" | "label-propagation" => Ok(LocalClustering::LabelPropagation),
            other => Err(Error::InvalidParameter(format!(
                "unknown clustering {other:?} (expected cc or lp)"
            ))),
        }
    }
}

/// Ego-network of `v`: the subgraph induced on its neighbors (in- and
/// out-neighbors for directed graphs) with `v` itself removed. Node `i` of the
/// result corresponds to `members[i]` in the parent graph.
#[derive(Clone, Debug)]
pub struct EgoNetwork {
    pub ego: NodeId,
    pub members: Vec<NodeId>,
    pub graph: Graph,
}

pub fn ego_network(g: &Graph, v: NodeId) -> EgoNetwork {
    let members = g.neighbor_set(v);
    let local: HashMap<NodeId, usize> = members.iter().enumerate().map(|(i, &u)| (u, i)).collect();
    let mut edges = Vec::new();
    for (i, &u) in members.iter().enumerate() {
        for (&x, &w) in g.out_neighbors(u).iter().zip(g.out_weights(u)) {
            if let Some(&j) = local.get(&x) {
                if g.is_directed() || i < j {
                    edges.push(Edge::new(i, j, w));
                }
            }
        }
    }
    let labels = members.iter().map(|&u| g.label(u).to_owned()).collect();
    let graph = Graph::from_edges(g.is_directed(), labels, edges)
        .expect("induced subgraph of a valid graph is valid");
    EgoNetwork {
        ego: v,
        members,
        graph,
    }
}

/// Clusters an ego-network, ignoring edge direction. Returns disjoint clusters
/// covering every node of `eg` (local ids), each sorted, ordered by their
/// smallest member. An empty ego-network yields no clusters.
pub fn cluster_ego(eg: &Graph, method: LocalClustering, seed: u64) -> Vec<Vec<NodeId>> {
    let mut adj: Vec<Vec<(usize, f64)>> = vec![Vec::new(); eg.n_nodes()];
    for e in eg.edges() {
        adj[e.src].push((e.dst, e.weight));
        adj[e.dst].push((e.src, e.weight));
    }
    let mut rng = rngs::stream(seed, rngs::tags::EGO_CLUSTERING, &[]);
    cluster_local(&mut adj, method, &mut rng)
}

/// Clusters a local undirected adjacency. Parallel entries for the same
/// neighbor are merged (weights summed) in place first.
pub(crate) fn cluster_local<R: Rng>(
    adj: &mut [Vec<(usize, f64)>],
    method: LocalClustering,
    rng: &mut R,
) -> Vec<Vec<usize>> {
    for row in adj.iter_mut() {
        merge_parallel(row);
    }
    let labels = match method {
        LocalClustering::ConnectedComponents => component_labels(adj),
        LocalClustering::LabelPropagation => propagate_labels(adj, rng),
    };
    group_by_label(&labels)
}

fn merge_parallel(row: &mut Vec<(usize, f64)>) {
    if row.len() < 2 {
        return;
    }
    row.sort_by_key(|&(t, _)| t);
    let mut out: Vec<(usize, f64)> = Vec::with_capacity(row.len());
    for &(t, w) in row.iter() {
        match out.last_mut() {
            Some(last) if last.0 == t => last.1 += w,
            _ => out.push((t, w)),
        }
    }
    *row = out;
}

fn component_labels(adj: &[Vec<(usize, f64)>]) -> Vec<usize> {
    let mut uf = UnionFind::new(adj.len());
    for (i, row) in adj.iter().enumerate() {
        for &(j, _) in row {
            uf.union(i, j);
        }
    }
    (0..adj.len()).map(|i| uf.find(i)).collect()
}

/// Asynchronous label propagation: nodes visited in a freshly shuffled order
/// each sweep, each adopting the label with the largest incident weight
/// (smallest label on ties). Stops after a sweep without changes or after
/// [`LABEL_PROPAGATION_MAX_SWEEPS`].
fn propagate_labels<R: Rng>(adj: &[Vec<(usize, f64)>], rng: &mut R) -> Vec<usize> {
    let n = adj.len();
    let mut labels: Vec<usize> = (0..n).collect();
    let mut order: Vec<usize> = (0..n).collect();
    let mut tally: Vec<(usize, f64)> = Vec::new();
    for _ in 0..LABEL_PROPAGATION_MAX_SWEEPS {
        order.shuffle(rng);
        let mut changed = false;
        for &i in &order {
            if adj[i].is_empty() {
                continue;
            }
            tally.clear();
            tally.extend(adj[i].iter().map(|&(j, w)| (labels[j], w)));
            tally.sort_by_key(|&(l, _)| l);
            let mut best = (usize::MAX, f64::NEG_INFINITY);
            let mut k = 0;
            while k < tally.len() {
                let label = tally[k].0;
                let mut total = 0.0;
                while k < tally.len() && tally[k].0 == label {
                    total += tally[k].1;
                    k += 1;
                }
                // labels arrive in increasing order, so strict > keeps the smallest on ties
                if total > best.1 {
                    best = (label, total);
                }
            }
            if best.0 != labels[i] {
                labels[i] = best.0;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    labels
}

fn group_by_label(labels: &[usize]) -> Vec<Vec<usize>> {
    let mut slot: HashMap<usize, usize> = HashMap::new();
    let mut clusters: Vec<Vec<usize>> = Vec::new();
    for (i, &l) in labels.iter().enumerate() {
        let s = *slot.entry(l).or_insert_with(|| {
            clusters.push(Vec::new());
            clusters.len() - 1
        });
        clusters[s].push(i);
    }
    clusters
}
