//! Sparse weighted graph with contiguous node ids.
//!
//! Nodes are relabeled to `0..n` in order of first appearance; the original
//! labels are kept so results can be written back in the input's vocabulary.
//! Adjacency is stored in CSR form with every row sorted by target id.

use std::cmp::Ordering;
use std::collections::hash_map::Entry;
use std::collections::HashMap;
use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::unionfind::UnionFind;

pub type NodeId = usize;

#[derive(Clone, Debug, PartialEq)]
pub struct Edge {
    pub src: NodeId,
    pub dst: NodeId,
    pub weight: f64,
}

impl Edge {
    pub fn new(src: NodeId, dst: NodeId, weight: f64) -> Self {
        Edge { src, dst, weight }
    }
}

#[derive(Clone, Debug, Default)]
struct Csr {
    offsets: Vec<usize>,
    targets: Vec<NodeId>,
    weights: Vec<f64>,
}

impl Csr {
    fn build(n: usize, arcs: impl Iterator<Item = (NodeId, NodeId, f64)> + Clone) -> Self {
        let mut offsets = vec![0usize; n + 1];
        for (s, _, _) in arcs.clone() {
            offsets[s + 1] += 1;
        }
        for i in 0..n {
            offsets[i + 1] += offsets[i];
        }
        let m = offsets[n];
        let mut fill = offsets.clone();
        let mut rows: Vec<(NodeId, f64)> = vec![(0, 0.0); m];
        for (s, t, w) in arcs {
            rows[fill[s]] = (t, w);
            fill[s] += 1;
        }
        for v in 0..n {
            rows[offsets[v]..offsets[v + 1]].sort_by_key(|&(t, _)| t);
        }
        let (targets, weights) = rows.into_iter().unzip();
        Csr {
            offsets,
            targets,
            weights,
        }
    }

    fn targets(&self, v: NodeId) -> &[NodeId] {
        &self.targets[self.offsets[v]..self.offsets[v + 1]]
    }

    fn weights(&self, v: NodeId) -> &[f64] {
        &self.weights[self.offsets[v]..self.offsets[v + 1]]
    }
}

/// Immutable weighted graph, directed or undirected.
///
/// Undirected graphs store each edge once in [`Graph::edges`] and expose it
/// from both endpoints through [`Graph::out_neighbors`].
#[derive(Clone, Debug)]
pub struct Graph {
    directed: bool,
    labels: Vec<String>,
    label_index: HashMap<String, NodeId>,
    edges: Vec<Edge>,
    out: Csr,
    inc: Option<Csr>,
}

impl PartialEq for Graph {
    fn eq(&self, other: &Self) -> bool {
        self.directed == other.directed && self.labels == other.labels && self.edges == other.edges
    }
}

impl Graph {
    /// Builds a graph from already-densified ids.
    ///
    /// Weights must be finite and non-negative; zero weights are allowed here
    /// (persona arcs with a zero scale factor) but never produced by the loader.
    pub fn from_edges(directed: bool, labels: Vec<String>, edges: Vec<Edge>) -> Result<Self> {
        let n = labels.len();
        let mut seen = std::collections::HashSet::with_capacity(edges.len());
        for e in &edges {
            if e.src >= n || e.dst >= n {
                return Err(Error::InvalidGraph(format!(
                    "edge ({}, {}) out of range for {} nodes",
                    e.src, e.dst, n
                )));
            }
            if e.src == e.dst {
                return Err(Error::InvalidGraph(format!("self-loop on node {}", e.src)));
            }
            if !e.weight.is_finite() || e.weight < 0.0 {
                return Err(Error::InvalidGraph(format!(
                    "edge ({}, {}) has weight {}",
                    e.src, e.dst, e.weight
                )));
            }
            let key = if directed || e.src < e.dst {
                (e.src, e.dst)
            } else {
                (e.dst, e.src)
            };
            if !seen.insert(key) {
                return Err(Error::InvalidGraph(format!(
                    "duplicate edge ({}, {})",
                    e.src, e.dst
                )));
            }
        }
        let mut label_index = HashMap::with_capacity(n);
        for (i, l) in labels.iter().enumerate() {
            if label_index.insert(l.clone(), i).is_some() {
                return Err(Error::InvalidGraph(format!("duplicate node label {l:?}")));
            }
        }
        Ok(Self::assemble(directed, labels, label_index, edges))
    }

    /// Graph on nodes `0..n` labeled by their decimal id, with unit weights.
    /// Self-loops are dropped and duplicates merged as in the edge-list loader.
    pub fn from_pairs(n: usize, directed: bool, pairs: &[(NodeId, NodeId)]) -> Self {
        let mut b = GraphBuilder::new(directed);
        for v in 0..n {
            b.node(&v.to_string());
        }
        for &(s, t) in pairs {
            assert!(s < n && t < n, "pair ({s}, {t}) out of range");
            b.add_edge_ids(s, t, 1.0);
        }
        b.build()
    }

    fn assemble(
        directed: bool,
        labels: Vec<String>,
        label_index: HashMap<String, NodeId>,
        edges: Vec<Edge>,
    ) -> Self {
        let n = labels.len();
        let (out, inc) = if directed {
            let fwd = edges.iter().map(|e| (e.src, e.dst, e.weight));
            let bwd = edges.iter().map(|e| (e.dst, e.src, e.weight));
            (Csr::build(n, fwd), Some(Csr::build(n, bwd)))
        } else {
            let both = edges
                .iter()
                .flat_map(|e| [(e.src, e.dst, e.weight), (e.dst, e.src, e.weight)]);
            (Csr::build(n, both), None)
        };
        Graph {
            directed,
            labels,
            label_index,
            edges,
            out,
            inc,
        }
    }

    pub fn is_directed(&self) -> bool {
        self.directed
    }

    pub fn n_nodes(&self) -> usize {
        self.labels.len()
    }

    /// Number of logical edges (each undirected edge counted once).
    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn label(&self, v: NodeId) -> &str {
        &self.labels[v]
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn node_by_label(&self, label: &str) -> Option<NodeId> {
        self.label_index.get(label).copied()
    }

    /// Out-neighbors of `v`, sorted by id. Symmetric for undirected graphs.
    pub fn out_neighbors(&self, v: NodeId) -> &[NodeId] {
        self.out.targets(v)
    }

    /// Weights aligned with [`Graph::out_neighbors`].
    pub fn out_weights(&self, v: NodeId) -> &[f64] {
        self.out.weights(v)
    }

    pub fn out_degree(&self, v: NodeId) -> usize {
        self.out.targets(v).len()
    }

    pub fn in_neighbors(&self, v: NodeId) -> &[NodeId] {
        match &self.inc {
            Some(inc) => inc.targets(v),
            None => self.out.targets(v),
        }
    }

    pub fn in_degree(&self, v: NodeId) -> usize {
        self.in_neighbors(v).len()
    }

    /// Sorted, deduplicated union of in- and out-neighbors.
    pub fn neighbor_set(&self, v: NodeId) -> Vec<NodeId> {
        if !self.directed {
            return self.out_neighbors(v).to_vec();
        }
        let (a, b) = (self.out_neighbors(v), self.in_neighbors(v));
        let mut merged = Vec::with_capacity(a.len() + b.len());
        let (mut i, mut j) = (0, 0);
        while i < a.len() || j < b.len() {
            let next = match (a.get(i), b.get(j)) {
                (Some(&x), Some(&y)) if x == y => {
                    i += 1;
                    j += 1;
                    x
                }
                (Some(&x), Some(&y)) if x < y => {
                    i += 1;
                    x
                }
                (Some(_), Some(&y)) => {
                    j += 1;
                    y
                }
                (Some(&x), None) => {
                    i += 1;
                    x
                }
                (None, Some(&y)) => {
                    j += 1;
                    y
                }
                (None, None) => unreachable!(),
            };
            merged.push(next);
        }
        merged
    }

    /// Number of distinct neighbors ignoring direction.
    pub fn undirected_degree(&self, v: NodeId) -> usize {
        if self.directed {
            self.neighbor_set(v).len()
        } else {
            self.out_degree(v)
        }
    }

    /// True when an arc `u -> v` exists (either orientation for undirected graphs).
    pub fn has_edge(&self, u: NodeId, v: NodeId) -> bool {
        self.out_neighbors(u).binary_search(&v).is_ok()
    }

    /// Subgraph induced on the nodes with `keep[v] == true`, ids re-densified
    /// in increasing order of the old id. Edge order is preserved.
    pub fn induced_subgraph(&self, keep: &[bool]) -> Graph {
        let mut new_id = vec![usize::MAX; self.n_nodes()];
        let mut labels = Vec::new();
        for v in 0..self.n_nodes() {
            if keep[v] {
                new_id[v] = labels.len();
                labels.push(self.labels[v].clone());
            }
        }
        let edges = self
            .edges
            .iter()
            .filter(|e| keep[e.src] && keep[e.dst])
            .map(|e| Edge::new(new_id[e.src], new_id[e.dst], e.weight))
            .collect();
        let label_index = labels
            .iter()
            .enumerate()
            .map(|(i, l)| (l.clone(), i))
            .collect();
        Graph::assemble(self.directed, labels, label_index, edges)
    }

    /// Same node set with only the edges whose index is not flagged in `removed`.
    pub fn without_edges(&self, removed: &[bool]) -> Graph {
        let edges = self
            .edges
            .iter()
            .zip(removed)
            .filter(|(_, &r)| !r)
            .map(|(e, _)| e.clone())
            .collect();
        Graph::assemble(
            self.directed,
            self.labels.clone(),
            self.label_index.clone(),
            edges,
        )
    }

    /// Breadth-first order from `start` over the undirected view.
    pub fn bfs_undirected(&self, start: NodeId) -> Vec<NodeId> {
        let mut seen = vec![false; self.n_nodes()];
        let mut order = vec![start];
        let mut queue = VecDeque::from([start]);
        seen[start] = true;
        while let Some(v) = queue.pop_front() {
            let nbrs = self.out_neighbors(v).iter().chain(if self.directed {
                self.in_neighbors(v).iter()
            } else {
                [].iter()
            });
            for &u in nbrs {
                if !seen[u] {
                    seen[u] = true;
                    order.push(u);
                    queue.push_back(u);
                }
            }
        }
        order
    }
}

/// Orders node labels: integers numerically, then everything else lexicographically.
pub fn compare_labels(a: &str, b: &str) -> Ordering {
    match (a.parse::<i64>(), b.parse::<i64>()) {
        (Ok(x), Ok(y)) => x.cmp(&y),
        (Ok(_), Err(_)) => Ordering::Less,
        (Err(_), Ok(_)) => Ordering::Greater,
        (Err(_), Err(_)) => a.cmp(b),
    }
}

/// Incremental graph construction with first-appearance relabeling.
///
/// Self-loops are dropped (and counted); repeated `(src, dst)` pairs have their
/// weights summed into the first occurrence.
#[derive(Debug)]
pub struct GraphBuilder {
    directed: bool,
    labels: Vec<String>,
    label_index: HashMap<String, NodeId>,
    edges: Vec<Edge>,
    edge_index: HashMap<(NodeId, NodeId), usize>,
    self_loops: usize,
    merged: usize,
}

impl GraphBuilder {
    pub fn new(directed: bool) -> Self {
        GraphBuilder {
            directed,
            labels: Vec::new(),
            label_index: HashMap::new(),
            edges: Vec::new(),
            edge_index: HashMap::new(),
            self_loops: 0,
            merged: 0,
        }
    }

    /// Returns the id for `label`, allocating the next one if unseen.
    pub fn node(&mut self, label: &str) -> NodeId {
        if let Some(&id) = self.label_index.get(label) {
            return id;
        }
        let id = self.labels.len();
        self.labels.push(label.to_owned());
        self.label_index.insert(label.to_owned(), id);
        id
    }

    pub fn add_edge(&mut self, src: &str, dst: &str, weight: f64) {
        let s = self.node(src);
        let t = self.node(dst);
        self.add_edge_ids(s, t, weight);
    }

    pub fn add_edge_ids(&mut self, s: NodeId, t: NodeId, weight: f64) {
        if s == t {
            self.self_loops += 1;
            return;
        }
        let key = if self.directed || s < t {
            (s, t)
        } else {
            (t, s)
        };
        match self.edge_index.entry(key) {
            Entry::Occupied(o) => {
                self.edges[*o.get()].weight += weight;
                self.merged += 1;
            }
            Entry::Vacant(v) => {
                v.insert(self.edges.len());
                self.edges.push(Edge::new(s, t, weight));
            }
        }
    }

    pub fn self_loops_dropped(&self) -> usize {
        self.self_loops
    }

    pub fn duplicates_merged(&self) -> usize {
        self.merged
    }

    pub fn build(self) -> Graph {
        Graph::assemble(self.directed, self.labels, self.label_index, self.edges)
    }
}

/// Induced subgraph on the largest connected component (weakly connected for
/// directed graphs). Equal-size components are resolved in favor of the one
/// holding the smallest label under [`compare_labels`].
pub fn largest_component(g: &Graph) -> Result<Graph> {
    let n = g.n_nodes();
    if n == 0 {
        return Err(Error::EmptyGraph);
    }
    let mut uf = UnionFind::new(n);
    for e in g.edges() {
        uf.union(e.src, e.dst);
    }
    // root -> (size, node with smallest label)
    let mut best_of: HashMap<usize, (usize, NodeId)> = HashMap::new();
    for v in 0..n {
        let r = uf.find(v);
        let entry = best_of.entry(r).or_insert((0, v));
        entry.0 += 1;
        if compare_labels(g.label(v), g.label(entry.1)) == Ordering::Less {
            entry.1 = v;
        }
    }
    let (&root, _) = best_of
        .iter()
        .max_by(|(_, (sa, la)), (_, (sb, lb))| {
            sa.cmp(sb)
                .then_with(|| compare_labels(g.label(*lb), g.label(*la)))
        })
        .expect("non-empty graph has a component");
    let keep: Vec<bool> = (0..n).map(|v| uf.find(v) == root).collect();
    Ok(g.induced_subgraph(&keep))
}

/// True iff `g` minus the edges at indices `removed` is connected (weakly for
/// directed graphs). The empty graph counts as connected.
pub fn is_connected(g: &Graph, removed: &[usize]) -> bool {
    let mut mask = vec![false; g.n_edges()];
    for &i in removed {
        mask[i] = true;
    }
    connected_with_mask(g, &mask)
}

pub(crate) fn connected_with_mask(g: &Graph, removed: &[bool]) -> bool {
    let n = g.n_nodes();
    if n <= 1 {
        return true;
    }
    let mut uf = UnionFind::new(n);
    for (e, &r) in g.edges().iter().zip(removed) {
        if !r && uf.union(e.src, e.dst) && uf.count() == 1 {
            return true;
        }
    }
    uf.count() == 1
}
