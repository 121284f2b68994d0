//! Ego-splitting: one persona per local cluster of every node's ego-network.
//!
//! Each original edge `(u, v, w)` is inherited by the unique persona pair whose
//! clusters contain the opposite endpoint. Personas of the same node are then
//! joined by a complete set of directed persona arcs; the arc leaving persona
//! `i` weighs `lambda * max(k_i, 1)`, where `k_i` counts the original arcs
//! leaving `i`. With that weight a walker at `i` takes an original arc with
//! probability `1 / (1 + (n_p - 1) * lambda)` whenever `k_i > 0`, whatever
//! the value of `k_i`.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::clustering::{cluster_local, LocalClustering};
use crate::error::{Error, Result};
use crate::graph::{Edge, Graph, NodeId};
use crate::rngs;

pub type PersonaId = usize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EdgeKind {
    Original,
    Persona,
}

/// The split graph together with its node/persona bookkeeping.
#[derive(Clone, Debug)]
pub struct PersonaGraph {
    graph: Graph,
    v2p: Vec<Vec<PersonaId>>,
    p2c: Vec<Vec<NodeId>>,
    owner: Vec<NodeId>,
    edge_kind: Vec<EdgeKind>,
    original_out_degree: Vec<usize>,
    original_labels: Vec<String>,
    original_edges: usize,
    original_max_degree: usize,
    lambda: f64,
}

impl PersonaGraph {
    /// The persona graph; always directed.
    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn n_personas(&self) -> usize {
        self.owner.len()
    }

    pub fn n_original_nodes(&self) -> usize {
        self.v2p.len()
    }

    pub fn personas_of(&self, v: NodeId) -> &[PersonaId] {
        &self.v2p[v]
    }

    pub fn v2p(&self) -> &[Vec<PersonaId>] {
        &self.v2p
    }

    /// Original neighbors represented by persona `p`.
    pub fn cluster(&self, p: PersonaId) -> &[NodeId] {
        &self.p2c[p]
    }

    pub fn owner(&self, p: PersonaId) -> NodeId {
        self.owner[p]
    }

    /// Kind of each edge in `graph().edges()`, index-aligned.
    pub fn edge_kinds(&self) -> &[EdgeKind] {
        &self.edge_kind
    }

    /// Count of original arcs leaving persona `p`.
    pub fn original_out_degree(&self, p: PersonaId) -> usize {
        self.original_out_degree[p]
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn original_label(&self, v: NodeId) -> &str {
        &self.original_labels[v]
    }

    pub fn persona_edge_count(&self) -> usize {
        self.edge_kind
            .iter()
            .filter(|&&k| k == EdgeKind::Persona)
            .count()
    }

    pub fn original_arc_count(&self) -> usize {
        self.edge_kind.len() - self.persona_edge_count()
    }

    /// Nodes with more than one persona.
    pub fn split_node_count(&self) -> usize {
        self.v2p.iter().filter(|ps| ps.len() > 1).count()
    }

    /// Writes `persona_id  original_label  cluster_members` rows with a header.
    pub fn write_persona_map<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "persona_id\toriginal_label\tcluster_members")?;
        for p in 0..self.n_personas() {
            let members: Vec<&str> = self.p2c[p]
                .iter()
                .map(|&u| self.original_labels[u].as_str())
                .collect();
            writeln!(
                w,
                "{}\t{}\t{}",
                p,
                self.original_labels[self.owner[p]],
                members.join(",")
            )?;
        }
        Ok(())
    }
}

/// Label of the `k`-th persona of a node labeled `original`.
pub fn persona_label(original: &str, k: usize) -> String {
    format!("{original}__{k}")
}

/// Splits every node of `g` into personas and wires the persona graph.
pub fn build_persona_graph(
    g: &Graph,
    method: LocalClustering,
    lambda: f64,
    seed: u64,
) -> Result<PersonaGraph> {
    if !(lambda.is_finite() && lambda >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "lambda must be a non-negative number, got {lambda}"
        )));
    }
    let n = g.n_nodes();

    // (sorted neighbor set, clusters as indices into it) per node
    let split: Vec<(Vec<NodeId>, Vec<Vec<usize>>)> = (0..n)
        .into_par_iter()
        .map_init(
            || vec![usize::MAX; n],
            |marker, v| {
                let members = g.neighbor_set(v);
                let clusters = cluster_neighborhood(g, v, &members, marker, method, seed);
                (members, clusters)
            },
        )
        .collect();

    let mut v2p = Vec::with_capacity(n);
    let mut p2c = Vec::new();
    let mut owner = Vec::new();
    let mut labels = Vec::new();
    // for node v: persona of v facing each neighbor, aligned with its neighbor set
    let mut facing: Vec<Vec<PersonaId>> = Vec::with_capacity(n);
    let mut max_degree = 0;
    for (v, (members, clusters)) in split.iter().enumerate() {
        max_degree = max_degree.max(members.len());
        let mut mine = Vec::new();
        let mut face = vec![usize::MAX; members.len()];
        if clusters.is_empty() {
            mine.push(p2c.len());
            labels.push(persona_label(g.label(v), 0));
            p2c.push(Vec::new());
            owner.push(v);
        }
        for (k, cluster) in clusters.iter().enumerate() {
            let p = p2c.len();
            mine.push(p);
            labels.push(persona_label(g.label(v), k));
            p2c.push(cluster.iter().map(|&i| members[i]).collect());
            owner.push(v);
            for &i in cluster {
                face[i] = p;
            }
        }
        v2p.push(mine);
        facing.push(face);
    }
    let persona_facing = |v: NodeId, u: NodeId| -> PersonaId {
        let i = split[v]
            .0
            .binary_search(&u)
            .expect("edge endpoint is a neighbor");
        facing[v][i]
    };

    let n_personas = owner.len();
    let mut edges = Vec::new();
    let mut kinds = Vec::new();
    let mut k_out = vec![0usize; n_personas];
    for e in g.edges() {
        let p = persona_facing(e.src, e.dst);
        let q = persona_facing(e.dst, e.src);
        edges.push(Edge::new(p, q, e.weight));
        kinds.push(EdgeKind::Original);
        k_out[p] += 1;
        if !g.is_directed() {
            edges.push(Edge::new(q, p, e.weight));
            kinds.push(EdgeKind::Original);
            k_out[q] += 1;
        }
    }
    for personas in &v2p {
        for &i in personas {
            let w = lambda * k_out[i].max(1) as f64;
            for &j in personas {
                if i != j {
                    edges.push(Edge::new(i, j, w));
                    kinds.push(EdgeKind::Persona);
                }
            }
        }
    }

    let graph = Graph::from_edges(true, labels, edges)?;
    Ok(PersonaGraph {
        graph,
        v2p,
        p2c,
        owner,
        edge_kind: kinds,
        original_out_degree: k_out,
        original_labels: g.labels().to_vec(),
        original_edges: g.n_edges(),
        original_max_degree: max_degree,
        lambda,
    })
}

/// Clusters the ego-network of `v` given its sorted neighbor set. `marker` is a
/// scratch array of length `n` holding `usize::MAX` on entry and on exit.
fn cluster_neighborhood(
    g: &Graph,
    v: NodeId,
    members: &[NodeId],
    marker: &mut [usize],
    method: LocalClustering,
    seed: u64,
) -> Vec<Vec<usize>> {
    if members.is_empty() {
        return Vec::new();
    }
    for (i, &u) in members.iter().enumerate() {
        marker[u] = i;
    }
    let mut adj: Vec<Vec<(usize, f64)>> = vec![Vec::new(); members.len()];
    for (i, &u) in members.iter().enumerate() {
        for (&x, &w) in g.out_neighbors(u).iter().zip(g.out_weights(u)) {
            let j = marker[x];
            if j != usize::MAX && (g.is_directed() || i < j) {
                adj[i].push((j, w));
                adj[j].push((i, w));
            }
        }
    }
    for &u in members {
        marker[u] = usize::MAX;
    }
    let mut rng = rngs::stream(seed, rngs::tags::EGO_CLUSTERING, &[v as u64]);
    cluster_local(&mut adj, method, &mut rng)
}

/// Size of the persona-edge set against the `|E|^{3/2}` space bound.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PersonaEdgeBound {
    /// Directed persona arcs (ordered persona pairs).
    pub persona_edges: usize,
    /// Unordered persona pairs, i.e. `persona_edges / 2`.
    pub persona_pairs: usize,
    pub original_edges: usize,
    pub bound: f64,
    pub ratio: f64,
    pub max_degree: usize,
    pub sqrt_edges: f64,
    /// Whether every degree is below `sqrt(|E|)`, the regime where the bound applies.
    pub assumption_holds: bool,
    pub within_bound: bool,
}

pub fn persona_edge_bound_check(pg: &PersonaGraph) -> PersonaEdgeBound {
    let persona_edges = pg.persona_edge_count();
    let e = pg.original_edges as f64;
    let bound = e.powf(1.5);
    let sqrt_edges = e.sqrt();
    PersonaEdgeBound {
        persona_edges,
        persona_pairs: persona_edges / 2,
        original_edges: pg.original_edges,
        bound,
        ratio: if bound > 0.0 {
            persona_edges as f64 / bound
        } else {
            0.0
        },
        max_degree: pg.original_max_degree,
        sqrt_edges,
        assumption_holds: (pg.original_max_degree as f64) < sqrt_edges,
        within_bound: persona_edges as f64 <= bound,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::largest_component;

    fn path3() -> Graph {
        Graph::from_pairs(3, false, &[(0, 1), (1, 2)])
    }

    #[test]
    fn triangle_does_not_split() {
        let g = Graph::from_pairs(3, false, &[(0, 1), (1, 2), (0, 2)]);
        let pg = build_persona_graph(&g, LocalClustering::ConnectedComponents, 0.5, 0).unwrap();
        assert_eq!(pg.n_personas(), 3);
        assert_eq!(pg.persona_edge_count(), 0);
        assert_eq!(pg.original_arc_count(), 6);
        let bound = persona_edge_bound_check(&pg);
        assert!(bound.within_bound);
        assert_eq!(bound.persona_edges, 0);
    }

    #[test]
    fn path_center_splits_in_two() {
        let pg =
            build_persona_graph(&path3(), LocalClustering::ConnectedComponents, 0.5, 0).unwrap();
        assert_eq!(pg.n_personas(), 4);
        let b = pg.personas_of(1);
        assert_eq!(b.len(), 2);
        assert_eq!(pg.cluster(b[0]), &[0]);
        assert_eq!(pg.cluster(b[1]), &[2]);
        let pg_graph = pg.graph();
        let persona_arcs: Vec<&Edge> = pg_graph
            .edges()
            .iter()
            .zip(pg.edge_kinds())
            .filter(|(_, &k)| k == EdgeKind::Persona)
            .map(|(e, _)| e)
            .collect();
        assert_eq!(persona_arcs.len(), 2);
        for e in persona_arcs {
            assert_eq!(e.weight, 0.5);
        }
        assert_eq!(pg_graph.label(b[0]), "1__0");
        assert_eq!(pg_graph.label(b[1]), "1__1");
    }

    #[test]
    fn isolated_node_keeps_one_persona() {
        let g = Graph::from_pairs(3, false, &[(0, 1)]);
        let pg = build_persona_graph(&g, LocalClustering::ConnectedComponents, 0.5, 0).unwrap();
        assert_eq!(pg.personas_of(2).len(), 1);
        assert!(pg.cluster(pg.personas_of(2)[0]).is_empty());
        assert_eq!(pg.graph().out_degree(pg.personas_of(2)[0]), 0);
    }

    #[test]
    fn negative_lambda_rejected() {
        assert!(
            build_persona_graph(&path3(), LocalClustering::ConnectedComponents, -0.1, 0).is_err()
        );
        assert!(
            build_persona_graph(&path3(), LocalClustering::ConnectedComponents, f64::NAN, 0)
                .is_err()
        );
    }

    #[test]
    fn figure_one_style_split() {
        // C (=2) sits between triangle-ish {A,B} and {D,E,F}.
        let (a, b, c, d, e, f) = (0, 1, 2, 3, 4, 5);
        let g = Graph::from_pairs(
            6,
            false,
            &[
                (a, b),
                (a, c),
                (b, c),
                (c, d),
                (c, e),
                (c, f),
                (d, e),
                (e, f),
            ],
        );
        let pg = build_persona_graph(&g, LocalClustering::ConnectedComponents, 0.5, 0).unwrap();
        let cs = pg.personas_of(c);
        assert_eq!(cs.len(), 2);
        assert_eq!(pg.cluster(cs[0]), &[a, b]);
        assert_eq!(pg.cluster(cs[1]), &[d, e, f]);
        assert_eq!(pg.personas_of(a).len(), 1);
        assert_eq!(pg.original_out_degree(cs[0]), 2);
        assert_eq!(pg.original_out_degree(cs[1]), 3);
        // persona arc weights scale with the source persona's original out-degree
        let pgg = pg.graph();
        let w01 = pgg.out_weights(cs[0])[pgg.out_neighbors(cs[0]).binary_search(&cs[1]).unwrap()];
        let w10 = pgg.out_weights(cs[1])[pgg.out_neighbors(cs[1]).binary_search(&cs[0]).unwrap()];
        assert_eq!(w01, 1.0);
        assert_eq!(w10, 1.5);
    }

    #[test]
    fn directed_in_only_persona_gets_unit_floor() {
        // 1 receives from 0 and 2 (no edge between them): two personas with k = 0.
        let g = Graph::from_pairs(3, true, &[(0, 1), (2, 1)]);
        let pg = build_persona_graph(&g, LocalClustering::ConnectedComponents, 0.25, 0).unwrap();
        let ps = pg.personas_of(1);
        assert_eq!(ps.len(), 2);
        assert_eq!(pg.original_out_degree(ps[0]), 0);
        assert_eq!(pg.graph().out_weights(ps[0]), &[0.25]);
        assert_eq!(pg.original_arc_count(), 2);
    }

    #[test]
    fn persona_map_tsv() {
        let pg =
            build_persona_graph(&path3(), LocalClustering::ConnectedComponents, 0.5, 0).unwrap();
        let mut buf = Vec::new();
        pg.write_persona_map(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "persona_id\toriginal_label\tcluster_members");
        assert_eq!(lines.len(), 5);
        assert_eq!(lines[1], "0\t0\t1");
        assert_eq!(lines[2], "1\t1\t0");
        assert_eq!(lines[3], "2\t1\t2");
        assert_eq!(lines[4], "3\t2\t1");
    }

    #[test]
    fn deterministic_for_fixed_seed() {
        let mut pairs = Vec::new();
        for i in 0..30usize {
            pairs.push((i, (i * 7 + 3) % 30));
            pairs.push((i, (i * 11 + 5) % 30));
        }
        let g = largest_component(&Graph::from_pairs(30, false, &pairs)).unwrap();
        let a = build_persona_graph(&g, LocalClustering::LabelPropagation, 0.5, 9).unwrap();
        let b = build_persona_graph(&g, LocalClustering::LabelPropagation, 0.5, 9).unwrap();
        assert_eq!(a.graph(), b.graph());
        assert_eq!(a.v2p(), b.v2p());
    }
}
