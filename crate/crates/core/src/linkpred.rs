//! Link-prediction evaluation.
//!
//! Half of the edges (by default) are held out such that the remaining
//! training graph stays connected, an equal number of non-edges is sampled,
//! and held-out edges are ranked against non-edges by embedding score.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Graph, NodeId};
use crate::pipeline::{
    embed_baseline, persona2vec, NodeEmbedding, Persona2VecConfig, StageTimings,
};
use crate::rngs;
use crate::unionfind::UnionFind;

/// Train/test partition of a graph's edges.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EdgeSplit {
    /// Indices into `g.edges()` kept for training.
    pub train: Vec<usize>,
    /// Indices into `g.edges()` held out as positives, in acceptance order.
    pub test: Vec<usize>,
}

/// An edge split plus as many sampled non-edges as held-out edges.
#[derive(Clone, Debug)]
pub struct LinkPredSplit {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
    pub negatives: Vec<(NodeId, NodeId)>,
    pub seed: u64,
}

impl LinkPredSplit {
    /// Splits `g` and samples the matching negatives.
    pub fn new(g: &Graph, test_fraction: f64, seed: u64) -> Result<Self> {
        let EdgeSplit { train, test } = split_edges(g, test_fraction, seed)?;
        let negatives =
            sample_negatives(g, test.len(), rngs::mix(seed, rngs::tags::NEGATIVES, &[]))?;
        Ok(LinkPredSplit {
            train,
            test,
            negatives,
            seed,
        })
    }

    /// The graph restricted to the training edges (same node ids).
    pub fn train_graph(&self, g: &Graph) -> Graph {
        let mut removed = vec![false; g.n_edges()];
        for &i in &self.test {
            removed[i] = true;
        }
        g.without_edges(&removed)
    }

    pub fn test_pairs(&self, g: &Graph) -> Vec<(NodeId, NodeId)> {
        self.test
            .iter()
            .map(|&i| (g.edges()[i].src, g.edges()[i].dst))
            .collect()
    }
}

/// Holds out about `test_fraction` of the edges.
///
/// Edges are visited in a seeded random order and each one moves to the test
/// set when the training graph stays connected without it (given the edges
/// already moved), until the target size is reached. An edge is removable at
/// its turn exactly when it is left out of the spanning tree that Kruskal
/// builds from the visiting order reversed, so the whole pass runs on one
/// union-find.
pub fn split_edges(g: &Graph, test_fraction: f64, seed: u64) -> Result<EdgeSplit> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "test fraction must lie in (0, 1), got {test_fraction}"
        )));
    }
    if !crate::graph::is_connected(g, &[]) {
        return Err(Error::InvalidGraph(
            "link-prediction split needs a connected graph".into(),
        ));
    }
    let m = g.n_edges();
    let target = ((test_fraction * m as f64).round() as usize).max(1);
    let mut rng = rngs::stream(seed, rngs::tags::SPLIT, &[]);
    let mut order: Vec<usize> = (0..m).collect();
    order.shuffle(&mut rng);

    let mut uf = UnionFind::new(g.n_nodes());
    let mut in_tree = vec![false; m];
    for &i in order.iter().rev() {
        let e = &g.edges()[i];
        in_tree[i] = uf.union(e.src, e.dst);
    }
    let test: Vec<usize> = order
        .iter()
        .copied()
        .filter(|&i| !in_tree[i])
        .take(target)
        .collect();
    if test.is_empty() {
        return Err(Error::NoRemovableEdges);
    }
    if test.len() < target {
        log::warn!(
            "only {} of the requested {} edges can be held out without disconnecting the graph",
            test.len(),
            target
        );
    }
    let mut is_test = vec![false; m];
    for &i in &test {
        is_test[i] = true;
    }
    let train = (0..m).filter(|&i| !is_test[i]).collect();
    Ok(EdgeSplit { train, test })
}

/// Uniformly samples `count` distinct node pairs that are neither edges nor
/// self-loops (ordered pairs for directed graphs, unordered otherwise).
pub fn sample_negatives(g: &Graph, count: usize, seed: u64) -> Result<Vec<(NodeId, NodeId)>> {
    let n = g.n_nodes() as u128;
    let pairs = if g.is_directed() {
        n * n.saturating_sub(1)
    } else {
        n * n.saturating_sub(1) / 2
    };
    let available = pairs.saturating_sub(g.n_edges() as u128);
    if available == 0 || count as u128 > available {
        return Err(Error::NoNegativePairs {
            requested: count,
            available: available.min(usize::MAX as u128) as usize,
        });
    }
    let mut rng = rngs::stream(seed, rngs::tags::NEGATIVES, &[]);
    let canonical = |u: NodeId, v: NodeId| {
        if g.is_directed() || u < v {
            (u, v)
        } else {
            (v, u)
        }
    };

    if 2 * count as u128 > available {
        let mut all = Vec::with_capacity(available as usize);
        for u in 0..g.n_nodes() {
            let start = if g.is_directed() { 0 } else { u + 1 };
            for v in start..g.n_nodes() {
                if u != v && !g.has_edge(u, v) {
                    all.push((u, v));
                }
            }
        }
        let (chosen, _) = all.partial_shuffle(&mut rng, count);
        return Ok(chosen.to_vec());
    }

    let mut seen = HashSet::with_capacity(count);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let u = rng.gen_range(0..g.n_nodes());
        let v = rng.gen_range(0..g.n_nodes());
        if u == v || g.has_edge(u, v) {
            continue;
        }
        let key = canonical(u, v);
        if seen.insert(key) {
            out.push(key);
        }
    }
    Ok(out)
}

/// How persona-pair scores are combined into one node-pair score.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Aggregation {
    #[default]
    Max,
    Min,
    Mean,
}

impl fmt::Display for Aggregation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Aggregation::Max => "max",
            Aggregation::Min => "min",
            Aggregation::Mean => "mean",
        })
    }
}

impl FromStr for Aggregation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "max" => Ok(Aggregation::Max),
            "min" => Ok(Aggregation::Min),
            "mean" => Ok(Aggregation::Mean),
            other => Err(Error::InvalidParameter(format!(
                "unknown aggregation {other:?} (expected max, min or mean)"
            ))),
        }
    }
}

/// Aggregated dot product over all persona pairs of `u` and `v`.
pub fn score_pair(emb: &NodeEmbedding, u: NodeId, v: NodeId, agg: Aggregation) -> Result<f64> {
    let pu = emb.v2p.get(u).ok_or(Error::UnknownNode(u))?;
    let pv = emb.v2p.get(v).ok_or(Error::UnknownNode(v))?;
    if pu.is_empty() {
        return Err(Error::UnknownNode(u));
    }
    if pv.is_empty() {
        return Err(Error::UnknownNode(v));
    }
    let scores = pu
        .iter()
        .flat_map(|&p| pv.iter().map(move |&q| (p, q)))
        .map(|(p, q)| emb.matrix.dot(p, q));
    Ok(match agg {
        Aggregation::Max => scores.fold(f64::NEG_INFINITY, f64::max),
        Aggregation::Min => scores.fold(f64::INFINITY, f64::min),
        Aggregation::Mean => scores.sum::<f64>() / (pu.len() * pv.len()) as f64,
    })
}

/// Area under the ROC curve as the Mann-Whitney statistic with midranks:
/// the fraction of (positive, negative) pairs ranked correctly, ties counting
/// one half. Returns NaN when either list is empty.
pub fn roc_auc(pos: &[f64], neg: &[f64]) -> f64 {
    if pos.is_empty() || neg.is_empty() {
        return f64::NAN;
    }
    let mut all: Vec<(f64, bool)> = pos
        .iter()
        .map(|&s| (s, true))
        .chain(neg.iter().map(|&s| (s, false)))
        .collect();
    all.sort_by(|a, b| a.0.total_cmp(&b.0));
    // sum over positives of twice their 1-based midrank
    let mut twice_rank_sum: u128 = 0;
    let mut i = 0;
    while i < all.len() {
        let mut j = i;
        while j + 1 < all.len() && all[j + 1].0 == all[i].0 {
            j += 1;
        }
        let twice_mid = (i + 1 + j + 1) as u128;
        let n_pos = all[i..=j].iter().filter(|x| x.1).count() as u128;
        twice_rank_sum += twice_mid * n_pos;
        i = j + 1;
    }
    let (np, nn) = (pos.len() as u128, neg.len() as u128);
    let twice_u = twice_rank_sum - np * (np + 1);
    twice_u as f64 / (2 * np * nn) as f64
}

/// Which embedding is evaluated.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    #[default]
    Persona,
    /// Single vector per node on the unsplit graph.
    Baseline,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalConfig {
    pub test_fraction: f64,
    pub agg: Aggregation,
    pub method: Method,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            test_fraction: 0.5,
            agg: Aggregation::Max,
            method: Method::Persona,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalResult {
    pub seed: u64,
    pub auc: f64,
    pub n_train_edges: usize,
    pub n_test_edges: usize,
    pub n_negative_edges: usize,
    pub n_personas: usize,
    pub timings: StageTimings,
    pub scoring_secs: f64,
    pub total_secs: f64,
}

/// Scores held-out edges and negatives with `score` and returns the AUC.
pub fn evaluate_scores<F>(split: &LinkPredSplit, g: &Graph, score: F) -> Result<f64>
where
    F: Fn(NodeId, NodeId) -> Result<f64> + Sync,
{
    let pos: Vec<f64> = split
        .test_pairs(g)
        .par_iter()
        .map(|&(u, v)| score(u, v))
        .collect::<Result<_>>()?;
    let neg: Vec<f64> = split
        .negatives
        .par_iter()
        .map(|&(u, v)| score(u, v))
        .collect::<Result<_>>()?;
    Ok(roc_auc(&pos, &neg))
}

/// One split, one trained model, one AUC.
pub fn run_experiment(
    g: &Graph,
    cfg: &Persona2VecConfig,
    eval: &EvalConfig,
    seed: u64,
) -> Result<EvalResult> {
    let start = Instant::now();
    let mut timings = StageTimings::default();
    let t = Instant::now();
    let split = LinkPredSplit::new(g, eval.test_fraction, seed)?;
    let train = split.train_graph(g);
    timings.split_secs = t.elapsed().as_secs_f64();
    for (u, v) in split.test_pairs(g) {
        if train.has_edge(u, v) {
            return Err(Error::InvalidGraph(format!(
                "held-out edge ({u}, {v}) leaked into the training graph"
            )));
        }
    }

    let run_cfg = Persona2VecConfig {
        seed,
        ..cfg.clone()
    };
    let embedding = match eval.method {
        Method::Persona => {
            let out = persona2vec(&train, &run_cfg)?;
            let split_secs = timings.split_secs;
            timings = out.timings.clone();
            timings.split_secs += split_secs;
            NodeEmbedding::personas(&out.persona_graph, out.embedding)
        }
        Method::Baseline => {
            let t = Instant::now();
            let m = embed_baseline(&train, &run_cfg)?;
            timings.base_train_secs = t.elapsed().as_secs_f64();
            NodeEmbedding::single(m)
        }
    };
    let t = Instant::now();
    let auc = evaluate_scores(&split, g, |u, v| score_pair(&embedding, u, v, eval.agg))?;
    let scoring_secs = t.elapsed().as_secs_f64();
    Ok(EvalResult {
        seed,
        auc,
        n_train_edges: split.train.len(),
        n_test_edges: split.test.len(),
        n_negative_edges: split.negatives.len(),
        n_personas: embedding.matrix.rows(),
        timings,
        scoring_secs,
        total_secs: start.elapsed().as_secs_f64(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSummary {
    pub runs: Vec<EvalResult>,
    pub mean_auc: f64,
    /// Standard error of the mean (sample standard deviation over `sqrt(n)`).
    pub stderr_auc: f64,
}

pub fn run_experiments(
    g: &Graph,
    cfg: &Persona2VecConfig,
    eval: &EvalConfig,
    seeds: &[u64],
) -> Result<ExperimentSummary> {
    let runs = seeds
        .iter()
        .map(|&s| run_experiment(g, cfg, eval, s))
        .collect::<Result<Vec<_>>>()?;
    let aucs: Vec<f64> = runs.iter().map(|r| r.auc).collect();
    let (mean_auc, stderr_auc) = mean_stderr(&aucs);
    Ok(ExperimentSummary {
        runs,
        mean_auc,
        stderr_auc,
    })
}

pub fn mean_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}
