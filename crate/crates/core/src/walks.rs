//! Weighted random walks (first order, `p = q = 1`).

use std::io::Write;

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::alias::AliasTable;
use crate::error::{Error, Result};
use crate::graph::{Graph, NodeId};
use crate::rngs;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WalkConfig {
    /// Passes over the node set; each pass starts one walk per node.
    pub walks_per_node: usize,
    /// Steps per walk. A walk holds up to `walk_length + 1` nodes.
    pub walk_length: usize,
    pub seed: u64,
}

/// Per-node alias tables over positive-weight out-arcs.
#[derive(Clone, Debug)]
pub struct TransitionTable {
    targets: Vec<Vec<NodeId>>,
    tables: Vec<Option<AliasTable>>,
}

impl TransitionTable {
    pub fn new(g: &Graph) -> Self {
        let (targets, tables) = (0..g.n_nodes())
            .into_par_iter()
            .map(|v| {
                let (ts, ws): (Vec<NodeId>, Vec<f64>) = g
                    .out_neighbors(v)
                    .iter()
                    .zip(g.out_weights(v))
                    .filter(|(_, &w)| w > 0.0)
                    .map(|(&t, &w)| (t, w))
                    .unzip();
                let table = AliasTable::new(&ws);
                (ts, table)
            })
            .unzip();
        TransitionTable { targets, tables }
    }

    pub fn n_nodes(&self) -> usize {
        self.targets.len()
    }

    /// Draws the successor of `v`, or `None` at a dead end.
    #[inline]
    pub fn step<R: Rng + ?Sized>(&self, v: NodeId, rng: &mut R) -> Option<NodeId> {
        self.tables[v]
            .as_ref()
            .map(|t| self.targets[v][t.sample(rng)])
    }

    /// Appends a walk of at most `steps` transitions starting at `start` to `out`.
    pub fn walk_into<R: Rng + ?Sized>(
        &self,
        start: NodeId,
        steps: usize,
        rng: &mut R,
        out: &mut Vec<NodeId>,
    ) {
        out.push(start);
        let mut cur = start;
        for _ in 0..steps {
            match self.step(cur, rng) {
                Some(next) => {
                    out.push(next);
                    cur = next;
                }
                None => break,
            }
        }
    }
}

/// One walk from `start`: `steps` weight-proportional transitions, stopping
/// early at a node without positive-weight out-arcs.
pub fn weighted_random_walk<R: Rng + ?Sized>(
    g: &Graph,
    start: NodeId,
    steps: usize,
    rng: &mut R,
) -> Vec<NodeId> {
    let mut out = Vec::with_capacity(steps + 1);
    TransitionTable::new(g).walk_into(start, steps, rng, &mut out);
    out
}

/// Flat storage of walk sequences.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct WalkCorpus {
    tokens: Vec<u32>,
    offsets: Vec<usize>,
}

impl WalkCorpus {
    pub fn from_walks<I, W>(walks: I) -> Self
    where
        I: IntoIterator<Item = W>,
        W: AsRef<[NodeId]>,
    {
        let mut c = WalkCorpus {
            tokens: Vec::new(),
            offsets: vec![0],
        };
        for w in walks {
            c.push(w.as_ref());
        }
        c
    }

    fn push(&mut self, walk: &[NodeId]) {
        if self.offsets.is_empty() {
            self.offsets.push(0);
        }
        self.tokens.extend(walk.iter().map(|&v| v as u32));
        self.offsets.push(self.tokens.len());
    }

    pub fn len(&self) -> usize {
        self.offsets.len().saturating_sub(1)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn n_tokens(&self) -> usize {
        self.tokens.len()
    }

    pub fn walk(&self, i: usize) -> &[u32] {
        &self.tokens[self.offsets[i]..self.offsets[i + 1]]
    }

    pub fn walks(&self) -> impl ExactSizeIterator<Item = &[u32]> + '_ {
        (0..self.len()).map(move |i| self.walk(i))
    }

    pub fn max_node(&self) -> Option<NodeId> {
        self.tokens.iter().max().map(|&v| v as NodeId)
    }

    /// One walk per line, nodes written as labels separated by spaces.
    pub fn write<W: Write>(&self, labels: &[String], mut w: W) -> std::io::Result<()> {
        for walk in self.walks() {
            let mut first = true;
            for &v in walk {
                if !first {
                    w.write_all(b" ")?;
                }
                w.write_all(labels[v as usize].as_bytes())?;
                first = false;
            }
            w.write_all(b"\n")?;
        }
        Ok(())
    }
}

/// `walks_per_node` passes; each pass shuffles the nodes with a pass-specific
/// stream and starts one walk per node in that order. Every walk draws from
/// its own stream keyed by `(seed, pass, start)`, so the corpus does not
/// depend on the number of worker threads.
pub fn generate_corpus(g: &Graph, cfg: &WalkConfig) -> Result<WalkCorpus> {
    if g.n_nodes() == 0 {
        return Err(Error::EmptyGraph);
    }
    if cfg.walks_per_node == 0 || cfg.walk_length == 0 {
        return Err(Error::InvalidParameter(
            "walks_per_node and walk_length must be positive".into(),
        ));
    }
    let table = TransitionTable::new(g);
    Ok(corpus_from_table(&table, cfg))
}

pub(crate) fn corpus_from_table(table: &TransitionTable, cfg: &WalkConfig) -> WalkCorpus {
    let n = table.n_nodes();
    let mut corpus = WalkCorpus {
        tokens: Vec::with_capacity(n * cfg.walks_per_node * (cfg.walk_length + 1)),
        offsets: vec![0],
    };
    for pass in 0..cfg.walks_per_node {
        let mut order: Vec<NodeId> = (0..n).collect();
        order.shuffle(&mut rngs::stream(
            cfg.seed,
            rngs::tags::WALK_ORDER,
            &[pass as u64],
        ));
        let walks: Vec<Vec<NodeId>> = order
            .par_iter()
            .map(|&start| {
                let mut rng =
                    rngs::stream(cfg.seed, rngs::tags::WALK, &[pass as u64, start as u64]);
                let mut out = Vec::with_capacity(cfg.walk_length + 1);
                table.walk_into(start, cfg.walk_length, &mut rng, &mut out);
                out
            })
            .collect();
        for w in &walks {
            corpus.push(w);
        }
    }
    corpus
}
