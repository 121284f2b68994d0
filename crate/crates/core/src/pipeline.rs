//! Two-stage embedding: a base embedding of the original graph warm-starts
//! the persona vectors, which are then fine-tuned on the persona graph.

use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::clustering::LocalClustering;
use crate::error::Result;
use crate::graph::Graph;
use crate::persona::{build_persona_graph, PersonaGraph, PersonaId};
use crate::rngs;
use crate::skipgram::{self, EmbeddingMatrix, NoiseDistribution, TrainConfig};
use crate::walks::{generate_corpus, WalkConfig};

/// Walk and window settings for one embedding stage.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StageConfig {
    pub walks_per_node: usize,
    pub walk_length: usize,
    pub window: usize,
    pub epochs: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Persona2VecConfig {
    pub lambda: f64,
    pub dim: usize,
    pub base: StageConfig,
    pub persona: StageConfig,
    pub learning_rate: f64,
    pub negatives: usize,
    pub clustering: LocalClustering,
    /// Initialize persona vectors from the base embedding (otherwise random).
    pub warm_start: bool,
    pub seed: u64,
    /// 0 or 1: deterministic single-writer training.
    pub threads: usize,
}

impl Default for Persona2VecConfig {
    fn default() -> Self {
        Persona2VecConfig {
            lambda: 0.5,
            dim: 128,
            base: StageConfig {
                walks_per_node: 10,
                walk_length: 40,
                window: 5,
                epochs: 1,
            },
            persona: StageConfig {
                walks_per_node: 5,
                walk_length: 80,
                window: 2,
                epochs: 1,
            },
            learning_rate: 0.025,
            negatives: 5,
            clustering: LocalClustering::ConnectedComponents,
            warm_start: true,
            seed: 0,
            threads: 0,
        }
    }
}

impl Persona2VecConfig {
    fn stage_seed(&self, stage: u64) -> u64 {
        rngs::mix(self.seed, rngs::tags::PIPELINE, &[stage])
    }

    fn walk_config(&self, stage: &StageConfig, id: u64) -> WalkConfig {
        WalkConfig {
            walks_per_node: stage.walks_per_node,
            walk_length: stage.walk_length,
            seed: self.stage_seed(id),
        }
    }

    fn train_config(&self, stage: &StageConfig, id: u64) -> TrainConfig {
        TrainConfig {
            dim: self.dim,
            window: stage.window,
            learning_rate: self.learning_rate,
            epochs: stage.epochs,
            negatives: self.negatives,
            seed: self.stage_seed(id),
            threads: self.threads,
        }
    }
}

const STAGE_BASE_WALKS: u64 = 0;
const STAGE_BASE_TRAIN: u64 = 1;
const STAGE_SPLIT: u64 = 2;
const STAGE_PERSONA_WALKS: u64 = 3;
const STAGE_PERSONA_TRAIN: u64 = 4;

/// Wall-clock time spent in each stage.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct StageTimings {
    pub split_secs: f64,
    pub base_walk_secs: f64,
    pub base_train_secs: f64,
    pub persona_walk_secs: f64,
    pub persona_train_secs: f64,
}

impl StageTimings {
    pub fn total_secs(&self) -> f64 {
        self.split_secs
            + self.base_walk_secs
            + self.base_train_secs
            + self.persona_walk_secs
            + self.persona_train_secs
    }
}

fn timed<T>(slot: &mut f64, f: impl FnOnce() -> T) -> T {
    let t = Instant::now();
    let out = f();
    *slot += secs(t.elapsed());
    out
}

fn secs(d: Duration) -> f64 {
    d.as_secs_f64()
}

#[derive(Clone, Debug)]
pub struct Persona2VecOutput {
    pub persona_graph: PersonaGraph,
    /// One row per persona.
    pub embedding: EmbeddingMatrix,
    pub timings: StageTimings,
}

/// Builds the persona graph of `g` and embeds its personas.
pub fn persona2vec(g: &Graph, cfg: &Persona2VecConfig) -> Result<Persona2VecOutput> {
    let mut timings = StageTimings::default();
    let persona_graph = timed(&mut timings.split_secs, || {
        build_persona_graph(g, cfg.clustering, cfg.lambda, cfg.stage_seed(STAGE_SPLIT))
    })?;
    let init = if cfg.warm_start {
        let base = base_embedding(g, cfg, &mut timings)?;
        warm_start(&persona_graph, &base)
    } else {
        skipgram::init_random(
            persona_graph.n_personas(),
            &cfg.train_config(&cfg.persona, STAGE_PERSONA_TRAIN),
        )?
    };
    let embedding = fine_tune(&persona_graph, cfg, init, &mut timings)?;
    Ok(Persona2VecOutput {
        persona_graph,
        embedding,
        timings,
    })
}

/// Single-vector embedding of `g` with the base-stage settings; the no-split control.
pub fn embed_baseline(g: &Graph, cfg: &Persona2VecConfig) -> Result<EmbeddingMatrix> {
    base_embedding(g, cfg, &mut StageTimings::default())
}

pub(crate) fn base_embedding(
    g: &Graph,
    cfg: &Persona2VecConfig,
    timings: &mut StageTimings,
) -> Result<EmbeddingMatrix> {
    let corpus = timed(&mut timings.base_walk_secs, || {
        generate_corpus(g, &cfg.walk_config(&cfg.base, STAGE_BASE_WALKS))
    })?;
    timed(&mut timings.base_train_secs, || {
        let noise = NoiseDistribution::from_graph(g)?;
        skipgram::train(
            &corpus,
            &noise,
            &cfg.train_config(&cfg.base, STAGE_BASE_TRAIN),
            None,
        )
    })
}

/// Copies each node's base vectors (input and output) to all of its personas.
pub fn warm_start(pg: &PersonaGraph, base: &EmbeddingMatrix) -> EmbeddingMatrix {
    let dim = base.dim();
    let mut m = EmbeddingMatrix::zeros(pg.n_personas(), dim);
    for p in 0..pg.n_personas() {
        let v = pg.owner(p);
        m.row_mut(p).copy_from_slice(base.row(v));
        m.output_row_mut(p).copy_from_slice(base.output_row(v));
    }
    m
}

/// Persona-stage walks and training starting from `init`.
pub fn fine_tune(
    pg: &PersonaGraph,
    cfg: &Persona2VecConfig,
    init: EmbeddingMatrix,
    timings: &mut StageTimings,
) -> Result<EmbeddingMatrix> {
    let corpus = timed(&mut timings.persona_walk_secs, || {
        generate_corpus(
            pg.graph(),
            &cfg.walk_config(&cfg.persona, STAGE_PERSONA_WALKS),
        )
    })?;
    timed(&mut timings.persona_train_secs, || {
        let noise = NoiseDistribution::from_graph(pg.graph())?;
        skipgram::train(
            &corpus,
            &noise,
            &cfg.train_config(&cfg.persona, STAGE_PERSONA_TRAIN),
            Some(init),
        )
    })
}

/// Embedding rows grouped by original node; the identity grouping for
/// single-vector embeddings.
#[derive(Clone, Debug)]
pub struct NodeEmbedding {
    pub v2p: Vec<Vec<PersonaId>>,
    pub matrix: EmbeddingMatrix,
}

impl NodeEmbedding {
    pub fn single(matrix: EmbeddingMatrix) -> Self {
        NodeEmbedding {
            v2p: (0..matrix.rows()).map(|i| vec![i]).collect(),
            matrix,
        }
    }

    pub fn personas(pg: &PersonaGraph, matrix: EmbeddingMatrix) -> Self {
        NodeEmbedding {
            v2p: pg.v2p().to_vec(),
            matrix,
        }
    }
}
