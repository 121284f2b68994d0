//! Multi-role node embeddings from persona graphs.
//!
//! Every node is split into one persona per local cluster of its
//! ego-network ([`persona`]); personas of a node are linked by weighted
//! directed arcs so the split graph stays connected. A skip-gram model is
//! first trained on random walks of the original graph ([`skipgram`],
//! [`walks`]) and then fine-tuned on the persona graph starting from those
//! vectors ([`pipeline`]). [`linkpred`] holds the evaluation harness.

pub mod alias;
pub mod clustering;
pub mod datasets;
pub mod edgelist;
pub mod error;
pub mod generators;
pub mod graph;
pub mod linkpred;
pub mod persona;
pub mod pipeline;
pub mod rngs;
pub mod skipgram;
pub mod unionfind;
pub mod walks;

pub use clustering::{cluster_ego, ego_network, EgoNetwork, LocalClustering};
pub use edgelist::{load_edge_list, read_edge_list, save_edge_list, write_edge_list};
pub use error::{Error, Result};
pub use graph::{is_connected, largest_component, Edge, Graph, GraphBuilder, NodeId};
pub use linkpred::{
    roc_auc, run_experiment, run_experiments, sample_negatives, score_pair, split_edges,
    Aggregation, EdgeSplit, EvalConfig, EvalResult, ExperimentSummary, LinkPredSplit, Method,
};
pub use persona::{
    build_persona_graph, persona_edge_bound_check, EdgeKind, PersonaEdgeBound, PersonaGraph,
    PersonaId,
};
pub use pipeline::{
    embed_baseline, persona2vec, NodeEmbedding, Persona2VecConfig, Persona2VecOutput, StageConfig,
    StageTimings,
};
pub use skipgram::{
    init_random, sgns_pair_update, train, EmbeddingMatrix, NoiseDistribution, TrainConfig,
};
pub use walks::{generate_corpus, weighted_random_walk, WalkConfig, WalkCorpus};
