use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{source_name}:{line}: {message}")]
    Parse {
        source_name: String,
        line: usize,
        message: String,
    },

    #[error("i/o error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("graph has no nodes")]
    EmptyGraph,

    #[error("no removable edges: every edge of the graph is a bridge")]
    NoRemovableEdges,

    #[error(
        "no negative pairs available: requested {requested}, only {available} non-edges exist"
    )]
    NoNegativePairs { requested: usize, available: usize },

    #[error("unknown node {0}")]
    UnknownNode(usize),

    #[error("walk corpus is empty")]
    EmptyCorpus,

    #[error("corpus references node {node} but the embedding has {rows} rows")]
    CorpusOutOfRange { node: usize, rows: usize },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
