//! Built-in graphs and the registry of public benchmark datasets.

use std::path::{Path, PathBuf};

use crate::edgelist::load_edge_list;
use crate::error::Result;
use crate::graph::{largest_component, Graph, GraphBuilder};

/// How a dataset is published upstream.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SourceFormat {
    /// Gzipped whitespace edge list with `#` comments.
    GzipEdgeList,
    /// MATLAB v5 file holding a sparse adjacency matrix under `variable`.
    MatSparse { variable: &'static str },
}

/// A benchmark graph: where to get it and its published size after
/// largest-component extraction, plus its published persona-graph size under
/// connected-component ego clustering.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DatasetInfo {
    pub name: &'static str,
    pub directed: bool,
    pub url: &'static str,
    pub format: SourceFormat,
    pub nodes: usize,
    pub edges: usize,
    pub personas: usize,
    pub persona_edges: usize,
}

pub const DATASETS: [DatasetInfo; 5] = [
    DatasetInfo {
        name: "ppi",
        directed: false,
        url: "https://snap.stanford.edu/node2vec/Homo_sapiens.mat",
        format: SourceFormat::MatSparse {
            variable: "network",
        },
        nodes: 3_863,
        edges: 38_705,
        personas: 16_734,
        persona_edges: 132_932,
    },
    DatasetInfo {
        name: "ca-hepth",
        directed: false,
        url: "https://snap.stanford.edu/data/ca-HepTh.txt.gz",
        format: SourceFormat::GzipEdgeList,
        nodes: 9_877,
        edges: 25_998,
        personas: 16_071,
        persona_edges: 33_524,
    },
    DatasetInfo {
        name: "ca-astroph",
        directed: false,
        url: "https://snap.stanford.edu/data/ca-AstroPh.txt.gz",
        format: SourceFormat::GzipEdgeList,
        nodes: 17_903,
        edges: 197_301,
        personas: 25_706,
        persona_edges: 29_012,
    },
    DatasetInfo {
        name: "wiki-vote",
        directed: true,
        url: "https://snap.stanford.edu/data/wiki-Vote.txt.gz",
        format: SourceFormat::GzipEdgeList,
        nodes: 7_066,
        edges: 103_633,
        personas: 21_476,
        persona_edges: 118_020,
    },
    DatasetInfo {
        name: "soc-epinions",
        directed: true,
        url: "https://snap.stanford.edu/data/soc-Epinions1.txt.gz",
        format: SourceFormat::GzipEdgeList,
        nodes: 75_877,
        edges: 508_836,
        personas: 220_332,
        persona_edges: 3_550_594,
    },
];

/// Case-insensitive registry lookup.
pub fn dataset(name: &str) -> Option<&'static DatasetInfo> {
    DATASETS.iter().find(|d| d.name.eq_ignore_ascii_case(name))
}

/// `$PERSONA_DATA_DIR`, or `data` under the current directory.
pub fn default_data_dir() -> PathBuf {
    std::env::var_os("PERSONA_DATA_DIR")
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("data"))
}

impl DatasetInfo {
    /// Location of the converted edge list inside `dir`.
    pub fn edge_list_path(&self, dir: &Path) -> PathBuf {
        dir.join(format!("{}.txt", self.name))
    }

    /// Loads the converted edge list and keeps its largest (weakly)
    /// connected component.
    pub fn load(&self, dir: &Path) -> Result<Graph> {
        let g = load_edge_list(self.edge_list_path(dir), self.directed)?;
        largest_component(&g)
    }
}

/// Zachary's karate club: 34 members labeled `1..=34`, 78 friendships.
pub fn karate_club() -> Graph {
    const EDGES: [(u8, u8); 78] = [
        (1, 2),
        (1, 3),
        (1, 4),
        (1, 5),
        (1, 6),
        (1, 7),
        (1, 8),
        (1, 9),
        (1, 11),
        (1, 12),
        (1, 13),
        (1, 14),
        (1, 18),
        (1, 20),
        (1, 22),
        (1, 32),
        (2, 3),
        (2, 4),
        (2, 8),
        (2, 14),
        (2, 18),
        (2, 20),
        (2, 22),
        (2, 31),
        (3, 4),
        (3, 8),
        (3, 9),
        (3, 10),
        (3, 14),
        (3, 28),
        (3, 29),
        (3, 33),
        (4, 8),
        (4, 13),
        (4, 14),
        (5, 7),
        (5, 11),
        (6, 7),
        (6, 11),
        (6, 17),
        (7, 17),
        (9, 31),
        (9, 33),
        (9, 34),
        (10, 34),
        (14, 34),
        (15, 33),
        (15, 34),
        (16, 33),
        (16, 34),
        (19, 33),
        (19, 34),
        (20, 34),
        (21, 33),
        (21, 34),
        (23, 33),
        (23, 34),
        (24, 26),
        (24, 28),
        (24, 30),
        (24, 33),
        (24, 34),
        (25, 26),
        (25, 28),
        (25, 32),
        (26, 32),
        (27, 30),
        (27, 34),
        (28, 34),
        (29, 32),
        (29, 34),
        (30, 33),
        (30, 34),
        (31, 33),
        (31, 34),
        (32, 33),
        (32, 34),
        (33, 34),
    ];
    let mut b = GraphBuilder::new(false);
    for v in 1..=34 {
        b.node(&v.to_string());
    }
    for (s, t) in EDGES {
        b.add_edge(&s.to_string(), &t.to_string(), 1.0);
    }
    b.build()
}
