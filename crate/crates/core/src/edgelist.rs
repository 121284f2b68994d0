//! Whitespace-separated edge-list files (`src dst [weight]`, `#` comments).

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::graph::{Graph, GraphBuilder};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct LoadStats {
    pub lines: usize,
    pub self_loops_dropped: usize,
    pub duplicates_merged: usize,
}

pub fn load_edge_list(path: impl AsRef<Path>, directed: bool) -> Result<Graph> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let (g, stats) = read_edge_list(BufReader::new(file), directed, &path.display().to_string())?;
    if stats.self_loops_dropped > 0 {
        log::warn!(
            "{}: dropped {} self-loop(s)",
            path.display(),
            stats.self_loops_dropped
        );
    }
    if stats.duplicates_merged > 0 {
        log::warn!(
            "{}: merged {} duplicate edge(s) by summing weights",
            path.display(),
            stats.duplicates_merged
        );
    }
    Ok(g)
}

pub fn read_edge_list<R: BufRead>(
    reader: R,
    directed: bool,
    source_name: &str,
) -> Result<(Graph, LoadStats)> {
    let mut b = GraphBuilder::new(directed);
    let mut stats = LoadStats::default();
    let parse_err = |line: usize, message: String| Error::Parse {
        source_name: source_name.to_owned(),
        line,
        message,
    };
    for (i, line) in reader.lines().enumerate() {
        let lineno = i + 1;
        let line = line.map_err(|e| Error::io(source_name, e))?;
        stats.lines = lineno;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = trimmed.split_whitespace().collect();
        let weight = match fields.len() {
            2 => 1.0,
            3 => {
                let w: f64 = fields[2]
                    .parse()
                    .map_err(|_| parse_err(lineno, format!("bad weight {:?}", fields[2])))?;
                if !(w.is_finite() && w > 0.0) {
                    return Err(parse_err(
                        lineno,
                        format!("weight must be positive, got {w}"),
                    ));
                }
                w
            }
            k => {
                return Err(parse_err(
                    lineno,
                    format!("expected 2 or 3 fields, found {k}"),
                ))
            }
        };
        b.add_edge(fields[0], fields[1], weight);
    }
    stats.self_loops_dropped = b.self_loops_dropped();
    stats.duplicates_merged = b.duplicates_merged();
    Ok((b.build(), stats))
}

/// Writes one edge per line using original labels. Unit weights are omitted.
pub fn write_edge_list<W: Write>(g: &Graph, mut w: W) -> std::io::Result<()> {
    for e in g.edges() {
        if e.weight == 1.0 {
            writeln!(w, "{} {}", g.label(e.src), g.label(e.dst))?;
        } else {
            writeln!(w, "{} {} {}", g.label(e.src), g.label(e.dst), e.weight)?;
        }
    }
    Ok(())
}

pub fn save_edge_list(g: &Graph, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    write_edge_list(g, &mut w).map_err(|e| Error::io(path, e))?;
    w.flush().map_err(|e| Error::io(path, e))
}
