//! Dataset download and conversion to plain edge lists.
//!
//! Raw downloads are kept under `<data-dir>/raw/`. Their SHA-256 digests are
//! recorded in `<data-dir>/checksums.sha256` the first time a file is seen
//! and checked on every later fetch; `--sha256` pins an expected digest
//! up front.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use flate2::read::GzDecoder;
use persona_core::datasets::{DatasetInfo, SourceFormat};
use persona_core::read_edge_list;

use crate::manifest::sha256_file;
use crate::mat;

pub const CHECKSUM_FILE: &str = "checksums.sha256";

#[derive(Clone, Debug)]
pub struct Fetched {
    pub raw: PathBuf,
    pub raw_sha256: String,
    pub edge_list: PathBuf,
    pub edges: usize,
    pub nodes: usize,
    /// The digest was recorded by this fetch rather than checked.
    pub first_seen: bool,
}

fn raw_name(info: &DatasetInfo) -> &'static str {
    info.url.rsplit('/').next().unwrap_or(info.name)
}

pub fn download(url: &str, dest: &Path) -> Result<()> {
    log::info!("downloading {url}");
    let resp = ureq::get(url)
        .call()
        .map_err(|e| anyhow!("download failed: {e}"))?;
    let tmp = dest.with_extension("part");
    let mut out = File::create(&tmp).with_context(|| format!("creating {}", tmp.display()))?;
    std::io::copy(&mut resp.into_reader(), &mut out)
        .with_context(|| format!("downloading {url}"))?;
    out.sync_all()?;
    fs::rename(&tmp, dest).with_context(|| format!("moving download to {}", dest.display()))?;
    Ok(())
}

fn read_checksums(path: &Path) -> Result<BTreeMap<String, String>> {
    if !path.exists() {
        return Ok(BTreeMap::new());
    }
    let f = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let mut out = BTreeMap::new();
    for line in BufReader::new(f).lines() {
        let line = line?;
        let mut parts = line.split_whitespace();
        if let (Some(hash), Some(name)) = (parts.next(), parts.next()) {
            out.insert(name.to_string(), hash.to_ascii_lowercase());
        }
    }
    Ok(out)
}

fn write_checksums(path: &Path, sums: &BTreeMap<String, String>) -> Result<()> {
    let mut f = BufWriter::new(File::create(path)?);
    for (name, hash) in sums {
        writeln!(f, "{hash}  {name}")?;
    }
    f.flush()?;
    Ok(())
}

/// Checks `raw` against a pinned or previously recorded digest, recording it
/// if neither exists. Returns the digest and whether it was newly recorded.
pub fn verify_checksum(data_dir: &Path, raw: &Path, pin: Option<&str>) -> Result<(String, bool)> {
    let (actual, _) = sha256_file(raw)?;
    let name = raw
        .file_name()
        .and_then(|n| n.to_str())
        .ok_or_else(|| anyhow!("bad file name {}", raw.display()))?
        .to_string();
    if let Some(pin) = pin {
        if !pin.eq_ignore_ascii_case(&actual) {
            bail!("checksum mismatch for {name}: expected {pin}, got {actual}");
        }
    }
    let sums_path = data_dir.join(CHECKSUM_FILE);
    let mut sums = read_checksums(&sums_path)?;
    match sums.get(&name) {
        Some(known) if *known != actual => bail!(
            "checksum mismatch for {name}: {} records {known}, file has {actual}",
            sums_path.display()
        ),
        Some(_) => Ok((actual, false)),
        None => {
            log::warn!("recording first-seen checksum {actual} for {name}");
            sums.insert(name, actual.clone());
            write_checksums(&sums_path, &sums)?;
            Ok((actual, true))
        }
    }
}

/// Converts a downloaded file to a whitespace edge list at `out`.
/// Returns `(nodes, edges)` as parsed back from the written list.
pub fn convert(info: &DatasetInfo, raw: &Path, out: &Path) -> Result<(usize, usize)> {
    let mut w = BufWriter::new(File::create(out)?);
    match info.format {
        SourceFormat::GzipEdgeList => {
            let mut text = String::new();
            GzDecoder::new(File::open(raw)?)
                .read_to_string(&mut text)
                .with_context(|| format!("decompressing {}", raw.display()))?;
            w.write_all(text.as_bytes())?;
        }
        SourceFormat::MatSparse { variable } => {
            let bytes = fs::read(raw)?;
            let m = mat::read_sparse(&bytes, variable)
                .with_context(|| format!("reading {}", raw.display()))?;
            writeln!(
                w,
                "# {} from {} ({}x{})",
                variable, info.url, m.rows, m.cols
            )?;
            for (u, v) in m.undirected_edges() {
                writeln!(w, "{u}\t{v}")?;
            }
        }
    }
    w.flush()?;
    drop(w);
    let (g, _) = read_edge_list(
        BufReader::new(File::open(out)?),
        info.directed,
        &out.display().to_string(),
    )?;
    Ok((g.n_nodes(), g.n_edges()))
}

pub fn fetch(
    info: &DatasetInfo,
    data_dir: &Path,
    pin: Option<&str>,
    force: bool,
) -> Result<Fetched> {
    let raw_dir = data_dir.join("raw");
    fs::create_dir_all(&raw_dir).with_context(|| format!("creating {}", raw_dir.display()))?;
    let raw = raw_dir.join(raw_name(info));
    if force || !raw.exists() {
        download(info.url, &raw)?;
    } else {
        log::info!("using cached {}", raw.display());
    }
    let (raw_sha256, first_seen) = verify_checksum(data_dir, &raw, pin)?;
    let edge_list = info.edge_list_path(data_dir);
    let (nodes, edges) = convert(info, &raw, &edge_list)?;
    Ok(Fetched {
        raw,
        raw_sha256,
        edge_list,
        edges,
        nodes,
        first_seen,
    })
}
