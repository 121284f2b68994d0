use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{anyhow, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use persona_core::datasets::{dataset, DATASETS};
use persona_core::{
    build_persona_graph, embed_baseline, is_connected, largest_component, load_edge_list,
    persona2vec, run_experiments, write_edge_list, Aggregation, EvalConfig, EvalResult, Graph,
    LocalClustering, Method, Persona2VecConfig, StageConfig,
};
use serde::Serialize;

use crate::fetch;
use crate::manifest::{with_suffix, FileDigest, RunManifest};

pub const REPORT_SCHEMA_VERSION: u32 = 1;

/// Persona graph embedding: split nodes into roles, embed, evaluate.
#[derive(Debug, Parser)]
#[command(name = "persona", version)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Training threads; 0 and 1 give deterministic single-writer training.
    #[arg(long, global = true, env = "PERSONA_THREADS", default_value_t = 0)]
    pub threads: usize,

    /// More log output (-v info, -vv debug). `PERSONA_LOG` overrides.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build the persona graph and write the persona map and persona edge list.
    Split(SplitArgs),
    /// Embed a graph, split into personas unless --no-split.
    Embed(EmbedArgs),
    /// Hold out edges, embed the rest and report ROC-AUC over several seeds.
    Linkpred(LinkpredArgs),
    /// Download a benchmark dataset and convert it to an edge list.
    Fetch(FetchArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ClusteringArg {
    Cc,
    Lp,
}

impl From<ClusteringArg> for LocalClustering {
    fn from(c: ClusteringArg) -> Self {
        match c {
            ClusteringArg::Cc => LocalClustering::ConnectedComponents,
            ClusteringArg::Lp => LocalClustering::LabelPropagation,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum AggArg {
    Max,
    Min,
    Mean,
}

impl From<AggArg> for Aggregation {
    fn from(a: AggArg) -> Self {
        match a {
            AggArg::Max => Aggregation::Max,
            AggArg::Min => Aggregation::Min,
            AggArg::Mean => Aggregation::Mean,
        }
    }
}

fn non_negative(s: &str) -> Result<f64, String> {
    let x: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if x.is_finite() && x >= 0.0 {
        Ok(x)
    } else {
        Err(format!("{s} is not a finite non-negative number"))
    }
}

fn fraction(s: &str) -> Result<f64, String> {
    let x: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if x > 0.0 && x < 1.0 {
        Ok(x)
    } else {
        Err(format!("{s} is not strictly between 0 and 1"))
    }
}

#[derive(Clone, Debug, Args)]
pub struct InputArgs {
    /// Edge list: `src dst [weight]` per line, `#` comments.
    #[arg(long, short)]
    pub input: PathBuf,

    /// Treat edges as directed arcs.
    #[arg(long)]
    pub directed: bool,

    /// Keep only the largest (weakly) connected component.
    #[arg(long)]
    pub largest_component: bool,
}

impl InputArgs {
    fn load(&self) -> Result<Graph> {
        let g = load_edge_list(&self.input, self.directed)?;
        log::info!(
            "loaded {}: {} nodes, {} edges",
            self.input.display(),
            g.n_nodes(),
            g.n_edges()
        );
        if self.largest_component {
            let lcc = largest_component(&g)?;
            log::info!(
                "largest component: {} nodes, {} edges",
                lcc.n_nodes(),
                lcc.n_edges()
            );
            Ok(lcc)
        } else {
            Ok(g)
        }
    }
}

#[derive(Clone, Debug, Args)]
pub struct SplitOptions {
    /// Weight of persona edges relative to original out-degree.
    #[arg(long, env = "PERSONA_LAMBDA", default_value_t = 0.5, value_parser = non_negative)]
    pub lambda: f64,

    /// Ego-network clustering.
    #[arg(long, value_enum, default_value_t = ClusteringArg::Cc)]
    pub clustering: ClusteringArg,

    #[arg(long, env = "PERSONA_SEED", default_value_t = 0)]
    pub seed: u64,
}

#[derive(Clone, Debug, Args)]
pub struct ModelOptions {
    #[arg(long, default_value_t = 128, value_parser = clap::value_parser!(u64).range(1..))]
    pub dim: u64,

    #[arg(long, default_value_t = 10)]
    pub base_walks: usize,
    #[arg(long, default_value_t = 40)]
    pub base_walk_length: usize,
    #[arg(long, default_value_t = 5)]
    pub base_window: usize,
    #[arg(long, default_value_t = 1)]
    pub base_epochs: usize,

    #[arg(long, default_value_t = 5)]
    pub persona_walks: usize,
    #[arg(long, default_value_t = 80)]
    pub persona_walk_length: usize,
    #[arg(long, default_value_t = 2)]
    pub persona_window: usize,
    #[arg(long, default_value_t = 1)]
    pub persona_epochs: usize,

    #[arg(long, default_value_t = 0.025, value_parser = non_negative)]
    pub learning_rate: f64,

    /// Negative samples per positive pair.
    #[arg(long, default_value_t = 5)]
    pub negatives: usize,

    /// Train persona vectors from random initialization instead of the base embedding.
    #[arg(long)]
    pub no_warm_start: bool,
}

impl ModelOptions {
    pub fn config(&self, split: &SplitOptions, threads: usize) -> Persona2VecConfig {
        Persona2VecConfig {
            lambda: split.lambda,
            dim: self.dim as usize,
            base: StageConfig {
                walks_per_node: self.base_walks,
                walk_length: self.base_walk_length,
                window: self.base_window,
                epochs: self.base_epochs,
            },
            persona: StageConfig {
                walks_per_node: self.persona_walks,
                walk_length: self.persona_walk_length,
                window: self.persona_window,
                epochs: self.persona_epochs,
            },
            learning_rate: self.learning_rate,
            negatives: self.negatives,
            clustering: split.clustering.into(),
            warm_start: !self.no_warm_start,
            seed: split.seed,
            threads,
        }
    }
}

#[derive(Debug, Args)]
pub struct SplitArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub split: SplitOptions,
    /// Output prefix; writes `<prefix>.personas.tsv`, `<prefix>.edges` and
    /// `<prefix>.manifest.json`. Defaults to the input path without extension.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EmbedArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub split: SplitOptions,
    #[command(flatten)]
    pub model: ModelOptions,
    /// One vector per node on the original graph.
    #[arg(long)]
    pub no_split: bool,
    /// Output prefix; writes `<prefix>.emb`, `<prefix>.personas.tsv` and
    /// `<prefix>.manifest.json`.
    #[arg(long, short)]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct LinkpredArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub split: SplitOptions,
    #[command(flatten)]
    pub model: ModelOptions,
    /// Number of runs; run i uses seed `--seed + i` for both the split and the model.
    #[arg(long, default_value_t = 5, value_parser = clap::value_parser!(u64).range(1..))]
    pub seeds: u64,
    /// Persona-pair score aggregation.
    #[arg(long, value_enum, default_value_t = AggArg::Max)]
    pub agg: AggArg,
    /// Fraction of edges held out.
    #[arg(long, default_value_t = 0.5, value_parser = fraction)]
    pub test_fraction: f64,
    /// Evaluate the single-vector embedding of the unsplit graph.
    #[arg(long)]
    pub baseline: bool,
    /// JSON report path; the manifest goes next to it.
    #[arg(long)]
    pub report: PathBuf,
}

#[derive(Debug, Args)]
pub struct FetchArgs {
    /// Dataset name; `list` prints the registry.
    pub name: String,
    #[arg(long, env = "PERSONA_DATA_DIR", default_value = "data")]
    pub data_dir: PathBuf,
    /// Expected SHA-256 of the raw download.
    #[arg(long)]
    pub sha256: Option<String>,
    /// Download again even if a cached copy exists.
    #[arg(long)]
    pub force: bool,
}

/// Errors that are the caller's fault rather than the data's.
#[derive(Debug, thiserror::Error)]
#[error("{0}")]
pub struct UsageError(pub String);

pub fn run(cli: Cli) -> Result<()> {
    if cli.threads > 1 {
        // walk generation is thread-count invariant; this only sizes the pool
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(cli.threads)
            .build_global()
        {
            log::debug!("thread pool already initialized: {e}");
        }
    }
    match cli.command {
        Command::Split(a) => split(a, cli.threads),
        Command::Embed(a) => embed(a, cli.threads),
        Command::Linkpred(a) => linkpred(a, cli.threads),
        Command::Fetch(a) => fetch_cmd(a),
    }
}

fn prepare_output(prefix: &Path) -> Result<()> {
    if let Some(dir) = prefix.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    Ok(())
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(
        File::create(path).with_context(|| format!("creating {}", path.display()))?,
    ))
}

fn split(a: SplitArgs, threads: usize) -> Result<()> {
    let t = Instant::now();
    let g = a.input.load()?;
    let load_secs = t.elapsed().as_secs_f64();
    let clustering: LocalClustering = a.split.clustering.into();
    let t = Instant::now();
    let pg = build_persona_graph(&g, clustering, a.split.lambda, a.split.seed)?;
    let split_secs = t.elapsed().as_secs_f64();

    let prefix = a.output.unwrap_or_else(|| a.input.input.with_extension(""));
    prepare_output(&prefix)?;
    let map_path = with_suffix(&prefix, "personas.tsv");
    let edges_path = with_suffix(&prefix, "edges");
    let mut w = create(&map_path)?;
    pg.write_persona_map(&mut w)?;
    w.flush()?;
    let mut w = create(&edges_path)?;
    write_edge_list(pg.graph(), &mut w)?;
    w.flush()?;

    let config = serde_json::json!({
        "input": a.input.input,
        "directed": a.input.directed,
        "largest_component": a.input.largest_component,
        "lambda": a.split.lambda,
        "clustering": clustering,
        "seed": a.split.seed,
    });
    let mut m = RunManifest::new("split", config, threads);
    m.input = Some(FileDigest::of(&a.input.input)?);
    m.seed = Some(a.split.seed);
    m.add_artifact(&map_path)?;
    m.add_artifact(&edges_path)?;
    m.timings.insert("load".into(), load_secs);
    m.timings.insert("split".into(), split_secs);
    m.write(&with_suffix(&prefix, "manifest.json"))?;

    println!(
        "{} nodes -> {} personas ({} split), {} persona arcs; wrote {} and {}",
        g.n_nodes(),
        pg.n_personas(),
        pg.split_node_count(),
        pg.graph().n_edges(),
        map_path.display(),
        edges_path.display()
    );
    Ok(())
}

fn embed(a: EmbedArgs, threads: usize) -> Result<()> {
    let t = Instant::now();
    let g = a.input.load()?;
    let load_secs = t.elapsed().as_secs_f64();
    let cfg = a.model.config(&a.split, threads);
    prepare_output(&a.output)?;
    let emb_path = with_suffix(&a.output, "emb");
    let map_path = with_suffix(&a.output, "personas.tsv");

    let mut m = RunManifest::new(
        "embed",
        serde_json::json!({
            "input": a.input.input,
            "directed": a.input.directed,
            "largest_component": a.input.largest_component,
            "no_split": a.no_split,
            "model": cfg,
        }),
        threads,
    );
    m.input = Some(FileDigest::of(&a.input.input)?);
    m.seed = Some(cfg.seed);
    m.timings.insert("load".into(), load_secs);

    if a.no_split {
        let t = Instant::now();
        let emb = embed_baseline(&g, &cfg)?;
        m.timings.insert("base".into(), t.elapsed().as_secs_f64());
        let mut w = create(&emb_path)?;
        emb.write_text(g.labels(), &mut w)?;
        w.flush()?;
        m.add_artifact(&emb_path)?;
        println!(
            "{} vectors of dimension {}; wrote {}",
            emb.rows(),
            emb.dim(),
            emb_path.display()
        );
    } else {
        let out = persona2vec(&g, &cfg)?;
        let pg = &out.persona_graph;
        let mut w = create(&emb_path)?;
        out.embedding.write_text(pg.graph().labels(), &mut w)?;
        w.flush()?;
        let mut w = create(&map_path)?;
        pg.write_persona_map(&mut w)?;
        w.flush()?;
        m.add_artifact(&emb_path)?;
        m.add_artifact(&map_path)?;
        let ts = &out.timings;
        for (k, v) in [
            ("split", ts.split_secs),
            ("base_walks", ts.base_walk_secs),
            ("base_train", ts.base_train_secs),
            ("persona_walks", ts.persona_walk_secs),
            ("persona_train", ts.persona_train_secs),
        ] {
            m.timings.insert(k.into(), v);
        }
        println!(
            "{} nodes -> {} persona vectors of dimension {}; wrote {} and {}",
            g.n_nodes(),
            pg.n_personas(),
            cfg.dim,
            emb_path.display(),
            map_path.display()
        );
    }
    m.write(&with_suffix(&a.output, "manifest.json"))?;
    Ok(())
}

#[derive(Debug, Serialize)]
pub struct LinkpredReport {
    pub schema_version: u32,
    pub dataset: String,
    pub input: FileDigest,
    pub directed: bool,
    pub nodes: usize,
    pub edges: usize,
    pub method: Method,
    pub eval: EvalConfig,
    pub config: Persona2VecConfig,
    pub seeds: Vec<u64>,
    /// Per-seed ROC-AUC, in seed order.
    pub auc: Vec<f64>,
    pub mean_auc: f64,
    pub stderr_auc: f64,
    pub runs: Vec<EvalResult>,
    pub wall_secs: f64,
}

fn linkpred(a: LinkpredArgs, threads: usize) -> Result<()> {
    let start = Instant::now();
    let g = a.input.load()?;
    if !is_connected(&g, &[]) {
        return Err(anyhow!(
            "{} is not connected; held-out edges are chosen so the training graph stays connected (try --largest-component)",
            a.input.input.display()
        ));
    }
    let cfg = a.model.config(&a.split, threads);
    let eval = EvalConfig {
        test_fraction: a.test_fraction,
        agg: a.agg.into(),
        method: if a.baseline {
            Method::Baseline
        } else {
            Method::Persona
        },
    };
    let seeds: Vec<u64> = (0..a.seeds).map(|i| a.split.seed + i).collect();
    let summary = run_experiments(&g, &cfg, &eval, &seeds)?;
    for r in &summary.runs {
        log::info!("seed {}: AUC {:.4} ({:.1}s)", r.seed, r.auc, r.total_secs);
    }
    let input = FileDigest::of(&a.input.input)?;
    let report = LinkpredReport {
        schema_version: REPORT_SCHEMA_VERSION,
        dataset: a
            .input
            .input
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default(),
        input: input.clone(),
        directed: a.input.directed,
        nodes: g.n_nodes(),
        edges: g.n_edges(),
        method: eval.method,
        eval,
        config: cfg.clone(),
        seeds: seeds.clone(),
        auc: summary.runs.iter().map(|r| r.auc).collect(),
        mean_auc: summary.mean_auc,
        stderr_auc: summary.stderr_auc,
        runs: summary.runs.clone(),
        wall_secs: start.elapsed().as_secs_f64(),
    };
    prepare_output(&a.report)?;
    let mut w = create(&a.report)?;
    serde_json::to_writer_pretty(&mut w, &report)?;
    writeln!(w)?;
    w.flush()?;

    let mut m = RunManifest::new(
        "linkpred",
        serde_json::json!({
            "input": a.input.input,
            "directed": a.input.directed,
            "largest_component": a.input.largest_component,
            "eval": eval,
            "seeds": seeds,
            "model": cfg,
        }),
        threads,
    );
    m.input = Some(input);
    m.seed = Some(a.split.seed);
    m.add_artifact(&a.report)?;
    let sum = |f: fn(&EvalResult) -> f64| summary.runs.iter().map(f).sum::<f64>();
    m.timings
        .insert("split".into(), sum(|r| r.timings.split_secs));
    m.timings
        .insert("base_walks".into(), sum(|r| r.timings.base_walk_secs));
    m.timings
        .insert("base_train".into(), sum(|r| r.timings.base_train_secs));
    m.timings
        .insert("persona_walks".into(), sum(|r| r.timings.persona_walk_secs));
    m.timings.insert(
        "persona_train".into(),
        sum(|r| r.timings.persona_train_secs),
    );
    m.timings.insert("scoring".into(), sum(|r| r.scoring_secs));
    m.timings.insert("total".into(), report.wall_secs);
    m.write(&with_suffix(&a.report.with_extension(""), "manifest.json"))?;

    println!(
        "{}: AUC {:.4} ± {:.4} over {} seed(s); wrote {}",
        report.dataset,
        report.mean_auc,
        report.stderr_auc,
        seeds.len(),
        a.report.display()
    );
    Ok(())
}

fn fetch_cmd(a: FetchArgs) -> Result<()> {
    if a.name == "list" {
        for d in &DATASETS {
            println!(
                "{:<14} {:<10} |V|={:<7} |E|={:<8} {}",
                d.name,
                if d.directed { "directed" } else { "undirected" },
                d.nodes,
                d.edges,
                d.url
            );
        }
        return Ok(());
    }
    let info = dataset(&a.name).ok_or_else(|| {
        let names: Vec<&str> = DATASETS.iter().map(|d| d.name).collect();
        anyhow!(UsageError(format!(
            "unknown dataset {:?} (known: {})",
            a.name,
            names.join(", ")
        )))
    })?;
    let f = fetch::fetch(info, &a.data_dir, a.sha256.as_deref(), a.force)?;
    println!(
        "{}: {} nodes, {} edges -> {} (raw sha256 {}{})",
        info.name,
        f.nodes,
        f.edges,
        f.edge_list.display(),
        f.raw_sha256,
        if f.first_seen {
            ", recorded"
        } else {
            ", verified"
        }
    );
    Ok(())
}

/// Exit status for an error from [`run`]: 1 for usage errors, 2 otherwise.
pub fn exit_code(e: &anyhow::Error) -> i32 {
    let usage = e.chain().any(|c| {
        c.is::<UsageError>()
            || matches!(
                c.downcast_ref::<persona_core::Error>(),
                Some(persona_core::Error::InvalidParameter(_))
            )
    });
    if usage {
        1
    } else {
        2
    }
}
