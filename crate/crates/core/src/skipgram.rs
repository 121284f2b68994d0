//! Skip-gram with negative sampling over walk corpora.
//!
//! Each `(center, context)` pair within the window is one logistic step: the
//! context's output vector is pulled towards the center's input vector and
//! `negatives` noise nodes are pushed away. Training can run with a single
//! writer (bit-reproducible) or with several workers sharing the matrices
//! without locks; in the latter mode concurrent updates to the same row may be
//! lost, which SGD tolerates.

use std::io::Write;
use std::sync::atomic::{AtomicU32, AtomicU64, Ordering};

use num_traits::Float;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::alias::AliasTable;
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::rngs;
use crate::walks::WalkCorpus;

/// Floor of the linearly decaying learning rate, relative to the initial rate.
pub const MIN_LEARNING_RATE_FRACTION: f64 = 1e-4;

/// Exponent applied to node degrees in the noise distribution.
pub const NOISE_EXPONENT: f64 = 0.75;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub dim: usize,
    pub window: usize,
    pub learning_rate: f64,
    pub epochs: usize,
    pub negatives: usize,
    pub seed: u64,
    /// Worker threads. 0 or 1 selects the deterministic single-writer mode.
    pub threads: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            dim: 128,
            window: 5,
            learning_rate: 0.025,
            epochs: 1,
            negatives: 5,
            seed: 0,
            threads: 0,
        }
    }
}

impl TrainConfig {
    fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidParameter(m.to_owned()));
        if self.dim == 0 {
            return bad("embedding dimension must be positive");
        }
        if self.window == 0 {
            return bad("window must be at least 1");
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return bad("learning rate must be positive");
        }
        if self.negatives == 0 {
            return bad("at least one negative sample is required");
        }
        Ok(())
    }
}

/// Input (`phi_in`) and output (`phi_out`) vectors, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddingMatrix {
    rows: usize,
    dim: usize,
    phi_in: Vec<f32>,
    phi_out: Vec<f32>,
}

impl EmbeddingMatrix {
    pub fn zeros(rows: usize, dim: usize) -> Self {
        EmbeddingMatrix {
            rows,
            dim,
            phi_in: vec![0.0; rows * dim],
            phi_out: vec![0.0; rows * dim],
        }
    }

    pub fn from_parts(
        rows: usize,
        dim: usize,
        phi_in: Vec<f32>,
        phi_out: Vec<f32>,
    ) -> Result<Self> {
        if phi_in.len() != rows * dim || phi_out.len() != rows * dim {
            return Err(Error::InvalidParameter(format!(
                "matrix buffers do not match {rows}x{dim}"
            )));
        }
        Ok(EmbeddingMatrix {
            rows,
            dim,
            phi_in,
            phi_out,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Representation of node `i`.
    pub fn row(&self, i: usize) -> &[f32] {
        &self.phi_in[i * self.dim..(i + 1) * self.dim]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f32] {
        &mut self.phi_in[i * self.dim..(i + 1) * self.dim]
    }

    pub fn output_row(&self, i: usize) -> &[f32] {
        &self.phi_out[i * self.dim..(i + 1) * self.dim]
    }

    pub fn output_row_mut(&mut self, i: usize) -> &mut [f32] {
        &mut self.phi_out[i * self.dim..(i + 1) * self.dim]
    }

    pub fn phi_in(&self) -> &[f32] {
        &self.phi_in
    }

    pub fn phi_out(&self) -> &[f32] {
        &self.phi_out
    }

    pub fn dot(&self, a: usize, b: usize) -> f64 {
        dot(self.row(a), self.row(b)) as f64
    }

    pub fn is_finite(&self) -> bool {
        self.phi_in
            .iter()
            .chain(&self.phi_out)
            .all(|x| x.is_finite())
    }

    /// Text export: `rows dim` header, then `label v_1 .. v_dim` per row.
    pub fn write_text<W: Write>(&self, labels: &[String], mut w: W) -> std::io::Result<()> {
        writeln!(w, "{} {}", self.rows, self.dim)?;
        for (i, label) in labels.iter().enumerate().take(self.rows) {
            write!(w, "{label}")?;
            for x in self.row(i) {
                write!(w, " {x}")?;
            }
            writeln!(w)?;
        }
        Ok(())
    }
}

/// Input rows uniform in `(-0.5/dim, 0.5/dim)`, output rows zero.
pub fn init_random(rows: usize, cfg: &TrainConfig) -> Result<EmbeddingMatrix> {
    if rows == 0 {
        return Err(Error::InvalidParameter("cannot embed zero nodes".into()));
    }
    if cfg.dim == 0 {
        return Err(Error::InvalidParameter(
            "embedding dimension must be positive".into(),
        ));
    }
    let mut rng = rngs::stream(cfg.seed, rngs::tags::INIT, &[]);
    let half = 0.5 / cfg.dim as f32;
    let phi_in = (0..rows * cfg.dim)
        .map(|_| rng.gen_range(-half..half))
        .collect();
    Ok(EmbeddingMatrix {
        rows,
        dim: cfg.dim,
        phi_in,
        phi_out: vec![0.0; rows * cfg.dim],
    })
}

/// Noise distribution for negative sampling.
#[derive(Clone, Debug)]
pub struct NoiseDistribution {
    weights: Vec<f64>,
    table: AliasTable,
}

impl NoiseDistribution {
    /// Probability proportional to `degree^0.75`, where degree counts arcs in
    /// both directions for directed graphs.
    pub fn from_graph(g: &Graph) -> Result<Self> {
        let weights: Vec<f64> = (0..g.n_nodes())
            .map(|v| {
                let k = if g.is_directed() {
                    g.out_degree(v) + g.in_degree(v)
                } else {
                    g.out_degree(v)
                };
                (k as f64).powf(NOISE_EXPONENT)
            })
            .collect();
        Self::from_weights(weights)
    }

    pub fn from_weights(weights: Vec<f64>) -> Result<Self> {
        let table = AliasTable::new(&weights).ok_or_else(|| {
            Error::InvalidParameter("noise distribution has no positive weight".into())
        })?;
        Ok(NoiseDistribution { weights, table })
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn probability(&self, v: usize) -> f64 {
        self.weights[v] / self.weights.iter().sum::<f64>()
    }

    #[inline]
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        self.table.sample(rng)
    }
}

#[inline]
pub fn sigmoid<F: Float>(x: F) -> F {
    F::one() / (F::one() + (-x).exp())
}

#[inline]
fn dot<F: Float>(a: &[F], b: &[F]) -> F {
    let mut acc = [F::zero(); 8];
    let ca = a.chunks_exact(8);
    let cb = b.chunks_exact(8);
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        for k in 0..8 {
            acc[k] = acc[k] + x[k] * y[k];
        }
    }
    let mut tail = F::zero();
    for (x, y) in ra.iter().zip(rb) {
        tail = tail + *x * *y;
    }
    acc.iter().fold(tail, |s, &x| s + x)
}

/// One logistic term of the SGNS objective: `g = label - sigmoid(center . target)`,
/// `grad += g * target` (with the old target), then `target += alpha * g * center`.
#[inline]
pub fn sgns_target_step<F: Float>(
    center: &[F],
    target: &mut [F],
    label: F,
    alpha: F,
    grad: &mut [F],
) {
    let g = label - sigmoid(dot(center, target));
    let step = alpha * g;
    for ((t, gr), &c) in target.iter_mut().zip(grad.iter_mut()).zip(center) {
        *gr = *gr + g * *t;
        *t = *t + step * c;
    }
}

/// Full SGNS step for one positive pair on explicit vectors:
/// every target is updated in order, then `center += alpha * grad`.
pub fn sgns_step<F: Float>(
    center: &mut [F],
    context: &mut [F],
    negatives: &mut [Vec<F>],
    alpha: F,
) {
    let mut grad = vec![F::zero(); center.len()];
    sgns_target_step(center, context, F::one(), alpha, &mut grad);
    for neg in negatives.iter_mut() {
        sgns_target_step(center, neg, F::zero(), alpha, &mut grad);
    }
    for (c, g) in center.iter_mut().zip(&grad) {
        *c = *c + alpha * *g;
    }
}

/// Applies one SGNS step to the rows of `emb`.
pub fn sgns_pair_update(
    emb: &mut EmbeddingMatrix,
    center: usize,
    context: usize,
    negatives: &[usize],
    alpha: f32,
) -> Result<()> {
    for &i in std::iter::once(&center)
        .chain(std::iter::once(&context))
        .chain(negatives)
    {
        if i >= emb.rows {
            return Err(Error::UnknownNode(i));
        }
    }
    let dim = emb.dim;
    let mut u = emb.row(center).to_vec();
    let mut grad = vec![0.0f32; dim];
    let mut v = vec![0.0f32; dim];
    for (k, &t) in std::iter::once(&context).chain(negatives).enumerate() {
        let label = if k == 0 { 1.0 } else { 0.0 };
        v.copy_from_slice(emb.output_row(t));
        sgns_target_step(&u, &mut v, label, alpha, &mut grad);
        emb.output_row_mut(t).copy_from_slice(&v);
    }
    for (c, g) in u.iter_mut().zip(&grad) {
        *c += alpha * g;
    }
    emb.row_mut(center).copy_from_slice(&u);
    Ok(())
}

/// Number of `(center, context)` pairs a walk of `len` nodes yields.
pub fn pairs_in_walk(len: usize, window: usize) -> u64 {
    (0..len)
        .map(|i| (i.min(window) + (len - 1 - i).min(window)) as u64)
        .sum()
}

/// Trains on `corpus` and returns the updated matrices; `phi_in` is the
/// representation. Without `init`, rows are drawn by [`init_random`] with one
/// row per node of `noise`.
pub fn train(
    corpus: &WalkCorpus,
    noise: &NoiseDistribution,
    cfg: &TrainConfig,
    init: Option<EmbeddingMatrix>,
) -> Result<EmbeddingMatrix> {
    cfg.validate()?;
    if corpus.is_empty() || corpus.n_tokens() == 0 {
        return Err(Error::EmptyCorpus);
    }
    let mut emb = match init {
        Some(m) => {
            if m.dim != cfg.dim {
                return Err(Error::InvalidParameter(format!(
                    "initial embedding has dimension {}, config asks for {}",
                    m.dim, cfg.dim
                )));
            }
            m
        }
        None => init_random(noise.len(), cfg)?,
    };
    if noise.len() != emb.rows {
        return Err(Error::InvalidParameter(format!(
            "noise distribution covers {} nodes but the embedding has {} rows",
            noise.len(),
            emb.rows
        )));
    }
    if let Some(max) = corpus.max_node() {
        if max >= emb.rows {
            return Err(Error::CorpusOutOfRange {
                node: max,
                rows: emb.rows,
            });
        }
    }
    if cfg.epochs == 0 {
        return Ok(emb);
    }
    let per_epoch: u64 = corpus
        .walks()
        .map(|w| pairs_in_walk(w.len(), cfg.window))
        .sum();
    let schedule = Schedule {
        alpha0: cfg.learning_rate,
        total: (per_epoch * cfg.epochs as u64).max(1),
    };

    if cfg.threads <= 1 {
        let dim = emb.dim;
        let EmbeddingMatrix {
            phi_in, phi_out, ..
        } = &mut emb;
        let mut inputs = DenseRows { data: phi_in, dim };
        let mut outputs = DenseRows { data: phi_out, dim };
        let mut rng = rngs::stream(cfg.seed, rngs::tags::TRAIN, &[0]);
        let mut clock = LocalClock::Serial(0);
        for _ in 0..cfg.epochs {
            run_worker(
                corpus.walks(),
                &mut inputs,
                &mut outputs,
                noise,
                cfg,
                &schedule,
                &mut clock,
                &mut rng,
            );
        }
    } else {
        train_shared(corpus, noise, cfg, &schedule, &mut emb);
    }
    Ok(emb)
}

fn train_shared(
    corpus: &WalkCorpus,
    noise: &NoiseDistribution,
    cfg: &TrainConfig,
    schedule: &Schedule,
    emb: &mut EmbeddingMatrix,
) {
    let dim = emb.dim;
    let shared_in: Vec<AtomicU32> = emb
        .phi_in
        .iter()
        .map(|x| AtomicU32::new(x.to_bits()))
        .collect();
    let shared_out: Vec<AtomicU32> = emb
        .phi_out
        .iter()
        .map(|x| AtomicU32::new(x.to_bits()))
        .collect();
    let processed = AtomicU64::new(0);
    let workers = cfg.threads.min(corpus.len()).max(1);
    let chunk = corpus.len().div_ceil(workers);
    for epoch in 0..cfg.epochs {
        std::thread::scope(|s| {
            for w in 0..workers {
                let (shared_in, shared_out, processed) = (&shared_in, &shared_out, &processed);
                s.spawn(move || {
                    let lo = (w * chunk).min(corpus.len());
                    let hi = ((w + 1) * chunk).min(corpus.len());
                    let mut inputs = SharedRows {
                        data: shared_in,
                        dim,
                    };
                    let mut outputs = SharedRows {
                        data: shared_out,
                        dim,
                    };
                    let mut rng =
                        rngs::stream(cfg.seed, rngs::tags::TRAIN, &[epoch as u64, w as u64]);
                    let mut clock = LocalClock::Shared {
                        global: processed,
                        pending: 0,
                        seen: processed.load(Ordering::Relaxed),
                    };
                    run_worker(
                        (lo..hi).map(|i| corpus.walk(i)),
                        &mut inputs,
                        &mut outputs,
                        noise,
                        cfg,
                        schedule,
                        &mut clock,
                        &mut rng,
                    );
                    clock.flush();
                });
            }
        });
    }
    for (dst, src) in emb.phi_in.iter_mut().zip(&shared_in) {
        *dst = f32::from_bits(src.load(Ordering::Relaxed));
    }
    for (dst, src) in emb.phi_out.iter_mut().zip(&shared_out) {
        *dst = f32::from_bits(src.load(Ordering::Relaxed));
    }
}

struct Schedule {
    alpha0: f64,
    total: u64,
}

impl Schedule {
    fn alpha(&self, done: u64) -> f32 {
        let frac = 1.0 - done as f64 / self.total as f64;
        (self.alpha0 * frac.max(MIN_LEARNING_RATE_FRACTION)) as f32
    }
}

/// Pairs processed so far, as seen by one worker.
enum LocalClock<'a> {
    Serial(u64),
    Shared {
        global: &'a AtomicU64,
        pending: u64,
        seen: u64,
    },
}

const CLOCK_FLUSH: u64 = 4096;

impl LocalClock<'_> {
    #[inline]
    fn tick(&mut self) -> u64 {
        match self {
            LocalClock::Serial(n) => {
                *n += 1;
                *n - 1
            }
            LocalClock::Shared {
                global,
                pending,
                seen,
            } => {
                *pending += 1;
                if *pending == CLOCK_FLUSH {
                    *seen = global.fetch_add(*pending, Ordering::Relaxed) + *pending;
                    *pending = 0;
                }
                *seen + *pending - 1
            }
        }
    }

    fn flush(&mut self) {
        if let LocalClock::Shared {
            global, pending, ..
        } = self
        {
            global.fetch_add(*pending, Ordering::Relaxed);
            *pending = 0;
        }
    }
}

trait RowStore {
    fn load(&self, row: usize, dst: &mut [f32]);
    fn store(&mut self, row: usize, src: &[f32]);
}

struct DenseRows<'a> {
    data: &'a mut [f32],
    dim: usize,
}

impl RowStore for DenseRows<'_> {
    #[inline]
    fn load(&self, row: usize, dst: &mut [f32]) {
        dst.copy_from_slice(&self.data[row * self.dim..(row + 1) * self.dim]);
    }

    #[inline]
    fn store(&mut self, row: usize, src: &[f32]) {
        self.data[row * self.dim..(row + 1) * self.dim].copy_from_slice(src);
    }
}

/// Rows shared between workers. Element accesses are relaxed atomics, so a
/// concurrent update to the same row can be lost but never torn.
struct SharedRows<'a> {
    data: &'a [AtomicU32],
    dim: usize,
}

impl RowStore for SharedRows<'_> {
    #[inline]
    fn load(&self, row: usize, dst: &mut [f32]) {
        for (d, s) in dst
            .iter_mut()
            .zip(&self.data[row * self.dim..(row + 1) * self.dim])
        {
            *d = f32::from_bits(s.load(Ordering::Relaxed));
        }
    }

    #[inline]
    fn store(&mut self, row: usize, src: &[f32]) {
        for (d, s) in self.data[row * self.dim..(row + 1) * self.dim]
            .iter()
            .zip(src)
        {
            d.store(s.to_bits(), Ordering::Relaxed);
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn run_worker<'c, I, S, R>(
    walks: I,
    inputs: &mut S,
    outputs: &mut S,
    noise: &NoiseDistribution,
    cfg: &TrainConfig,
    schedule: &Schedule,
    clock: &mut LocalClock<'_>,
    rng: &mut R,
) where
    I: Iterator<Item = &'c [u32]>,
    S: RowStore,
    R: Rng,
{
    let dim = cfg.dim;
    let mut u = vec![0.0f32; dim];
    let mut v = vec![0.0f32; dim];
    let mut grad = vec![0.0f32; dim];
    for walk in walks {
        let len = walk.len();
        for (i, &center) in walk.iter().enumerate() {
            let center = center as usize;
            let lo = i.saturating_sub(cfg.window);
            let hi = (i + cfg.window).min(len - 1);
            inputs.load(center, &mut u);
            for (j, &context) in walk.iter().enumerate().take(hi + 1).skip(lo) {
                if j == i {
                    continue;
                }
                let context = context as usize;
                let alpha = schedule.alpha(clock.tick());
                grad.iter_mut().for_each(|g| *g = 0.0);
                outputs.load(context, &mut v);
                sgns_target_step(&u, &mut v, 1.0, alpha, &mut grad);
                outputs.store(context, &v);
                for _ in 0..cfg.negatives {
                    let neg = noise.sample(rng);
                    if neg == context {
                        continue;
                    }
                    outputs.load(neg, &mut v);
                    sgns_target_step(&u, &mut v, 0.0, alpha, &mut grad);
                    outputs.store(neg, &v);
                }
                for (c, g) in u.iter_mut().zip(&grad) {
                    *c += alpha * g;
                }
            }
            inputs.store(center, &u);
        }
    }
}
