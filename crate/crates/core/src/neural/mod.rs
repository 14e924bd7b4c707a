//! Fixed-window recurrent language models (LSTM or GRU).
//!
//! A context of `window` token ids is embedded, run through the recurrent
//! cell from zero state, and the final hidden state feeds a ReLU dense layer
//! and a softmax over the whole vocabulary.

mod adam;
mod cell;
mod io;
mod params;
mod train;

use std::fmt;
use std::str::FromStr;

use ndarray::{Array1, Array2, Axis};
use serde::{Deserialize, Serialize};

use crate::predict::{assign_ranks, Prediction, Predictor, TokenId};
use crate::vocab::BOS_ID;
use crate::{Error, Result};

pub use adam::{Adam, AdamConfig};
pub use params::{CellParams, GruParams, LstmParams, Parameters, EMBEDDING_INIT};
pub use train::{train, train_with_progress, windows, EarlyStopping, EpochRecord, StopDecision, TrainingLog};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CellKind {
    Lstm,
    Gru,
}

impl fmt::Display for CellKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CellKind::Lstm => "lstm",
            CellKind::Gru => "gru",
        })
    }
}

impl FromStr for CellKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lstm" => Ok(CellKind::Lstm),
            "gru" => Ok(CellKind::Gru),
            other => Err(Error::Config(format!("unknown cell type `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NeuralConfig {
    pub cell: CellKind,
    pub embed_dim: usize,
    pub hidden_dim: usize,
    pub ff_dim: usize,
    pub window: usize,
    pub vocab_limit: usize,
    pub batch_size: usize,
    pub max_epochs: usize,
    pub patience: usize,
    pub validation_fraction: f64,
    pub adam: AdamConfig,
    pub init_seed: u64,
}

impl NeuralConfig {
    /// 200-d embeddings, 50-d hidden state, 100-d ReLU layer, window of 5,
    /// 1000-word vocabulary, batches of 128, up to 100 epochs with patience 3
    /// on a 10% validation tail.
    pub fn new(cell: CellKind) -> Self {
        Self {
            cell,
            embed_dim: 200,
            hidden_dim: 50,
            ff_dim: 100,
            window: 5,
            vocab_limit: 1000,
            batch_size: 128,
            max_epochs: 100,
            patience: 3,
            validation_fraction: 0.10,
            adam: AdamConfig::default(),
            init_seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let dims = [
            ("embed_dim", self.embed_dim),
            ("hidden_dim", self.hidden_dim),
            ("ff_dim", self.ff_dim),
            ("window", self.window),
            ("vocab_limit", self.vocab_limit),
            ("batch_size", self.batch_size),
            ("max_epochs", self.max_epochs),
            ("patience", self.patience),
        ];
        if let Some((name, _)) = dims.iter().find(|(_, v)| *v == 0) {
            return Err(Error::Config(format!("{name} must be at least 1")));
        }
        if !(self.validation_fraction > 0.0 && self.validation_fraction < 1.0) {
            return Err(Error::Config("validation_fraction must lie in (0, 1)".into()));
        }
        self.adam.validate()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NeuralModel {
    pub config: NeuralConfig,
    pub params: Parameters,
    pub vocab_checksum: String,
}

/// Activations of one batched forward pass.
pub(crate) struct Forward {
    pub probs: Array2<f64>,
    pub log_norm: Array1<f64>,
    pub logits: Array2<f64>,
    pub ff_pre: Array2<f64>,
    pub ff_out: Array2<f64>,
    pub h_last: Array2<f64>,
    pub cache: Option<cell::CellCache>,
}

fn check_finite(a: &Array2<f64>, layer: &'static str) -> Result<()> {
    if a.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::Numeric { layer })
    }
}

impl NeuralModel {
    pub fn new(config: NeuralConfig, params: Parameters, vocab_checksum: String) -> Self {
        Self {
            config,
            params,
            vocab_checksum,
        }
    }

    /// Freshly initialized model for a vocabulary of `vocab_size` entries.
    pub fn init(config: NeuralConfig, vocab_size: usize, vocab_checksum: String) -> Self {
        let params = Parameters::init(&config, vocab_size, config.init_seed);
        Self::new(config, params, vocab_checksum)
    }

    pub fn vocab_size(&self) -> usize {
        self.params.out_b.len()
    }

    fn check_contexts<C: AsRef<[TokenId]>>(&self, contexts: &[C]) -> Result<()> {
        if contexts.is_empty() {
            return Err(Error::Config("empty batch".into()));
        }
        for ctx in contexts {
            let ctx = ctx.as_ref();
            if ctx.len() != self.config.window {
                return Err(Error::Config(format!(
                    "context must hold {} tokens, got {}",
                    self.config.window,
                    ctx.len()
                )));
            }
            if let Some(&id) = ctx.iter().find(|&&id| id as usize >= self.vocab_size()) {
                return Err(Error::UnknownToken {
                    id,
                    size: self.vocab_size(),
                });
            }
        }
        Ok(())
    }

    pub(crate) fn forward_batch<C: AsRef<[TokenId]>>(&self, contexts: &[C], keep: bool) -> Result<Forward> {
        self.check_contexts(contexts)?;
        let p = &self.params;
        let xs: Vec<Array2<f64>> = (0..self.config.window)
            .map(|t| {
                let ids: Vec<usize> = contexts.iter().map(|c| c.as_ref()[t] as usize).collect();
                p.embeddings.select(Axis(0), &ids)
            })
            .collect();
        let (h_last, cache) = cell::forward(&p.cell, &xs, keep);
        check_finite(&h_last, "recurrent")?;

        let mut ff_pre = h_last.dot(&p.ff_w);
        ff_pre += &p.ff_b;
        let ff_out = ff_pre.mapv(|v| v.max(0.0));
        check_finite(&ff_out, "feed_forward")?;

        let mut logits = ff_out.dot(&p.out_w);
        logits += &p.out_b;
        check_finite(&logits, "output")?;

        // Row-wise softmax with max subtraction; log_norm is log Σ exp(logits).
        let mut probs = logits.clone();
        let mut log_norm = Array1::zeros(logits.nrows());
        for (mut row, ln) in probs.rows_mut().into_iter().zip(log_norm.iter_mut()) {
            let max = row.fold(f64::NEG_INFINITY, |m, &v| m.max(v));
            row.mapv_inplace(|v| (v - max).exp());
            let sum = row.sum();
            row /= sum;
            *ln = max + sum.ln();
        }
        Ok(Forward {
            probs,
            log_norm,
            logits,
            ff_pre,
            ff_out,
            h_last,
            cache,
        })
    }

    /// Next-token distribution for one context of exactly `window` ids.
    pub fn forward(&self, context: &[TokenId]) -> Result<Array1<f64>> {
        let fwd = self.forward_batch(&[context], false)?;
        Ok(fwd.probs.row(0).to_owned())
    }

    /// Mean cross-entropy over the batch.
    pub fn loss<C: AsRef<[TokenId]>>(&self, contexts: &[C], targets: &[TokenId]) -> Result<f64> {
        self.check_targets(contexts.len(), targets)?;
        let fwd = self.forward_batch(contexts, false)?;
        Ok(cross_entropy(&fwd, targets))
    }

    fn check_targets(&self, batch: usize, targets: &[TokenId]) -> Result<()> {
        if targets.len() != batch {
            return Err(Error::Config("contexts and targets differ in length".into()));
        }
        if let Some(&id) = targets.iter().find(|&&id| id as usize >= self.vocab_size()) {
            return Err(Error::UnknownToken {
                id,
                size: self.vocab_size(),
            });
        }
        Ok(())
    }

    /// Mean cross-entropy and its gradient for every parameter, by
    /// backpropagation through softmax, the dense layers and the unrolled cell.
    pub fn loss_and_gradients<C: AsRef<[TokenId]>>(
        &self,
        contexts: &[C],
        targets: &[TokenId],
    ) -> Result<(f64, Parameters)> {
        self.check_targets(contexts.len(), targets)?;
        let fwd = self.forward_batch(contexts, true)?;
        let loss = cross_entropy(&fwd, targets);
        let p = &self.params;
        let mut g = p.zeros_like();
        let batch = targets.len() as f64;

        let mut d_logits = fwd.probs;
        for (mut row, &t) in d_logits.rows_mut().into_iter().zip(targets) {
            row[t as usize] -= 1.0;
        }
        d_logits /= batch;

        g.out_w = fwd.ff_out.t().dot(&d_logits);
        g.out_b = d_logits.sum_axis(Axis(0));
        let mut d_ff = d_logits.dot(&p.out_w.t());
        d_ff.zip_mut_with(&fwd.ff_pre, |d, &pre| {
            if pre <= 0.0 {
                *d = 0.0;
            }
        });
        g.ff_w = fwd.h_last.t().dot(&d_ff);
        g.ff_b = d_ff.sum_axis(Axis(0));
        let d_h = d_ff.dot(&p.ff_w.t());

        let cache = fwd.cache.as_ref().expect("forward kept its cache");
        let dxs = cell::backward(&p.cell, cache, d_h, &mut g.cell);
        for (t, dx) in dxs.iter().enumerate() {
            for (ctx, row) in contexts.iter().zip(dx.rows()) {
                let id = ctx.as_ref()[t] as usize;
                let mut dst = g.embeddings.row_mut(id);
                dst += &row;
            }
        }
        if !loss.is_finite() {
            return Err(Error::Numeric { layer: "loss" });
        }
        Ok((loss, g))
    }

    /// Top-k of the forward distribution; BOS is never a candidate and equal
    /// probabilities go to the lower id.
    pub fn predict_next(&self, context: &[TokenId], k: usize) -> Result<Vec<Prediction>> {
        if k == 0 {
            return Err(Error::Config("k must be at least 1".into()));
        }
        let probs = self.forward(context)?;
        let mut ranked: Vec<Prediction> = probs
            .iter()
            .enumerate()
            .filter(|&(id, _)| id as TokenId != BOS_ID)
            .map(|(id, &p)| Prediction {
                token_id: id as TokenId,
                probability: p,
                rank: 0,
            })
            .collect();
        ranked.sort_by(|a, b| {
            b.probability
                .total_cmp(&a.probability)
                .then_with(|| a.token_id.cmp(&b.token_id))
        });
        ranked.truncate(k);
        assign_ranks(&mut ranked);
        Ok(ranked)
    }

    /// Summary used by listings, e.g. `lstm e200 h50 f100 w5`.
    pub fn describe(&self) -> String {
        let c = &self.config;
        format!(
            "{} e{} h{} f{} w{}",
            c.cell, c.embed_dim, c.hidden_dim, c.ff_dim, c.window
        )
    }
}

fn argmax_excluding_bos(row: ndarray::ArrayView1<'_, f64>) -> TokenId {
    let mut best = None::<(usize, f64)>;
    for (id, &p) in row.iter().enumerate() {
        if id as TokenId == BOS_ID {
            continue;
        }
        if best.is_none_or(|(_, bp)| p > bp) {
            best = Some((id, p));
        }
    }
    best.map_or(0, |(id, _)| id as TokenId)
}

fn cross_entropy(fwd: &Forward, targets: &[TokenId]) -> f64 {
    let total: f64 = targets
        .iter()
        .enumerate()
        .map(|(row, &t)| fwd.log_norm[row] - fwd.logits[[row, t as usize]])
        .sum();
    total / targets.len() as f64
}

pub(crate) fn io_magic() -> &'static [u8] {
    io::MAGIC
}

const PREDICT_BATCH: usize = 512;

impl Predictor for NeuralModel {
    fn context_len(&self) -> usize {
        self.config.window
    }

    fn vocab_checksum(&self) -> &str {
        &self.vocab_checksum
    }

    fn predict_next(&self, context: &[TokenId], k: usize) -> Result<Vec<Prediction>> {
        NeuralModel::predict_next(self, context, k)
    }

    fn predict_top1_batch(&self, contexts: &[Vec<TokenId>]) -> Result<Vec<TokenId>> {
        let mut out = Vec::with_capacity(contexts.len());
        for chunk in contexts.chunks(PREDICT_BATCH) {
            let fwd = self.forward_batch(chunk, false)?;
            out.extend(fwd.probs.rows().into_iter().map(argmax_excluding_bos));
        }
        Ok(out)
    }
}
