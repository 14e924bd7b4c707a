//! Mini-batch training with a chronological validation tail and early stopping.

use std::fmt::Write as _;
use std::path::Path;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::adam::Adam;
use super::{NeuralConfig, NeuralModel};
use crate::corpus::TokenStream;
use crate::predict::TokenId;
use crate::vocab::Vocabulary;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
    pub wall_seconds: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainingLog {
    pub epochs: Vec<EpochRecord>,
    /// 1-based epoch whose weights were kept.
    pub best_epoch: usize,
    pub stopped_early: bool,
}

impl TrainingLog {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("epoch,train_loss,val_loss,wall_seconds\n");
        for r in &self.epochs {
            let _ = writeln!(out, "{},{},{},{:.3}", r.epoch, r.train_loss, r.val_loss, r.wall_seconds);
        }
        out
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }

    pub fn best_val_loss(&self) -> Option<f64> {
        self.epochs.iter().map(|r| r.val_loss).min_by(f64::total_cmp)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopDecision {
    /// This epoch is the best so far; keep its weights.
    Improved,
    Continue,
    Stop,
}

/// Stops once the monitored loss has gone `patience` consecutive epochs
/// without improving on the best value seen.
#[derive(Debug, Clone)]
pub struct EarlyStopping {
    patience: usize,
    best: f64,
    best_epoch: usize,
    epochs: usize,
    stale: usize,
}

impl EarlyStopping {
    pub fn new(patience: usize) -> Self {
        Self {
            patience,
            best: f64::INFINITY,
            best_epoch: 0,
            epochs: 0,
            stale: 0,
        }
    }

    pub fn observe(&mut self, loss: f64) -> StopDecision {
        self.epochs += 1;
        if loss < self.best {
            self.best = loss;
            self.best_epoch = self.epochs;
            self.stale = 0;
            StopDecision::Improved
        } else {
            self.stale += 1;
            if self.stale >= self.patience {
                StopDecision::Stop
            } else {
                StopDecision::Continue
            }
        }
    }

    pub fn best_epoch(&self) -> usize {
        self.best_epoch
    }
}

/// Every (context, next token) pair of the stream with stride 1. Contexts stay
/// inside their report and are BOS-padded at report starts.
pub fn windows(stream: &TokenStream, window: usize) -> (Vec<Vec<TokenId>>, Vec<TokenId>) {
    let contexts = (0..stream.len()).map(|pos| stream.context_at(pos, window)).collect();
    (contexts, stream.ids.clone())
}

pub fn train(train: &TokenStream, vocab: &Vocabulary, config: &NeuralConfig) -> Result<(NeuralModel, TrainingLog)> {
    train_with_progress(train, vocab, config, |_| {})
}

/// Like [`train`], calling `progress` after every epoch.
pub fn train_with_progress(
    train: &TokenStream,
    vocab: &Vocabulary,
    config: &NeuralConfig,
    mut progress: impl FnMut(&EpochRecord),
) -> Result<(NeuralModel, TrainingLog)> {
    config.validate()?;
    train.validate(vocab)?;
    if vocab.word_count() > config.vocab_limit {
        return Err(Error::Config(format!(
            "vocabulary has {} words, more than vocab_limit {}",
            vocab.word_count(),
            config.vocab_limit
        )));
    }
    let (contexts, targets) = windows(train, config.window);
    if contexts.len() < 2 {
        return Err(Error::Data(format!(
            "training stream yields {} windows; at least 2 are needed",
            contexts.len()
        )));
    }
    let n_val = ((contexts.len() as f64 * config.validation_fraction).round() as usize).clamp(1, contexts.len() - 1);
    let n_fit = contexts.len() - n_val;

    let mut model = NeuralModel::init(config.clone(), vocab.len(), vocab.checksum().to_string());
    let mut best = model.params.clone();
    let mut adam = Adam::new(config.adam, &model.params);
    let mut stopper = EarlyStopping::new(config.patience);
    let mut log = TrainingLog::default();
    let mut rng = ChaCha8Rng::seed_from_u64(config.init_seed.wrapping_add(1));
    let mut order: Vec<usize> = (0..n_fit).collect();
    let started = Instant::now();

    let mut batch_ctx: Vec<&[TokenId]> = Vec::with_capacity(config.batch_size);
    let mut batch_tgt: Vec<TokenId> = Vec::with_capacity(config.batch_size);
    for epoch in 1..=config.max_epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for chunk in order.chunks(config.batch_size) {
            batch_ctx.clear();
            batch_tgt.clear();
            batch_ctx.extend(chunk.iter().map(|&i| contexts[i].as_slice()));
            batch_tgt.extend(chunk.iter().map(|&i| targets[i]));
            let (loss, grads) = model.loss_and_gradients(&batch_ctx, &batch_tgt)?;
            total += loss * chunk.len() as f64;
            adam.update(&mut model.params, &grads);
        }
        let train_loss = total / n_fit as f64;
        let val_loss = mean_loss(&model, &contexts[n_fit..], &targets[n_fit..], config.batch_size)?;
        let record = EpochRecord {
            epoch,
            train_loss,
            val_loss,
            wall_seconds: started.elapsed().as_secs_f64(),
        };
        log.epochs.push(record);
        progress(&record);
        match stopper.observe(val_loss) {
            StopDecision::Improved => best.clone_from(&model.params),
            StopDecision::Continue => {}
            StopDecision::Stop => {
                log.stopped_early = true;
                break;
            }
        }
    }
    log.best_epoch = stopper.best_epoch();
    model.params = best;
    Ok((model, log))
}

fn mean_loss(model: &NeuralModel, contexts: &[Vec<TokenId>], targets: &[TokenId], batch: usize) -> Result<f64> {
    let mut total = 0.0;
    for (ctx, tgt) in contexts.chunks(batch).zip(targets.chunks(batch)) {
        total += model.loss(ctx, tgt)? * tgt.len() as f64;
    }
    Ok(total / targets.len() as f64)
}
