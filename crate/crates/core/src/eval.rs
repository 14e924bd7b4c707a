//! Micro-accuracy and keystroke discount (KD) of next-word predictors.
//!
//! For scored positions with gold words `g_i` and predictions `p_i`:
//!
//! ```text
//! KD = 1 − Σ dsc(i) / Σ |g_i|,   dsc(i) = 1 if p_i = g_i else |g_i|
//! ```
//!
//! where `|g|` is the character length of the surface word. A correct word
//! still costs one acceptance keystroke, so KD stays below 1 even when every
//! word is predicted.

use std::collections::HashSet;
use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::TokenStream;
use crate::predict::{Predictor, TokenId};
use crate::vocab::{Vocabulary, DEID_ID, OOV_ID, OOV_TOKEN};
use crate::{Error, Result};

pub const DEFAULT_SWEEP_SIZES: [usize; 5] = [50, 100, 200, 500, 1000];

const PREDICT_CHUNK: usize = 1024;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalConfig {
    /// Skip positions whose gold token is the de-identification literal.
    pub exclude_deid: bool,
    /// Predicting `<oov>` is never correct and a gold `<oov>` is always missed.
    pub oov_is_mistake: bool,
    pub bootstrap_resamples: usize,
    pub bootstrap_seed: u64,
    /// Keep one [`PositionOutcome`] per test position in the report.
    pub keep_outcomes: bool,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            exclude_deid: true,
            oov_is_mistake: true,
            bootstrap_resamples: 1000,
            bootstrap_seed: 0,
            keep_outcomes: false,
        }
    }
}

impl EvalConfig {
    pub fn validate(&self) -> Result<()> {
        if self.bootstrap_resamples < 1 {
            return Err(Error::Config("bootstrap_resamples must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PositionOutcome {
    pub position: usize,
    pub gold: String,
    pub predicted: String,
    pub correct: bool,
    /// Why the position was not scored, if it was not.
    pub excluded: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub accuracy: f64,
    pub accuracy_std: f64,
    pub kd: f64,
    pub kd_std: f64,
    pub n_scored: usize,
    pub n_excluded: usize,
    pub n_correct: usize,
    /// Σ |g_i| over scored positions.
    pub gold_chars: u64,
    /// Σ dsc(i) over scored positions.
    pub typed_chars: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub per_position_outcomes: Option<Vec<PositionOutcome>>,
}

impl EvalReport {
    pub fn trace_tsv(&self) -> Option<String> {
        let outcomes = self.per_position_outcomes.as_ref()?;
        let mut out = String::from("position\tgold\tpredicted\tcorrect\texcluded_reason\n");
        for o in outcomes {
            let _ = writeln!(
                out,
                "{}\t{}\t{}\t{}\t{}",
                o.position,
                o.gold,
                o.predicted,
                o.correct,
                o.excluded.as_deref().unwrap_or("")
            );
        }
        Some(out)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub frequent_vocab_size: usize,
    pub keystrokes_saved: u64,
    pub keystrokes_baseline: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct SweepCurve {
    pub points: Vec<SweepPoint>,
}

impl SweepCurve {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("size,saved,baseline\n");
        for p in &self.points {
            let _ = writeln!(
                out,
                "{},{},{}",
                p.frequent_vocab_size, p.keystrokes_saved, p.keystrokes_baseline
            );
        }
        out
    }
}

fn word_len(w: &str) -> u64 {
    w.chars().count() as u64
}

/// Per-position facts needed by every aggregate.
#[derive(Debug, Clone, Copy)]
struct Scored {
    correct: bool,
    gold_len: u64,
}

fn is_excluded(gold: TokenId, config: &EvalConfig) -> bool {
    config.exclude_deid && gold == DEID_ID
}

fn is_correct(gold: TokenId, predicted: TokenId, config: &EvalConfig) -> bool {
    if config.oov_is_mistake && (gold == OOV_ID || predicted == OOV_ID) {
        return false;
    }
    gold == predicted
}

fn aggregate(scored: &[Scored]) -> (f64, f64, usize, u64, u64) {
    let n_correct = scored.iter().filter(|s| s.correct).count();
    let gold: u64 = scored.iter().map(|s| s.gold_len).sum();
    let typed: u64 = scored.iter().map(|s| if s.correct { 1 } else { s.gold_len }).sum();
    let accuracy = if scored.is_empty() {
        0.0
    } else {
        n_correct as f64 / scored.len() as f64
    };
    let kd = if gold == 0 {
        0.0
    } else {
        1.0 - typed as f64 / gold as f64
    };
    (accuracy, kd, n_correct, gold, typed)
}

fn sample_std(values: &[f64]) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (values.len() - 1) as f64;
    var.sqrt()
}

/// Standard deviations of accuracy and KD over bootstrap resamples of the
/// scored positions.
fn bootstrap(scored: &[Scored], resamples: usize, seed: u64) -> (f64, f64) {
    if scored.is_empty() {
        return (0.0, 0.0);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut accs = Vec::with_capacity(resamples);
    let mut kds = Vec::with_capacity(resamples);
    for _ in 0..resamples {
        let (mut correct, mut gold, mut typed) = (0u64, 0u64, 0u64);
        for _ in 0..scored.len() {
            let s = scored[rng.random_range(0..scored.len())];
            gold += s.gold_len;
            if s.correct {
                correct += 1;
                typed += 1;
            } else {
                typed += s.gold_len;
            }
        }
        accs.push(correct as f64 / scored.len() as f64);
        kds.push(if gold == 0 {
            0.0
        } else {
            1.0 - typed as f64 / gold as f64
        });
    }
    (sample_std(&accs), sample_std(&kds))
}

/// Scores precomputed top-1 predictions (one per test position).
pub fn score(test: &TokenStream, vocab: &Vocabulary, predicted: &[TokenId], config: &EvalConfig) -> Result<EvalReport> {
    config.validate()?;
    if test.is_empty() {
        return Err(Error::Data("test stream is empty".into()));
    }
    if predicted.len() != test.len() {
        return Err(Error::Data(format!(
            "{} predictions for {} test positions",
            predicted.len(),
            test.len()
        )));
    }
    if let Some(position) = predicted.iter().position(|&p| p as usize >= vocab.len()) {
        return Err(Error::Predictor {
            position,
            source: Box::new(Error::UnknownToken {
                id: predicted[position],
                size: vocab.len(),
            }),
        });
    }

    let mut scored = Vec::with_capacity(test.len());
    let mut outcomes = config.keep_outcomes.then(|| Vec::with_capacity(test.len()));
    let mut n_excluded = 0;
    for (pos, (&gold, &pred)) in test.ids.iter().zip(predicted).enumerate() {
        let excluded = is_excluded(gold, config);
        let correct = !excluded && is_correct(gold, pred, config);
        if excluded {
            n_excluded += 1;
        } else {
            scored.push(Scored {
                correct,
                gold_len: word_len(&test.words[pos]),
            });
        }
        if let Some(out) = outcomes.as_mut() {
            out.push(PositionOutcome {
                position: pos,
                gold: test.words[pos].clone(),
                predicted: vocab.token(pred).unwrap_or(OOV_TOKEN).to_string(),
                correct,
                excluded: excluded.then(|| "deid".to_string()),
            });
        }
    }
    let (accuracy, kd, n_correct, gold_chars, typed_chars) = aggregate(&scored);
    let (accuracy_std, kd_std) = bootstrap(&scored, config.bootstrap_resamples, config.bootstrap_seed);
    Ok(EvalReport {
        accuracy,
        accuracy_std,
        kd,
        kd_std,
        n_scored: scored.len(),
        n_excluded,
        n_correct,
        gold_chars,
        typed_chars,
        per_position_outcomes: outcomes,
    })
}

/// Top-1 prediction at every test position. Contexts reach back into the
/// part of the first report that sits in the training stream.
pub fn predict_stream(predictor: &dyn Predictor, test: &TokenStream) -> Result<Vec<TokenId>> {
    let len = predictor.context_len();
    let mut out = Vec::with_capacity(test.len());
    for start in (0..test.len()).step_by(PREDICT_CHUNK) {
        let end = (start + PREDICT_CHUNK).min(test.len());
        let contexts: Vec<Vec<TokenId>> = (start..end).map(|pos| test.context_at(pos, len)).collect();
        match predictor.predict_top1_batch(&contexts) {
            Ok(ids) if ids.len() == contexts.len() => out.extend(ids),
            Ok(_) => {
                return Err(Error::Predictor {
                    position: start,
                    source: Box::new(Error::Data("batch returned the wrong number of predictions".into())),
                })
            }
            Err(_) => {
                // Locate the failing position.
                for (offset, ctx) in contexts.iter().enumerate() {
                    let position = start + offset;
                    let top = predictor.predict_next(ctx, 1).map_err(|e| Error::Predictor {
                        position,
                        source: Box::new(e),
                    })?;
                    let first = top.first().ok_or_else(|| Error::Predictor {
                        position,
                        source: Box::new(Error::Data("no prediction returned".into())),
                    })?;
                    out.push(first.token_id);
                }
            }
        }
    }
    Ok(out)
}

pub fn evaluate(
    predictor: &dyn Predictor,
    test: &TokenStream,
    vocab: &Vocabulary,
    config: &EvalConfig,
) -> Result<EvalReport> {
    config.validate()?;
    test.validate(vocab)?;
    if test.is_empty() {
        return Err(Error::Data("test stream is empty".into()));
    }
    let predicted = predict_stream(predictor, test)?;
    score(test, vocab, &predicted, config)
}

/// Keystrokes saved when a prediction is only offered if it is among the
/// `S` most frequent training words, for each `S` in `sizes`.
pub fn sweep_from_predictions(
    test: &TokenStream,
    vocab: &Vocabulary,
    predicted: &[TokenId],
    sizes: &[usize],
    config: &EvalConfig,
) -> Result<SweepCurve> {
    if sizes.is_empty() {
        return Err(Error::Config("no sweep sizes given".into()));
    }
    if sizes[0] == 0 || sizes.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Config(
            "sweep sizes must be positive and strictly increasing".into(),
        ));
    }
    if let Some(&s) = sizes.iter().find(|&&s| s > vocab.word_count()) {
        return Err(Error::Config(format!(
            "sweep size {s} exceeds the {} vocabulary words",
            vocab.word_count()
        )));
    }
    if predicted.len() != test.len() {
        return Err(Error::Data("one prediction per test position is required".into()));
    }
    let points = sizes
        .iter()
        .map(|&size| {
            let frequent: HashSet<TokenId> = vocab.frequent_ids(size).collect();
            let mut saved = 0;
            let mut baseline = 0;
            for (pos, (&gold, &pred)) in test.ids.iter().zip(predicted).enumerate() {
                if is_excluded(gold, config) || !frequent.contains(&gold) {
                    continue;
                }
                let len = word_len(&test.words[pos]);
                baseline += len;
                if is_correct(gold, pred, config) {
                    saved += len - 1;
                }
            }
            SweepPoint {
                frequent_vocab_size: size,
                keystrokes_saved: saved,
                keystrokes_baseline: baseline,
            }
        })
        .collect();
    Ok(SweepCurve { points })
}

pub fn frequent_vocab_sweep(
    predictor: &dyn Predictor,
    test: &TokenStream,
    vocab: &Vocabulary,
    sizes: &[usize],
    config: &EvalConfig,
) -> Result<SweepCurve> {
    test.validate(vocab)?;
    let predicted = predict_stream(predictor, test)?;
    sweep_from_predictions(test, vocab, &predicted, sizes, config)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkRow {
    pub model: String,
    #[serde(flatten)]
    pub report: EvalReport,
}

/// Evaluates every model on the same test stream; all must share `vocab`.
pub fn benchmark_suite(
    models: &[(String, &dyn Predictor)],
    test: &TokenStream,
    vocab: &Vocabulary,
    config: &EvalConfig,
) -> Result<Vec<BenchmarkRow>> {
    for (_, model) in models {
        vocab.check(model.vocab_checksum())?;
    }
    models
        .iter()
        .map(|(name, model)| {
            Ok(BenchmarkRow {
                model: name.clone(),
                report: evaluate(*model, test, vocab, config)?,
            })
        })
        .collect()
}

fn pct(mean: f64, std: f64) -> String {
    format!("{:.2}±{:.2}", 100.0 * mean, 100.0 * std)
}

pub fn benchmark_csv(rows: &[BenchmarkRow]) -> String {
    let mut out = String::from("model,acc,acc_std,kd,kd_std,n_scored,n_excluded,acc_pct,kd_pct\n");
    for row in rows {
        let r = &row.report;
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            row.model,
            r.accuracy,
            r.accuracy_std,
            r.kd,
            r.kd_std,
            r.n_scored,
            r.n_excluded,
            pct(r.accuracy, r.accuracy_std),
            pct(r.kd, r.kd_std)
        );
    }
    out
}

pub fn benchmark_json(rows: &[BenchmarkRow]) -> String {
    let rows: Vec<BenchmarkRow> = rows
        .iter()
        .cloned()
        .map(|mut r| {
            r.report.per_position_outcomes = None;
            r
        })
        .collect();
    serde_json::to_string_pretty(&rows).expect("rows serialize")
}
