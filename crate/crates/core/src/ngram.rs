//! Count-based N-gram language model with add-α (Laplace) smoothing.
//!
//! Counts are tallied per report with `n − 1` BOS tokens in front of each
//! report, so every position yields exactly one (context, successor) event.
//! There is no backoff: a context never seen in training gets the uniform
//! distribution `1 / V`, where `V` is the number of predictable symbols
//! (every vocabulary entry except BOS).

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::corpus::TokenStream;
use crate::predict::{assign_ranks, Prediction, Predictor, TokenId};
use crate::vocab::{Vocabulary, BOS_ID};
use crate::{Error, Result};

pub const MIN_ORDER: usize = 2;
pub const MAX_ORDER: usize = 10;
pub const LAPLACE_ALPHA: f64 = 1.0;

const FORMAT_TAG: &str = "#predkey-ngram";

/// The id space a model predicts over.
///
/// Ids run over `0..tie_ranks.len()`; `tie_ranks[id]` orders otherwise equal
/// candidates (lower wins).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenSpace {
    pub bos: TokenId,
    pub tie_ranks: Vec<u32>,
}

impl TokenSpace {
    pub fn from_vocab(vocab: &Vocabulary) -> Self {
        Self {
            bos: BOS_ID,
            tie_ranks: vocab.tie_break_ranks(),
        }
    }

    fn size(&self) -> usize {
        self.tie_ranks.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
struct ContextCounts {
    total: u64,
    counts: HashMap<TokenId, u64>,
    /// Successors by descending count, then tie rank.
    ranked: Vec<(TokenId, u64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NgramModel {
    n: usize,
    alpha: f64,
    space: TokenSpace,
    contexts: HashMap<Box<[TokenId]>, ContextCounts>,
    /// Every id except BOS, in tie-break order.
    fallback: Vec<TokenId>,
    vocab_checksum: String,
}

/// Trains an order-`n` model (2 ≤ n ≤ 10) on the training stream.
pub fn train_ngram(train: &TokenStream, vocab: &Vocabulary, n: usize) -> Result<NgramModel> {
    if !(MIN_ORDER..=MAX_ORDER).contains(&n) {
        return Err(Error::Config(format!(
            "n-gram order must be between {MIN_ORDER} and {MAX_ORDER}, got {n}"
        )));
    }
    fit_stream(train, vocab, n)
}

/// Context-free model predicting by unigram frequency.
pub fn train_unigram(train: &TokenStream, vocab: &Vocabulary) -> Result<NgramModel> {
    fit_stream(train, vocab, 1)
}

fn fit_stream(train: &TokenStream, vocab: &Vocabulary, n: usize) -> Result<NgramModel> {
    train.validate(vocab)?;
    if train.len() < n {
        return Err(Error::Data(format!(
            "training stream has {} tokens, fewer than the order {n}",
            train.len()
        )));
    }
    let reports = train.report_ranges().map(|(s, e)| &train.ids[s..e]);
    NgramModel::fit(reports, n, TokenSpace::from_vocab(vocab), vocab.checksum().to_string())
}

impl NgramModel {
    /// Tallies counts over already-encoded reports. `n = 1` gives a unigram model.
    pub fn fit<'a>(
        reports: impl IntoIterator<Item = &'a [TokenId]>,
        n: usize,
        space: TokenSpace,
        vocab_checksum: String,
    ) -> Result<Self> {
        if !(1..=MAX_ORDER).contains(&n) {
            return Err(Error::Config(format!("unsupported n-gram order {n}")));
        }
        if space.size() < 3 {
            return Err(Error::Config(
                "token space needs at least two predictable symbols".into(),
            ));
        }
        let mut raw: HashMap<Box<[TokenId]>, HashMap<TokenId, u64>> = HashMap::new();
        let mut padded = Vec::new();
        for report in reports {
            if let Some(&id) = report
                .iter()
                .find(|&&id| id as usize >= space.size() || id == space.bos)
            {
                return Err(Error::UnknownToken { id, size: space.size() });
            }
            padded.clear();
            padded.resize(n - 1, space.bos);
            padded.extend_from_slice(report);
            for window in padded.windows(n) {
                let (ctx, w) = window.split_at(n - 1);
                *raw.entry(ctx.into()).or_default().entry(w[0]).or_default() += 1;
            }
        }
        let contexts = freeze(raw, &space);
        Ok(Self::assemble(n, LAPLACE_ALPHA, space, contexts, vocab_checksum))
    }

    fn assemble(
        n: usize,
        alpha: f64,
        space: TokenSpace,
        contexts: HashMap<Box<[TokenId]>, ContextCounts>,
        vocab_checksum: String,
    ) -> Self {
        let mut fallback: Vec<TokenId> = (0..space.size() as TokenId).filter(|&id| id != space.bos).collect();
        fallback.sort_by_key(|&id| space.tie_ranks[id as usize]);
        Self {
            n,
            alpha,
            space,
            contexts,
            fallback,
            vocab_checksum,
        }
    }

    /// Replaces the smoothing constant.
    pub fn with_alpha(mut self, alpha: f64) -> Result<Self> {
        if !(alpha.is_finite() && alpha > 0.0) {
            return Err(Error::Config(format!("alpha must be positive and finite, got {alpha}")));
        }
        self.alpha = alpha;
        Ok(self)
    }

    pub fn order(&self) -> usize {
        self.n
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Number of predictable symbols `V`.
    pub fn vocab_size(&self) -> usize {
        self.space.size() - 1
    }

    pub fn context_count(&self, context: &[TokenId]) -> u64 {
        self.contexts.get(context).map_or(0, |c| c.total)
    }

    pub fn count(&self, context: &[TokenId], w: TokenId) -> u64 {
        self.contexts
            .get(context)
            .and_then(|c| c.counts.get(&w).copied())
            .unwrap_or(0)
    }

    /// Number of distinct contexts seen in training.
    pub fn num_contexts(&self) -> usize {
        self.contexts.len()
    }

    fn check_context(&self, context: &[TokenId]) -> Result<()> {
        if context.len() != self.n - 1 {
            return Err(Error::Config(format!(
                "context must hold {} tokens, got {}",
                self.n - 1,
                context.len()
            )));
        }
        if let Some(&id) = context.iter().find(|&&id| id as usize >= self.space.size()) {
            return Err(Error::UnknownToken {
                id,
                size: self.space.size(),
            });
        }
        Ok(())
    }

    fn smoothed(&self, count: u64, total: u64) -> f64 {
        (count as f64 + self.alpha) / (total as f64 + self.alpha * self.vocab_size() as f64)
    }

    /// `(C(context, w) + α) / (C(context) + α·V)`.
    pub fn prob(&self, context: &[TokenId], w: TokenId) -> Result<f64> {
        self.check_context(context)?;
        if w as usize >= self.space.size() || w == self.space.bos {
            return Err(Error::UnknownToken {
                id: w,
                size: self.space.size(),
            });
        }
        Ok(self.smoothed(self.count(context, w), self.context_count(context)))
    }

    /// The `k` most probable successors; equal probabilities fall back to the
    /// token-space tie order.
    pub fn predict_next(&self, context: &[TokenId], k: usize) -> Result<Vec<Prediction>> {
        if k == 0 {
            return Err(Error::Config("k must be at least 1".into()));
        }
        self.check_context(context)?;
        let k = k.min(self.vocab_size());
        let mut out = Vec::with_capacity(k);
        let entry = self.contexts.get(context);
        let total = entry.map_or(0, |c| c.total);
        if let Some(c) = entry {
            out.extend(c.ranked.iter().take(k).map(|&(w, count)| Prediction {
                token_id: w,
                probability: self.smoothed(count, total),
                rank: 0,
            }));
        }
        if out.len() < k {
            let unseen = self.smoothed(0, total);
            let seen = |w: &TokenId| entry.is_some_and(|c| c.counts.contains_key(w));
            let rest = self.fallback.iter().filter(|w| !seen(w)).take(k - out.len());
            out.extend(rest.map(|&w| Prediction {
                token_id: w,
                probability: unseen,
                rank: 0,
            }));
        }
        assign_ranks(&mut out);
        Ok(out)
    }

    /// Text form: header, then `context<TAB>successor<TAB>count` lines in
    /// sorted order.
    pub fn to_text(&self) -> String {
        let mut out = format!(
            "{FORMAT_TAG}\tv1\nn={}\tv={}\talpha={}\tvocab={}\n",
            self.n,
            self.vocab_size(),
            self.alpha,
            self.vocab_checksum
        );
        let mut rows: Vec<(&[TokenId], TokenId, u64)> = self
            .contexts
            .iter()
            .flat_map(|(ctx, c)| c.counts.iter().map(move |(&w, &n)| (&ctx[..], w, n)))
            .collect();
        rows.sort_unstable();
        for (ctx, w, count) in rows {
            let ctx: Vec<String> = ctx.iter().map(u32::to_string).collect();
            let _ = writeln!(out, "{}\t{w}\t{count}", ctx.join(" "));
        }
        out
    }

    /// Parses a model file and checks it against the vocabulary it was trained with.
    pub fn parse(text: &str, vocab: &Vocabulary) -> Result<Self> {
        const WHAT: &str = "n-gram model file";
        let mut lines = text.lines();
        if lines.next() != Some(&format!("{FORMAT_TAG}\tv1")) {
            return Err(Error::format(WHAT, 1, "missing or unsupported header"));
        }
        let params = lines
            .next()
            .ok_or_else(|| Error::format(WHAT, 2, "missing parameter line"))?;
        let mut n = None;
        let mut v = None;
        let mut alpha = None;
        let mut checksum = None;
        for field in params.split('\t') {
            let bad = || Error::format(WHAT, 2, format!("bad field `{field}`"));
            match field.split_once('=').ok_or_else(bad)? {
                ("n", x) => n = Some(x.parse::<usize>().map_err(|_| bad())?),
                ("v", x) => v = Some(x.parse::<usize>().map_err(|_| bad())?),
                ("alpha", x) => alpha = Some(x.parse::<f64>().map_err(|_| bad())?),
                ("vocab", x) => checksum = Some(x.to_string()),
                _ => return Err(bad()),
            }
        }
        let (Some(n), Some(v), Some(alpha), Some(checksum)) = (n, v, alpha, checksum) else {
            return Err(Error::format(WHAT, 2, "expected n, v, alpha and vocab"));
        };
        vocab.check(&checksum)?;
        if v + 1 != vocab.len() {
            return Err(Error::format(WHAT, 2, "vocabulary size does not match"));
        }
        if !(1..=MAX_ORDER).contains(&n) {
            return Err(Error::format(WHAT, 2, format!("unsupported order {n}")));
        }
        let space = TokenSpace::from_vocab(vocab);

        let mut raw: HashMap<Box<[TokenId]>, HashMap<TokenId, u64>> = HashMap::new();
        for (i, line) in lines.enumerate() {
            let lineno = i + 3;
            let bad = |msg: &str| Error::format(WHAT, lineno, msg.to_string());
            let mut parts = line.split('\t');
            let (Some(ctx), Some(w), Some(count), None) = (parts.next(), parts.next(), parts.next(), parts.next())
            else {
                return Err(bad("expected context<TAB>successor<TAB>count"));
            };
            let ctx: Vec<TokenId> = ctx
                .split_whitespace()
                .map(|t| t.parse().map_err(|_| bad("bad context id")))
                .collect::<Result<_>>()?;
            let w: TokenId = w.parse().map_err(|_| bad("bad successor id"))?;
            let count: u64 = count.parse().map_err(|_| bad("bad count"))?;
            if ctx.len() != n - 1 {
                return Err(bad("context length does not match n"));
            }
            if ctx
                .iter()
                .chain(std::iter::once(&w))
                .any(|&id| id as usize >= vocab.len())
            {
                return Err(bad("token id outside vocabulary"));
            }
            raw.entry(ctx.into()).or_default().insert(w, count);
        }
        let contexts = freeze(raw, &space);
        Self::assemble(n, LAPLACE_ALPHA, space, contexts, checksum).with_alpha(alpha)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path, vocab: &Vocabulary) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, vocab)
    }
}

fn freeze(
    raw: HashMap<Box<[TokenId]>, HashMap<TokenId, u64>>,
    space: &TokenSpace,
) -> HashMap<Box<[TokenId]>, ContextCounts> {
    raw.into_iter()
        .map(|(ctx, counts)| {
            let total = counts.values().sum();
            let mut ranked: Vec<(TokenId, u64)> = counts.iter().map(|(&w, &c)| (w, c)).collect();
            ranked.sort_by(|a, b| {
                b.1.cmp(&a.1)
                    .then_with(|| space.tie_ranks[a.0 as usize].cmp(&space.tie_ranks[b.0 as usize]))
            });
            (ctx, ContextCounts { total, counts, ranked })
        })
        .collect()
}

impl Predictor for NgramModel {
    fn context_len(&self) -> usize {
        self.n - 1
    }

    fn vocab_checksum(&self) -> &str {
        &self.vocab_checksum
    }

    fn predict_next(&self, context: &[TokenId], k: usize) -> Result<Vec<Prediction>> {
        NgramModel::predict_next(self, context, k)
    }
}
