//! The interface shared by every next-word model.

use serde::{Deserialize, Serialize};

use crate::Result;

/// Dense index into a [`Vocabulary`](crate::Vocabulary).
pub type TokenId = u32;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub token_id: TokenId,
    pub probability: f64,
    /// 1-based position in the candidate list.
    pub rank: usize,
}

/// A next-word model that can be scored and served.
///
/// Contexts are exactly [`context_len`](Predictor::context_len) ids long,
/// oldest first, left-padded with the BOS id when the report prefix is shorter.
pub trait Predictor: Send + Sync {
    fn context_len(&self) -> usize;

    fn vocab_checksum(&self) -> &str;

    fn predict_next(&self, context: &[TokenId], k: usize) -> Result<Vec<Prediction>>;

    /// Top-1 prediction for many contexts. Models with a batched forward pass
    /// override this; the result must equal calling `predict_next(_, 1)` per context.
    fn predict_top1_batch(&self, contexts: &[Vec<TokenId>]) -> Result<Vec<TokenId>> {
        contexts
            .iter()
            .map(|ctx| {
                let best = self.predict_next(ctx, 1)?;
                Ok(best[0].token_id)
            })
            .collect()
    }
}

pub(crate) fn assign_ranks(predictions: &mut [Prediction]) {
    for (i, p) in predictions.iter_mut().enumerate() {
        p.rank = i + 1;
    }
}
