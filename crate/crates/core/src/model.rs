//! Loading either model family from disk behind one type.

use std::path::Path;

use crate::neural::NeuralModel;
use crate::ngram::NgramModel;
use crate::predict::{Prediction, Predictor, TokenId};
use crate::{Error, Result, Vocabulary};

#[derive(Debug, Clone)]
#[allow(clippy::large_enum_variant)]
pub enum AnyModel {
    Ngram(NgramModel),
    Neural(NeuralModel),
}

impl AnyModel {
    /// Detects the file type from its first bytes.
    pub fn load(path: &Path, vocab: &Vocabulary) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        if bytes.starts_with(crate::neural::io_magic()) {
            return NeuralModel::from_bytes(&bytes, vocab).map(AnyModel::Neural);
        }
        let text =
            std::str::from_utf8(&bytes).map_err(|_| Error::Data(format!("{}: not a model file", path.display())))?;
        NgramModel::parse(text, vocab).map(AnyModel::Ngram)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        match self {
            AnyModel::Ngram(m) => m.save(path),
            AnyModel::Neural(m) => m.save(path),
        }
    }

    /// `ngram`, `lstm` or `gru`.
    pub fn kind(&self) -> &'static str {
        match self {
            AnyModel::Ngram(_) => "ngram",
            AnyModel::Neural(m) => match m.config.cell {
                crate::neural::CellKind::Lstm => "lstm",
                crate::neural::CellKind::Gru => "gru",
            },
        }
    }

    pub fn as_predictor(&self) -> &dyn Predictor {
        match self {
            AnyModel::Ngram(m) => m,
            AnyModel::Neural(m) => m,
        }
    }
}

impl Predictor for AnyModel {
    fn context_len(&self) -> usize {
        self.as_predictor().context_len()
    }

    fn vocab_checksum(&self) -> &str {
        self.as_predictor().vocab_checksum()
    }

    fn predict_next(&self, context: &[TokenId], k: usize) -> Result<Vec<Prediction>> {
        self.as_predictor().predict_next(context, k)
    }

    fn predict_top1_batch(&self, contexts: &[Vec<TokenId>]) -> Result<Vec<TokenId>> {
        self.as_predictor().predict_top1_batch(contexts)
    }
}
