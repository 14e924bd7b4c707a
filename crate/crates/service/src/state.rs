use std::collections::{BTreeMap, HashMap};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};

use predkey_core::corpus::{normalize_text, PreprocessConfig};
use predkey_core::model::AnyModel;
use predkey_core::vocab::{BOS_ID, DEID_ID, OOV_ID};
use predkey_core::{Predictor, TokenId, Vocabulary};
use serde::Serialize;

use crate::error::ApiError;

/// Largest number of candidates a single request may ask for.
pub const MAX_K: usize = 50;

/// A model paired with the vocabulary it was trained against.
#[derive(Debug)]
pub struct LoadedModel {
    pub model: AnyModel,
    pub vocab: Vocabulary,
}

impl LoadedModel {
    pub fn new(model: AnyModel, vocab: Vocabulary) -> predkey_core::Result<Self> {
        vocab.check(model.vocab_checksum())?;
        Ok(Self { model, vocab })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Candidate {
    pub word: String,
    pub probability: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModelInfo {
    pub name: String,
    #[serde(rename = "type")]
    pub kind: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub config: Option<String>,
    pub vocab_size: usize,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct SessionTotals {
    pub keystrokes_typed: u64,
    pub keystrokes_saved: u64,
    pub accepts: u64,
}

/// Shared state behind every handler. Models are read-only after
/// construction; session totals are the only mutable part.
#[derive(Debug)]
pub struct ServiceState {
    models: BTreeMap<String, Arc<LoadedModel>>,
    default_model: Option<String>,
    preprocess: PreprocessConfig,
    sessions: Mutex<HashMap<String, SessionTotals>>,
    next_session: AtomicU64,
}

impl ServiceState {
    /// `default_model` falls back to the first model by name.
    pub fn new(models: Vec<(String, LoadedModel)>, default_model: Option<String>) -> Result<Self, String> {
        let mut map = BTreeMap::new();
        for (name, model) in models {
            if map.insert(name.clone(), Arc::new(model)).is_some() {
                return Err(format!("model name {name:?} is used twice"));
            }
        }
        let default_model = match default_model {
            Some(name) if !map.contains_key(&name) => return Err(format!("default model {name:?} is not loaded")),
            Some(name) => Some(name),
            None => map.keys().next().cloned(),
        };
        Ok(Self {
            models: map,
            default_model,
            preprocess: PreprocessConfig::default(),
            sessions: Mutex::new(HashMap::new()),
            next_session: AtomicU64::new(1),
        })
    }

    pub fn model(&self, name: Option<&str>) -> Result<(&str, &LoadedModel), ApiError> {
        let name = name
            .or(self.default_model.as_deref())
            .ok_or_else(|| ApiError::unknown_model("no models are loaded"))?;
        self.models
            .get_key_value(name)
            .map(|(k, m)| (k.as_str(), m.as_ref()))
            .ok_or_else(|| ApiError::unknown_model(&format!("model {name:?} is not loaded")))
    }

    pub fn info(&self) -> Vec<ModelInfo> {
        self.models
            .iter()
            .map(|(name, m)| {
                let (n, config) = match &m.model {
                    AnyModel::Ngram(g) => (Some(g.order()), None),
                    AnyModel::Neural(r) => (None, Some(r.describe())),
                };
                ModelInfo {
                    name: name.clone(),
                    kind: m.model.kind(),
                    n,
                    config,
                    vocab_size: m.vocab.len(),
                }
            })
            .collect()
    }

    /// Normalizes `words` like the training corpus and keeps the last
    /// `len` ids, BOS-padded on the left.
    pub fn encode_context(&self, vocab: &Vocabulary, words: &[String], len: usize) -> Vec<TokenId> {
        let ids: Vec<TokenId> = words
            .iter()
            .flat_map(|w| normalize_text(w, &self.preprocess))
            .map(|w| vocab.encode(&w))
            .collect();
        let tail = &ids[ids.len().saturating_sub(len)..];
        let mut context = vec![BOS_ID; len - tail.len()];
        context.extend_from_slice(tail);
        context
    }

    /// Top `k` displayable candidates, plus whether `<oov>` would otherwise
    /// have been among them.
    pub fn predict(
        &self,
        model: &LoadedModel,
        words: &[String],
        k: usize,
        frequent_limit: Option<usize>,
    ) -> Result<(Vec<Candidate>, bool), ApiError> {
        if !(1..=MAX_K).contains(&k) {
            return Err(ApiError::invalid(&format!("k must lie in 1..={MAX_K}, got {k}")));
        }
        let vocab = &model.vocab;
        if let Some(limit) = frequent_limit {
            if limit == 0 || limit > vocab.word_count() {
                return Err(ApiError::invalid(&format!(
                    "frequent_limit must lie in 1..={}, got {limit}",
                    vocab.word_count()
                )));
            }
        }
        let context = self.encode_context(vocab, words, model.model.context_len());
        let ranked = model
            .model
            .predict_next(&context, vocab.len())
            .map_err(|e| ApiError::internal(&e.to_string()))?;
        let excluded_oov = ranked.iter().take(k).any(|p| p.token_id == OOV_ID);
        // Ids past the reserved ones are ordered by training frequency.
        let in_frequent = |id: TokenId| frequent_limit.is_none_or(|s| (id as usize) < 3 + s);
        let candidates = ranked
            .into_iter()
            .filter(|p| !matches!(p.token_id, OOV_ID | BOS_ID | DEID_ID) && in_frequent(p.token_id))
            .take(k)
            .map(|p| Candidate {
                word: vocab.token(p.token_id).unwrap_or_default().to_string(),
                probability: p.probability,
            })
            .collect();
        Ok((candidates, excluded_oov))
    }

    pub fn new_session(&self) -> String {
        let id = format!("s{}", self.next_session.fetch_add(1, Ordering::Relaxed));
        self.sessions
            .lock()
            .expect("session lock poisoned")
            .insert(id.clone(), SessionTotals::default());
        id
    }

    /// Records one accepted word: a single keystroke typed and
    /// `saved_chars` saved.
    pub fn accept(&self, session: &str, saved_chars: u64) -> Result<SessionTotals, ApiError> {
        let mut sessions = self.sessions.lock().expect("session lock poisoned");
        let Some(totals) = sessions.get_mut(session) else {
            drop(sessions);
            let fresh = self.new_session();
            return Err(ApiError::unknown_session(session, fresh));
        };
        totals.keystrokes_typed += 1;
        totals.keystrokes_saved += saved_chars;
        totals.accepts += 1;
        Ok(*totals)
    }

    pub fn session(&self, session: &str) -> Option<SessionTotals> {
        self.sessions
            .lock()
            .expect("session lock poisoned")
            .get(session)
            .copied()
    }
}
