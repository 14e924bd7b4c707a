//! Next-word prediction for clinical report authoring.
//!
//! The crate covers the whole offline pipeline: corpus normalization and
//! vocabulary construction ([`corpus`], [`vocab`]), Laplace-smoothed N-gram
//! models ([`ngram`]), fixed-window LSTM/GRU language models trained with
//! hand-written backpropagation ([`neural`]), and keystroke-discount
//! evaluation ([`eval`]).

pub mod corpus;
pub mod error;
pub mod eval;
pub mod model;
pub mod neural;
pub mod ngram;
pub mod predict;
pub mod vocab;

pub use error::{Error, Result};
pub use predict::{Prediction, Predictor, TokenId};
pub use vocab::Vocabulary;
