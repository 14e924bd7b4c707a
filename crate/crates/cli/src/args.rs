use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "predkey", version, about = "Next-word prediction workbench")]
pub struct Cli {
    /// Seed for report sampling, weight initialization and bootstrap resampling.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,

    /// Only log warnings and errors.
    #[arg(long, global = true)]
    pub quiet: bool,

    /// Log as JSON lines on stderr.
    #[arg(long, global = true)]
    pub json_logs: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Normalize a corpus, build the vocabulary and write the train/test split.
    Preprocess(PreprocessArgs),
    /// Train an n-gram or recurrent model on a preprocessed split.
    Train(TrainArgs),
    /// Benchmark models on the test split.
    Evaluate(EvaluateArgs),
    /// Serve models over HTTP.
    Serve(ServeArgs),
}

#[derive(Debug, Args)]
pub struct PreprocessArgs {
    /// Plain-text corpus, one report per line.
    #[arg(long)]
    pub corpus: PathBuf,

    /// Output directory for the vocabulary and split files.
    #[arg(long)]
    pub out: PathBuf,

    /// Words seen fewer times in training are masked.
    #[arg(long, default_value_t = 10)]
    pub min_count: u64,

    /// Keep at most this many words.
    #[arg(long)]
    pub vocab_limit: Option<usize>,

    /// Held-out tokens at the end of the corpus.
    #[arg(long, default_value_t = predkey_core::corpus::DEFAULT_TEST_SIZE)]
    pub test_size: usize,

    /// Randomly sample this many reports first.
    #[arg(long)]
    pub sample_k: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelKind {
    Ngram,
    Lstm,
    Gru,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Directory written by `preprocess`.
    #[arg(long)]
    pub data: PathBuf,

    /// Model file to write.
    #[arg(long)]
    pub out: PathBuf,

    #[arg(long, value_enum)]
    pub model: ModelKind,

    /// N-gram order.
    #[arg(long, default_value_t = 4)]
    pub n: usize,

    /// Allow n = 1 (context-free frequency baseline).
    #[arg(long)]
    pub unigram: bool,

    #[arg(long)]
    pub embed_dim: Option<usize>,
    #[arg(long)]
    pub hidden_dim: Option<usize>,
    #[arg(long)]
    pub ff_dim: Option<usize>,
    /// Context window of the recurrent models.
    #[arg(long)]
    pub window: Option<usize>,
    /// Largest vocabulary a recurrent model accepts.
    #[arg(long)]
    pub vocab_limit: Option<usize>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub max_epochs: Option<usize>,
    #[arg(long)]
    pub patience: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub validation_fraction: Option<f64>,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Directory written by `preprocess`.
    #[arg(long)]
    pub data: PathBuf,

    /// Models as `name=path` or `path` (named after the file stem).
    #[arg(long = "model", required = true)]
    pub models: Vec<String>,

    /// Output directory for the benchmark table and optional curves.
    #[arg(long)]
    pub out: PathBuf,

    /// Comma-separated frequent-vocabulary sizes, e.g. 50,100,200,500,1000.
    #[arg(long, value_delimiter = ',')]
    pub sweep: Option<Vec<usize>>,

    /// Also score positions whose gold word is the de-identification token.
    #[arg(long)]
    pub include_deid: bool,

    #[arg(long, default_value_t = 1000)]
    pub bootstrap: usize,

    /// Write a per-position trace for every model.
    #[arg(long)]
    pub trace: bool,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    /// Directory written by `preprocess`; its vocabulary is used by every model.
    #[arg(long)]
    pub data: PathBuf,

    /// Models as `name=path` or `path`.
    #[arg(long = "model", required = true)]
    pub models: Vec<String>,

    /// Model used when a request names none.
    #[arg(long)]
    pub default_model: Option<String>,

    #[arg(long, default_value = "127.0.0.1")]
    pub host: String,

    #[arg(long, default_value_t = 8080)]
    pub port: u16,
}
