use std::fmt::Display;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use predkey_core::corpus::{
    encode_and_split, normalize_and_tokenize, sample_reports, train_portion, PreprocessConfig, RawCorpus, TokenStream,
};
use predkey_core::eval::{self, BenchmarkRow, EvalConfig};
use predkey_core::model::AnyModel;
use predkey_core::neural::{self, CellKind, NeuralConfig};
use predkey_core::ngram::{train_ngram, train_unigram};
use predkey_core::{Error, Result, Vocabulary};
use predkey_service::{LoadedModel, ServiceState};
use tracing::info;

use crate::args::{EvaluateArgs, ModelKind, PreprocessArgs, ServeArgs, TrainArgs};

pub const VOCAB_FILE: &str = "vocab.tsv";
pub const TRAIN_FILE: &str = "train.split";
pub const TEST_FILE: &str = "test.split";

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    }
}

fn write(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(io_err(path))
}

fn create_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(io_err(path))
}

/// Flat `key=value` record of the options behind an output.
struct Echo(Vec<(&'static str, String)>);

impl Echo {
    fn new(command: &str) -> Self {
        Self(vec![("command", command.to_string())])
    }

    fn set(mut self, key: &'static str, value: impl Display) -> Self {
        self.0.push((key, value.to_string()));
        self
    }

    fn opt<T: Display>(self, key: &'static str, value: Option<T>) -> Self {
        match value {
            Some(v) => self.set(key, v),
            None => self.set(key, "none"),
        }
    }

    fn save(&self, path: &Path) -> Result<()> {
        let text: String = self.0.iter().map(|(k, v)| format!("{k}={v}\n")).collect();
        write(path, &text)
    }
}

fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn require_file(path: &Path) -> Result<()> {
    if path.is_file() {
        Ok(())
    } else {
        Err(Error::Data(format!("{}: no such file", path.display())))
    }
}

pub fn preprocess(args: &PreprocessArgs, seed: u64) -> Result<()> {
    require_file(&args.corpus)?;
    let mut raw = RawCorpus::read(&args.corpus)?;
    if let Some(k) = args.sample_k {
        raw = sample_reports(&raw, k, seed)?;
    }
    let reports = normalize_and_tokenize(&raw, &PreprocessConfig::default())?;
    let train_words = train_portion(&reports, args.test_size)?;
    let vocab = Vocabulary::build(&train_words, args.min_count, args.vocab_limit)?;
    let (train, test) = encode_and_split(&reports, &vocab, args.test_size)?;

    create_dir(&args.out)?;
    vocab.save(&args.out.join(VOCAB_FILE))?;
    train.save(&args.out.join(TRAIN_FILE))?;
    test.save(&args.out.join(TEST_FILE))?;
    Echo::new("preprocess")
        .set("corpus", args.corpus.display())
        .set("seed", seed)
        .opt("sample_k", args.sample_k)
        .set("min_count", args.min_count)
        .opt("vocab_limit", args.vocab_limit)
        .set("test_size", args.test_size)
        .set("reports", raw.len())
        .set("train_tokens", train.len())
        .set("test_tokens", test.len())
        .set("vocab_size", vocab.len())
        .set("vocab_checksum", vocab.checksum())
        .save(&args.out.join("preprocess.config"))?;
    info!(
        reports = raw.len(),
        train_tokens = train.len(),
        test_tokens = test.len(),
        vocab = vocab.len(),
        "preprocessed"
    );
    Ok(())
}

fn load_split(dir: &Path, file: &str) -> Result<(Vocabulary, TokenStream)> {
    let vocab_path = dir.join(VOCAB_FILE);
    let split_path = dir.join(file);
    require_file(&vocab_path)?;
    require_file(&split_path)?;
    let vocab = Vocabulary::load(&vocab_path)?;
    let stream = TokenStream::load(&split_path, &vocab)?;
    Ok((vocab, stream))
}

fn neural_config(args: &TrainArgs, cell: CellKind, seed: u64) -> NeuralConfig {
    let mut c = NeuralConfig::new(cell);
    c.embed_dim = args.embed_dim.unwrap_or(c.embed_dim);
    c.hidden_dim = args.hidden_dim.unwrap_or(c.hidden_dim);
    c.ff_dim = args.ff_dim.unwrap_or(c.ff_dim);
    c.window = args.window.unwrap_or(c.window);
    c.vocab_limit = args.vocab_limit.unwrap_or(c.vocab_limit);
    c.batch_size = args.batch_size.unwrap_or(c.batch_size);
    c.max_epochs = args.max_epochs.unwrap_or(c.max_epochs);
    c.patience = args.patience.unwrap_or(c.patience);
    c.validation_fraction = args.validation_fraction.unwrap_or(c.validation_fraction);
    c.adam.lr = args.lr.unwrap_or(c.adam.lr);
    c.init_seed = seed;
    c
}

pub fn train(args: &TrainArgs, seed: u64) -> Result<()> {
    if args.model == ModelKind::Ngram && args.n == 1 && !args.unigram {
        return Err(Error::Config("n = 1 requires --unigram".into()));
    }
    let (vocab, stream) = load_split(&args.data, TRAIN_FILE)?;
    let echo = Echo::new("train")
        .set("data", args.data.display())
        .set("vocab_checksum", vocab.checksum());
    let echo = match args.model {
        ModelKind::Ngram => {
            let model = if args.n == 1 {
                train_unigram(&stream, &vocab)?
            } else {
                train_ngram(&stream, &vocab, args.n)?
            };
            model.save(&args.out)?;
            info!(n = args.n, contexts = model.num_contexts(), "trained n-gram model");
            echo.set("model", "ngram").set("n", args.n).set("alpha", model.alpha())
        }
        ModelKind::Lstm | ModelKind::Gru => {
            let cell = if args.model == ModelKind::Lstm {
                CellKind::Lstm
            } else {
                CellKind::Gru
            };
            let config = neural_config(args, cell, seed);
            let (model, log) = neural::train_with_progress(&stream, &vocab, &config, |r| {
                info!(
                    epoch = r.epoch,
                    train_loss = r.train_loss,
                    val_loss = r.val_loss,
                    seconds = r.wall_seconds,
                    "epoch"
                );
            })?;
            model.save(&args.out)?;
            log.save_csv(&with_suffix(&args.out, ".log.csv"))?;
            info!(
                best_epoch = log.best_epoch,
                stopped_early = log.stopped_early,
                "trained {cell} model"
            );
            echo.set("model", cell)
                .set("embed_dim", config.embed_dim)
                .set("hidden_dim", config.hidden_dim)
                .set("ff_dim", config.ff_dim)
                .set("window", config.window)
                .set("vocab_limit", config.vocab_limit)
                .set("batch_size", config.batch_size)
                .set("max_epochs", config.max_epochs)
                .set("patience", config.patience)
                .set("validation_fraction", config.validation_fraction)
                .set("lr", config.adam.lr)
                .set("seed", seed)
                .set("best_epoch", log.best_epoch)
        }
    };
    echo.save(&with_suffix(&args.out, ".config"))
}

/// Splits `name=path`; a bare path is named after its file stem.
fn parse_model_arg(arg: &str) -> Result<(String, PathBuf)> {
    let (name, path) = match arg.split_once('=') {
        Some((n, p)) => (n.to_string(), PathBuf::from(p)),
        None => {
            let path = PathBuf::from(arg);
            let stem = path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .ok_or_else(|| Error::Config(format!("cannot name model {arg:?}")))?;
            (stem, path)
        }
    };
    if name.is_empty() || name.contains(|c: char| c == ',' || c.is_whitespace()) {
        return Err(Error::Config(format!("invalid model name {name:?}")));
    }
    Ok((name, path))
}

fn load_models(args: &[String], vocab: &Vocabulary) -> Result<Vec<(String, AnyModel)>> {
    let mut out: Vec<(String, AnyModel)> = Vec::new();
    for arg in args {
        let (name, path) = parse_model_arg(arg)?;
        if out.iter().any(|(n, _)| *n == name) {
            return Err(Error::Config(format!("model name {name:?} given twice")));
        }
        require_file(&path)?;
        out.push((name, AnyModel::load(&path, vocab)?));
    }
    Ok(out)
}

pub fn evaluate(args: &EvaluateArgs, seed: u64) -> Result<()> {
    let (vocab, test) = load_split(&args.data, TEST_FILE)?;
    let models = load_models(&args.models, &vocab)?;
    let config = EvalConfig {
        exclude_deid: !args.include_deid,
        oov_is_mistake: true,
        bootstrap_resamples: args.bootstrap,
        bootstrap_seed: seed,
        keep_outcomes: args.trace,
    };
    config.validate()?;
    if let Some(sizes) = &args.sweep {
        // Fail before any prediction work.
        eval::sweep_from_predictions(&test, &vocab, &test.ids, sizes, &config)?;
    }
    create_dir(&args.out)?;

    let mut rows = Vec::with_capacity(models.len());
    for (name, model) in &models {
        let predicted = eval::predict_stream(model, &test)?;
        let report = eval::score(&test, &vocab, &predicted, &config)?;
        info!(model = %name, acc = report.accuracy, kd = report.kd, "evaluated");
        if let Some(trace) = report.trace_tsv() {
            write(&args.out.join(format!("trace_{name}.tsv")), &trace)?;
        }
        if let Some(sizes) = &args.sweep {
            let curve = eval::sweep_from_predictions(&test, &vocab, &predicted, sizes, &config)?;
            write(&args.out.join(format!("sweep_{name}.csv")), &curve.to_csv())?;
        }
        rows.push(BenchmarkRow {
            model: name.clone(),
            report,
        });
    }
    write(&args.out.join("benchmark.csv"), &eval::benchmark_csv(&rows))?;
    write(&args.out.join("benchmark.json"), &eval::benchmark_json(&rows))?;
    Echo::new("evaluate")
        .set("data", args.data.display())
        .set("models", args.models.join(","))
        .set("exclude_deid", config.exclude_deid)
        .set("oov_is_mistake", config.oov_is_mistake)
        .set("bootstrap", config.bootstrap_resamples)
        .set("seed", seed)
        .opt(
            "sweep",
            args.sweep
                .as_ref()
                .map(|s| s.iter().map(ToString::to_string).collect::<Vec<_>>().join(",")),
        )
        .set("vocab_checksum", vocab.checksum())
        .save(&args.out.join("evaluate.config"))
}

pub fn serve(args: &ServeArgs) -> Result<()> {
    let vocab_path = args.data.join(VOCAB_FILE);
    require_file(&vocab_path)?;
    let vocab = Vocabulary::load(&vocab_path)?;
    let models = load_models(&args.models, &vocab)?
        .into_iter()
        .map(|(name, model)| Ok((name, LoadedModel::new(model, vocab.clone())?)))
        .collect::<Result<Vec<_>>>()?;
    let state = ServiceState::new(models, args.default_model.clone()).map_err(Error::Config)?;
    let addr = format!("{}:{}", args.host, args.port);
    let runtime = tokio::runtime::Runtime::new().map_err(|e| Error::Data(format!("cannot start runtime: {e}")))?;
    runtime.block_on(async {
        let listener = tokio::net::TcpListener::bind(&addr)
            .await
            .map_err(|e| Error::Data(format!("cannot bind {addr}: {e}")))?;
        let shutdown = async {
            let _ = tokio::signal::ctrl_c().await;
            info!("shutting down");
        };
        predkey_service::serve(listener, Arc::new(state), shutdown)
            .await
            .map_err(|e| Error::Data(format!("server failed: {e}")))
    })
}
