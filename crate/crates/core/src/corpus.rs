//! Report ingestion, normalization and the train/test token streams.

use std::fmt;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use unicode_general_category::{get_general_category, GeneralCategory};

use crate::predict::TokenId;
use crate::vocab::{Vocabulary, BOS_ID};
use crate::{Error, Result};

/// Held-out tail of the corpus, in tokens.
pub const DEFAULT_TEST_SIZE: usize = 10_000;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawCorpus {
    pub source_id: String,
    pub reports: Vec<String>,
}

impl RawCorpus {
    /// Drops whitespace-only reports; fails if nothing remains.
    pub fn new(source_id: impl Into<String>, reports: Vec<String>) -> Result<Self> {
        let reports: Vec<String> = reports.into_iter().filter(|r| !r.trim().is_empty()).collect();
        if reports.is_empty() {
            return Err(Error::Config("corpus contains no reports".into()));
        }
        Ok(Self {
            source_id: source_id.into(),
            reports,
        })
    }

    /// Reads a UTF-8 file holding one report per line; blank lines are skipped.
    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let source_id = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        Self::new(source_id, text.lines().map(str::to_string).collect())
            .map_err(|_| Error::Data(format!("{}: no non-blank lines", path.display())))
    }

    pub fn len(&self) -> usize {
        self.reports.len()
    }

    pub fn is_empty(&self) -> bool {
        self.reports.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PreprocessConfig {
    pub lowercase: bool,
    pub strip_digits: bool,
    pub strip_punctuation: bool,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        Self {
            lowercase: true,
            strip_digits: true,
            strip_punctuation: true,
        }
    }
}

fn is_decimal_digit(c: char) -> bool {
    get_general_category(c) == GeneralCategory::DecimalNumber
}

/// Character-level cleanup followed by whitespace splitting. Digits are
/// Unicode decimal numbers (category Nd).
pub fn normalize_text(text: &str, config: &PreprocessConfig) -> Vec<String> {
    let cleaned: String = text
        .chars()
        .filter(|&c| !(config.strip_digits && is_decimal_digit(c)))
        .filter(|c| !(config.strip_punctuation && c.is_ascii_punctuation()))
        .collect();
    let cleaned = if config.lowercase {
        cleaned.to_lowercase()
    } else {
        cleaned
    };
    cleaned.split_whitespace().map(str::to_string).collect()
}

/// Tokenizes every report, dropping those left without tokens.
pub fn normalize_and_tokenize(raw: &RawCorpus, config: &PreprocessConfig) -> Result<Vec<Vec<String>>> {
    if raw.reports.is_empty() {
        return Err(Error::Config("corpus contains no reports".into()));
    }
    Ok(raw
        .reports
        .iter()
        .map(|r| normalize_text(r, config))
        .filter(|toks| !toks.is_empty())
        .collect())
}

/// Draws `k` reports without replacement, keeping their original order.
pub fn sample_reports(raw: &RawCorpus, k: usize, seed: u64) -> Result<RawCorpus> {
    if k > raw.reports.len() {
        return Err(Error::Config(format!(
            "cannot sample {k} reports from a corpus of {}",
            raw.reports.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picked = rand::seq::index::sample(&mut rng, raw.reports.len(), k).into_vec();
    picked.sort_unstable();
    Ok(RawCorpus {
        source_id: raw.source_id.clone(),
        reports: picked.into_iter().map(|i| raw.reports[i].clone()).collect(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Validation,
    Test,
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Split::Train => "train",
            Split::Validation => "validation",
            Split::Test => "test",
        })
    }
}

/// Encoded tokens of one split.
///
/// When the split point falls inside a report, the test stream starts with a
/// synthetic report start at 0 and `carry_in` holds the part of that report
/// which landed in the training stream, so contexts can reach back into it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenStream {
    pub split: Split,
    pub ids: Vec<TokenId>,
    /// Surface form of each token before OOV masking.
    pub words: Vec<String>,
    pub report_starts: Vec<usize>,
    pub carry_in: Vec<TokenId>,
    pub carry_in_words: Vec<String>,
}

impl TokenStream {
    pub fn encode<S: AsRef<str>>(split: Split, reports: &[Vec<S>], vocab: &Vocabulary) -> Self {
        let mut stream = TokenStream {
            split,
            ids: Vec::new(),
            words: Vec::new(),
            report_starts: Vec::new(),
            carry_in: Vec::new(),
            carry_in_words: Vec::new(),
        };
        for report in reports.iter().filter(|r| !r.is_empty()) {
            stream.report_starts.push(stream.ids.len());
            for w in report {
                stream.ids.push(vocab.encode(w.as_ref()));
                stream.words.push(w.as_ref().to_string());
            }
        }
        stream
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    /// `(start, end)` token ranges of each report.
    pub fn report_ranges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let ends = self
            .report_starts
            .iter()
            .skip(1)
            .copied()
            .chain(std::iter::once(self.ids.len()));
        self.report_starts.iter().copied().zip(ends)
    }

    /// The `len` tokens preceding `pos` within its report, BOS-padded on the left.
    /// The first report continues `carry_in`.
    pub fn context_at(&self, pos: usize, len: usize) -> Vec<TokenId> {
        let report = self.report_starts.partition_point(|&s| s <= pos) - 1;
        let start = self.report_starts[report];
        let mut ctx = vec![BOS_ID; len];
        let mut filled = 0;
        for &id in self.ids[start..pos].iter().rev() {
            if filled == len {
                break;
            }
            ctx[len - 1 - filled] = id;
            filled += 1;
        }
        if report == 0 {
            for &id in self.carry_in.iter().rev() {
                if filled == len {
                    break;
                }
                ctx[len - 1 - filled] = id;
                filled += 1;
            }
        }
        ctx
    }

    pub fn validate(&self, vocab: &Vocabulary) -> Result<()> {
        if let Some(&id) = self
            .ids
            .iter()
            .chain(&self.carry_in)
            .find(|&&id| id as usize >= vocab.len())
        {
            return Err(Error::UnknownToken { id, size: vocab.len() });
        }
        if self.words.len() != self.ids.len() || self.carry_in_words.len() != self.carry_in.len() {
            return Err(Error::Data("token and surface word counts differ".into()));
        }
        if !self.ids.is_empty() {
            let ok = self.report_starts.first() == Some(&0)
                && self.report_starts.windows(2).all(|w| w[0] < w[1])
                && self.report_starts.last().is_some_and(|&s| s < self.ids.len());
            if !ok {
                return Err(Error::Data(
                    "report starts must begin at 0 and increase strictly".into(),
                ));
            }
        }
        Ok(())
    }

    /// Token strings as seen by a model: OOV words replaced by `<oov>`.
    pub fn decode<'v>(&self, vocab: &'v Vocabulary) -> Vec<&'v str> {
        self.ids
            .iter()
            .map(|&id| vocab.token(id).unwrap_or(crate::vocab::OOV_TOKEN))
            .collect()
    }

    /// Line-oriented file form: a header, an optional `>carry` line, then one
    /// report per line with space-separated surface words.
    pub fn to_text(&self) -> String {
        let mut out = format!("#predkey-split\tv1\tsplit={}\n", self.split);
        if !self.carry_in_words.is_empty() {
            out.push_str(">carry\t");
            out.push_str(&self.carry_in_words.join(" "));
            out.push('\n');
        }
        for (start, end) in self.report_ranges() {
            out.push_str(&self.words[start..end].join(" "));
            out.push('\n');
        }
        out
    }

    pub fn parse(text: &str, vocab: &Vocabulary) -> Result<Self> {
        const WHAT: &str = "split file";
        let mut lines = text.lines().enumerate();
        let (_, header) = lines.next().ok_or_else(|| Error::format(WHAT, 1, "empty file"))?;
        let fields: Vec<&str> = header.split('\t').collect();
        if fields.len() != 3 || fields[0] != "#predkey-split" || fields[1] != "v1" {
            return Err(Error::format(WHAT, 1, "missing or unsupported header"));
        }
        let split = match fields[2] {
            "split=train" => Split::Train,
            "split=validation" => Split::Validation,
            "split=test" => Split::Test,
            other => return Err(Error::format(WHAT, 1, format!("unknown split `{other}`"))),
        };
        let mut carry: Vec<String> = Vec::new();
        let mut reports: Vec<Vec<&str>> = Vec::new();
        for (i, line) in lines {
            if let Some(rest) = line.strip_prefix(">carry\t") {
                if !reports.is_empty() || !carry.is_empty() {
                    return Err(Error::format(WHAT, i + 1, "carry line must precede all reports"));
                }
                carry = rest.split(' ').map(str::to_string).collect();
                continue;
            }
            let words: Vec<&str> = line.split_whitespace().collect();
            if words.is_empty() {
                return Err(Error::format(WHAT, i + 1, "empty report line"));
            }
            reports.push(words);
        }
        let mut stream = TokenStream::encode(split, &reports, vocab);
        stream.carry_in = carry.iter().map(|w| vocab.encode(w)).collect();
        stream.carry_in_words = carry;
        Ok(stream)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path, vocab: &Vocabulary) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, vocab)
    }
}

/// Where the final `test_size` tokens begin: `(report index, offset in report)`.
fn split_point<S>(reports: &[Vec<S>], test_size: usize) -> Result<(usize, usize)> {
    let total: usize = reports.iter().map(Vec::len).sum();
    if total <= test_size {
        return Err(Error::Data(format!(
            "corpus has {total} tokens; at least {} are required for a test split of {test_size}",
            test_size + 1
        )));
    }
    let mut remaining = total - test_size;
    for (i, r) in reports.iter().enumerate() {
        if remaining < r.len() {
            return Ok((i, remaining));
        }
        remaining -= r.len();
    }
    unreachable!("train portion is shorter than the corpus")
}

/// Token strings of the training portion, for building the vocabulary
/// without looking at the test tail.
pub fn train_portion<S: AsRef<str>>(reports: &[Vec<S>], test_size: usize) -> Result<Vec<Vec<String>>> {
    let (report, offset) = split_point(reports, test_size)?;
    let mut out: Vec<Vec<String>> = reports[..report]
        .iter()
        .map(|r| r.iter().map(|w| w.as_ref().to_string()).collect())
        .collect();
    if offset > 0 {
        out.push(
            reports[report][..offset]
                .iter()
                .map(|w| w.as_ref().to_string())
                .collect(),
        );
    }
    Ok(out)
}

/// Holds out the final `test_size` tokens of the concatenated corpus.
pub fn encode_and_split<S: AsRef<str>>(
    reports: &[Vec<S>],
    vocab: &Vocabulary,
    test_size: usize,
) -> Result<(TokenStream, TokenStream)> {
    let reports: Vec<&Vec<S>> = reports.iter().filter(|r| !r.is_empty()).collect();
    let owned: Vec<Vec<&str>> = reports.iter().map(|r| r.iter().map(AsRef::as_ref).collect()).collect();
    let (report, offset) = split_point(&owned, test_size)?;

    let mut train_reports: Vec<Vec<&str>> = owned[..report].to_vec();
    let head = &owned[report][..offset];
    if !head.is_empty() {
        train_reports.push(head.to_vec());
    }
    let mut test_reports: Vec<Vec<&str>> = vec![owned[report][offset..].to_vec()];
    test_reports.extend(owned[report + 1..].iter().cloned());

    let train = TokenStream::encode(Split::Train, &train_reports, vocab);
    let mut test = TokenStream::encode(Split::Test, &test_reports, vocab);
    test.carry_in = head.iter().map(|w| vocab.encode(w)).collect();
    test.carry_in_words = head.iter().map(|w| w.to_string()).collect();
    Ok((train, test))
}
