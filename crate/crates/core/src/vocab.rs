//! Token/id table with training counts and reserved symbols.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::predict::TokenId;
use crate::{Error, Result};

pub const OOV_TOKEN: &str = "<oov>";
pub const BOS_TOKEN: &str = "<bos>";
/// Literal used by the source reports in place of protected information.
pub const DEID_TOKEN: &str = "xxxx";

pub const OOV_ID: TokenId = 0;
pub const BOS_ID: TokenId = 1;
pub const DEID_ID: TokenId = 2;
const RESERVED: usize = 3;

const FORMAT_TAG: &str = "#predkey-vocab";
const FORMAT_VERSION: u32 = 1;

/// Vocabulary built from the training split.
///
/// Ids 0..3 hold `<oov>`, `<bos>` and `xxxx`; every other token follows in
/// descending training count, ties ordered lexicographically. The `<oov>`
/// entry counts the training occurrences that were masked.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    tokens: Vec<String>,
    counts: Vec<u64>,
    index: HashMap<String, TokenId>,
    min_count: u64,
    size_limit: Option<usize>,
    checksum: String,
}

impl Vocabulary {
    /// Counts tokens over the training reports and keeps those seen at least
    /// `min_count` times, then (if `size_limit` is set) the `size_limit` most
    /// frequent of them.
    pub fn build<S: AsRef<str>>(train_reports: &[Vec<S>], min_count: u64, size_limit: Option<usize>) -> Result<Self> {
        if min_count < 1 {
            return Err(Error::Config("min_count must be at least 1".into()));
        }
        if size_limit == Some(0) {
            return Err(Error::Config("size_limit must be at least 1".into()));
        }
        let mut counts: HashMap<&str, u64> = HashMap::new();
        let mut total = 0u64;
        for report in train_reports {
            for tok in report {
                *counts.entry(tok.as_ref()).or_default() += 1;
                total += 1;
            }
        }
        if total == 0 {
            return Err(Error::Data("training split contains no tokens".into()));
        }

        let deid_count = counts.remove(DEID_TOKEN).unwrap_or(0);
        let mut ranked: Vec<(&str, u64)> = counts.into_iter().collect();
        ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
        let mut keep = ranked.iter().take_while(|(_, c)| *c >= min_count).count();
        if let Some(limit) = size_limit {
            keep = keep.min(limit);
        }
        let masked: u64 = ranked[keep..].iter().map(|(_, c)| c).sum();

        let mut entries = vec![
            (OOV_TOKEN.to_string(), masked),
            (BOS_TOKEN.to_string(), 0),
            (DEID_TOKEN.to_string(), deid_count),
        ];
        entries.extend(ranked[..keep].iter().map(|(t, c)| (t.to_string(), *c)));
        Ok(Self::from_entries(entries, min_count, size_limit))
    }

    fn from_entries(entries: Vec<(String, u64)>, min_count: u64, size_limit: Option<usize>) -> Self {
        let (tokens, counts): (Vec<String>, Vec<u64>) = entries.into_iter().unzip();
        let index = tokens
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i as TokenId))
            .collect();
        let checksum = checksum_of(&tokens, &counts);
        Self {
            tokens,
            counts,
            index,
            min_count,
            size_limit,
            checksum,
        }
    }

    /// Number of entries, reserved tokens included.
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// Number of ordinary (non-reserved) words.
    pub fn word_count(&self) -> usize {
        self.tokens.len() - RESERVED
    }

    pub fn id(&self, token: &str) -> Option<TokenId> {
        self.index.get(token).copied()
    }

    /// Id of `token`, or the `<oov>` id when it is not in the vocabulary.
    pub fn encode(&self, token: &str) -> TokenId {
        self.id(token).unwrap_or(OOV_ID)
    }

    pub fn token(&self, id: TokenId) -> Option<&str> {
        self.tokens.get(id as usize).map(String::as_str)
    }

    pub fn count(&self, id: TokenId) -> u64 {
        self.counts.get(id as usize).copied().unwrap_or(0)
    }

    pub fn is_reserved(&self, id: TokenId) -> bool {
        (id as usize) < RESERVED
    }

    pub fn min_count(&self) -> u64 {
        self.min_count
    }

    pub fn size_limit(&self) -> Option<usize> {
        self.size_limit
    }

    /// Short hex digest of the entries; models record it to detect mismatches.
    pub fn checksum(&self) -> &str {
        &self.checksum
    }

    pub fn check(&self, expected: &str) -> Result<()> {
        if self.checksum != expected {
            return Err(Error::ChecksumMismatch {
                expected: expected.to_string(),
                found: self.checksum.clone(),
            });
        }
        Ok(())
    }

    /// Ids of the `size` most frequent ordinary words, most frequent first.
    pub fn frequent_ids(&self, size: usize) -> impl Iterator<Item = TokenId> + '_ {
        (RESERVED..self.tokens.len()).take(size).map(|i| i as TokenId)
    }

    /// Position of every id in the deterministic tie-break order: higher
    /// training count first, then the token string.
    pub fn tie_break_ranks(&self) -> Vec<u32> {
        let mut ids: Vec<usize> = (0..self.tokens.len()).collect();
        ids.sort_by(|&a, &b| {
            self.counts[b]
                .cmp(&self.counts[a])
                .then_with(|| self.tokens[a].cmp(&self.tokens[b]))
        });
        let mut ranks = vec![0u32; ids.len()];
        for (rank, id) in ids.into_iter().enumerate() {
            ranks[id] = rank as u32;
        }
        ranks
    }

    pub fn to_text(&self) -> String {
        let limit = self.size_limit.map_or_else(|| "none".to_string(), |l| l.to_string());
        let mut out = format!(
            "{FORMAT_TAG}\tv{FORMAT_VERSION}\toov={OOV_TOKEN}\tbos={BOS_TOKEN}\tdeid={DEID_TOKEN}\tmin_count={}\tsize_limit={limit}\n",
            self.min_count
        );
        for (id, (tok, count)) in self.tokens.iter().zip(&self.counts).enumerate() {
            let _ = writeln!(out, "{tok}\t{id}\t{count}");
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        const WHAT: &str = "vocabulary file";
        let mut lines = text.lines();
        let header = lines.next().ok_or_else(|| Error::format(WHAT, 1, "empty file"))?;
        let fields: Vec<&str> = header.split('\t').collect();
        if fields.first() != Some(&FORMAT_TAG) {
            return Err(Error::format(WHAT, 1, "missing header"));
        }
        if fields.get(1) != Some(&format!("v{FORMAT_VERSION}").as_str()) {
            return Err(Error::format(WHAT, 1, "unsupported format version"));
        }
        let mut min_count = 1;
        let mut size_limit = None;
        for field in &fields[2..] {
            let (key, value) = field
                .split_once('=')
                .ok_or_else(|| Error::format(WHAT, 1, format!("bad header field `{field}`")))?;
            let bad = |_| Error::format(WHAT, 1, format!("bad value for `{key}`"));
            match key {
                "oov" if value != OOV_TOKEN => return Err(Error::format(WHAT, 1, "unexpected oov literal")),
                "bos" if value != BOS_TOKEN => return Err(Error::format(WHAT, 1, "unexpected bos literal")),
                "deid" if value != DEID_TOKEN => return Err(Error::format(WHAT, 1, "unexpected deid literal")),
                "min_count" => min_count = value.parse().map_err(bad)?,
                "size_limit" if value != "none" => size_limit = Some(value.parse().map_err(bad)?),
                _ => {}
            }
        }

        let mut entries = Vec::new();
        for (i, line) in lines.enumerate() {
            let lineno = i + 2;
            let mut parts = line.split('\t');
            let (Some(tok), Some(id), Some(count), None) = (parts.next(), parts.next(), parts.next(), parts.next())
            else {
                return Err(Error::format(WHAT, lineno, "expected token<TAB>id<TAB>count"));
            };
            let id: usize = id.parse().map_err(|_| Error::format(WHAT, lineno, "bad id"))?;
            if id != entries.len() {
                return Err(Error::format(WHAT, lineno, "ids must be dense and ordered"));
            }
            let count: u64 = count.parse().map_err(|_| Error::format(WHAT, lineno, "bad count"))?;
            entries.push((tok.to_string(), count));
        }
        let reserved = [OOV_TOKEN, BOS_TOKEN, DEID_TOKEN];
        if entries.len() < RESERVED || entries.iter().zip(reserved).any(|((t, _), r)| t != r) {
            return Err(Error::format(WHAT, 2, "reserved tokens must occupy ids 0..3"));
        }
        Ok(Self::from_entries(entries, min_count, size_limit))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }
}

fn checksum_of(tokens: &[String], counts: &[u64]) -> String {
    let mut hasher = Sha256::new();
    for (tok, count) in tokens.iter().zip(counts) {
        hasher.update(tok.as_bytes());
        hasher.update(b"\t");
        hasher.update(count.to_le_bytes());
        hasher.update(b"\n");
    }
    let digest = hasher.finalize();
    digest[..8].iter().fold(String::new(), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}
