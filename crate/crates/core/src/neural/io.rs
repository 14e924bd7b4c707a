//! Binary model file: magic, version, JSON header, then every tensor as
//! little-endian f64 in row-major order.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::params::Parameters;
use super::{NeuralConfig, NeuralModel};
use crate::{Error, Result, Vocabulary};

pub(crate) const MAGIC: &[u8; 8] = b"PKNEURAL";
const VERSION: u32 = 1;
const WHAT: &str = "neural model file";

#[derive(Serialize, Deserialize)]
struct Header {
    config: NeuralConfig,
    vocab_checksum: String,
    vocab_size: usize,
    tensors: Vec<(String, usize)>,
}

impl NeuralModel {
    pub fn to_bytes(&self) -> Vec<u8> {
        let tensors = self.params.tensors();
        let header = Header {
            config: self.config.clone(),
            vocab_checksum: self.vocab_checksum.clone(),
            vocab_size: self.vocab_size(),
            tensors: tensors.iter().map(|(n, t)| (n.to_string(), t.len())).collect(),
        };
        let header = serde_json::to_vec(&header).expect("header serializes");
        let mut out = Vec::with_capacity(16 + header.len() + 8 * self.params.count());
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.extend_from_slice(&(header.len() as u32).to_le_bytes());
        out.extend_from_slice(&header);
        for (_, t) in tensors {
            for v in t {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        out
    }

    /// Decodes a model file; the vocabulary must be the one it was trained with.
    pub fn from_bytes(bytes: &[u8], vocab: &Vocabulary) -> Result<Self> {
        let bad = |msg: &str| Error::format(WHAT, 0, msg.to_string());
        if bytes.len() < 16 || &bytes[..8] != MAGIC {
            return Err(bad("missing magic bytes"));
        }
        let word = |at: usize| u32::from_le_bytes(bytes[at..at + 4].try_into().expect("4 bytes"));
        if word(8) != VERSION {
            return Err(bad("unsupported format version"));
        }
        let header_len = word(12) as usize;
        let header_end = 16 + header_len;
        let header: Header = bytes
            .get(16..header_end)
            .ok_or_else(|| bad("truncated header"))
            .and_then(|h| serde_json::from_slice(h).map_err(|e| bad(&e.to_string())))?;
        vocab.check(&header.vocab_checksum)?;
        if header.vocab_size != vocab.len() {
            return Err(bad("vocabulary size does not match"));
        }
        header.config.validate()?;

        let mut params = Parameters::zeros(&header.config, header.vocab_size);
        let mut data = bytes[header_end..].chunks_exact(8);
        {
            let expected = params.tensors_mut();
            if expected.len() != header.tensors.len() {
                return Err(bad("tensor list does not match the configuration"));
            }
            for ((name, dst), (hname, hlen)) in expected.into_iter().zip(&header.tensors) {
                if name != hname || dst.len() != *hlen {
                    return Err(bad(&format!("tensor `{hname}` does not match the configuration")));
                }
                for v in dst.iter_mut() {
                    let chunk = data.next().ok_or_else(|| bad("truncated tensor data"))?;
                    *v = f64::from_le_bytes(chunk.try_into().expect("8 bytes"));
                }
            }
        }
        if data.next().is_some() || !data.remainder().is_empty() {
            return Err(bad("trailing bytes after tensor data"));
        }
        if !params.is_finite() {
            return Err(Error::Numeric { layer: "parameters" });
        }
        Ok(NeuralModel::new(header.config, params, header.vocab_checksum))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path, vocab: &Vocabulary) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes, vocab)
    }
}
