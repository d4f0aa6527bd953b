//! Weights file format.
//!
//! ```text
//! b"SEEDSTAB"              8-byte magic
//! header_len: u64 LE       length of the JSON header in bytes
//! header: [u8; header_len] UTF-8 JSON (`WeightsHeader`)
//! params: [f64 LE; n]      flat parameter vector, `n = header.n_params`
//! ```

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{Dims, ModelWeights};
use crate::{Error, Result};

const MAGIC: &[u8; 8] = b"SEEDSTAB";

/// Hex SHA-256 of `bytes`.
pub fn content_hash(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightsHeader {
    pub format_version: u32,
    pub dims: Dims,
    pub n_params: usize,
    pub vocab_hash: String,
    pub config_hash: String,
    /// "vanilla" or "swa".
    pub variant: String,
    pub seed: u64,
    /// Epoch the snapshot was taken at; `None` for final weights.
    pub epoch: Option<usize>,
}

impl WeightsHeader {
    pub fn new(weights: &ModelWeights, vocab_hash: &str, config_hash: &str, variant: &str, seed: u64) -> Self {
        WeightsHeader {
            format_version: FORMAT_VERSION,
            dims: weights.dims(),
            n_params: weights.params().len(),
            vocab_hash: vocab_hash.to_string(),
            config_hash: config_hash.to_string(),
            variant: variant.to_string(),
            seed,
            epoch: None,
        }
    }
}

pub fn weights_to_bytes(header: &WeightsHeader, weights: &ModelWeights) -> Vec<u8> {
    let json = serde_json::to_vec(header).expect("header serializes");
    let mut out = Vec::with_capacity(16 + json.len() + 8 * weights.params().len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(json.len() as u64).to_le_bytes());
    out.extend_from_slice(&json);
    for x in weights.params() {
        out.extend_from_slice(&x.to_le_bytes());
    }
    out
}

pub fn weights_from_bytes(bytes: &[u8], path: &Path) -> Result<(WeightsHeader, ModelWeights)> {
    let malformed = |message: String| Error::WeightsFormat {
        path: path.to_path_buf(),
        message,
    };
    if bytes.len() < 16 || &bytes[..8] != MAGIC {
        return Err(malformed("missing magic bytes".into()));
    }
    let header_len = u64::from_le_bytes(bytes[8..16].try_into().unwrap()) as usize;
    let body = &bytes[16..];
    if body.len() < header_len {
        return Err(malformed("truncated header".into()));
    }
    let header: WeightsHeader =
        serde_json::from_slice(&body[..header_len]).map_err(|e| malformed(format!("bad header: {e}")))?;
    if header.format_version != FORMAT_VERSION {
        return Err(malformed(format!("unsupported format version {}", header.format_version)));
    }
    if header.n_params != header.dims.n_params() {
        return Err(malformed("n_params disagrees with dims".into()));
    }
    let data = &body[header_len..];
    if data.len() != 8 * header.n_params {
        return Err(malformed(format!(
            "expected {} parameter bytes, found {}",
            8 * header.n_params,
            data.len()
        )));
    }
    let params = data
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    let weights = ModelWeights::from_params(header.dims, params).map_err(|e| malformed(e.to_string()))?;
    Ok((header, weights))
}

pub fn write_weights(path: &Path, header: &WeightsHeader, weights: &ModelWeights) -> Result<()> {
    fs::write(path, weights_to_bytes(header, weights)).map_err(|e| Error::io(path, e))
}

pub fn read_weights(path: &Path) -> Result<(WeightsHeader, ModelWeights)> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    weights_from_bytes(&bytes, path)
}
