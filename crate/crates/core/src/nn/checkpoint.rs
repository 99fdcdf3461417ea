//! Versioned tensor container.
//!
//! Layout: the line `vietspell-checkpoint <version>`, one line of JSON
//! header (kind, config, vocabulary, tensor names and shapes, free-form
//! metadata), then every tensor as row-major little-endian `f32` in header
//! order. Nothing may follow the last tensor.

use std::fs;
use std::path::Path;

use ndarray::Array2;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

pub const CHECKPOINT_MAGIC: &str = "vietspell-checkpoint";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("not a checkpoint file (missing `{CHECKPOINT_MAGIC}` line)")]
    BadMagic,
    #[error("checkpoint format version {found} is not supported (expected {CHECKPOINT_VERSION})")]
    Version { found: String },
    #[error("malformed checkpoint header: {0}")]
    Header(String),
    #[error("checkpoint truncated: expected {expected} tensor bytes, found {found}")]
    Truncated { expected: usize, found: usize },
    #[error("checkpoint has {0} unexpected trailing bytes")]
    Trailing(usize),
    #[error("checkpoint mismatch: {0}")]
    Mismatch(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TensorInfo {
    pub name: String,
    pub shape: [usize; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointHeader {
    pub kind: String,
    pub config: serde_json::Value,
    pub vocab: Vec<String>,
    pub tensors: Vec<TensorInfo>,
    #[serde(default)]
    pub meta: serde_json::Value,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub header: CheckpointHeader,
    pub tensors: Vec<Array2<f32>>,
}

impl Checkpoint {
    pub fn new(
        kind: &str,
        config: serde_json::Value,
        vocab: Vec<String>,
        named: Vec<(String, Array2<f32>)>,
        meta: serde_json::Value,
    ) -> Checkpoint {
        let tensors_info = named
            .iter()
            .map(|(name, t)| TensorInfo {
                name: name.clone(),
                shape: [t.nrows(), t.ncols()],
            })
            .collect();
        Checkpoint {
            header: CheckpointHeader {
                kind: kind.to_string(),
                config,
                vocab,
                tensors: tensors_info,
                meta,
            },
            tensors: named.into_iter().map(|(_, t)| t).collect(),
        }
    }

    pub fn get(&self, name: &str) -> Option<&Array2<f32>> {
        self.header
            .tensors
            .iter()
            .position(|t| t.name == name)
            .map(|i| &self.tensors[i])
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let header = serde_json::to_string(&self.header).expect("header serializes");
        let mut out = format!("{CHECKPOINT_MAGIC} {CHECKPOINT_VERSION}\n{header}\n").into_bytes();
        for t in &self.tensors {
            for &x in t.iter() {
                out.extend_from_slice(&x.to_le_bytes());
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Checkpoint, CheckpointError> {
        let (first, rest) = split_line(bytes).ok_or(CheckpointError::BadMagic)?;
        let first = std::str::from_utf8(first).map_err(|_| CheckpointError::BadMagic)?;
        let version = first
            .strip_prefix(CHECKPOINT_MAGIC)
            .and_then(|v| v.strip_prefix(' '))
            .ok_or(CheckpointError::BadMagic)?;
        if version != CHECKPOINT_VERSION.to_string() {
            return Err(CheckpointError::Version {
                found: version.to_string(),
            });
        }
        let (header, data) =
            split_line(rest).ok_or_else(|| CheckpointError::Header("missing header line".into()))?;
        let header: CheckpointHeader =
            serde_json::from_slice(header).map_err(|e| CheckpointError::Header(e.to_string()))?;
        let expected: usize = header
            .tensors
            .iter()
            .map(|t| t.shape[0] * t.shape[1] * 4)
            .sum();
        if data.len() < expected {
            return Err(CheckpointError::Truncated {
                expected,
                found: data.len(),
            });
        }
        if data.len() > expected {
            return Err(CheckpointError::Trailing(data.len() - expected));
        }
        let mut tensors = Vec::with_capacity(header.tensors.len());
        let mut off = 0;
        for info in &header.tensors {
            let n = info.shape[0] * info.shape[1];
            let values: Vec<f32> = data[off..off + 4 * n]
                .chunks_exact(4)
                .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
                .collect();
            off += 4 * n;
            tensors.push(Array2::from_shape_vec((info.shape[0], info.shape[1]), values).expect("shape"));
        }
        Ok(Checkpoint { header, tensors })
    }

    /// SHA-256 of the serialized checkpoint, hex encoded.
    pub fn digest(&self) -> String {
        hex_digest(&self.to_bytes())
    }
}

pub(crate) fn hex_digest(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

fn split_line(bytes: &[u8]) -> Option<(&[u8], &[u8])> {
    let i = bytes.iter().position(|&b| b == b'\n')?;
    Some((&bytes[..i], &bytes[i + 1..]))
}

pub fn write_checkpoint(path: &Path, ckpt: &Checkpoint) -> Result<(), CheckpointError> {
    fs::write(path, ckpt.to_bytes()).map_err(|source| CheckpointError::Io {
        path: path.display().to_string(),
        source,
    })
}

pub fn read_checkpoint(path: &Path) -> Result<Checkpoint, CheckpointError> {
    let bytes = fs::read(path).map_err(|source| CheckpointError::Io {
        path: path.display().to_string(),
        source,
    })?;
    Checkpoint::from_bytes(&bytes)
}
