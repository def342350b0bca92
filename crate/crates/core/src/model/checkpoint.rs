use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{ModelConfig, ModelError, ModelParameters};
use crate::data::Preprocessor;
use crate::numcore::{Real, Tensor};

pub const CHECKPOINT_MAGIC: &[u8; 8] = b"ATS2SCKP";
pub const CHECKPOINT_VERSION: u32 = 1;
const DIGEST_LEN: usize = 32;
const PREAMBLE_LEN: usize = 16;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ArrayEntry {
    name: String,
    shape: Vec<usize>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Header {
    config: ModelConfig,
    preprocessor: Option<Preprocessor>,
    dtype: String,
    arrays: Vec<ArrayEntry>,
}

/// Everything needed to score new windows.
#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint<T> {
    pub config: ModelConfig,
    pub preprocessor: Option<Preprocessor>,
    pub params: ModelParameters<T>,
}

/// Serialises to the versioned layout:
///
/// ```text
/// magic "ATS2SCKP" | u32 LE version | u32 LE header length | JSON header
/// | arrays in header order, row-major little-endian | SHA-256 of all prior bytes
/// ```
pub fn encode_checkpoint<T: Real>(params: &ModelParameters<T>, config: &ModelConfig, preprocessor: Option<&Preprocessor>) -> Result<Vec<u8>, ModelError> {
    let named = params.named();
    let header = Header {
        config: config.clone(),
        preprocessor: preprocessor.cloned(),
        dtype: T::DTYPE.to_string(),
        arrays: named.iter().map(|(name, t)| ArrayEntry { name: name.clone(), shape: t.shape().to_vec() }).collect(),
    };
    let json = serde_json::to_vec(&header)?;
    let header_len = u32::try_from(json.len()).map_err(|_| ModelError::Checkpoint("header exceeds 4 GiB".into()))?;
    let payload_len: usize = named.iter().map(|(_, t)| t.len() * T::BYTES).sum();
    let mut out = Vec::with_capacity(PREAMBLE_LEN + json.len() + payload_len + DIGEST_LEN);
    out.extend_from_slice(CHECKPOINT_MAGIC);
    out.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
    out.extend_from_slice(&header_len.to_le_bytes());
    out.extend_from_slice(&json);
    for (_, t) in &named {
        for &v in t.values() {
            v.write_le(&mut out);
        }
    }
    let digest = Sha256::digest(&out);
    out.extend_from_slice(&digest);
    Ok(out)
}

fn read_array<T: Real, S: Real>(bytes: &[u8], count: usize) -> Vec<T> {
    bytes.chunks_exact(S::BYTES).take(count).map(|c| T::from_f64(S::read_le(c).as_f64())).collect()
}

/// Parses and validates a checkpoint, converting stored values to `T`.
/// Values are reproduced bitwise when `T` matches the stored dtype.
pub fn decode_checkpoint<T: Real>(bytes: &[u8]) -> Result<Checkpoint<T>, ModelError> {
    if bytes.len() < PREAMBLE_LEN + DIGEST_LEN || &bytes[..8] != CHECKPOINT_MAGIC {
        return Err(ModelError::Checkpoint("not an ATS2S checkpoint (bad magic)".into()));
    }
    let version = u32::from_le_bytes(bytes[8..12].try_into().expect("4 bytes"));
    if version != CHECKPOINT_VERSION {
        return Err(ModelError::Checkpoint(format!("unsupported format version {version}, expected {CHECKPOINT_VERSION}")));
    }
    let (body, digest) = bytes.split_at(bytes.len() - DIGEST_LEN);
    if Sha256::digest(body).as_slice() != digest {
        return Err(ModelError::Checkpoint("checksum mismatch; file is corrupt".into()));
    }
    let header_len = u32::from_le_bytes(body[12..16].try_into().expect("4 bytes")) as usize;
    let json = body
        .get(PREAMBLE_LEN..PREAMBLE_LEN + header_len)
        .ok_or_else(|| ModelError::Checkpoint("header length exceeds file size".into()))?;
    let header: Header = serde_json::from_slice(json)?;
    let issues = header.config.validate();
    if !issues.is_empty() {
        return Err(ModelError::Config(issues));
    }
    let width = match header.dtype.as_str() {
        "f32" => f32::BYTES,
        "f64" => f64::BYTES,
        other => return Err(ModelError::Checkpoint(format!("unknown dtype `{other}`"))),
    };

    let mut payload = &body[PREAMBLE_LEN + header_len..];
    let mut arrays = BTreeMap::new();
    for entry in &header.arrays {
        let count = entry.shape.iter().try_fold(1usize, |acc, &d| acc.checked_mul(d));
        let bytes_needed = count.and_then(|c| c.checked_mul(width));
        let (Some(count), Some(needed)) = (count, bytes_needed) else {
            return Err(ModelError::Checkpoint(format!("array `{}` has an overflowing shape", entry.name)));
        };
        if needed > payload.len() {
            return Err(ModelError::Checkpoint(format!("array `{}` runs past the end of the payload", entry.name)));
        }
        let (chunk, rest) = payload.split_at(needed);
        let values = if width == f32::BYTES { read_array::<T, f32>(chunk, count) } else { read_array::<T, f64>(chunk, count) };
        let tensor = Tensor::new(entry.shape.clone(), values).map_err(|e| ModelError::Checkpoint(format!("array `{}`: {e}", entry.name)))?;
        if arrays.insert(entry.name.clone(), tensor).is_some() {
            return Err(ModelError::Checkpoint(format!("array `{}` appears twice", entry.name)));
        }
        payload = rest;
    }
    if !payload.is_empty() {
        return Err(ModelError::Checkpoint(format!("{} trailing payload bytes", payload.len())));
    }
    let params = ModelParameters::from_named(&header.config, arrays)?;
    Ok(Checkpoint { config: header.config, preprocessor: header.preprocessor, params })
}

pub fn save_checkpoint<T: Real>(
    path: &Path,
    params: &ModelParameters<T>,
    config: &ModelConfig,
    preprocessor: Option<&Preprocessor>,
) -> Result<(), ModelError> {
    fs::write(path, encode_checkpoint(params, config, preprocessor)?)?;
    Ok(())
}

pub fn load_checkpoint<T: Real>(path: &Path) -> Result<Checkpoint<T>, ModelError> {
    decode_checkpoint(&fs::read(path)?)
}
