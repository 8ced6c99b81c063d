//! Binary model container.
//!
//! ```text
//! magic      8 bytes   "FOCALMCC"
//! version    u32 LE
//! meta_len   u32 LE    followed by meta_len bytes of UTF-8 TOML (ModelMeta)
//! n_params   u32 LE
//! per parameter:
//!   name_len u32 LE, name bytes
//!   ndim     u32 LE, ndim × u64 LE dimensions
//!   data     product(dims) × f64 LE
//! checksum   32 bytes  SHA-256 of every preceding byte
//! ```

use std::path::Path;

use focalmcc_core::autodiff::Tensor;
use focalmcc_core::model::{ModelConfig, ModelParams};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{IoError, Result};

pub const MAGIC: &[u8; 8] = b"FOCALMCC";
pub const VERSION: u32 = 1;
const CHECKSUM_LEN: usize = 32;

/// Text record embedded in every model file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelMeta {
    /// Default decision threshold for prediction.
    pub best_threshold: f64,
    /// Seed of the train/test split the model was evaluated on.
    pub split_seed: u64,
    /// Human-readable training recipe.
    pub trained_with: String,
    pub model: ModelConfig,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StoredModel {
    pub meta: ModelMeta,
    pub params: ModelParams,
}

impl StoredModel {
    pub fn window(&self) -> usize {
        self.meta.model.window
    }

    /// Fails unless the model reads windows of half-width `w`.
    pub fn check_window(&self, w: usize, path: &Path) -> Result<()> {
        if self.window() != w {
            return Err(IoError::Format {
                path: path.to_path_buf(),
                message: format!("model expects half-width {}, got {w}", self.window()),
            });
        }
        Ok(())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let meta = toml::to_string(&self.meta).expect("model metadata serialises");
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.extend_from_slice(&(meta.len() as u32).to_le_bytes());
        out.extend_from_slice(meta.as_bytes());
        out.extend_from_slice(&(self.params.names().len() as u32).to_le_bytes());
        for (name, t) in self.params.names().iter().zip(self.params.tensors()) {
            out.extend_from_slice(&(name.len() as u32).to_le_bytes());
            out.extend_from_slice(name.as_bytes());
            out.extend_from_slice(&(t.shape().len() as u32).to_le_bytes());
            for &d in t.shape() {
                out.extend_from_slice(&(d as u64).to_le_bytes());
            }
            for &x in t.data() {
                out.extend_from_slice(&x.to_le_bytes());
            }
        }
        let digest = Sha256::digest(&out);
        out.extend_from_slice(&digest);
        out
    }

    pub fn from_bytes(bytes: &[u8], path: &Path) -> Result<Self> {
        let bad = |message: String| IoError::Format {
            path: path.to_path_buf(),
            message,
        };
        if bytes.len() < MAGIC.len() + 4 || &bytes[..MAGIC.len()] != MAGIC {
            return Err(bad("not a model file (bad magic)".into()));
        }
        let version = u32::from_le_bytes(bytes[8..12].try_into().unwrap());
        if version != VERSION {
            return Err(IoError::Version {
                path: path.to_path_buf(),
                found: version,
                expected: VERSION,
            });
        }
        if bytes.len() < 12 + CHECKSUM_LEN {
            return Err(bad("truncated file".into()));
        }
        let (body, stored) = bytes.split_at(bytes.len() - CHECKSUM_LEN);
        let found = Sha256::digest(body);
        if found.as_slice() != stored {
            return Err(IoError::Checksum {
                path: path.to_path_buf(),
                expected: hex::encode(stored),
                found: hex::encode(found),
            });
        }

        let mut cur = Cursor { buf: body, pos: 12 };
        let meta_len =
            cur.u32()
                .ok_or_else(|| bad("truncated metadata length".into()))? as usize;
        let meta_bytes = cur
            .take(meta_len)
            .ok_or_else(|| bad("truncated metadata".into()))?;
        let meta_text = std::str::from_utf8(meta_bytes)
            .map_err(|e| bad(format!("metadata is not UTF-8: {e}")))?;
        let meta: ModelMeta =
            toml::from_str(meta_text).map_err(|e| bad(format!("metadata: {e}")))?;
        let n = cur
            .u32()
            .ok_or_else(|| bad("truncated parameter count".into()))?;
        let mut parts = Vec::with_capacity(n as usize);
        for i in 0..n {
            let trunc = || bad(format!("parameter {i} truncated"));
            let name_len = cur.u32().ok_or_else(trunc)? as usize;
            let name = std::str::from_utf8(cur.take(name_len).ok_or_else(trunc)?)
                .map_err(|_| bad(format!("parameter {i} name is not UTF-8")))?
                .to_string();
            let ndim = cur.u32().ok_or_else(trunc)? as usize;
            let mut shape = Vec::with_capacity(ndim);
            for _ in 0..ndim {
                shape.push(cur.u64().ok_or_else(trunc)? as usize);
            }
            let numel: usize = shape.iter().product();
            let raw = cur.take(numel * 8).ok_or_else(trunc)?;
            let data = raw
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
                .collect();
            parts.push((name, Tensor::new(shape, data)?));
        }
        if cur.pos != body.len() {
            return Err(bad(format!("{} trailing bytes", body.len() - cur.pos)));
        }
        let params = ModelParams::from_parts(meta.model.clone(), parts)?;
        Ok(Self { meta, params })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        crate::write_file(path, &self.to_bytes())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|source| IoError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_bytes(&bytes, path)
    }
}

struct Cursor<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Option<&'a [u8]> {
        let end = self.pos.checked_add(n)?;
        let s = self.buf.get(self.pos..end)?;
        self.pos = end;
        Some(s)
    }

    fn u32(&mut self) -> Option<u32> {
        self.take(4)
            .map(|b| u32::from_le_bytes(b.try_into().unwrap()))
    }

    fn u64(&mut self) -> Option<u64> {
        self.take(8)
            .map(|b| u64::from_le_bytes(b.try_into().unwrap()))
    }
}
