//! `M4W1` weight bundles.
//!
//! Layout (all integers little-endian):
//!
//! ```text
//! "M4W1"                    4 bytes
//! version                   u32 (= 1)
//! metadata_len              u32, then metadata_len bytes of UTF-8 "key=value\n" lines
//! n_entries                 u32
//! n_entries × {
//!     name_len u32, name (UTF-8),
//!     rank u32, rank × dim u32,
//!     offset u64              byte offset into the blob, multiple of 4
//! }
//! blob_len                  u64, then blob_len bytes of f32 values
//! ```
//!
//! Each entry occupies `4·Π dims` bytes at its offset; entries may not overlap
//! and the file must end exactly at the end of the blob.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

pub const WEIGHT_MAGIC: &[u8; 4] = b"M4W1";
pub const WEIGHT_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum WeightError {
    #[error("not an M4W1 file")]
    BadMagic,
    #[error("unsupported weight format version {0}")]
    UnsupportedVersion(u32),
    #[error("corrupt manifest: {0}")]
    CorruptManifest(String),
    #[error("offset inconsistency: {0}")]
    OffsetInconsistency(String),
    #[error("parameter {0} contains a non-finite value")]
    NonFinite(String),
    #[error("duplicate parameter name {0}")]
    DuplicateName(String),
    #[error("missing parameter {0}")]
    MissingParam(String),
    #[error("parameter {name} has shape {got:?}, expected {expected:?}")]
    ShapeMismatch {
        name: String,
        expected: Vec<usize>,
        got: Vec<usize>,
    },
    #[error("bad metadata: {0}")]
    BadMetadata(String),
}

/// A named row-major `f32` tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamArray {
    pub name: String,
    pub shape: Vec<usize>,
    pub values: Vec<f32>,
}

impl ParamArray {
    pub fn new(name: impl Into<String>, shape: Vec<usize>, values: Vec<f32>) -> Result<Self, WeightError> {
        let name = name.into();
        let n: usize = shape.iter().product();
        if n != values.len() {
            return Err(WeightError::CorruptManifest(alloc::format!(
                "{name}: shape {shape:?} holds {n} values, got {}",
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(WeightError::NonFinite(name));
        }
        Ok(Self { name, shape, values })
    }

    pub fn n_values(&self) -> usize {
        self.values.len()
    }
}

/// Parameters plus string metadata. Parameter order is preserved, so
/// encoding is deterministic.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct WeightBundle {
    pub metadata: BTreeMap<String, String>,
    params: Vec<ParamArray>,
}

impl WeightBundle {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, p: ParamArray) -> Result<(), WeightError> {
        if self.get(&p.name).is_some() {
            return Err(WeightError::DuplicateName(p.name));
        }
        self.params.push(p);
        Ok(())
    }

    pub fn params(&self) -> &[ParamArray] {
        &self.params
    }

    pub fn get(&self, name: &str) -> Option<&ParamArray> {
        self.params.iter().find(|p| p.name == name)
    }

    /// Looks up `name` and checks its shape.
    pub fn expect(&self, name: &str, shape: &[usize]) -> Result<&ParamArray, WeightError> {
        let p = self
            .get(name)
            .ok_or_else(|| WeightError::MissingParam(name.to_string()))?;
        if p.shape != shape {
            return Err(WeightError::ShapeMismatch {
                name: name.to_string(),
                expected: shape.to_vec(),
                got: p.shape.clone(),
            });
        }
        Ok(p)
    }

    pub fn set_meta(&mut self, key: &str, value: impl ToString) {
        self.metadata.insert(key.to_string(), value.to_string());
    }

    pub fn meta(&self, key: &str) -> Option<&str> {
        self.metadata.get(key).map(String::as_str)
    }

    pub fn n_values(&self) -> usize {
        self.params.iter().map(ParamArray::n_values).sum()
    }

    /// Serializes the bundle; blob entries are laid out back to back in
    /// parameter order.
    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(64 + 4 * self.n_values());
        out.extend_from_slice(WEIGHT_MAGIC);
        out.extend_from_slice(&WEIGHT_FORMAT_VERSION.to_le_bytes());
        let mut meta = String::new();
        for (k, v) in &self.metadata {
            meta.push_str(k);
            meta.push('=');
            meta.push_str(v);
            meta.push('\n');
        }
        out.extend_from_slice(&(meta.len() as u32).to_le_bytes());
        out.extend_from_slice(meta.as_bytes());
        out.extend_from_slice(&(self.params.len() as u32).to_le_bytes());
        let mut offset = 0u64;
        for p in &self.params {
            out.extend_from_slice(&(p.name.len() as u32).to_le_bytes());
            out.extend_from_slice(p.name.as_bytes());
            out.extend_from_slice(&(p.shape.len() as u32).to_le_bytes());
            for &d in &p.shape {
                out.extend_from_slice(&(d as u32).to_le_bytes());
            }
            out.extend_from_slice(&offset.to_le_bytes());
            offset += 4 * p.values.len() as u64;
        }
        out.extend_from_slice(&offset.to_le_bytes());
        for p in &self.params {
            for v in &p.values {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<Self, WeightError> {
        let mut r = Reader { bytes, pos: 0 };
        if bytes.len() < 4 || &bytes[..4] != WEIGHT_MAGIC {
            return Err(WeightError::BadMagic);
        }
        r.pos = 4;
        let version = r.u32("version")?;
        if version != WEIGHT_FORMAT_VERSION {
            return Err(WeightError::UnsupportedVersion(version));
        }
        let meta_len = r.u32("metadata length")? as usize;
        let meta = core::str::from_utf8(r.take(meta_len, "metadata")?)
            .map_err(|_| WeightError::BadMetadata("metadata is not UTF-8".into()))?;
        let mut metadata = BTreeMap::new();
        for line in meta.lines().filter(|l| !l.is_empty()) {
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| WeightError::BadMetadata(alloc::format!("line without '=': {line}")))?;
            metadata.insert(k.to_string(), v.to_string());
        }

        let n = r.u32("entry count")? as usize;
        let mut entries = Vec::new();
        for _ in 0..n {
            let name_len = r.u32("name length")? as usize;
            let name = core::str::from_utf8(r.take(name_len, "name")?)
                .map_err(|_| WeightError::CorruptManifest("parameter name is not UTF-8".into()))?
                .to_string();
            let rank = r.u32("rank")? as usize;
            if rank > 8 {
                return Err(WeightError::CorruptManifest(alloc::format!("{name}: rank {rank}")));
            }
            let mut shape = Vec::with_capacity(rank);
            for _ in 0..rank {
                shape.push(r.u32("dimension")? as usize);
            }
            let offset = r.u64("offset")?;
            entries.push((name, shape, offset));
        }
        let blob_len = r.u64("blob length")?;
        let remaining = (bytes.len() - r.pos) as u64;
        if remaining < blob_len {
            return Err(WeightError::OffsetInconsistency(alloc::format!(
                "blob declares {blob_len} bytes but only {remaining} are present"
            )));
        }
        if remaining > blob_len {
            return Err(WeightError::CorruptManifest(alloc::format!(
                "{} trailing bytes after the blob",
                remaining - blob_len
            )));
        }
        let blob = &bytes[r.pos..];

        let mut spans: Vec<(u64, u64, usize)> = Vec::with_capacity(n);
        let mut bundle = WeightBundle {
            metadata,
            params: Vec::with_capacity(n),
        };
        for (i, (name, shape, offset)) in entries.into_iter().enumerate() {
            let count = shape
                .iter()
                .try_fold(1u64, |acc, &d| acc.checked_mul(d as u64))
                .ok_or_else(|| WeightError::CorruptManifest(alloc::format!("{name}: shape overflow")))?;
            let len = count
                .checked_mul(4)
                .ok_or_else(|| WeightError::CorruptManifest(alloc::format!("{name}: shape overflow")))?;
            if offset % 4 != 0 {
                return Err(WeightError::OffsetInconsistency(alloc::format!(
                    "{name}: offset {offset} is not 4-byte aligned"
                )));
            }
            let end = offset.checked_add(len).filter(|&e| e <= blob_len).ok_or_else(|| {
                WeightError::OffsetInconsistency(alloc::format!(
                    "{name}: bytes {offset}..{} exceed blob length {blob_len}",
                    offset.saturating_add(len)
                ))
            })?;
            spans.push((offset, end, i));
            let values: Vec<f32> = blob[offset as usize..end as usize]
                .chunks_exact(4)
                .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
                .collect();
            if values.iter().any(|v| !v.is_finite()) {
                return Err(WeightError::NonFinite(name));
            }
            bundle.push(ParamArray { name, shape, values })?;
        }
        spans.sort_unstable();
        for w in spans.windows(2) {
            if w[1].0 < w[0].1 {
                return Err(WeightError::OffsetInconsistency(alloc::format!(
                    "{} overlaps {}",
                    bundle.params[w[1].2].name,
                    bundle.params[w[0].2].name
                )));
            }
        }
        Ok(bundle)
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8], WeightError> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        match end {
            Some(end) => {
                let s = &self.bytes[self.pos..end];
                self.pos = end;
                Ok(s)
            }
            None => Err(WeightError::CorruptManifest(alloc::format!(
                "file ends inside {what}"
            ))),
        }
    }

    fn u32(&mut self, what: &str) -> Result<u32, WeightError> {
        let b = self.take(4, what)?;
        Ok(u32::from_le_bytes([b[0], b[1], b[2], b[3]]))
    }

    fn u64(&mut self, what: &str) -> Result<u64, WeightError> {
        let b = self.take(8, what)?;
        let mut a = [0u8; 8];
        a.copy_from_slice(b);
        Ok(u64::from_le_bytes(a))
    }
}
