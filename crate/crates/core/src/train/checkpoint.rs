//! Binary checkpoint container.
//!
//! Layout, little-endian throughout:
//!
//! ```text
//! "ABAS"  u32 version
//! u32 blob length, UTF-8 JSON {"config": .., "provenance": ..}
//! u32 tensor count
//!   per tensor: u16 name length, name, u8 rank, rank x u32 dims, f32 values
//! u64 step
//! ```
//!
//! Model parameters come first (with `.sn_u` / `.sn_v` power-iteration
//! vectors), then optimizer moments suffixed `.m`, `.v`, `.vmax`.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::{TargetMode, TrainConfig};
use crate::error::{CheckpointError, Error, Result};
use crate::nn::GateKind;

pub const MAGIC: &[u8; 4] = b"ABAS";
pub const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct NamedTensor {
    pub name: String,
    pub dims: Vec<usize>,
    pub values: Vec<f32>,
}

impl NamedTensor {
    pub fn new(name: impl Into<String>, dims: Vec<usize>, values: Vec<f32>) -> Self {
        Self {
            name: name.into(),
            dims,
            values,
        }
    }
}

/// Where a checkpoint came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub producer: String,
    pub gate: GateKind,
    pub target: TargetMode,
    pub seed: u64,
    /// Set when training continued from another checkpoint whose settings
    /// differ from this run's.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub resumed_from: Option<String>,
}

impl Provenance {
    pub fn of(config: &TrainConfig) -> Self {
        Self {
            producer: format!("abas {}", env!("CARGO_PKG_VERSION")),
            gate: config.gate,
            target: config.target,
            seed: config.seed,
            resumed_from: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub config: TrainConfig,
    pub provenance: Provenance,
    pub tensors: Vec<NamedTensor>,
    pub step: u64,
}

#[derive(Serialize, Deserialize)]
struct Header {
    config: TrainConfig,
    provenance: Provenance,
}

impl Checkpoint {
    pub fn tensor(&self, name: &str) -> Option<&NamedTensor> {
        self.tensors.iter().find(|t| t.name == name)
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let header = Header {
            config: self.config.clone(),
            provenance: self.provenance.clone(),
        };
        let blob = serde_json::to_vec(&header).map_err(|e| CheckpointError::BadConfig(e.to_string()))?;
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.extend_from_slice(&(blob.len() as u32).to_le_bytes());
        out.extend_from_slice(&blob);
        out.extend_from_slice(&(self.tensors.len() as u32).to_le_bytes());
        for t in &self.tensors {
            let expected: usize = t.dims.iter().product();
            if expected != t.values.len() || t.dims.len() > u8::MAX as usize || t.name.len() > u16::MAX as usize {
                return Err(Error::shape(format!("cannot serialize tensor {}", t.name)));
            }
            out.extend_from_slice(&(t.name.len() as u16).to_le_bytes());
            out.extend_from_slice(t.name.as_bytes());
            out.push(t.dims.len() as u8);
            for &d in &t.dims {
                out.extend_from_slice(&(d as u32).to_le_bytes());
            }
            for v in &t.values {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        out.extend_from_slice(&self.step.to_le_bytes());
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader { bytes, pos: 0 };
        if r.take(4)? != MAGIC {
            return Err(CheckpointError::BadMagic.into());
        }
        let version = r.u32()?;
        if version != VERSION {
            return Err(CheckpointError::BadVersion(version).into());
        }
        let blob_len = r.u32()? as usize;
        let header: Header =
            serde_json::from_slice(r.take(blob_len)?).map_err(|e| CheckpointError::BadConfig(e.to_string()))?;
        let count = r.u32()? as usize;
        let mut tensors = Vec::with_capacity(count.min(4096));
        for _ in 0..count {
            let name_len = r.u16()? as usize;
            let name = String::from_utf8(r.take(name_len)?.to_vec())
                .map_err(|_| CheckpointError::BadConfig("tensor name is not UTF-8".into()))?;
            let rank = r.take(1)?[0] as usize;
            let dims = (0..rank).map(|_| r.u32().map(|d| d as usize)).collect::<Result<Vec<_>>>()?;
            let n: usize = dims.iter().product();
            let raw = r.take(n.checked_mul(4).ok_or(CheckpointError::Truncated)?)?;
            let values = raw
                .chunks_exact(4)
                .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
                .collect();
            tensors.push(NamedTensor { name, dims, values });
        }
        let step = u64::from_le_bytes(r.take(8)?.try_into().expect("8 bytes"));
        Ok(Self {
            config: header.config,
            provenance: header.provenance,
            tensors,
            step,
        })
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or(CheckpointError::Truncated)?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().expect("2 bytes")))
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }
}

pub fn save_checkpoint(path: impl AsRef<Path>, ckpt: &Checkpoint) -> Result<()> {
    std::fs::write(path, ckpt.to_bytes()?)?;
    Ok(())
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<Checkpoint> {
    Checkpoint::from_bytes(&std::fs::read(path)?)
}
