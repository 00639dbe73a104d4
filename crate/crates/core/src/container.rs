//! Checkpoint container: a JSON config header plus named `f32` tensors.
//!
//! Layout (all little-endian):
//!
//! ```text
//! magic[4]  u32 json_len  json[json_len]  u32 n_tensors
//! n_tensors × { u16 name_len  name  u32 rows  u32 cols  f32[rows*cols] }
//! ```
//!
//! Motion-encoder checkpoints use magic `MENC`; text-encoder and projection
//! checkpoints use `TENC`. Tensors are written in name order.

use std::path::Path;

use ndarray::Array2;

use crate::codec::{check_finite, read_file, write_file, Reader, Writer};
use crate::error::{Error, Result};
use crate::params::ParamSet;

pub const MOTION_MAGIC: &[u8; 4] = b"MENC";
pub const TEXT_MAGIC: &[u8; 4] = b"TENC";

/// In-memory image of a checkpoint file. Values are stored as `f32` exactly
/// as they appear on disk so that round trips are bit-exact.
#[derive(Clone, Debug, PartialEq)]
pub struct Container {
    pub config: serde_json::Value,
    pub tensors: Vec<NamedTensor>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct NamedTensor {
    pub name: String,
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f32>,
}

impl Container {
    pub fn from_params(config: serde_json::Value, params: &ParamSet) -> Self {
        let tensors = params
            .iter()
            .map(|(name, m)| NamedTensor {
                name: name.clone(),
                rows: m.nrows(),
                cols: m.ncols(),
                data: m.iter().map(|&v| v as f32).collect(),
            })
            .collect();
        Container { config, tensors }
    }

    pub fn to_params(&self) -> ParamSet {
        let mut ps = ParamSet::new();
        for t in &self.tensors {
            let m = Array2::from_shape_fn((t.rows, t.cols), |(r, c)| t.data[r * t.cols + c] as f64);
            ps.insert(t.name.clone(), m);
        }
        ps
    }

    pub fn encode(&self, magic: &[u8; 4]) -> Result<Vec<u8>> {
        let mut w = Writer::new(magic);
        let json = serde_json::to_vec(&self.config)?;
        w.u32(json.len() as u32);
        w.bytes(&json);
        w.u32(self.tensors.len() as u32);
        for t in &self.tensors {
            if t.data.len() != t.rows * t.cols {
                return Err(Error::Shape(format!(
                    "tensor `{}` declares {}×{} but holds {} values",
                    t.name,
                    t.rows,
                    t.cols,
                    t.data.len()
                )));
            }
            w.short_str(&t.name)?;
            w.u32(t.rows as u32);
            w.u32(t.cols as u32);
            w.f32s(&t.data);
        }
        Ok(w.finish())
    }

    pub fn decode(bytes: &[u8], magic: &[u8; 4]) -> Result<Self> {
        let mut r = Reader::new(bytes, magic)?;
        let json_len = r.u32("config length")? as usize;
        let config: serde_json::Value = serde_json::from_slice(r.bytes(json_len, "config")?)
            .map_err(|e| Error::format("config", e.to_string()))?;
        let n = r.u32("tensor count")? as usize;
        let mut tensors = Vec::with_capacity(n.min(4096));
        for _ in 0..n {
            let name = r.short_str("tensor name")?;
            let rows = r.u32("tensor rows")? as usize;
            let cols = r.u32("tensor cols")? as usize;
            let count = rows
                .checked_mul(cols)
                .ok_or_else(|| Error::format("tensor shape", "overflow"))?;
            let data = r.f32s(count, &format!("tensor `{name}` payload"))?;
            check_finite(&data, &format!("tensor `{name}`"))?;
            tensors.push(NamedTensor {
                name,
                rows,
                cols,
                data,
            });
        }
        r.expect_end()?;
        Ok(Container { config, tensors })
    }

    pub fn save(&self, path: &Path, magic: &[u8; 4]) -> Result<()> {
        write_file(path, &self.encode(magic)?)
    }

    pub fn load(path: &Path, magic: &[u8; 4]) -> Result<Self> {
        Container::decode(&read_file(path)?, magic)
    }
}
