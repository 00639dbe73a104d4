//! Skeleton sequences and the `MOTR` binary motion format.
//!
//! ```text
//! "MOTR"  u32 T  u32 J  u32 D  f32 fps  f32[T*J*D]   (little-endian, row-major t, j, d)
//! ```

use std::path::Path;

use ndarray::Array3;

use crate::codec::{check_finite, read_file, write_file, Reader, Writer};
use crate::data::topology::SkeletonTopology;
use crate::error::{Error, Result};

pub const MOTION_MAGIC: &[u8; 4] = b"MOTR";
/// Per-joint features: six continuous-rotation components then three positions.
pub const FEATURE_DIM: usize = 9;
pub const POSITION_OFFSET: usize = 6;

#[derive(Clone, Debug, PartialEq)]
pub struct SkeletonSequence {
    pub motion_id: String,
    /// `T × J × 9`
    pub frames: Array3<f32>,
    pub fps: f32,
}

impl SkeletonSequence {
    pub fn new(motion_id: impl Into<String>, frames: Array3<f32>, fps: f32) -> Result<Self> {
        let (t, j, d) = frames.dim();
        if t == 0 {
            return Err(Error::format("T", "T must be ≥ 1"));
        }
        if j == 0 {
            return Err(Error::format("J", "J must be ≥ 1"));
        }
        if d != FEATURE_DIM {
            return Err(Error::format("D", format!("feature dimension must be 9, got {d}")));
        }
        if !(fps.is_finite() && fps > 0.0) {
            return Err(Error::format("fps", format!("fps must be positive, got {fps}")));
        }
        if frames.iter().any(|v| !v.is_finite()) {
            return Err(Error::format("frames", "non-finite value"));
        }
        Ok(SkeletonSequence {
            motion_id: motion_id.into(),
            frames,
            fps,
        })
    }

    pub fn len(&self) -> usize {
        self.frames.dim().0
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn joint_count(&self) -> usize {
        self.frames.dim().1
    }

    /// Per-frame 3D joint positions (the last three feature components).
    pub fn joint_positions(&self) -> Vec<Vec<[f32; 3]>> {
        self.frames
            .outer_iter()
            .map(|frame| {
                frame
                    .outer_iter()
                    .map(|j| {
                        [
                            j[POSITION_OFFSET],
                            j[POSITION_OFFSET + 1],
                            j[POSITION_OFFSET + 2],
                        ]
                    })
                    .collect()
            })
            .collect()
    }

    pub fn encode(&self) -> Vec<u8> {
        let (t, j, d) = self.frames.dim();
        let mut w = Writer::new(MOTION_MAGIC);
        w.u32(t as u32);
        w.u32(j as u32);
        w.u32(d as u32);
        w.f32(self.fps);
        for v in self.frames.iter() {
            w.f32(*v);
        }
        w.finish()
    }

    pub fn decode(motion_id: impl Into<String>, bytes: &[u8]) -> Result<Self> {
        let mut r = Reader::new(bytes, MOTION_MAGIC)?;
        let t = r.u32("T")? as usize;
        let j = r.u32("J")? as usize;
        let d = r.u32("D")? as usize;
        let fps = r.f32("fps")?;
        if t == 0 {
            return Err(Error::format("T", "T must be ≥ 1"));
        }
        if d != FEATURE_DIM {
            return Err(Error::format("D", format!("feature dimension must be 9, got {d}")));
        }
        let n = t
            .checked_mul(j)
            .and_then(|x| x.checked_mul(d))
            .ok_or_else(|| Error::format("header", "T·J·D overflows"))?;
        if r.remaining() != n * 4 {
            return Err(Error::format(
                "payload",
                format!(
                    "header declares {t}×{j}×{d} = {n} floats but payload holds {} bytes",
                    r.remaining()
                ),
            ));
        }
        let data = r.f32s(n, "payload")?;
        check_finite(&data, "payload")?;
        let frames = Array3::from_shape_vec((t, j, d), data)
            .map_err(|e| Error::format("payload", e.to_string()))?;
        SkeletonSequence::new(motion_id, frames, fps)
    }
}

/// Writes `seq` to `path` in the `MOTR` format.
pub fn save_motion(seq: &SkeletonSequence, path: &Path) -> Result<()> {
    write_file(path, &seq.encode())
}

/// Reads a `MOTR` file; the motion id is the file stem. The joint count
/// must agree with `topology`.
pub fn load_motion(path: &Path, topology: &SkeletonTopology) -> Result<SkeletonSequence> {
    let id = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    load_motion_as(path, id, topology)
}

pub fn load_motion_as(
    path: &Path,
    motion_id: impl Into<String>,
    topology: &SkeletonTopology,
) -> Result<SkeletonSequence> {
    let seq = SkeletonSequence::decode(motion_id, &read_file(path)?)?;
    if seq.joint_count() != topology.joint_count() {
        return Err(Error::format(
            "J",
            format!(
                "file has {} joints but topology expects {}",
                seq.joint_count(),
                topology.joint_count()
            ),
        ));
    }
    Ok(seq)
}
