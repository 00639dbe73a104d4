use ndarray::{s, Array2, Array3, Array4};
use serde::{Deserialize, Serialize};

use crate::data::motion::{SkeletonSequence, FEATURE_DIM};
use crate::data::topology::{BodyPart, SkeletonTopology, PART_COUNT};
use crate::error::{Error, Result};

/// Default crop length in frames.
pub const DEFAULT_MAX_LEN: usize = 200;

/// Reduces per-joint features to five part streams: the feature of part `p`
/// at frame `t` is the mean of its member joints' features at `t`.
pub fn aggregate_body_parts(seq: &SkeletonSequence, topology: &SkeletonTopology) -> Result<Array3<f64>> {
    if seq.joint_count() != topology.joint_count() {
        return Err(Error::Shape(format!(
            "sequence `{}` has {} joints, topology has {}",
            seq.motion_id,
            seq.joint_count(),
            topology.joint_count()
        )));
    }
    let t = seq.len();
    let mut out = Array3::<f64>::zeros((t, PART_COUNT, FEATURE_DIM));
    for part in BodyPart::ALL {
        let members: Vec<usize> = topology.joints_of(part).collect();
        let inv = 1.0 / members.len() as f64;
        for f in 0..t {
            let mut acc = out.slice_mut(s![f, part.index(), ..]);
            for &j in &members {
                acc.zip_mut_with(&seq.frames.slice(s![f, j, ..]), |a, &v| *a += v as f64);
            }
            acc.mapv_inplace(|a| a * inv);
        }
    }
    Ok(out)
}

/// A zero-padded batch of part-aggregated sequences.
#[derive(Clone, Debug, PartialEq)]
pub struct PaddedBatch {
    /// `B × T_max × 5 × 9`
    pub features: Array4<f64>,
    /// `B × T_max`, true for real frames.
    pub mask: Array2<bool>,
    pub lengths: Vec<usize>,
}

impl PaddedBatch {
    pub fn batch_size(&self) -> usize {
        self.lengths.len()
    }

    pub fn max_len(&self) -> usize {
        self.features.dim().1
    }

    /// The real (unpadded) frames of item `i`.
    pub fn real_frames(&self, i: usize) -> Array3<f64> {
        self.features.slice(s![i, ..self.lengths[i], .., ..]).to_owned()
    }

    /// The same batch with `extra` more zero frames appended to every item.
    pub fn with_extra_padding(&self, extra: usize) -> PaddedBatch {
        let (b, t, p, d) = self.features.dim();
        let mut features = Array4::zeros((b, t + extra, p, d));
        features.slice_mut(s![.., ..t, .., ..]).assign(&self.features);
        let mut mask = Array2::from_elem((b, t + extra), false);
        mask.slice_mut(s![.., ..t]).assign(&self.mask);
        PaddedBatch {
            features,
            mask,
            lengths: self.lengths.clone(),
        }
    }

    /// Drops trailing frame columns that are padding for every item.
    /// Encoders are padding invariant, so this only saves work.
    pub fn trimmed(&self) -> PaddedBatch {
        self.select(&(0..self.batch_size()).collect::<Vec<_>>())
    }

    /// Sub-batch made of the given items, re-padded to their own maximum length.
    pub fn select(&self, items: &[usize]) -> PaddedBatch {
        let t_max = items.iter().map(|&i| self.lengths[i]).max().unwrap_or(1).max(1);
        let (_, _, p, d) = self.features.dim();
        let mut features = Array4::zeros((items.len(), t_max, p, d));
        let mut mask = Array2::from_elem((items.len(), t_max), false);
        for (o, &i) in items.iter().enumerate() {
            let len = self.lengths[i];
            features
                .slice_mut(s![o, ..len, .., ..])
                .assign(&self.features.slice(s![i, ..len, .., ..]));
            mask.slice_mut(s![o, ..len]).fill(true);
        }
        PaddedBatch {
            features,
            mask,
            lengths: items.iter().map(|&i| self.lengths[i]).collect(),
        }
    }
}

/// Per-channel standardization of part features, fitted on real frames.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureStats {
    /// `5 × 9` channel means, row-major by part.
    pub mean: Vec<f64>,
    /// `5 × 9` channel standard deviations, floored at [`FeatureStats::MIN_STD`].
    pub std: Vec<f64>,
}

impl FeatureStats {
    pub const MIN_STD: f64 = 1e-6;

    pub fn fit(batch: &PaddedBatch) -> Result<Self> {
        let n: usize = batch.lengths.iter().sum();
        if n == 0 {
            return Err(Error::Invalid("no real frames to fit feature statistics on".into()));
        }
        let c = PART_COUNT * FEATURE_DIM;
        let mut sum = vec![0.0; c];
        let mut sq = vec![0.0; c];
        for (i, &len) in batch.lengths.iter().enumerate() {
            for t in 0..len {
                for (k, v) in batch.features.slice(s![i, t, .., ..]).iter().enumerate() {
                    sum[k] += v;
                }
            }
        }
        let mean: Vec<f64> = sum.iter().map(|s| s / n as f64).collect();
        for (i, &len) in batch.lengths.iter().enumerate() {
            for t in 0..len {
                for (k, v) in batch.features.slice(s![i, t, .., ..]).iter().enumerate() {
                    sq[k] += (v - mean[k]).powi(2);
                }
            }
        }
        let std = sq.iter().map(|q| (q / n as f64).sqrt().max(Self::MIN_STD)).collect();
        Ok(FeatureStats { mean, std })
    }

    /// Standardizes the real frames; padding stays zero.
    pub fn apply(&self, batch: &PaddedBatch) -> PaddedBatch {
        let mut out = batch.clone();
        for (i, &len) in batch.lengths.iter().enumerate() {
            for t in 0..len {
                for (k, v) in out.features.slice_mut(s![i, t, .., ..]).iter_mut().enumerate() {
                    *v = (*v - self.mean[k]) / self.std[k];
                }
            }
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        let c = PART_COUNT * FEATURE_DIM;
        if self.mean.len() != c || self.std.len() != c {
            return Err(Error::Shape(format!("feature statistics need {c} channels")));
        }
        if self.mean.iter().chain(&self.std).any(|v| !v.is_finite()) || self.std.iter().any(|&s| s <= 0.0) {
            return Err(Error::Invalid("feature statistics must be finite with positive std".into()));
        }
        Ok(())
    }
}

/// Start index of the centered window of `max_len` frames; ties go low.
pub fn center_crop_start(len: usize, max_len: usize) -> usize {
    len.saturating_sub(max_len) / 2
}

/// Center-crops sequences longer than `max_len`, zero-pads the rest at the
/// tail to exactly `max_len` frames, and records which frames are real.
pub fn pad_and_mask(seqs: &[Array3<f64>], max_len: usize) -> Result<PaddedBatch> {
    if seqs.is_empty() {
        return Err(Error::Invalid("cannot batch an empty list of sequences".into()));
    }
    if max_len == 0 {
        return Err(Error::Invalid("max_len must be ≥ 1".into()));
    }
    for s in seqs {
        let (t, p, d) = s.dim();
        if t == 0 || p != PART_COUNT || d != FEATURE_DIM {
            return Err(Error::Shape(format!(
                "expected T×{PART_COUNT}×{FEATURE_DIM} with T ≥ 1, got {t}×{p}×{d}"
            )));
        }
    }
    let lengths: Vec<usize> = seqs.iter().map(|s| s.dim().0.min(max_len)).collect();
    let t_max = max_len;
    let mut features = Array4::zeros((seqs.len(), t_max, PART_COUNT, FEATURE_DIM));
    let mut mask = Array2::from_elem((seqs.len(), t_max), false);
    for (i, (s, &len)) in seqs.iter().zip(&lengths).enumerate() {
        let start = center_crop_start(s.dim().0, max_len);
        features
            .slice_mut(s![i, ..len, .., ..])
            .assign(&s.slice(s![start..start + len, .., ..]));
        mask.slice_mut(s![i, ..len]).fill(true);
    }
    Ok(PaddedBatch {
        features,
        mask,
        lengths,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::topology::BodyPart::*;

    fn ramp(t: usize) -> Array3<f64> {
        Array3::from_shape_fn((t, PART_COUNT, FEATURE_DIM), |(f, p, d)| {
            (f * 100 + p * 10 + d) as f64
        })
    }

    #[test]
    fn exact_length_is_identity() {
        let b = pad_and_mask(&[ramp(5)], 5).unwrap();
        assert!(b.mask.iter().all(|m| *m));
        assert_eq!(b.real_frames(0), ramp(5));
    }

    #[test]
    fn short_sequence_is_tail_padded() {
        let b = pad_and_mask(&[ramp(3)], 5).unwrap();
        assert_eq!(b.lengths, vec![3]);
        assert_eq!(
            b.mask.row(0).to_vec(),
            vec![true, true, true, false, false]
        );
        assert!(b.features.slice(s![0, 3.., .., ..]).iter().all(|v| *v == 0.0));
        assert_eq!(b.trimmed().max_len(), 3);
    }

    #[test]
    fn long_sequence_is_center_cropped() {
        let b = pad_and_mask(&[ramp(10)], 4).unwrap();
        assert_eq!(b.lengths, vec![4]);
        assert_eq!(b.real_frames(0), ramp(10).slice(s![3..7, .., ..]).to_owned());
    }

    #[test]
    fn empty_input_is_an_error() {
        assert!(pad_and_mask(&[], 4).is_err());
        assert!(pad_and_mask(&[ramp(2)], 0).is_err());
    }

    #[test]
    fn two_joint_part_is_averaged() {
        let topo =
            SkeletonTopology::new(vec![Torso, LeftArm, LeftArm, RightArm, LeftLeg, RightLeg]).unwrap();
        let frames = Array3::from_shape_fn((2, 6, 9), |(t, j, d)| (t * 50 + j * 9 + d) as f32 * 0.5);
        let seq = SkeletonSequence::new("m", frames.clone(), 20.0).unwrap();
        let agg = aggregate_body_parts(&seq, &topo).unwrap();
        for t in 0..2 {
            for d in 0..9 {
                let expected = (frames[[t, 1, d]] as f64 + frames[[t, 2, d]] as f64) / 2.0;
                assert_eq!(agg[[t, LeftArm.index(), d]], expected);
                assert_eq!(agg[[t, Torso.index(), d]], frames[[t, 0, d]] as f64);
            }
        }
    }

    #[test]
    fn constant_joints_give_constant_parts() {
        let topo = SkeletonTopology::kit21();
        let c = [0.1f32, -0.2, 0.3, 0.4, 0.5, -0.6, 1.0, 2.0, 3.0];
        let frames = Array3::from_shape_fn((3, 21, 9), |(_, _, d)| c[d]);
        let seq = SkeletonSequence::new("m", frames, 20.0).unwrap();
        let agg = aggregate_body_parts(&seq, &topo).unwrap();
        for ((_, _, d), v) in agg.indexed_iter() {
            assert!((v - c[d] as f64).abs() < 1e-12);
        }
    }
}
