//! Padded motion batches → fixed-size motion embeddings.
//!
//! Three architectures are available, all mask-aware so that padding frames
//! never change an output:
//!
//! * [`MotionVariant::Bigru`]: two-layer FFN lift of each flattened frame,
//!   then a bidirectional GRU; the final forward and backward states are
//!   concatenated.
//! * [`MotionVariant::UpperLowerGru`]: independent GRUs over the upper body
//!   (torso and both arms) and the lower body (both legs).
//! * [`MotionVariant::Mot`]: a transformer over `(frame, part)` tokens that
//!   alternates spatial attention among the five parts of a frame with
//!   temporal attention along each part's stream. See [`mot`].

pub mod gru;
pub mod mot;

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use serde::{Deserialize, Serialize};

use crate::data::{PaddedBatch, DEFAULT_MAX_LEN};
use crate::error::{Error, Result};
use crate::params::{Bound, ParamSet};
use crate::tape::{Tape, Var};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MotionVariant {
    Bigru,
    UpperLowerGru,
    Mot,
}

impl std::str::FromStr for MotionVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bigru" => Ok(MotionVariant::Bigru),
            "upper-lower-gru" | "upper-lower" => Ok(MotionVariant::UpperLowerGru),
            "mot" => Ok(MotionVariant::Mot),
            other => Err(Error::Invalid(format!("unknown motion encoder `{other}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MotionEncoderConfig {
    pub variant: MotionVariant,
    /// GRU hidden width (both GRU variants).
    #[serde(default = "default_hidden")]
    pub hidden: usize,
    /// Width of the BiGRU's input FFN.
    #[serde(default = "default_hidden")]
    pub ffn_hidden: usize,
    /// Transformer blocks.
    #[serde(default = "default_depth")]
    pub depth: usize,
    #[serde(default = "default_heads")]
    pub heads: usize,
    /// Transformer token width `d_m`.
    #[serde(default = "default_model_dim")]
    pub model_dim: usize,
    /// Transformer feed-forward width.
    #[serde(default = "default_mot_ffn")]
    pub mot_ffn: usize,
    /// Transformer output width `d_motion`.
    #[serde(default = "default_model_dim")]
    pub output_dim: usize,
    /// Length of the learned temporal position table.
    #[serde(default = "default_max_len")]
    pub max_len: usize,
}

fn default_hidden() -> usize {
    256
}
fn default_depth() -> usize {
    4
}
fn default_heads() -> usize {
    4
}
fn default_model_dim() -> usize {
    128
}
fn default_mot_ffn() -> usize {
    256
}
fn default_max_len() -> usize {
    DEFAULT_MAX_LEN
}

impl MotionEncoderConfig {
    pub fn new(variant: MotionVariant) -> Self {
        MotionEncoderConfig {
            variant,
            hidden: default_hidden(),
            ffn_hidden: default_hidden(),
            depth: default_depth(),
            heads: default_heads(),
            model_dim: default_model_dim(),
            mot_ffn: default_mot_ffn(),
            output_dim: default_model_dim(),
            max_len: default_max_len(),
        }
    }

    pub fn output_dim(&self) -> usize {
        match self.variant {
            MotionVariant::Bigru | MotionVariant::UpperLowerGru => 2 * self.hidden,
            MotionVariant::Mot => self.output_dim,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("hidden", self.hidden),
            ("ffn_hidden", self.ffn_hidden),
            ("depth", self.depth),
            ("heads", self.heads),
            ("model_dim", self.model_dim),
            ("mot_ffn", self.mot_ffn),
            ("output_dim", self.output_dim),
            ("max_len", self.max_len),
        ];
        if let Some((name, _)) = positive.iter().find(|(_, v)| *v == 0) {
            return Err(Error::Invalid(format!("motion encoder `{name}` must be ≥ 1")));
        }
        if self.variant == MotionVariant::Mot && !self.model_dim.is_multiple_of(self.heads) {
            return Err(Error::Invalid(format!(
                "heads ({}) must divide model_dim ({})",
                self.heads, self.model_dim
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MotionEncoder {
    pub config: MotionEncoderConfig,
    pub params: ParamSet,
}

impl MotionEncoder {
    pub fn init(config: MotionEncoderConfig, rng: &mut impl Rng) -> Result<Self> {
        config.validate()?;
        let params = match config.variant {
            MotionVariant::Bigru => gru::init_bigru(&config, rng),
            MotionVariant::UpperLowerGru => gru::init_upper_lower(&config, rng),
            MotionVariant::Mot => mot::init(&config, rng),
        };
        Ok(MotionEncoder { config, params })
    }

    pub fn from_parts(config: MotionEncoderConfig, params: ParamSet) -> Result<Self> {
        let template = MotionEncoder::init(config.clone(), &mut rand_chacha::ChaCha8Rng::seed_from_u64(0))?;
        crate::text::encoder::check_same_shapes(&template.params, &params)?;
        Ok(MotionEncoder { config, params })
    }

    pub fn forward(&self, tape: &mut Tape, p: &Bound, batch: &PaddedBatch) -> Result<Var> {
        forward(&self.config, tape, p, batch)
    }

    pub fn encode(&self, batch: &PaddedBatch) -> Result<Array2<f64>> {
        let mut tape = Tape::new();
        let p = Bound::frozen(&mut tape, &self.params);
        let out = self.forward(&mut tape, &p, batch)?;
        Ok(tape.value(out).clone())
    }
}

pub(crate) fn forward(
    cfg: &MotionEncoderConfig,
    tape: &mut Tape,
    p: &Bound,
    batch: &PaddedBatch,
) -> Result<Var> {
    let (_, _, parts, d) = batch.features.dim();
    if parts != crate::data::PART_COUNT || d != crate::data::FEATURE_DIM {
        return Err(Error::Shape(format!("batch has {parts} parts × {d} features, expected 5 × 9")));
    }
    if batch.batch_size() == 0 {
        return Err(Error::Invalid("empty motion batch".into()));
    }
    match cfg.variant {
        MotionVariant::Bigru => gru::bigru_forward(tape, p, batch),
        MotionVariant::UpperLowerGru => gru::upper_lower_forward(tape, p, batch),
        MotionVariant::Mot => mot::forward(cfg, tape, p, batch, mot::Stage::Output),
    }
}

fn check_variant(enc: &MotionEncoder, want: MotionVariant) -> Result<()> {
    if enc.config.variant != want {
        return Err(Error::Invalid(format!(
            "encoder variant is {:?}, expected {want:?}",
            enc.config.variant
        )));
    }
    Ok(())
}

/// `B × 2h` bidirectional GRU embeddings.
pub fn bigru_encode(batch: &PaddedBatch, enc: &MotionEncoder) -> Result<Array2<f64>> {
    check_variant(enc, MotionVariant::Bigru)?;
    enc.encode(batch)
}

/// `B × 2h` upper/lower-body GRU embeddings: upper half first.
pub fn upper_lower_encode(batch: &PaddedBatch, enc: &MotionEncoder) -> Result<Array2<f64>> {
    check_variant(enc, MotionVariant::UpperLowerGru)?;
    enc.encode(batch)
}

/// `B × d_motion` divided space-time transformer embeddings.
pub fn mot_encode(batch: &PaddedBatch, enc: &MotionEncoder) -> Result<Array2<f64>> {
    check_variant(enc, MotionVariant::Mot)?;
    enc.encode(batch)
}
