//! Two-stream model: motion encoder and text encoder, each followed by an
//! affine projection into the common space.
//!
//! All trainable tensors live in one [`ParamSet`] under the prefixes
//! `motion.`, `text.`, `proj_motion.`, `proj_text.` plus the scalar
//! `log_tau`.

use std::path::Path;

use ndarray::Array2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::container::{Container, MOTION_MAGIC, TEXT_MAGIC};
use crate::data::{FeatureStats, PaddedBatch};
use crate::error::{Error, Result};
use crate::motion_encoder::{MotionEncoder, MotionEncoderConfig};
use crate::params::{init_linear, linear, Bound, ParamSet};
use crate::space::loss::{DEFAULT_MARGIN, DEFAULT_TEMPERATURE};
use crate::tape::{Tape, Var};
use crate::text::{HashedFeaturizer, TextBatch, TextEncoder, TextEncoderConfig, TextVariant};

pub const MOTION_CHECKPOINT: &str = "motion.menc";
pub const TEXT_CHECKPOINT: &str = "text.tenc";
/// Default common-space width.
pub const DEFAULT_COMMON_DIM: usize = 256;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LossKind {
    Triplet,
    Infonce,
}

impl std::str::FromStr for LossKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "triplet" => Ok(LossKind::Triplet),
            "infonce" | "info-nce" => Ok(LossKind::Infonce),
            other => Err(Error::Invalid(format!("unknown loss `{other}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub motion: MotionEncoderConfig,
    pub text: TextEncoderConfig,
    pub d_common: usize,
    #[serde(default = "yes")]
    pub l2_normalize: bool,
    pub loss: LossKind,
    #[serde(default = "default_margin")]
    pub margin: f64,
    #[serde(default = "default_tau")]
    pub tau_init: f64,
    /// How free text becomes encoder input when no precomputed embedding
    /// exists for it. `None` for the self-contained variant, which reads
    /// raw text through its vocabulary.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub featurizer: Option<HashedFeaturizer>,
    /// Standardization applied to motion features before the encoder.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub feature_stats: Option<FeatureStats>,
}

fn yes() -> bool {
    true
}
fn default_margin() -> f64 {
    DEFAULT_MARGIN
}
fn default_tau() -> f64 {
    DEFAULT_TEMPERATURE
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        self.motion.validate()?;
        if self.d_common < 2 {
            return Err(Error::Invalid("d_common must be ≥ 2".into()));
        }
        if !(self.margin >= 0.0) {
            return Err(Error::Invalid("margin must be ≥ 0".into()));
        }
        if !(self.tau_init > 0.0) {
            return Err(Error::Invalid("tau_init must be > 0".into()));
        }
        if let Some(s) = &self.feature_stats {
            s.validate()?;
        }
        if let Some(f) = &self.featurizer {
            if f.dim != self.text.input_dim && self.text.variant != TextVariant::SelfContained {
                return Err(Error::Shape(format!(
                    "featurizer width {} does not match text input {}",
                    f.dim, self.text.input_dim
                )));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RetrievalModel {
    pub config: ModelConfig,
    pub params: ParamSet,
}

impl RetrievalModel {
    pub fn init(config: ModelConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let motion = MotionEncoder::init(config.motion.clone(), &mut rng)?;
        let text = TextEncoder::init(config.text.clone(), &mut rng)?;
        let mut params = ParamSet::new();
        params.extend_prefixed("motion", motion.params);
        params.extend_prefixed("text", text.params);
        init_linear(&mut params, &mut rng, "proj_motion", config.motion.output_dim(), config.d_common);
        init_linear(&mut params, &mut rng, "proj_text", config.text.output_dim(), config.d_common);
        params.insert("log_tau", Array2::from_elem((1, 1), config.tau_init.ln()));
        Ok(RetrievalModel { config, params })
    }

    pub fn temperature(&self) -> f64 {
        self.params.get("log_tau").map(|m| m[[0, 0]].exp()).unwrap_or(self.config.tau_init)
    }

    pub fn motion_encoder(&self) -> MotionEncoder {
        MotionEncoder {
            config: self.config.motion.clone(),
            params: self.params.sub("motion"),
        }
    }

    pub fn text_encoder(&self) -> TextEncoder {
        TextEncoder {
            config: self.config.text.clone(),
            params: self.params.sub("text"),
        }
    }

    fn project(&self, tape: &mut Tape, p: &Bound, head: &str, x: Var) -> Var {
        let y = linear(tape, p, head, x);
        if self.config.l2_normalize {
            tape.l2_normalize_rows(y)
        } else {
            y
        }
    }

    pub fn motion_embeddings_on(&self, tape: &mut Tape, p: &Bound, batch: &PaddedBatch) -> Result<Var> {
        let standardized;
        let batch = match &self.config.feature_stats {
            Some(s) => {
                standardized = s.apply(batch);
                &standardized
            }
            None => batch,
        };
        let m = crate::motion_encoder::forward(&self.config.motion, tape, &p.scoped("motion"), batch)?;
        Ok(self.project(tape, p, "proj_motion", m))
    }

    pub fn text_embeddings_on(&self, tape: &mut Tape, p: &Bound, batch: &TextBatch) -> Result<Var> {
        let enc = TextEncoder {
            config: self.config.text.clone(),
            params: ParamSet::new(),
        };
        let c = enc.forward(tape, &p.scoped("text"), batch)?;
        Ok(self.project(tape, p, "proj_text", c))
    }

    /// Records both streams, the similarity matrix and the configured loss.
    /// Returns `(loss, similarity)`.
    pub fn loss_on(
        &self,
        tape: &mut Tape,
        p: &Bound,
        motions: &PaddedBatch,
        texts: &TextBatch,
    ) -> Result<(Var, Var)> {
        if motions.batch_size() != texts.len() {
            return Err(Error::Shape(format!(
                "{} motions paired with {} captions",
                motions.batch_size(),
                texts.len()
            )));
        }
        let m = self.motion_embeddings_on(tape, p, motions)?;
        let c = self.text_embeddings_on(tape, p, texts)?;
        let sim = tape.matmul_t(m, c);
        let loss = match self.config.loss {
            LossKind::Infonce => tape.infonce(sim, p.var("log_tau")),
            LossKind::Triplet => {
                if motions.batch_size() < 2 {
                    return Err(Error::Invalid("triplet loss needs a batch of at least 2".into()));
                }
                tape.triplet(sim, self.config.margin)
            }
        };
        Ok((loss, sim))
    }

    /// Loss value without recording gradients.
    pub fn loss(&self, motions: &PaddedBatch, texts: &TextBatch) -> Result<f64> {
        let mut tape = Tape::new();
        let p = Bound::frozen(&mut tape, &self.params);
        let (loss, _) = self.loss_on(&mut tape, &p, motions, texts)?;
        Ok(tape.value(loss)[[0, 0]])
    }

    /// `B × d_common` motion embeddings.
    pub fn embed_motions(&self, batch: &PaddedBatch) -> Result<Array2<f64>> {
        let mut tape = Tape::new();
        let p = Bound::frozen(&mut tape, &self.params);
        let v = self.motion_embeddings_on(&mut tape, &p, batch)?;
        Ok(tape.value(v).clone())
    }

    /// `B × d_common` caption embeddings.
    pub fn embed_texts(&self, batch: &TextBatch) -> Result<Array2<f64>> {
        let mut tape = Tape::new();
        let p = Bound::frozen(&mut tape, &self.params);
        let v = self.text_embeddings_on(&mut tape, &p, batch)?;
        Ok(tape.value(v).clone())
    }

    /// Turns raw query strings into a text batch using the configured
    /// featurizer (or the vocabulary for the self-contained variant).
    pub fn featurize(&self, texts: &[&str]) -> Result<TextBatch> {
        match (self.config.text.variant, &self.config.featurizer) {
            (TextVariant::SelfContained, _) => self.text_encoder().token_ids(texts),
            (TextVariant::Affine, Some(f)) => {
                let mut m = Array2::zeros((texts.len(), f.dim));
                for (i, t) in texts.iter().enumerate() {
                    m.row_mut(i).assign(&f.sentence(t)?.mapv(|v| v as f64));
                }
                Ok(TextBatch::Sentences(m))
            }
            (TextVariant::LstmAggregator, Some(f)) => Ok(TextBatch::Tokens(
                texts
                    .iter()
                    .map(|t| Ok(f.tokens(t)?.mapv(|v| v as f64)))
                    .collect::<Result<_>>()?,
            )),
            (_, None) => Err(Error::Invalid(
                "this model consumes precomputed text embeddings and has no featurizer for free text"
                    .into(),
            )),
        }
    }

    /// Writes `motion.menc` and `text.tenc` into `dir`.
    pub fn save(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let header = serde_json::to_value(&self.config)?;
        let mut m = ParamSet::new();
        m.extend_prefixed("motion", self.params.sub("motion"));
        m.extend_prefixed("proj_motion", self.params.sub("proj_motion"));
        let mut t = ParamSet::new();
        t.extend_prefixed("text", self.params.sub("text"));
        t.extend_prefixed("proj_text", self.params.sub("proj_text"));
        t.insert("log_tau", self.params.get("log_tau")?.clone());
        Container::from_params(header.clone(), &m).save(&dir.join(MOTION_CHECKPOINT), MOTION_MAGIC)?;
        Container::from_params(header, &t).save(&dir.join(TEXT_CHECKPOINT), TEXT_MAGIC)?;
        Ok(())
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let m = Container::load(&dir.join(MOTION_CHECKPOINT), MOTION_MAGIC)?;
        let t = Container::load(&dir.join(TEXT_CHECKPOINT), TEXT_MAGIC)?;
        if m.config != t.config {
            return Err(Error::format(
                "config",
                "motion and text checkpoints come from different models",
            ));
        }
        let config: ModelConfig = serde_json::from_value(m.config.clone())
            .map_err(|e| Error::format("config", e.to_string()))?;
        let mut params = m.to_params();
        for (k, v) in t.to_params().iter() {
            params.insert(k.clone(), v.clone());
        }
        let template = RetrievalModel::init(config.clone(), 0)?;
        crate::text::encoder::check_same_shapes(&template.params, &params)?;
        Ok(RetrievalModel { config, params })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::motion_encoder::MotionVariant;
    use crate::space::gradcheck::GradCheckConfig;

    fn model(text: TextVariant) -> RetrievalModel {
        let cfg = GradCheckConfig::small(MotionVariant::Bigru, text, LossKind::Infonce);
        RetrievalModel::init(cfg.model, 1).unwrap()
    }

    #[test]
    fn checkpoints_round_trip_at_f32() {
        let dir = tempfile::tempdir().unwrap();
        let m = model(TextVariant::SelfContained);
        m.save(dir.path()).unwrap();
        let back = RetrievalModel::load(dir.path()).unwrap();
        assert_eq!(back.config, m.config);
        for (name, v) in m.params.iter() {
            let w = back.params.get(name).unwrap();
            assert!(v.iter().zip(w).all(|(a, b)| (*a as f32) as f64 == *b), "{name}");
        }
        let again = tempfile::tempdir().unwrap();
        back.save(again.path()).unwrap();
        for f in [MOTION_CHECKPOINT, TEXT_CHECKPOINT] {
            assert_eq!(
                std::fs::read(dir.path().join(f)).unwrap(),
                std::fs::read(again.path().join(f)).unwrap()
            );
        }
    }

    #[test]
    fn mismatched_checkpoints_are_rejected() {
        let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
        model(TextVariant::Affine).save(a.path()).unwrap();
        model(TextVariant::LstmAggregator).save(b.path()).unwrap();
        std::fs::copy(b.path().join(TEXT_CHECKPOINT), a.path().join(TEXT_CHECKPOINT)).unwrap();
        assert!(RetrievalModel::load(a.path()).is_err());
    }

    #[test]
    fn config_validation() {
        let mut cfg = model(TextVariant::Affine).config;
        cfg.d_common = 1;
        assert!(cfg.validate().is_err());
        cfg.d_common = 4;
        cfg.tau_init = 0.0;
        assert!(cfg.validate().is_err());
        cfg.tau_init = 0.07;
        cfg.featurizer = Some(HashedFeaturizer::new(3, 0));
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn temperature_starts_at_tau_init() {
        let m = model(TextVariant::Affine);
        assert!((m.temperature() - m.config.tau_init).abs() < 1e-15);
    }
}
