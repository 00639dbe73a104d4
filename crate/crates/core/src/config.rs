//! JSON training configuration.
//!
//! Every field has a default, so `{}` is a valid file:
//!
//! ```json
//! {
//!   "motion": { "variant": "mot", "model_dim": 128, "depth": 4, "mot_ffn": 256, "max_len": 200 },
//!   "text": { "variant": "affine", "featurizer_dim": 64 },
//!   "d_common": 256,
//!   "loss": "infonce",
//!   "margin": 0.2,
//!   "tau_init": 0.07,
//!   "adam": { "lr": 0.0001, "beta1": 0.9, "beta2": 0.999, "eps": 1e-8 },
//!   "batch_size": 32,
//!   "steps": 1000,
//!   "epochs": null,
//!   "seed": 0,
//!   "standardize": true
//! }
//! ```
//!
//! Text inputs come from `text.sentences` (a `SENT` file, affine variant),
//! `text.tokens` (a `TOKE` file, LSTM aggregator) or, when neither is set,
//! from a hashed featurizer of width `featurizer_dim`. The self-contained
//! variant builds its vocabulary from the training captions.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::codec::read_file;
use crate::data::{Dataset, FeatureStats, Split};
use crate::error::{Error, Result};
use crate::motion_encoder::{MotionEncoderConfig, MotionVariant};
use crate::pipeline::{motion_batch, TextInputs};
use crate::space::{AdamConfig, LossKind, ModelConfig, RetrievalModel, Schedule, DEFAULT_COMMON_DIM};
use crate::space::{DEFAULT_MARGIN, DEFAULT_TEMPERATURE};
use crate::text::{HashedFeaturizer, TextEncoderConfig, TextVariant, Vocabulary};

pub const CONFIG_ENV: &str = "MOTRET_CONFIG";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TextSpec {
    pub variant: TextVariant,
    /// Output width of the text encoder before projection.
    pub hidden: usize,
    /// Word-embedding width of the self-contained variant.
    pub embed_dim: usize,
    pub featurizer_dim: usize,
    pub featurizer_seed: u64,
    pub sentences: Option<PathBuf>,
    pub tokens: Option<PathBuf>,
}

impl Default for TextSpec {
    fn default() -> Self {
        TextSpec {
            variant: TextVariant::Affine,
            hidden: 256,
            embed_dim: 64,
            featurizer_dim: 64,
            featurizer_seed: 0,
            sentences: None,
            tokens: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub motion: MotionEncoderConfig,
    pub text: TextSpec,
    pub d_common: usize,
    pub l2_normalize: bool,
    pub loss: LossKind,
    pub margin: f64,
    pub tau_init: f64,
    pub adam: AdamConfig,
    pub batch_size: usize,
    pub steps: u64,
    /// When set, overrides `steps` with this many passes over the pairs.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epochs: Option<u64>,
    pub seed: u64,
    /// Standardize motion features with training-split statistics.
    pub standardize: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            motion: MotionEncoderConfig::new(MotionVariant::Mot),
            text: TextSpec::default(),
            d_common: DEFAULT_COMMON_DIM,
            l2_normalize: true,
            loss: LossKind::Infonce,
            margin: DEFAULT_MARGIN,
            tau_init: DEFAULT_TEMPERATURE,
            adam: AdamConfig::default(),
            batch_size: 32,
            steps: 1000,
            epochs: None,
            seed: 0,
            standardize: true,
        }
    }
}

impl TrainConfig {
    pub fn from_json(bytes: &[u8]) -> Result<Self> {
        serde_json::from_slice(bytes).map_err(|e| Error::format("config", e.to_string()))
    }

    /// Reads `path`; relative text-embedding paths are resolved against the
    /// file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let mut cfg = TrainConfig::from_json(&read_file(path)?)?;
        let root = path.parent().unwrap_or(Path::new("."));
        for p in [&mut cfg.text.sentences, &mut cfg.text.tokens].into_iter().flatten() {
            if p.is_relative() {
                *p = root.join(&*p);
            }
        }
        Ok(cfg)
    }

    /// Optimizer schedule for `n_pairs` training pairs.
    pub fn schedule(&self, n_pairs: usize) -> Schedule {
        let steps = match self.epochs {
            Some(e) => e * n_pairs.div_ceil(self.batch_size.max(1)) as u64,
            None => self.steps,
        };
        Schedule {
            batch_size: self.batch_size,
            steps,
        }
    }

    /// Loads the configured text inputs.
    pub fn text_inputs(&self) -> Result<TextInputs> {
        match (&self.text.sentences, &self.text.tokens) {
            (Some(_), Some(_)) => Err(Error::Invalid(
                "set at most one of text.sentences and text.tokens".into(),
            )),
            (Some(p), None) => TextInputs::load_sentences(p),
            (None, Some(p)) => TextInputs::load_tokens(p),
            (None, None) => Ok(TextInputs::Free),
        }
    }

    /// The model configuration implied by this file, the text inputs and
    /// (for the self-contained variant) the training captions.
    pub fn model_config(&self, dataset: &Dataset, inputs: &TextInputs) -> Result<ModelConfig> {
        let t = &self.text;
        let width = inputs.width();
        let featurizer = match (inputs, t.variant) {
            (TextInputs::Free, TextVariant::Affine | TextVariant::LstmAggregator) => {
                Some(HashedFeaturizer::new(t.featurizer_dim, t.featurizer_seed))
            }
            _ => None,
        };
        let text = match t.variant {
            TextVariant::Affine => TextEncoderConfig::affine(width.unwrap_or(t.featurizer_dim), t.hidden),
            TextVariant::LstmAggregator => {
                TextEncoderConfig::lstm_aggregator(width.unwrap_or(t.featurizer_dim), t.hidden)
            }
            TextVariant::SelfContained => {
                let (_, captions) = dataset.split(Split::Train);
                let vocab = Vocabulary::build(captions.iter().map(|c| c.text.as_str()));
                TextEncoderConfig::self_contained(vocab, t.embed_dim, t.hidden)
            }
        };
        let mut cfg = ModelConfig {
            motion: self.motion.clone(),
            text,
            d_common: self.d_common,
            l2_normalize: self.l2_normalize,
            loss: self.loss,
            margin: self.margin,
            tau_init: self.tau_init,
            featurizer,
            feature_stats: None,
        };
        if self.standardize {
            let (ids, _) = dataset.split(Split::Train);
            if ids.is_empty() {
                return Err(Error::Invalid("standardization needs a non-empty train split".into()));
            }
            let batch = motion_batch(dataset, &ids, cfg.motion.max_len)?;
            cfg.feature_stats = Some(FeatureStats::fit(&batch)?);
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn init_model(&self, dataset: &Dataset, inputs: &TextInputs) -> Result<RetrievalModel> {
        RetrievalModel::init(self.model_config(dataset, inputs)?, self.seed)
    }
}
