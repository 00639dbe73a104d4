//! Deterministic stand-ins for upstream text backbones.
//!
//! Every token maps to a fixed pseudo-random Gaussian vector derived from a
//! stable hash of the token and a seed. Sentence vectors are the normalized
//! mean of their token vectors. This lets the whole pipeline, including
//! free-text queries, run without any pretrained model files.

use ndarray::{Array1, Array2};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::CaptionRecord;
use crate::error::Result;
use crate::params::rand_distr_free::normal;
use crate::text::embeddings::{SentenceEmbedding, TokenEmbeddingSequence};
use crate::text::tokenize::tokenize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HashedFeaturizer {
    pub dim: usize,
    pub seed: u64,
}

fn fnv1a(s: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in s.as_bytes() {
        h ^= *b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

impl HashedFeaturizer {
    pub fn new(dim: usize, seed: u64) -> Self {
        HashedFeaturizer { dim, seed }
    }

    pub fn token_vector(&self, token: &str) -> Array1<f32> {
        let mut rng = ChaCha8Rng::seed_from_u64(fnv1a(token) ^ self.seed.rotate_left(17));
        let scale = 1.0 / (self.dim as f64).sqrt();
        Array1::from_shape_fn(self.dim, |_| (normal(&mut rng) * scale) as f32)
    }

    pub fn tokens(&self, text: &str) -> Result<Array2<f32>> {
        let toks = tokenize(text)?;
        let mut out = Array2::zeros((toks.len(), self.dim));
        for (i, t) in toks.iter().enumerate() {
            out.row_mut(i).assign(&self.token_vector(t));
        }
        Ok(out)
    }

    pub fn sentence(&self, text: &str) -> Result<Array1<f32>> {
        let toks = self.tokens(text)?;
        let mean = toks.mapv(|v| v as f64).mean_axis(ndarray::Axis(0)).expect("L ≥ 1");
        let norm = mean.dot(&mean).sqrt();
        let norm = if norm > 0.0 { norm } else { 1.0 };
        Ok(mean.mapv(|v| (v / norm) as f32))
    }

    pub fn sentence_records(&self, captions: &[CaptionRecord]) -> Result<Vec<SentenceEmbedding>> {
        captions
            .iter()
            .map(|c| {
                Ok(SentenceEmbedding {
                    caption_id: c.caption_id.clone(),
                    vector: self.sentence(&c.text)?,
                })
            })
            .collect()
    }

    pub fn token_records(&self, captions: &[CaptionRecord]) -> Result<Vec<TokenEmbeddingSequence>> {
        captions
            .iter()
            .map(|c| TokenEmbeddingSequence::new(c.caption_id.clone(), self.tokens(&c.text)?))
            .collect()
    }
}
