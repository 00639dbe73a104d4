//! The three trainable text paths.
//!
//! * `lstm-aggregator`: two stacked LSTM layers over precomputed contextual
//!   token vectors; the top layer's final hidden state is the embedding.
//! * `affine`: `x·W + b` over a precomputed sentence vector.
//! * `self-contained`: a learned token table plus one LSTM layer, for runs
//!   that have no upstream embedding files at all.

use std::rc::Rc;

use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::{gaussian, init_linear, linear, Bound, ParamSet};
use crate::recurrent::{init_lstm, lstm, step_masks, StepInputs};
use crate::tape::{Tape, Var};
use crate::text::embeddings::{SentenceEmbedding, TokenEmbeddingSequence};
use crate::text::tokenize::tokenize;
use crate::text::vocab::Vocabulary;

/// Default LSTM hidden width.
pub const DEFAULT_TEXT_HIDDEN: usize = 512;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TextVariant {
    LstmAggregator,
    Affine,
    SelfContained,
}

impl std::str::FromStr for TextVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lstm-aggregator" | "lstm" => Ok(TextVariant::LstmAggregator),
            "affine" => Ok(TextVariant::Affine),
            "self-contained" => Ok(TextVariant::SelfContained),
            other => Err(Error::Invalid(format!("unknown text variant `{other}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TextEncoderConfig {
    pub variant: TextVariant,
    /// `d_tok` (lstm-aggregator), `d_sent` (affine) or the token-table width (self-contained).
    pub input_dim: usize,
    /// LSTM hidden width, or the affine output width.
    pub hidden: usize,
    /// Present only for the self-contained variant.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vocab: Option<Vocabulary>,
}

impl TextEncoderConfig {
    pub fn lstm_aggregator(d_tok: usize, hidden: usize) -> Self {
        TextEncoderConfig {
            variant: TextVariant::LstmAggregator,
            input_dim: d_tok,
            hidden,
            vocab: None,
        }
    }

    pub fn affine(d_sent: usize, d_text: usize) -> Self {
        TextEncoderConfig {
            variant: TextVariant::Affine,
            input_dim: d_sent,
            hidden: d_text,
            vocab: None,
        }
    }

    pub fn self_contained(vocab: Vocabulary, embed_dim: usize, hidden: usize) -> Self {
        TextEncoderConfig {
            variant: TextVariant::SelfContained,
            input_dim: embed_dim,
            hidden,
            vocab: Some(vocab),
        }
    }

    /// Width of the produced text embedding, `d_text`.
    pub fn output_dim(&self) -> usize {
        self.hidden
    }

    fn lstm_layers(&self) -> usize {
        match self.variant {
            TextVariant::LstmAggregator => 2,
            TextVariant::SelfContained => 1,
            TextVariant::Affine => 0,
        }
    }
}

/// A batch of text inputs in the form the configured variant consumes.
#[derive(Clone, Debug)]
pub enum TextBatch {
    /// Per-caption `L×d_tok` token vectors.
    Tokens(Vec<Array2<f64>>),
    /// `B×d_sent` sentence vectors.
    Sentences(Array2<f64>),
    /// Per-caption vocabulary ids.
    TokenIds(Vec<Vec<usize>>),
}

impl TextBatch {
    pub fn len(&self) -> usize {
        match self {
            TextBatch::Tokens(t) => t.len(),
            TextBatch::Sentences(s) => s.nrows(),
            TextBatch::TokenIds(t) => t.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// The sub-batch at `items`, in that order.
    pub fn select(&self, items: &[usize]) -> TextBatch {
        match self {
            TextBatch::Tokens(t) => TextBatch::Tokens(items.iter().map(|&i| t[i].clone()).collect()),
            TextBatch::Sentences(s) => TextBatch::Sentences(s.select(ndarray::Axis(0), items)),
            TextBatch::TokenIds(t) => TextBatch::TokenIds(items.iter().map(|&i| t[i].clone()).collect()),
        }
    }

    pub fn from_token_records(records: &[&TokenEmbeddingSequence]) -> Self {
        TextBatch::Tokens(records.iter().map(|r| r.vectors.mapv(|v| v as f64)).collect())
    }

    pub fn from_sentence_records(records: &[&SentenceEmbedding]) -> Result<Self> {
        let d = records.first().map_or(0, |r| r.vector.len());
        let mut m = Array2::zeros((records.len(), d));
        for (i, r) in records.iter().enumerate() {
            if r.vector.len() != d {
                return Err(Error::Shape(format!(
                    "sentence `{}` has width {}, expected {d}",
                    r.caption_id,
                    r.vector.len()
                )));
            }
            m.row_mut(i).assign(&r.vector.mapv(|v| v as f64));
        }
        Ok(TextBatch::Sentences(m))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TextEncoder {
    pub config: TextEncoderConfig,
    pub params: ParamSet,
}

impl TextEncoder {
    pub fn init(config: TextEncoderConfig, rng: &mut impl Rng) -> Result<Self> {
        let mut ps = ParamSet::new();
        match config.variant {
            TextVariant::Affine => init_linear(&mut ps, rng, "affine", config.input_dim, config.hidden),
            TextVariant::LstmAggregator => {
                init_lstm(&mut ps, rng, "lstm0", config.input_dim, config.hidden);
                init_lstm(&mut ps, rng, "lstm1", config.hidden, config.hidden);
            }
            TextVariant::SelfContained => {
                let vocab = config.vocab.as_ref().ok_or_else(|| {
                    Error::Invalid("self-contained text encoder needs a vocabulary".into())
                })?;
                ps.insert("embed", gaussian(rng, vocab.len(), config.input_dim, 0.3));
                init_lstm(&mut ps, rng, "lstm0", config.input_dim, config.hidden);
            }
        }
        Ok(TextEncoder { config, params: ps })
    }

    /// Checks that `params` has exactly the shapes `config` implies.
    pub fn from_parts(config: TextEncoderConfig, params: ParamSet) -> Result<Self> {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0);
        let template = TextEncoder::init(config.clone(), &mut rng)?;
        check_same_shapes(&template.params, &params)?;
        Ok(TextEncoder { config, params })
    }

    /// Records the encoder on `tape` and returns the `B×d_text` output.
    pub fn forward(&self, tape: &mut Tape, p: &Bound, batch: &TextBatch) -> Result<Var> {
        forward(&self.config, tape, p, batch)
    }

    /// Inference without gradients.
    pub fn encode(&self, batch: &TextBatch) -> Result<Array2<f64>> {
        let mut tape = Tape::new();
        let p = Bound::frozen(&mut tape, &self.params);
        let out = self.forward(&mut tape, &p, batch)?;
        Ok(tape.value(out).clone())
    }

    /// Converts raw text to the id batch of the self-contained variant.
    pub fn token_ids(&self, texts: &[&str]) -> Result<TextBatch> {
        let vocab = self
            .config
            .vocab
            .as_ref()
            .ok_or_else(|| Error::Invalid("encoder has no vocabulary".into()))?;
        Ok(TextBatch::TokenIds(
            texts
                .iter()
                .map(|t| Ok(vocab.ids(&tokenize(t)?)))
                .collect::<Result<_>>()?,
        ))
    }
}

pub(crate) fn check_same_shapes(template: &ParamSet, params: &ParamSet) -> Result<()> {
    for (name, t) in template.iter() {
        let got = params.get(name)?;
        if got.dim() != t.dim() {
            return Err(Error::Shape(format!(
                "parameter `{name}` is {:?}, expected {:?}",
                got.dim(),
                t.dim()
            )));
        }
    }
    if let Some(extra) = params.names().find(|n| !template.contains(n)) {
        return Err(Error::Invalid(format!("unexpected parameter `{extra}`")));
    }
    Ok(())
}

/// Packs variable-length rows time-major: row `t·B + b` is step `t` of item `b`
/// (zeros past the item's end).
fn stack_time_major(seqs: &[Array2<f64>], width: usize) -> (Array2<f64>, Vec<usize>, usize) {
    let lengths: Vec<usize> = seqs.iter().map(|s| s.nrows()).collect();
    let steps = lengths.iter().copied().max().unwrap_or(0);
    let b = seqs.len();
    let mut out = Array2::zeros((steps * b, width));
    for (i, s) in seqs.iter().enumerate() {
        for t in 0..s.nrows() {
            out.row_mut(t * b + i).assign(&s.row(t));
        }
    }
    (out, lengths, steps)
}

fn forward(cfg: &TextEncoderConfig, tape: &mut Tape, p: &Bound, batch: &TextBatch) -> Result<Var> {
    if batch.is_empty() {
        return Err(Error::Invalid("empty text batch".into()));
    }
    match (cfg.variant, batch) {
        (TextVariant::Affine, TextBatch::Sentences(s)) => {
            if s.ncols() != cfg.input_dim {
                return Err(Error::Shape(format!(
                    "sentence width {} does not match encoder input {}",
                    s.ncols(),
                    cfg.input_dim
                )));
            }
            let x = tape.constant(s.clone());
            Ok(linear(tape, p, "affine", x))
        }
        (TextVariant::LstmAggregator, TextBatch::Tokens(seqs)) => {
            for s in seqs {
                if s.ncols() != cfg.input_dim {
                    return Err(Error::Shape(format!(
                        "d_tok {} does not match encoder input {}",
                        s.ncols(),
                        cfg.input_dim
                    )));
                }
                if s.nrows() == 0 {
                    return Err(Error::Invalid("token sequence with L = 0".into()));
                }
            }
            let (stacked, lengths, steps) = stack_time_major(seqs, cfg.input_dim);
            let b = seqs.len();
            let masks = step_masks(&lengths, steps);
            let rows = tape.constant(stacked);
            let mut inputs = StepInputs::Stacked { rows, batch: b };
            let mut last = None;
            for layer in 0..cfg.lstm_layers() {
                let hs = lstm(tape, p, &format!("lstm{layer}"), &inputs, &masks, b);
                last = hs.last().copied();
                inputs = StepInputs::PerStep(hs);
            }
            Ok(last.expect("at least one step"))
        }
        (TextVariant::SelfContained, TextBatch::TokenIds(ids)) => {
            let vocab_len = cfg.vocab.as_ref().map_or(0, |v| v.len());
            if ids.iter().any(|s| s.is_empty()) {
                return Err(Error::Invalid("token id sequence is empty".into()));
            }
            if let Some(bad) = ids.iter().flatten().find(|&&i| i >= vocab_len) {
                return Err(Error::Shape(format!("token id {bad} outside vocabulary of {vocab_len}")));
            }
            let b = ids.len();
            let lengths: Vec<usize> = ids.iter().map(Vec::len).collect();
            let steps = *lengths.iter().max().expect("non-empty");
            // Padding positions look up the OOV row; their updates are masked out.
            let mut gather = vec![0usize; steps * b];
            for (i, s) in ids.iter().enumerate() {
                for (t, &id) in s.iter().enumerate() {
                    gather[t * b + i] = id;
                }
            }
            let rows = tape.gather_rows(p.var("embed"), Rc::from(gather));
            let masks = step_masks(&lengths, steps);
            let inputs = StepInputs::Stacked { rows, batch: b };
            let hs = lstm(tape, p, "lstm0", &inputs, &masks, b);
            Ok(*hs.last().expect("at least one step"))
        }
        (variant, _) => Err(Error::Invalid(format!(
            "text batch kind does not match encoder variant {variant:?}"
        ))),
    }
}

fn first_row(m: Array2<f64>) -> Array1<f64> {
    m.row(0).to_owned()
}

/// Final top-layer hidden state of the two-layer LSTM aggregator.
pub fn encode_lstm_aggregator(tokens: &TokenEmbeddingSequence, enc: &TextEncoder) -> Result<Array1<f64>> {
    if enc.config.variant != TextVariant::LstmAggregator {
        return Err(Error::Invalid("encoder is not an lstm-aggregator".into()));
    }
    enc.encode(&TextBatch::from_token_records(&[tokens])).map(first_row)
}

/// `x·W + b` for one sentence vector.
pub fn encode_affine(sent: &SentenceEmbedding, enc: &TextEncoder) -> Result<Array1<f64>> {
    if enc.config.variant != TextVariant::Affine {
        return Err(Error::Invalid("encoder is not affine".into()));
    }
    enc.encode(&TextBatch::from_sentence_records(&[sent])?).map(first_row)
}

/// Tokenize → vocabulary lookup (OOV to id 0) → embedding table → LSTM.
pub fn encode_self_contained(text: &str, enc: &TextEncoder) -> Result<Array1<f64>> {
    if enc.config.variant != TextVariant::SelfContained {
        return Err(Error::Invalid("encoder is not self-contained".into()));
    }
    enc.encode(&enc.token_ids(&[text])?).map(first_row)
}
