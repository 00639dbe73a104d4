//! Glue between datasets, text inputs and a [`RetrievalModel`]: batching,
//! encoding whole collections and running the evaluation protocol.

use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use crate::data::{aggregate_body_parts, pad_and_mask, CaptionRecord, Dataset, PaddedBatch, Split};
use crate::error::{Error, Result};
use crate::eval::{
    dedupe_queries, evaluate_protocol, lexical_relevance_matrix, GroundTruth, MetricsReport, Query,
    RelevanceMatrix, DEFAULT_KS,
};
use crate::index::EmbeddingStore;
use crate::space::{PairBatch, RetrievalModel};
use crate::text::embeddings::{load_sentence_file, load_token_file};
use crate::text::{normalize, SentenceEmbedding, TextBatch, TokenEmbeddingSequence, TextVariant};

/// Items encoded per forward pass when embedding a whole collection.
pub const ENCODE_CHUNK: usize = 64;

/// Where caption inputs come from.
#[derive(Clone, Debug)]
pub enum TextInputs {
    /// Raw caption text through the model's featurizer or vocabulary.
    Free,
    /// Precomputed sentence vectors by caption id.
    Sentences(HashMap<String, SentenceEmbedding>),
    /// Precomputed token vectors by caption id.
    Tokens(HashMap<String, TokenEmbeddingSequence>),
}

impl TextInputs {
    pub fn sentences(records: Vec<SentenceEmbedding>) -> Self {
        TextInputs::Sentences(records.into_iter().map(|r| (r.caption_id.clone(), r)).collect())
    }

    pub fn tokens(records: Vec<TokenEmbeddingSequence>) -> Self {
        TextInputs::Tokens(records.into_iter().map(|r| (r.caption_id.clone(), r)).collect())
    }

    pub fn load_sentences(path: &Path) -> Result<Self> {
        Ok(TextInputs::sentences(load_sentence_file(path)?))
    }

    pub fn load_tokens(path: &Path) -> Result<Self> {
        Ok(TextInputs::tokens(load_token_file(path)?))
    }

    /// Width of the precomputed vectors, if any.
    pub fn width(&self) -> Option<usize> {
        match self {
            TextInputs::Free => None,
            TextInputs::Sentences(m) => m.values().next().map(|r| r.vector.len()),
            TextInputs::Tokens(m) => m.values().next().map(|r| r.dim()),
        }
    }
}

fn lookup<'a, T>(map: &'a HashMap<String, T>, id: &str) -> Result<&'a T> {
    map.get(id)
        .ok_or_else(|| Error::UnknownId(format!("no text embedding for caption `{id}`")))
}

/// Text batch for `captions`, in order.
pub fn caption_batch(
    model: &RetrievalModel,
    inputs: &TextInputs,
    captions: &[CaptionRecord],
) -> Result<TextBatch> {
    let variant = model.config.text.variant;
    match (inputs, variant) {
        (TextInputs::Free, _) => {
            let texts: Vec<&str> = captions.iter().map(|c| c.text.as_str()).collect();
            model.featurize(&texts)
        }
        (TextInputs::Sentences(m), TextVariant::Affine) => {
            let recs = captions
                .iter()
                .map(|c| lookup(m, &c.caption_id))
                .collect::<Result<Vec<_>>>()?;
            TextBatch::from_sentence_records(&recs)
        }
        (TextInputs::Tokens(m), TextVariant::LstmAggregator) => {
            let recs = captions
                .iter()
                .map(|c| lookup(m, &c.caption_id))
                .collect::<Result<Vec<_>>>()?;
            Ok(TextBatch::from_token_records(&recs))
        }
        (TextInputs::Sentences(_), v) | (TextInputs::Tokens(_), v) => Err(Error::Invalid(format!(
            "the {v:?} text encoder cannot consume these precomputed embeddings"
        ))),
    }
}

/// Aggregated, center-cropped and padded batch of the given motions.
pub fn motion_batch(dataset: &Dataset, ids: &[String], max_len: usize) -> Result<PaddedBatch> {
    let seqs = ids
        .iter()
        .map(|id| {
            let seq = dataset.motions.get(id).ok_or_else(|| Error::UnknownId(id.clone()))?;
            aggregate_body_parts(seq, &dataset.topology)
        })
        .collect::<Result<Vec<_>>>()?;
    pad_and_mask(&seqs, max_len)
}

/// One training pair per caption of the split.
pub fn training_pairs(
    model: &RetrievalModel,
    dataset: &Dataset,
    split: Split,
    inputs: &TextInputs,
) -> Result<PairBatch> {
    let (_, captions) = dataset.split(split);
    if captions.is_empty() {
        return Err(Error::Invalid(format!("split {split:?} has no captions")));
    }
    let ids: Vec<String> = captions.iter().map(|c| c.motion_id.clone()).collect();
    Ok(PairBatch {
        motions: motion_batch(dataset, &ids, model.config.motion.max_len)?.trimmed(),
        texts: caption_batch(model, inputs, &captions)?,
    })
}

/// Common-space embeddings of `ids`, as an index.
pub fn encode_motions(model: &RetrievalModel, dataset: &Dataset, ids: &[String]) -> Result<EmbeddingStore> {
    let mut rows = Vec::with_capacity(ids.len());
    for chunk in ids.chunks(ENCODE_CHUNK) {
        let batch = motion_batch(dataset, chunk, model.config.motion.max_len)?.trimmed();
        let e = model.embed_motions(&batch)?;
        for (id, r) in chunk.iter().zip(e.rows()) {
            rows.push((id.clone(), r.to_vec()));
        }
    }
    EmbeddingStore::build(model.config.d_common, rows)
}

/// Common-space embeddings of `captions`, in order.
pub fn encode_captions(
    model: &RetrievalModel,
    inputs: &TextInputs,
    captions: &[CaptionRecord],
) -> Result<Vec<Query>> {
    let mut out = Vec::with_capacity(captions.len());
    for chunk in captions.chunks(ENCODE_CHUNK) {
        let e = model.embed_texts(&caption_batch(model, inputs, chunk)?)?;
        for (c, r) in chunk.iter().zip(e.rows()) {
            out.push(Query {
                caption_id: c.caption_id.clone(),
                embedding: r.to_vec(),
            });
        }
    }
    Ok(out)
}

/// Common-space embedding of one free-text query.
pub fn encode_text(model: &RetrievalModel, text: &str) -> Result<Vec<f64>> {
    let e = model.embed_texts(&model.featurize(&[text])?)?;
    Ok(e.row(0).to_vec())
}

/// Deduplicated queries of a split and their ground truth: every motion
/// of the split carrying a caption with the same normalized text.
pub fn split_queries(dataset: &Dataset, split: Split) -> (Vec<String>, Vec<CaptionRecord>, GroundTruth) {
    let (motion_ids, captions) = dataset.split(split);
    let queries = dedupe_queries(&captions);
    let mut by_text: BTreeMap<String, Vec<&str>> = BTreeMap::new();
    for c in &captions {
        let key = normalize(&c.text).unwrap_or_else(|_| c.text.clone());
        by_text.entry(key).or_default().push(&c.motion_id);
    }
    let mut gt = GroundTruth::default();
    for q in &queries {
        let key = normalize(&q.text).unwrap_or_else(|_| q.text.clone());
        for m in &by_text[&key] {
            gt.insert(&q.caption_id, m);
        }
    }
    (motion_ids, queries, gt)
}

/// Encodes a split and scores it against itself. `lexical` appends the
/// built-in relevance proxy to `relevance`.
pub fn evaluate_split(
    model: &RetrievalModel,
    dataset: &Dataset,
    split: Split,
    inputs: &TextInputs,
    relevance: &[RelevanceMatrix],
    lexical: bool,
) -> Result<MetricsReport> {
    let (motion_ids, queries, gt) = split_queries(dataset, split);
    if queries.is_empty() {
        return Err(Error::Invalid(format!("split {split:?} has no captions")));
    }
    let store = encode_motions(model, dataset, &motion_ids)?;
    let encoded = encode_captions(model, inputs, &queries)?;
    let mut rels = relevance.to_vec();
    if lexical {
        let (_, captions) = dataset.split(split);
        rels.push(lexical_relevance_matrix(&queries, &motion_ids, &captions)?);
    }
    evaluate_protocol(&encoded, &store, &gt, &rels, &DEFAULT_KS)
}
