//! Strategies and checks shared by the property tests and the acceptance run.

#![allow(dead_code)]

use ndarray::{Array1, Array2, Array3};
use proptest::prelude::*;
use proptest::test_runner::TestCaseError;

use motret::container::{Container, MOTION_MAGIC, TEXT_MAGIC};
use motret::data::SkeletonSequence;
use motret::eval::{Provenance, RelevanceMatrix};
use motret::index::EmbeddingStore;
use motret::text::embeddings::{decode_sentence_file, decode_token_file, encode_sentence_file, encode_token_file};
use motret::text::{SentenceEmbedding, TokenEmbeddingSequence};

/// Any finite `f32`, subnormals and signed zeros included.
pub fn finite_f32() -> impl Strategy<Value = f32> {
    use proptest::num::f32::{NEGATIVE, NORMAL, POSITIVE, SUBNORMAL, ZERO};
    POSITIVE | NEGATIVE | NORMAL | SUBNORMAL | ZERO
}

pub fn id() -> impl Strategy<Value = String> {
    "[a-zA-Z0-9_.-]{1,12}"
}

fn unique_ids(n: usize) -> impl Strategy<Value = Vec<String>> {
    prop::collection::hash_set(id(), n).prop_map(|s| {
        let mut v: Vec<String> = s.into_iter().collect();
        v.sort();
        v
    })
}

pub fn motion() -> impl Strategy<Value = SkeletonSequence> {
    (1usize..6, 1usize..8, 0.5f32..240.0, id()).prop_flat_map(|(t, j, fps, name)| {
        prop::collection::vec(finite_f32(), t * j * 9).prop_map(move |v| {
            let frames = Array3::from_shape_vec((t, j, 9), v).unwrap();
            SkeletonSequence::new(name.clone(), frames, fps).unwrap()
        })
    })
}

pub fn token_records() -> impl Strategy<Value = Vec<TokenEmbeddingSequence>> {
    (1usize..5, 1usize..6).prop_flat_map(|(n, d)| {
        (
            unique_ids(n),
            prop::collection::vec((1usize..5).prop_flat_map(move |l| prop::collection::vec(finite_f32(), l * d)), n),
        )
            .prop_map(move |(ids, data)| {
                ids.into_iter()
                    .zip(data)
                    .map(|(id, v)| {
                        let l = v.len() / d;
                        TokenEmbeddingSequence::new(id, Array2::from_shape_vec((l, d), v).unwrap()).unwrap()
                    })
                    .collect()
            })
    })
}

pub fn sentence_records() -> impl Strategy<Value = Vec<SentenceEmbedding>> {
    (1usize..6, 1usize..8).prop_flat_map(|(n, d)| {
        (unique_ids(n), prop::collection::vec(prop::collection::vec(finite_f32(), d), n)).prop_map(|(ids, data)| {
            ids.into_iter()
                .zip(data)
                .map(|(caption_id, v)| SentenceEmbedding {
                    caption_id,
                    vector: Array1::from(v),
                })
                .collect()
        })
    })
}

pub fn container() -> impl Strategy<Value = Container> {
    let tensor = (id(), 1usize..4, 1usize..5).prop_flat_map(|(name, r, c)| {
        prop::collection::vec(finite_f32(), r * c).prop_map(move |data| motret::container::NamedTensor {
            name: name.clone(),
            rows: r,
            cols: c,
            data,
        })
    });
    (prop::collection::vec(tensor, 0..5), id(), -1000i64..1000).prop_map(|(mut tensors, key, value)| {
        let mut seen = std::collections::HashSet::new();
        tensors.retain(|t| seen.insert(t.name.clone()));
        Container {
            config: serde_json::json!({ key: value, "nested": { "list": [1, 2.5, "x"] } }),
            tensors,
        }
    })
}

pub fn store() -> impl Strategy<Value = EmbeddingStore> {
    (1usize..8, 0usize..8).prop_flat_map(|(d, n)| {
        (unique_ids(n), prop::collection::vec(prop::collection::vec(-1.0f64..1.0, d), n)).prop_filter_map(
            "zero vector",
            move |(ids, vs)| EmbeddingStore::build(d, ids.into_iter().zip(vs)).ok(),
        )
    })
}

pub fn relevance() -> impl Strategy<Value = RelevanceMatrix> {
    (1usize..6, 1usize..6, 0usize..3).prop_flat_map(|(q, m, p)| {
        let values = prop::collection::vec(
            prop_oneof![Just(0.0f32), 0.0f32..1.0, Just(1.0), finite_f32().prop_map(f32::abs)],
            q * m,
        );
        (unique_ids(q), unique_ids(m), values).prop_map(move |(qs, ms, v)| {
            let prov = [Provenance::ExternalSpice, Provenance::ExternalSpacy, Provenance::Lexical][p];
            RelevanceMatrix::new(prov, qs, ms, Array2::from_shape_vec((q, m), v).unwrap()).unwrap()
        })
    })
}

fn same(a: &[u8], b: &[u8], what: &str) -> Result<(), TestCaseError> {
    prop_assert!(a == b, "{what}: re-encoded bytes differ");
    Ok(())
}

pub fn check_motion(m: &SkeletonSequence) -> Result<(), TestCaseError> {
    let bytes = m.encode();
    let back = SkeletonSequence::decode(m.motion_id.clone(), &bytes).map_err(|e| TestCaseError::fail(e.to_string()))?;
    prop_assert_eq!(back.frames.mapv(f32::to_bits), m.frames.mapv(f32::to_bits));
    prop_assert_eq!(back.fps.to_bits(), m.fps.to_bits());
    same(&back.encode(), &bytes, "MOTR")
}

pub fn check_tokens(r: &[TokenEmbeddingSequence]) -> Result<(), TestCaseError> {
    let bytes = encode_token_file(r).unwrap();
    let back = decode_token_file(&bytes).map_err(|e| TestCaseError::fail(e.to_string()))?;
    prop_assert_eq!(back.len(), r.len());
    for (a, b) in back.iter().zip(r) {
        prop_assert_eq!(&a.caption_id, &b.caption_id);
        prop_assert_eq!(a.vectors.mapv(f32::to_bits), b.vectors.mapv(f32::to_bits));
    }
    same(&encode_token_file(&back).unwrap(), &bytes, "TOKE")
}

pub fn check_sentences(r: &[SentenceEmbedding]) -> Result<(), TestCaseError> {
    let bytes = encode_sentence_file(r).unwrap();
    let back = decode_sentence_file(&bytes).map_err(|e| TestCaseError::fail(e.to_string()))?;
    prop_assert_eq!(back.len(), r.len());
    for (a, b) in back.iter().zip(r) {
        prop_assert_eq!(&a.caption_id, &b.caption_id);
        prop_assert_eq!(a.vector.mapv(f32::to_bits), b.vector.mapv(f32::to_bits));
    }
    same(&encode_sentence_file(&back).unwrap(), &bytes, "SENT")
}

pub fn check_container(c: &Container) -> Result<(), TestCaseError> {
    for magic in [MOTION_MAGIC, TEXT_MAGIC] {
        let bytes = c.encode(magic).unwrap();
        let back = Container::decode(&bytes, magic).map_err(|e| TestCaseError::fail(e.to_string()))?;
        prop_assert_eq!(&back.config, &c.config);
        for (a, b) in back.tensors.iter().zip(&c.tensors) {
            prop_assert_eq!((&a.name, a.rows, a.cols), (&b.name, b.rows, b.cols));
            prop_assert!(a.data.iter().zip(&b.data).all(|(x, y)| x.to_bits() == y.to_bits()));
        }
        prop_assert_eq!(back.tensors.len(), c.tensors.len());
        same(&back.encode(magic).unwrap(), &bytes, "container")?;
    }
    Ok(())
}

pub fn check_store(s: &EmbeddingStore) -> Result<(), TestCaseError> {
    let bytes = s.encode().unwrap();
    let back = EmbeddingStore::decode(&bytes).map_err(|e| TestCaseError::fail(e.to_string()))?;
    prop_assert_eq!(back.ids(), s.ids());
    for i in 0..s.len() {
        prop_assert!(back.vector(i).iter().zip(s.vector(i)).all(|(a, b)| a.to_bits() == b.to_bits()));
    }
    same(&back.encode().unwrap(), &bytes, "MIDX")
}

pub fn check_relevance(m: &RelevanceMatrix) -> Result<(), TestCaseError> {
    let (bytes, side) = m.encode_with_sidecar().unwrap();
    let back = RelevanceMatrix::decode(&bytes, &side).map_err(|e| TestCaseError::fail(e.to_string()))?;
    prop_assert_eq!(back.provenance, m.provenance);
    prop_assert_eq!(&back.query_ids, &m.query_ids);
    prop_assert_eq!(&back.item_ids, &m.item_ids);
    prop_assert_eq!(back.values.mapv(f32::to_bits), m.values.mapv(f32::to_bits));
    let (b2, s2) = back.encode_with_sidecar().unwrap();
    same(&b2, &bytes, "RELV")?;
    same(&s2, &side, "RELV sidecar")
}
