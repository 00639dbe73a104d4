//! Precomputed text embeddings and their file formats.
//!
//! Token embeddings (`TOKE`):
//! ```text
//! "TOKE"  u32 count  u32 d_tok
//! count × { u16 id_len  id  u32 L  f32[L*d_tok] }
//! ```
//!
//! Sentence embeddings (`SENT`):
//! ```text
//! "SENT"  u32 count  u32 d_sent
//! count × { u16 id_len  id  f32[d_sent] }
//! ```

use std::path::Path;

use ndarray::{Array1, Array2};

use crate::codec::{check_finite, read_file, write_file, Reader, Writer};
use crate::error::{Error, Result};

pub const TOKEN_MAGIC: &[u8; 4] = b"TOKE";
pub const SENTENCE_MAGIC: &[u8; 4] = b"SENT";

#[derive(Clone, Debug, PartialEq)]
pub struct TokenEmbeddingSequence {
    pub caption_id: String,
    /// `L × d_tok`
    pub vectors: Array2<f32>,
}

impl TokenEmbeddingSequence {
    pub fn new(caption_id: impl Into<String>, vectors: Array2<f32>) -> Result<Self> {
        if vectors.nrows() == 0 {
            return Err(Error::Invalid("token sequence needs L ≥ 1".into()));
        }
        if vectors.iter().any(|v| !v.is_finite()) {
            return Err(Error::Invalid("token embedding has a non-finite value".into()));
        }
        Ok(TokenEmbeddingSequence {
            caption_id: caption_id.into(),
            vectors,
        })
    }

    pub fn len(&self) -> usize {
        self.vectors.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dim(&self) -> usize {
        self.vectors.ncols()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SentenceEmbedding {
    pub caption_id: String,
    pub vector: Array1<f32>,
}

pub fn encode_token_file(records: &[TokenEmbeddingSequence]) -> Result<Vec<u8>> {
    let d = records.first().map_or(0, |r| r.dim());
    let mut w = Writer::new(TOKEN_MAGIC);
    w.u32(records.len() as u32);
    w.u32(d as u32);
    for r in records {
        if r.dim() != d {
            return Err(Error::Shape(format!(
                "caption `{}` has d_tok {} but file uses {d}",
                r.caption_id,
                r.dim()
            )));
        }
        w.short_str(&r.caption_id)?;
        w.u32(r.len() as u32);
        w.f32s(r.vectors.as_standard_layout().as_slice().expect("standard layout"));
    }
    Ok(w.finish())
}

pub fn decode_token_file(bytes: &[u8]) -> Result<Vec<TokenEmbeddingSequence>> {
    let mut r = Reader::new(bytes, TOKEN_MAGIC)?;
    let count = r.u32("count")? as usize;
    let d = r.u32("d_tok")? as usize;
    let mut out = Vec::with_capacity(count.min(1 << 16));
    for _ in 0..count {
        let id = r.short_str("caption_id")?;
        let l = r.u32("L")? as usize;
        if l == 0 {
            return Err(Error::format("L", format!("caption `{id}` has L = 0")));
        }
        let n = l
            .checked_mul(d)
            .ok_or_else(|| Error::format("L", "L·d_tok overflows"))?;
        let data = r.f32s(n, "token payload")?;
        check_finite(&data, "token payload")?;
        let vectors =
            Array2::from_shape_vec((l, d), data).map_err(|e| Error::format("payload", e.to_string()))?;
        out.push(TokenEmbeddingSequence {
            caption_id: id,
            vectors,
        });
    }
    r.expect_end()?;
    Ok(out)
}

pub fn encode_sentence_file(records: &[SentenceEmbedding]) -> Result<Vec<u8>> {
    let d = records.first().map_or(0, |r| r.vector.len());
    let mut w = Writer::new(SENTENCE_MAGIC);
    w.u32(records.len() as u32);
    w.u32(d as u32);
    for r in records {
        if r.vector.len() != d {
            return Err(Error::Shape(format!(
                "caption `{}` has d_sent {} but file uses {d}",
                r.caption_id,
                r.vector.len()
            )));
        }
        w.short_str(&r.caption_id)?;
        w.f32s(r.vector.as_slice().expect("contiguous"));
    }
    Ok(w.finish())
}

pub fn decode_sentence_file(bytes: &[u8]) -> Result<Vec<SentenceEmbedding>> {
    let mut r = Reader::new(bytes, SENTENCE_MAGIC)?;
    let count = r.u32("count")? as usize;
    let d = r.u32("d_sent")? as usize;
    let mut out = Vec::with_capacity(count.min(1 << 16));
    for _ in 0..count {
        let id = r.short_str("caption_id")?;
        let data = r.f32s(d, "sentence payload")?;
        check_finite(&data, "sentence payload")?;
        out.push(SentenceEmbedding {
            caption_id: id,
            vector: Array1::from(data),
        });
    }
    r.expect_end()?;
    Ok(out)
}

pub fn save_token_file(path: &Path, records: &[TokenEmbeddingSequence]) -> Result<()> {
    write_file(path, &encode_token_file(records)?)
}

pub fn load_token_file(path: &Path) -> Result<Vec<TokenEmbeddingSequence>> {
    decode_token_file(&read_file(path)?)
}

pub fn save_sentence_file(path: &Path, records: &[SentenceEmbedding]) -> Result<()> {
    write_file(path, &encode_sentence_file(records)?)
}

pub fn load_sentence_file(path: &Path) -> Result<Vec<SentenceEmbedding>> {
    decode_sentence_file(&read_file(path)?)
}
