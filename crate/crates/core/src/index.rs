//! Exact cosine top-k search over unit-norm motion embeddings.
//!
//! Snapshot file: magic `MIDX`, `u32 d`, `u32 n`, then per entry a `u16`
//! id length, the UTF-8 id and `d` little-endian `f32`.

use std::collections::HashSet;
use std::path::Path;
use std::sync::{Arc, RwLock};

use serde::{Deserialize, Serialize};

use crate::codec::{read_file, write_file, Reader, Writer};
use crate::error::{Error, Result};

pub const INDEX_MAGIC: &[u8; 4] = b"MIDX";
/// Accepted deviation from unit norm for stored vectors.
pub const NORM_TOLERANCE: f64 = 1e-5;

/// Immutable set of `(motion_id, unit vector)` entries in insertion order.
#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddingStore {
    dim: usize,
    ids: Vec<String>,
    /// Row-major `n × dim`.
    vectors: Vec<f32>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Hit {
    pub motion_id: String,
    pub score: f64,
}

/// Results for one query, best first; equal scores are ordered by
/// ascending `motion_id`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RankedList {
    pub query_id: String,
    pub hits: Vec<Hit>,
}

impl RankedList {
    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.hits.iter().map(|h| h.motion_id.as_str())
    }
}

fn unit(v: &[f64], what: &str) -> Result<Vec<f64>> {
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::Invalid(format!("{what} has non-finite components")));
    }
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm == 0.0 {
        return Err(Error::Invalid(format!("{what} is the zero vector")));
    }
    Ok(v.iter().map(|x| x / norm).collect())
}

impl EmbeddingStore {
    pub fn empty(dim: usize) -> Self {
        EmbeddingStore {
            dim,
            ids: Vec::new(),
            vectors: Vec::new(),
        }
    }

    /// Renormalizes every vector. An empty `entries` gives an empty store of
    /// width `dim`; otherwise every vector must have `dim` components.
    pub fn build<I, S, V>(dim: usize, entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, V)>,
        S: Into<String>,
        V: AsRef<[f64]>,
    {
        let mut store = EmbeddingStore::empty(dim);
        let mut seen = HashSet::new();
        for (id, v) in entries {
            let id = id.into();
            let v = v.as_ref();
            if v.len() != dim {
                return Err(Error::Shape(format!(
                    "vector for `{id}` has {} components, store has {dim}",
                    v.len()
                )));
            }
            if !seen.insert(id.clone()) {
                return Err(Error::DuplicateId(id));
            }
            let u = unit(v, &format!("vector for `{id}`"))?;
            store.vectors.extend(u.iter().map(|&x| x as f32));
            store.ids.push(id);
        }
        Ok(store)
    }

    /// Builds from the rows of an `n × d` matrix.
    pub fn from_rows(ids: &[String], rows: &ndarray::Array2<f64>) -> Result<Self> {
        if ids.len() != rows.nrows() {
            return Err(Error::Shape(format!("{} ids for {} vectors", ids.len(), rows.nrows())));
        }
        EmbeddingStore::build(
            rows.ncols(),
            ids.iter()
                .zip(rows.rows())
                .map(|(id, r)| (id.clone(), r.to_vec())),
        )
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn vector(&self, i: usize) -> &[f32] {
        &self.vectors[i * self.dim..(i + 1) * self.dim]
    }

    pub fn position(&self, id: &str) -> Option<usize> {
        self.ids.iter().position(|x| x == id)
    }

    /// Cosine score of every entry against the normalized query, in
    /// insertion order. Accumulated in `f64` and clamped to `[-1, 1]`.
    pub fn scores(&self, q: &[f64]) -> Result<Vec<f64>> {
        if q.len() != self.dim {
            return Err(Error::Shape(format!(
                "query has {} components, store has {}",
                q.len(),
                self.dim
            )));
        }
        let q = unit(q, "query")?;
        Ok((0..self.len())
            .map(|i| {
                let s: f64 = self.vector(i).iter().zip(&q).map(|(&v, &q)| v as f64 * q).sum();
                s.clamp(-1.0, 1.0)
            })
            .collect())
    }

    /// Exact top-`k`; returns all entries when `k` exceeds the store size.
    pub fn knn_query(&self, query_id: &str, q: &[f64], k: usize) -> Result<RankedList> {
        if k == 0 {
            return Err(Error::Invalid("k must be ≥ 1".into()));
        }
        let scores = self.scores(q)?;
        let mut order: Vec<usize> = (0..self.len()).collect();
        let cmp = |a: &usize, b: &usize| {
            scores[*b]
                .total_cmp(&scores[*a])
                .then_with(|| self.ids[*a].cmp(&self.ids[*b]))
        };
        let k = k.min(order.len());
        if k < order.len() {
            order.select_nth_unstable_by(k, cmp);
            order.truncate(k);
        }
        order.sort_unstable_by(cmp);
        Ok(RankedList {
            query_id: query_id.to_string(),
            hits: order
                .into_iter()
                .map(|i| Hit {
                    motion_id: self.ids[i].clone(),
                    score: scores[i],
                })
                .collect(),
        })
    }

    pub fn encode(&self) -> Result<Vec<u8>> {
        let mut w = Writer::new(INDEX_MAGIC);
        w.u32(u32::try_from(self.dim).map_err(|_| Error::Invalid("dimension too large".into()))?);
        w.u32(u32::try_from(self.len()).map_err(|_| Error::Invalid("too many entries".into()))?);
        for (i, id) in self.ids.iter().enumerate() {
            w.short_str(id)?;
            w.f32s(self.vector(i));
        }
        Ok(w.finish())
    }

    pub fn decode(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader::new(bytes, INDEX_MAGIC)?;
        let dim = r.u32("d")? as usize;
        let n = r.u32("n")? as usize;
        if dim == 0 && n > 0 {
            return Err(Error::format("d", "zero-width vectors"));
        }
        let mut store = EmbeddingStore::empty(dim);
        let mut seen = HashSet::new();
        for _ in 0..n {
            let id = r.short_str("id")?;
            let v = r.f32s(dim, "vector")?;
            let norm = v.iter().map(|&x| (x as f64) * (x as f64)).sum::<f64>().sqrt();
            if !((norm - 1.0).abs() <= NORM_TOLERANCE) {
                return Err(Error::format("vector", format!("`{id}` is not unit norm ({norm})")));
            }
            if !seen.insert(id.clone()) {
                return Err(Error::format("id", format!("duplicate motion id `{id}`")));
            }
            store.vectors.extend(v);
            store.ids.push(id);
        }
        r.expect_end()?;
        Ok(store)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_file(path, &self.encode()?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        EmbeddingStore::decode(&read_file(path)?)
    }
}

/// Shared handle for many concurrent readers. A write installs a whole new
/// store; readers holding the previous snapshot keep it until they drop it.
#[derive(Debug)]
pub struct IndexHandle {
    current: RwLock<Arc<EmbeddingStore>>,
}

impl IndexHandle {
    pub fn new(store: EmbeddingStore) -> Self {
        IndexHandle {
            current: RwLock::new(Arc::new(store)),
        }
    }

    pub fn snapshot(&self) -> Arc<EmbeddingStore> {
        self.current.read().unwrap_or_else(|e| e.into_inner()).clone()
    }

    /// Atomically replaces the store; returns the previous snapshot.
    pub fn swap(&self, store: EmbeddingStore) -> Arc<EmbeddingStore> {
        let mut guard = self.current.write().unwrap_or_else(|e| e.into_inner());
        std::mem::replace(&mut *guard, Arc::new(store))
    }
}
