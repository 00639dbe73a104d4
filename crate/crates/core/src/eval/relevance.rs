//! Graded query × motion relevance for nDCG.
//!
//! Matrices computed by external tools are ingested from `RELV` files: magic,
//! `u32 n_queries`, `u32 n_items`, then `n_queries · n_items` row-major
//! little-endian `f32`. A JSON sidecar next to the file (same path plus
//! `.json`) names the rows and columns:
//!
//! ```json
//! { "provenance": "external-spice", "rows": ["c1", "c2"], "cols": ["m1", "m2", "m3"] }
//! ```
//!
//! [`lexical_relevance_matrix`] builds a matrix offline from caption text.

use std::collections::{BTreeMap, HashMap};
use std::path::{Path, PathBuf};

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::codec::{check_finite, read_file, write_file, Reader, Writer};
use crate::data::CaptionRecord;
use crate::error::{Error, Result};
use crate::text::tokenize;

pub const RELEVANCE_MAGIC: &[u8; 4] = b"RELV";

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    ExternalSpice,
    ExternalSpacy,
    Lexical,
}

impl Provenance {
    pub fn label(self) -> &'static str {
        match self {
            Provenance::ExternalSpice => "spice",
            Provenance::ExternalSpacy => "spacy",
            Provenance::Lexical => "lexical",
        }
    }
}

impl std::str::FromStr for Provenance {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "external-spice" | "spice" => Ok(Provenance::ExternalSpice),
            "external-spacy" | "spacy" => Ok(Provenance::ExternalSpacy),
            "lexical" => Ok(Provenance::Lexical),
            other => Err(Error::Invalid(format!("unknown relevance source `{other}`"))),
        }
    }
}

#[derive(Serialize, Deserialize)]
struct Sidecar {
    provenance: Provenance,
    rows: Vec<String>,
    cols: Vec<String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RelevanceMatrix {
    pub provenance: Provenance,
    /// Caption id of each row.
    pub query_ids: Vec<String>,
    /// Motion id of each column.
    pub item_ids: Vec<String>,
    pub values: Array2<f32>,
    row_of: HashMap<String, usize>,
    col_of: HashMap<String, usize>,
}

fn positions(ids: &[String], what: &str) -> Result<HashMap<String, usize>> {
    let mut m = HashMap::with_capacity(ids.len());
    for (i, id) in ids.iter().enumerate() {
        if m.insert(id.clone(), i).is_some() {
            return Err(Error::DuplicateId(format!("{what} `{id}`")));
        }
    }
    Ok(m)
}

impl RelevanceMatrix {
    pub fn new(
        provenance: Provenance,
        query_ids: Vec<String>,
        item_ids: Vec<String>,
        values: Array2<f32>,
    ) -> Result<Self> {
        if values.dim() != (query_ids.len(), item_ids.len()) {
            return Err(Error::Shape(format!(
                "relevance values are {:?} for {} queries × {} items",
                values.dim(),
                query_ids.len(),
                item_ids.len()
            )));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite() || **v < 0.0) {
            return Err(Error::Invalid(format!("relevance must be finite and ≥ 0, got {v}")));
        }
        let row_of = positions(&query_ids, "query")?;
        let col_of = positions(&item_ids, "item")?;
        Ok(RelevanceMatrix {
            provenance,
            query_ids,
            item_ids,
            values,
            row_of,
            col_of,
        })
    }

    pub fn row(&self, query_id: &str) -> Option<usize> {
        self.row_of.get(query_id).copied()
    }

    /// Relevance of `motion_id` to `query_id`; items absent from the matrix
    /// count as irrelevant.
    pub fn get(&self, query_id: &str, motion_id: &str) -> Option<f64> {
        let r = self.row(query_id)?;
        Some(self.col_of.get(motion_id).map_or(0.0, |&c| self.values[[r, c]] as f64))
    }

    pub fn encode(&self) -> Result<Vec<u8>> {
        let mut w = Writer::new(RELEVANCE_MAGIC);
        let (nq, ni) = self.values.dim();
        w.u32(u32::try_from(nq).map_err(|_| Error::Invalid("too many queries".into()))?);
        w.u32(u32::try_from(ni).map_err(|_| Error::Invalid("too many items".into()))?);
        for v in self.values.iter() {
            w.f32(*v);
        }
        Ok(w.finish())
    }

    /// Decodes the binary part; ids come from the sidecar.
    pub fn decode(bytes: &[u8], sidecar: &[u8]) -> Result<Self> {
        let side: Sidecar =
            serde_json::from_slice(sidecar).map_err(|e| Error::format("sidecar", e.to_string()))?;
        let mut r = Reader::new(bytes, RELEVANCE_MAGIC)?;
        let nq = r.u32("n_queries")? as usize;
        let ni = r.u32("n_items")? as usize;
        if side.rows.len() != nq || side.cols.len() != ni {
            return Err(Error::format(
                "sidecar",
                format!(
                    "names {} rows × {} cols, matrix is {nq} × {ni}",
                    side.rows.len(),
                    side.cols.len()
                ),
            ));
        }
        let n = nq
            .checked_mul(ni)
            .ok_or_else(|| Error::format("n_items", "matrix size overflows"))?;
        let data = r.f32s(n, "values")?;
        r.expect_end()?;
        check_finite(&data, "values")?;
        let values = Array2::from_shape_vec((nq, ni), data).map_err(|e| Error::Shape(e.to_string()))?;
        RelevanceMatrix::new(side.provenance, side.rows, side.cols, values)
            .map_err(|e| Error::format("values", e.to_string()))
    }

    pub fn sidecar_path(path: &Path) -> PathBuf {
        let mut s = path.as_os_str().to_owned();
        s.push(".json");
        PathBuf::from(s)
    }

    fn sidecar_json(&self) -> Result<Vec<u8>> {
        Ok(serde_json::to_vec_pretty(&Sidecar {
            provenance: self.provenance,
            rows: self.query_ids.clone(),
            cols: self.item_ids.clone(),
        })?)
    }

    /// Writes `path` and its `.json` sidecar.
    pub fn save(&self, path: &Path) -> Result<()> {
        write_file(path, &self.encode()?)?;
        write_file(&Self::sidecar_path(path), &self.sidecar_json()?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = read_file(path)?;
        let side = read_file(&Self::sidecar_path(path))?;
        RelevanceMatrix::decode(&bytes, &side)
    }

    /// Bytes of both files, for round-trip comparison.
    pub fn encode_with_sidecar(&self) -> Result<(Vec<u8>, Vec<u8>)> {
        Ok((self.encode()?, self.sidecar_json()?))
    }
}

fn term_counts(text: &str) -> Result<BTreeMap<String, f64>> {
    let mut tf = BTreeMap::new();
    for t in tokenize(text)? {
        *tf.entry(t).or_insert(0.0) += 1.0;
    }
    Ok(tf)
}

fn tf_cosine(a: &BTreeMap<String, f64>, b: &BTreeMap<String, f64>) -> f64 {
    let dot: f64 = a.iter().filter_map(|(t, x)| b.get(t).map(|y| x * y)).sum();
    let na = a.values().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.values().map(|x| x * x).sum::<f64>().sqrt();
    (dot / (na * nb)).clamp(0.0, 1.0)
}

/// Cosine similarity of the term-frequency vectors of two captions.
pub fn lexical_relevance(a: &str, b: &str) -> Result<f64> {
    Ok(tf_cosine(&term_counts(a)?, &term_counts(b)?))
}

/// Relevance of each query to each motion: the best lexical match between
/// the query text and any caption of the motion.
pub fn lexical_relevance_matrix(
    queries: &[CaptionRecord],
    motion_ids: &[String],
    captions: &[CaptionRecord],
) -> Result<RelevanceMatrix> {
    let col: HashMap<&str, usize> = motion_ids.iter().enumerate().map(|(i, m)| (m.as_str(), i)).collect();
    let mut by_motion: Vec<Vec<BTreeMap<String, f64>>> = vec![Vec::new(); motion_ids.len()];
    for c in captions {
        if let Some(&j) = col.get(c.motion_id.as_str()) {
            by_motion[j].push(term_counts(&c.text)?);
        }
    }
    let mut values = Array2::zeros((queries.len(), motion_ids.len()));
    for (i, q) in queries.iter().enumerate() {
        let tq = term_counts(&q.text)?;
        for (j, caps) in by_motion.iter().enumerate() {
            values[[i, j]] = caps.iter().map(|c| tf_cosine(&tq, c)).fold(0.0, f64::max) as f32;
        }
    }
    RelevanceMatrix::new(
        Provenance::Lexical,
        queries.iter().map(|q| q.caption_id.clone()).collect(),
        motion_ids.to_vec(),
        values,
    )
}
