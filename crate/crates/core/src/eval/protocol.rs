//! Full-collection text-to-motion evaluation and its report.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::data::CaptionRecord;
use crate::error::{Error, Result};
use crate::eval::metrics::{mean_median_rank, ndcg, rank_of_relevant, recall_at_k};
use crate::eval::relevance::{Provenance, RelevanceMatrix};
use crate::index::EmbeddingStore;

pub const DEFAULT_KS: [usize; 3] = [1, 5, 10];
pub const NDCG_CUTOFF: usize = 10;

/// Caption id → the motions it describes.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    relevant: BTreeMap<String, Vec<String>>,
}

impl GroundTruth {
    pub fn from_captions<'a>(captions: impl IntoIterator<Item = &'a CaptionRecord>) -> Self {
        let mut gt = GroundTruth::default();
        for c in captions {
            gt.insert(&c.caption_id, &c.motion_id);
        }
        gt
    }

    pub fn insert(&mut self, caption_id: &str, motion_id: &str) {
        let set = self.relevant.entry(caption_id.to_string()).or_default();
        if !set.iter().any(|m| m == motion_id) {
            set.push(motion_id.to_string());
        }
    }

    pub fn get(&self, caption_id: &str) -> Option<&[String]> {
        self.relevant.get(caption_id).map(Vec::as_slice)
    }
}

/// One encoded text query.
#[derive(Clone, Debug, PartialEq)]
pub struct Query {
    pub caption_id: String,
    pub embedding: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RecallAt {
    pub k: usize,
    pub percent: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NdcgScores {
    pub source: Provenance,
    pub at_10: f64,
    pub full: f64,
    /// Queries whose relevance row is all zero; they score 0 and are
    /// included in both means.
    pub zero_relevance_queries: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub queries: usize,
    pub collection: usize,
    pub recall: Vec<RecallAt>,
    pub mean_rank: f64,
    pub median_rank: f64,
    pub ndcg: Vec<NdcgScores>,
}

impl MetricsReport {
    pub fn recall_at(&self, k: usize) -> Option<f64> {
        self.recall.iter().find(|r| r.k == k).map(|r| r.percent)
    }

    pub fn ndcg_for(&self, source: Provenance) -> Option<&NdcgScores> {
        self.ndcg.iter().find(|n| n.source == source)
    }

    /// Checks the report's invariants: recall in `[0, 100]` and
    /// non-decreasing in `k`, ranks `≥ 1`, nDCG in `[0, 1]`.
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::Invalid(format!("metrics report: {what}")));
        let mut prev: Option<RecallAt> = None;
        for r in &self.recall {
            if !(0.0..=100.0).contains(&r.percent) {
                return bad("recall outside [0, 100]");
            }
            if let Some(p) = prev {
                if r.k > p.k && r.percent < p.percent {
                    return bad("recall decreases with k");
                }
            }
            prev = Some(*r);
        }
        if self.queries > 0 && !(self.mean_rank >= 1.0 && self.median_rank >= 1.0) {
            return bad("rank below 1");
        }
        for n in &self.ndcg {
            if !(0.0..=1.0).contains(&n.at_10) || !(0.0..=1.0).contains(&n.full) {
                return bad("nDCG outside [0, 1]");
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn table_header(&self) -> Vec<String> {
        let mut h: Vec<String> = self.recall.iter().map(|r| format!("r{}", r.k)).collect();
        h.push("mean".into());
        h.push("med".into());
        for n in &self.ndcg {
            h.push(format!("nDCG@{NDCG_CUTOFF}:{}", n.source.label()));
            h.push(format!("nDCG:{}", n.source.label()));
        }
        h
    }

    pub fn table_row(&self) -> Vec<String> {
        let mut r: Vec<String> = self.recall.iter().map(|r| format!("{:.1}", r.percent)).collect();
        r.push(format!("{:.1}", self.mean_rank));
        r.push(format!("{}", self.median_rank));
        for n in &self.ndcg {
            r.push(format!("{:.3}", n.at_10));
            r.push(format!("{:.3}", n.full));
        }
        r
    }

    /// Aligned text table: one header line and one value line.
    pub fn to_table(&self) -> String {
        render_table(&[], &[(Vec::new(), self)])
    }
}

/// Renders labelled reports as aligned columns. `label_headers` names the
/// leading label columns; every row must share the first report's columns.
pub fn render_table(label_headers: &[&str], rows: &[(Vec<String>, &MetricsReport)]) -> String {
    let Some((_, first)) = rows.first() else {
        return String::new();
    };
    let mut cells: Vec<Vec<String>> = Vec::with_capacity(rows.len() + 1);
    let mut head: Vec<String> = label_headers.iter().map(|s| s.to_string()).collect();
    head.extend(first.table_header());
    cells.push(head);
    for (labels, r) in rows {
        let mut line = labels.clone();
        line.extend(r.table_row());
        cells.push(line);
    }
    let cols = cells.iter().map(Vec::len).max().unwrap_or(0);
    let widths: Vec<usize> = (0..cols)
        .map(|c| cells.iter().filter_map(|l| l.get(c)).map(|s| s.chars().count()).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    for line in &cells {
        let parts: Vec<String> = line
            .iter()
            .enumerate()
            .map(|(c, s)| {
                if c < label_headers.len() {
                    format!("{s:<w$}", w = widths[c])
                } else {
                    format!("{s:>w$}", w = widths[c])
                }
            })
            .collect();
        let _ = writeln!(out, "{}", parts.join("  ").trim_end());
    }
    out
}

/// Ranks the whole collection for every query and computes each metric.
/// Every query needs a ground-truth entry present in the store and a row
/// in every relevance matrix.
pub fn evaluate_protocol(
    queries: &[Query],
    store: &EmbeddingStore,
    gt: &GroundTruth,
    rels: &[RelevanceMatrix],
    ks: &[usize],
) -> Result<MetricsReport> {
    let missing: Vec<&str> = queries
        .iter()
        .filter(|q| gt.get(&q.caption_id).is_none())
        .map(|q| q.caption_id.as_str())
        .collect();
    if !missing.is_empty() {
        return Err(Error::UnknownId(format!(
            "no ground truth for queries: {}",
            missing.join(", ")
        )));
    }
    for m in rels {
        let missing: Vec<&str> = queries
            .iter()
            .filter(|q| m.row(&q.caption_id).is_none())
            .map(|q| q.caption_id.as_str())
            .collect();
        if !missing.is_empty() {
            return Err(Error::UnknownId(format!(
                "{} relevance has no row for queries: {}",
                m.provenance.label(),
                missing.join(", ")
            )));
        }
    }

    let n = store.len();
    let mut ranks = Vec::with_capacity(queries.len());
    let mut sums = vec![(0.0, 0.0, 0usize); rels.len()];
    for q in queries {
        let list = store.knn_query(&q.caption_id, &q.embedding, n.max(1))?;
        ranks.push(rank_of_relevant(&list, gt.get(&q.caption_id).expect("checked above"))?);
        for (m, acc) in rels.iter().zip(sums.iter_mut()) {
            let ranked: Vec<f64> = list
                .ids()
                .map(|id| m.get(&q.caption_id, id).expect("checked above"))
                .collect();
            acc.0 += ndcg(&ranked, NDCG_CUTOFF)?;
            acc.1 += ndcg(&ranked, ranked.len().max(1))?;
            if ranked.iter().all(|&r| r == 0.0) {
                acc.2 += 1;
            }
        }
    }
    let (mean_rank, median_rank) = mean_median_rank(&ranks);
    let nq = queries.len().max(1) as f64;
    Ok(MetricsReport {
        queries: queries.len(),
        collection: n,
        recall: ks
            .iter()
            .map(|&k| RecallAt {
                k,
                percent: recall_at_k(&ranks, k),
            })
            .collect(),
        mean_rank,
        median_rank,
        ndcg: rels
            .iter()
            .zip(sums)
            .map(|(m, (at_10, full, zero))| NdcgScores {
                source: m.provenance,
                at_10: at_10 / nq,
                full: full / nq,
                zero_relevance_queries: zero,
            })
            .collect(),
    })
}
