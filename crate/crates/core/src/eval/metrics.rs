//! Ranking metrics: recall@k, mean and median rank, nDCG.

use std::collections::HashSet;

use crate::data::CaptionRecord;
use crate::error::{Error, Result};
use crate::index::RankedList;
use crate::text::normalize;

/// Keeps the first caption of each normalized text, in input order.
/// Captions that normalize to nothing are kept under their raw text.
pub fn dedupe_queries(captions: &[CaptionRecord]) -> Vec<CaptionRecord> {
    let mut seen = HashSet::new();
    captions
        .iter()
        .filter(|c| seen.insert(normalize(&c.text).unwrap_or_else(|_| c.text.clone())))
        .cloned()
        .collect()
}

/// 1-based rank of the best-placed ground-truth motion.
pub fn rank_of_relevant<S: AsRef<str>>(ranking: &RankedList, gt: &[S]) -> Result<usize> {
    ranking
        .ids()
        .position(|id| gt.iter().any(|g| g.as_ref() == id))
        .map(|p| p + 1)
        .ok_or_else(|| {
            Error::UnknownId(format!(
                "no ground-truth motion of query `{}` is in the collection",
                ranking.query_id
            ))
        })
}

/// Percentage of ranks `≤ k`. An empty list gives 0.
pub fn recall_at_k(ranks: &[usize], k: usize) -> f64 {
    if ranks.is_empty() {
        return 0.0;
    }
    100.0 * ranks.iter().filter(|&&r| r <= k).count() as f64 / ranks.len() as f64
}

/// `(mean, median)`; the median of an even count averages the two middle
/// ranks. An empty list gives `(NaN, NaN)`.
pub fn mean_median_rank(ranks: &[usize]) -> (f64, f64) {
    if ranks.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = ranks.iter().sum::<usize>() as f64 / ranks.len() as f64;
    let mut sorted = ranks.to_vec();
    sorted.sort_unstable();
    let n = sorted.len();
    let median = if n % 2 == 1 {
        sorted[n / 2] as f64
    } else {
        (sorted[n / 2 - 1] + sorted[n / 2]) as f64 / 2.0
    };
    (mean, median)
}

/// `Σ_{i ≤ p} (2^{rel_i} − 1) / log2(i + 1)` with 1-based `i`.
pub fn dcg(rels: &[f64], p: usize) -> f64 {
    rels.iter()
        .take(p)
        .enumerate()
        .map(|(i, &r)| (2f64.powf(r) - 1.0) / ((i + 2) as f64).log2())
        .sum()
}

/// DCG normalized by the DCG of the same values sorted non-increasing.
/// Zero when the ideal DCG is zero.
pub fn ndcg(ranked_rels: &[f64], p: usize) -> Result<f64> {
    if p == 0 {
        return Err(Error::Invalid("nDCG cutoff must be ≥ 1".into()));
    }
    if let Some(r) = ranked_rels.iter().find(|r| !(**r >= 0.0) || !r.is_finite()) {
        return Err(Error::Invalid(format!("relevance must be finite and ≥ 0, got {r}")));
    }
    let mut ideal = ranked_rels.to_vec();
    ideal.sort_by(|a, b| b.total_cmp(a));
    let idcg = dcg(&ideal, p);
    if idcg == 0.0 {
        return Ok(0.0);
    }
    Ok((dcg(ranked_rels, p) / idcg).min(1.0))
}
