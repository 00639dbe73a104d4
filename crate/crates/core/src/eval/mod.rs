//! Evaluation protocol: exact-search metrics against caption ground truth
//! and graded nDCG against pluggable relevance matrices.

pub mod metrics;
pub mod protocol;
pub mod relevance;

pub use metrics::{dcg, dedupe_queries, mean_median_rank, ndcg, rank_of_relevant, recall_at_k};
pub use protocol::{
    evaluate_protocol, render_table, GroundTruth, MetricsReport, NdcgScores, Query, RecallAt,
    DEFAULT_KS, NDCG_CUTOFF,
};
pub use relevance::{lexical_relevance, lexical_relevance_matrix, Provenance, RelevanceMatrix};
