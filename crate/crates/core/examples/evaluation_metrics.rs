//! Retrieval metrics on a hand-built ranking: recall@k, mean and median
//! rank, and nDCG with graded relevance read from a relevance file.
//!
//! cargo run -p motret --example evaluation_metrics

use motret::eval::{
    dcg, evaluate_protocol, mean_median_rank, ndcg, recall_at_k, GroundTruth, Provenance, Query, RelevanceMatrix,
    DEFAULT_KS,
};
use motret::index::EmbeddingStore;
use ndarray::array;

fn main() -> motret::Result<()> {
    let rels = [1.0, 0.0, 1.0];
    println!("DCG@3 of {rels:?} = {:.5}", dcg(&rels, 3));
    println!("nDCG@3 of {rels:?} = {:.5}", ndcg(&rels, 3)?);

    let ranks = [1, 3, 2, 12, 1];
    let (mean, median) = mean_median_rank(&ranks);
    println!(
        "ranks {ranks:?}: r@1 {:.0}, r@5 {:.0}, mean {mean}, median {median}",
        recall_at_k(&ranks, 1),
        recall_at_k(&ranks, 5)
    );

    let store = EmbeddingStore::build(
        2,
        [("m0", vec![1.0, 0.0]), ("m1", vec![0.8, 0.6]), ("m2", vec![0.0, 1.0])],
    )?;
    let queries = vec![
        Query { caption_id: "q0".into(), embedding: vec![1.0, 0.1] },
        Query { caption_id: "q1".into(), embedding: vec![0.1, 1.0] },
    ];
    let mut gt = GroundTruth::default();
    gt.insert("q0", "m0");
    gt.insert("q1", "m1");
    let rel = RelevanceMatrix::new(
        Provenance::ExternalSpice,
        vec!["q0".into(), "q1".into()],
        vec!["m0".into(), "m1".into(), "m2".into()],
        array![[1.0, 0.5, 0.0], [0.0, 1.0, 0.75]],
    )?;
    let path = std::env::temp_dir().join("motret-example.relv");
    rel.save(&path)?;
    let rel = RelevanceMatrix::load(&path)?;

    let report = evaluate_protocol(&queries, &store, &gt, &[rel], &DEFAULT_KS)?;
    println!("\n{}", report.to_table());
    println!("{}", report.to_json()?);
    Ok(())
}
