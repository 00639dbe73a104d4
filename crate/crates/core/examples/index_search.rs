//! Builds an exact cosine index, answers top-k queries, round-trips the
//! snapshot file and swaps a new snapshot in behind a shared handle.
//!
//! cargo run -p motret --example index_search

use std::sync::Arc;
use std::thread;

use motret::index::{EmbeddingStore, IndexHandle};

fn main() -> motret::Result<()> {
    let store = EmbeddingStore::build(
        3,
        [
            ("walk", vec![1.0, 0.1, 0.0]),
            ("run", vec![0.9, 0.3, 0.0]),
            ("jump", vec![0.0, 1.0, 0.2]),
            ("wave", vec![0.0, 0.1, 1.0]),
            ("stroll", vec![1.0, 0.1, 0.0]),
        ],
    )?;
    let hits = store.knn_query("q", &[1.0, 0.0, 0.0], 3)?;
    for (r, h) in hits.hits.iter().enumerate() {
        println!("{} {} {:.6}", r + 1, h.motion_id, h.score);
    }
    println!("(walk and stroll tie; the lower id ranks first)");

    let path = std::env::temp_dir().join("motret-example.midx");
    store.save(&path)?;
    let back = EmbeddingStore::load(&path)?;
    assert_eq!(back.encode()?, store.encode()?);
    println!("\nsnapshot {} round-trips ({} entries)", path.display(), back.len());

    let handle = Arc::new(IndexHandle::new(back));
    let readers: Vec<_> = (0..4)
        .map(|_| {
            let h = handle.clone();
            thread::spawn(move || h.snapshot().knn_query("q", &[0.0, 1.0, 0.0], 1).map(|r| r.hits[0].motion_id.clone()))
        })
        .collect();
    for r in readers {
        println!("reader saw top hit {}", r.join().expect("reader")?);
    }
    let old = handle.swap(EmbeddingStore::build(3, [("sit", vec![0.0, 1.0, 0.0])])?);
    println!("swapped: old snapshot {} entries, new {}", old.len(), handle.snapshot().len());
    Ok(())
}
