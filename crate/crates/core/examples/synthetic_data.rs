//! Generates a captioned synthetic dataset, writes it to disk, reloads it
//! and shows the five-part aggregation and padding of one batch.
//!
//! cargo run -p motret --example synthetic_data

use motret::data::synthetic::assign_splits;
use motret::data::{aggregate_body_parts, generate_synthetic, pad_and_mask, BodyPart, Dataset, Split};

fn main() -> motret::Result<()> {
    let mut ds = generate_synthetic(12, 7)?;
    assign_splits(&mut ds, 0.25, 0.25, 7);

    let dir = std::env::temp_dir().join("motret-synthetic-example");
    let manifest = ds.save(&dir)?;
    let ds = Dataset::load(&manifest)?;
    println!("dataset at {}", manifest.display());

    for split in [Split::Train, Split::Val, Split::Test] {
        let (ids, captions) = ds.split(split);
        println!("{split:?}: {} motions", ids.len());
        for c in captions.iter().take(2) {
            println!("  {}  \"{}\"", c.motion_id, c.text);
        }
    }

    let first = ds.motions.values().next().expect("non-empty");
    println!(
        "\n{}: {} frames at {} fps, {} joints",
        first.motion_id,
        first.len(),
        first.fps,
        first.joint_count()
    );
    let parts = aggregate_body_parts(first, &ds.topology)?;
    println!("aggregated to {:?} (T × parts × features)", parts.dim());
    for p in BodyPart::ALL {
        let joints: Vec<usize> = ds.topology.joints_of(p).collect();
        println!("  {:<10} joints {joints:?}", p.label());
    }

    let seqs = ds
        .motions
        .values()
        .take(4)
        .map(|m| aggregate_body_parts(m, &ds.topology))
        .collect::<motret::Result<Vec<_>>>()?;
    let batch = pad_and_mask(&seqs, 40)?;
    println!("\npadded batch {:?}, lengths {:?}", batch.features.dim(), batch.lengths);
    Ok(())
}
