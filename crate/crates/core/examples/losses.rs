//! The two contrastive objectives on small similarity matrices.
//!
//! cargo run -p motret --example losses

use motret::space::{infonce_loss, similarity_matrix, triplet_loss, DEFAULT_MARGIN, DEFAULT_TEMPERATURE};
use ndarray::{array, Array2};

fn main() -> motret::Result<()> {
    for b in [2, 4, 8] {
        let s = Array2::from_elem((b, b), 0.3);
        println!(
            "uniform {b}×{b}: InfoNCE {:.6} (2 ln B = {:.6}), triplet {:.3} (2α = {:.3})",
            infonce_loss(&s, 1.0)?,
            2.0 * (b as f64).ln(),
            triplet_loss(&s, DEFAULT_MARGIN)?,
            2.0 * DEFAULT_MARGIN
        );
    }

    let motions = array![[1.0, 0.0], [0.0, 1.0], [0.6, 0.8]];
    let texts = array![[0.9, 0.1], [0.1, 0.9], [0.5, 0.9]];
    let s = similarity_matrix(&motions, &texts)?;
    println!("\ncosine similarities:\n{s:.3}");
    println!("InfoNCE (τ = {DEFAULT_TEMPERATURE}) {:.4}", infonce_loss(&s, DEFAULT_TEMPERATURE)?);
    println!("triplet (α = {DEFAULT_MARGIN}) {:.4}", triplet_loss(&s, DEFAULT_MARGIN)?);
    let shifted = &s + 5.0;
    println!(
        "after adding 5 to every score: InfoNCE {:.4}, triplet {:.4}",
        infonce_loss(&shifted, DEFAULT_TEMPERATURE)?,
        triplet_loss(&shifted, DEFAULT_MARGIN)?
    );
    Ok(())
}
