//! Trains and evaluates one small model per common-space width and writes
//! the results as a table and CSV.
//!
//! cargo run --release -p motret --example dimensionality_sweep

use motret::config::TrainConfig;
use motret::data::synthetic::assign_splits;
use motret::data::{generate_synthetic, Split};
use motret::motion_encoder::MotionVariant;
use motret::pipeline::TextInputs;
use motret::space::LossKind;
use motret::sweep::{run_sweep, SweepGrid};

const CONFIG: &str = r#"{
  "motion": { "variant": "mot", "model_dim": 8, "depth": 1, "heads": 2, "mot_ffn": 16, "output_dim": 16, "max_len": 48 },
  "text": { "variant": "affine", "hidden": 32, "featurizer_dim": 32 },
  "adam": { "lr": 0.001 },
  "batch_size": 16,
  "steps": 40
}"#;

fn main() -> motret::Result<()> {
    let cfg = TrainConfig::from_json(CONFIG.as_bytes())?;
    let mut ds = generate_synthetic(40, 7)?;
    assign_splits(&mut ds, 0.0, 0.25, 7);
    let grid = SweepGrid {
        d_common: vec![8, 16, 64, 256],
        losses: vec![LossKind::Infonce, LossKind::Triplet],
        encoders: vec![MotionVariant::Mot],
    };
    let result = run_sweep(&cfg, &grid, &ds, &TextInputs::Free, Split::Test, &[], |c| {
        eprintln!("done: {:?} d={} final loss {:.4}", c.loss, c.d_common, c.final_loss);
    })?;
    println!("{}", result.to_table());
    let path = std::env::temp_dir().join("motret-sweep.csv");
    std::fs::write(&path, result.to_delimited(',')).map_err(|e| motret::Error::Invalid(e.to_string()))?;
    println!("csv at {}", path.display());
    Ok(())
}
