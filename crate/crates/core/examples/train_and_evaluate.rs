//! Trains the transformer motion encoder with an affine text path under
//! InfoNCE on 32 synthetic pairs, saves the checkpoint, reloads it and
//! reports train-set retrieval metrics.
//!
//! cargo run --release -p motret --example train_and_evaluate [steps]

use motret::config::TrainConfig;
use motret::data::{generate_synthetic, Split};
use motret::pipeline::{evaluate_split, training_pairs, TextInputs};
use motret::space::{fit_with, RetrievalModel, TrainState};

const CONFIG: &str = r#"{
  "motion": { "variant": "mot", "model_dim": 16, "depth": 2, "heads": 4, "mot_ffn": 32, "output_dim": 64, "max_len": 64 },
  "text": { "variant": "affine", "hidden": 64, "featurizer_dim": 64 },
  "d_common": 64,
  "loss": "infonce",
  "adam": { "lr": 0.001 },
  "batch_size": 32,
  "steps": 300
}"#;

fn main() -> motret::Result<()> {
    let mut cfg = TrainConfig::from_json(CONFIG.as_bytes())?;
    if let Some(s) = std::env::args().nth(1) {
        cfg.steps = s.parse().map_err(|_| motret::Error::Invalid(format!("bad step count `{s}`")))?;
    }
    let ds = generate_synthetic(32, 7)?;
    let inputs = TextInputs::Free;
    let model = cfg.init_model(&ds, &inputs)?;
    let data = training_pairs(&model, &ds, Split::Train, &inputs)?;

    let before = evaluate_split(&model, &ds, Split::Train, &inputs, &[], true)?;
    println!("before training: r@1 {:.1}", before.recall_at(1).unwrap_or(0.0));

    let mut state = TrainState::new(model, cfg.adam, cfg.seed);
    let log = fit_with(&mut state, &data, cfg.schedule(data.len()), |step, loss| {
        if step % 50 == 0 {
            println!("step {step:>4}  loss {loss:.5}");
        }
    })?;
    println!(
        "loss {:.4} -> {:.4} over {} steps",
        log.first().unwrap_or(f64::NAN),
        log.tail_mean(10).unwrap_or(f64::NAN),
        log.losses.len()
    );

    let dir = std::env::temp_dir().join("motret-train-example");
    state.model.save(&dir)?;
    let model = RetrievalModel::load(&dir)?;
    let report = evaluate_split(&model, &ds, Split::Train, &inputs, &[], true)?;
    println!("\ncheckpoint {}\n{}", dir.display(), report.to_table());
    Ok(())
}
