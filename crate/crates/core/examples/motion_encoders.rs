//! Encodes one padded batch with each motion encoder and checks that extra
//! padding does not move any embedding.
//!
//! cargo run -p motret --example motion_encoders

use motret::data::{aggregate_body_parts, generate_synthetic, pad_and_mask};
use motret::motion_encoder::{MotionEncoder, MotionEncoderConfig, MotionVariant};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> motret::Result<()> {
    let ds = generate_synthetic(4, 1)?;
    let seqs = ds
        .motions
        .values()
        .map(|m| aggregate_body_parts(m, &ds.topology))
        .collect::<motret::Result<Vec<_>>>()?;
    let batch = pad_and_mask(&seqs, 64)?.trimmed();
    println!("batch lengths {:?}", batch.lengths);

    for variant in [MotionVariant::Bigru, MotionVariant::UpperLowerGru, MotionVariant::Mot] {
        let mut cfg = MotionEncoderConfig::new(variant);
        cfg.hidden = 32;
        cfg.ffn_hidden = 32;
        cfg.model_dim = 32;
        cfg.depth = 2;
        cfg.mot_ffn = 64;
        cfg.output_dim = 32;
        cfg.max_len = 64;
        let enc = MotionEncoder::init(cfg, &mut ChaCha8Rng::seed_from_u64(0))?;
        let e = enc.encode(&batch)?;
        let padded = enc.encode(&batch.with_extra_padding(10))?;
        let drift = (&e - &padded).iter().fold(0.0f64, |m, v| m.max(v.abs()));
        println!(
            "{variant:?}: output {:?}, first row starts {:.4?}, padding drift {drift:.1e}",
            e.dim(),
            &e.row(0).to_vec()[..4]
        );
    }
    Ok(())
}
