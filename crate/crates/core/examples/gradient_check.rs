//! Compares analytic gradients with central finite differences for every
//! motion encoder, text path and loss.
//!
//! cargo run --release -p motret --example gradient_check

use motret::motion_encoder::MotionVariant;
use motret::space::gradcheck::{grad_check, GradCheckConfig};
use motret::space::LossKind;
use motret::text::TextVariant;

fn main() -> motret::Result<()> {
    let mut worst = 0.0f64;
    for motion in [MotionVariant::Bigru, MotionVariant::UpperLowerGru, MotionVariant::Mot] {
        for text in [TextVariant::Affine, TextVariant::LstmAggregator, TextVariant::SelfContained] {
            for loss in [LossKind::Infonce, LossKind::Triplet] {
                let cfg = GradCheckConfig::small(motion, text, loss);
                let r = grad_check(&cfg, 0)?;
                worst = worst.max(r.max_rel_error());
                println!(
                    "{:<14} {:<15} {:<8} tensors {:>3}  max rel err {:.2e}  {}",
                    format!("{motion:?}"),
                    format!("{text:?}"),
                    format!("{loss:?}"),
                    r.tensors.len(),
                    r.max_rel_error(),
                    if r.passed() { "ok" } else { "FAIL" }
                );
                for f in r.failures() {
                    println!("    {} rel {:.2e}", f.name, f.max_rel_error);
                }
            }
        }
    }
    println!("worst relative error {worst:.2e}");
    Ok(())
}
