use ndarray::{s, Array2};
use rand::Rng;

use crate::data::{BodyPart, PaddedBatch, FEATURE_DIM, PART_COUNT};
use crate::error::Result;
use crate::motion_encoder::MotionEncoderConfig;
use crate::params::{init_linear, linear, Bound, ParamSet};
use crate::recurrent::{gru, init_gru, step_masks, StepInputs};
use crate::tape::{Tape, Var};

const UPPER: [BodyPart; 3] = [BodyPart::Torso, BodyPart::LeftArm, BodyPart::RightArm];
const LOWER: [BodyPart; 2] = [BodyPart::LeftLeg, BodyPart::RightLeg];

pub(crate) fn init_bigru(cfg: &MotionEncoderConfig, rng: &mut impl Rng) -> ParamSet {
    let mut ps = ParamSet::new();
    let input = PART_COUNT * FEATURE_DIM;
    init_linear(&mut ps, rng, "ffn1", input, cfg.ffn_hidden);
    init_linear(&mut ps, rng, "ffn2", cfg.ffn_hidden, cfg.ffn_hidden);
    init_gru(&mut ps, rng, "gru_fwd", cfg.ffn_hidden, cfg.hidden);
    init_gru(&mut ps, rng, "gru_bwd", cfg.ffn_hidden, cfg.hidden);
    ps
}

pub(crate) fn init_upper_lower(cfg: &MotionEncoderConfig, rng: &mut impl Rng) -> ParamSet {
    let mut ps = ParamSet::new();
    init_gru(&mut ps, rng, "gru_upper", UPPER.len() * FEATURE_DIM, cfg.hidden);
    init_gru(&mut ps, rng, "gru_lower", LOWER.len() * FEATURE_DIM, cfg.hidden);
    ps
}

/// Time-major `(T·B) × (|parts|·9)` matrix of the selected parts' features.
fn stack_parts(batch: &PaddedBatch, parts: &[BodyPart]) -> Array2<f64> {
    let (b, t, _, d) = batch.features.dim();
    let mut out = Array2::zeros((t * b, parts.len() * d));
    for ti in 0..t {
        for bi in 0..b {
            let mut row = out.row_mut(ti * b + bi);
            for (k, part) in parts.iter().enumerate() {
                row.slice_mut(s![k * d..(k + 1) * d])
                    .assign(&batch.features.slice(s![bi, ti, part.index(), ..]));
            }
        }
    }
    out
}

pub(crate) fn bigru_forward(tape: &mut Tape, p: &Bound, batch: &PaddedBatch) -> Result<Var> {
    let b = batch.batch_size();
    let masks = step_masks(&batch.lengths, batch.max_len());
    let x = tape.constant(stack_parts(batch, &BodyPart::ALL));
    let h = linear(tape, p, "ffn1", x);
    let h = tape.gelu(h);
    let lifted = linear(tape, p, "ffn2", h);
    let inputs = StepInputs::Stacked { rows: lifted, batch: b };
    let fwd = gru(tape, p, "gru_fwd", &inputs, &masks, b, false);
    let bwd = gru(tape, p, "gru_bwd", &inputs, &masks, b, true);
    Ok(tape.concat_cols(&[fwd, bwd]))
}

pub(crate) fn upper_lower_forward(tape: &mut Tape, p: &Bound, batch: &PaddedBatch) -> Result<Var> {
    let b = batch.batch_size();
    let masks = step_masks(&batch.lengths, batch.max_len());
    let upper = tape.constant(stack_parts(batch, &UPPER));
    let lower = tape.constant(stack_parts(batch, &LOWER));
    let hu = gru(tape, p, "gru_upper", &StepInputs::Stacked { rows: upper, batch: b }, &masks, b, false);
    let hl = gru(tape, p, "gru_lower", &StepInputs::Stacked { rows: lower, batch: b }, &masks, b, false);
    Ok(tape.concat_cols(&[hu, hl]))
}
