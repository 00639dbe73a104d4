//! Divided space-time transformer over body-part tokens.
//!
//! Each `(frame, part)` cell of a padded batch becomes one token, embedded
//! linearly and offset by a learned frame-position row and a learned
//! part row. Every block is pre-normalized and applies, in this order:
//!
//! 1. spatial attention among the five part tokens of the same frame,
//! 2. temporal attention along one part's stream, over real frames only,
//! 3. a position-wise feed-forward layer,
//!
//! each wrapped in a residual connection. The real tokens are then
//! mean-pooled and projected to `d_motion`.

use std::rc::Rc;

use ndarray::Array2;
use rand::Rng;

use crate::data::{PaddedBatch, PART_COUNT};
use crate::error::{Error, Result};
use crate::motion_encoder::MotionEncoderConfig;
use crate::params::{gaussian, glorot, init_layer_norm, init_linear, layer_norm, linear, Bound, ParamSet};
use crate::tape::{AttentionGroup, AttentionPlan, Tape, Var};

/// Where to stop the forward pass. Anything other than `Output` returns the
/// `N × d_m` token matrix at that point, rows ordered `(item, frame, part)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Stage {
    Embedded,
    AfterSpatial(usize),
    AfterTemporal(usize),
    Output,
}

pub(crate) fn init(cfg: &MotionEncoderConfig, rng: &mut impl Rng) -> ParamSet {
    let d = cfg.model_dim;
    let mut ps = ParamSet::new();
    init_linear(&mut ps, rng, "embed", crate::data::FEATURE_DIM, d);
    ps.insert("pos_time", gaussian(rng, cfg.max_len, d, 0.1));
    ps.insert("pos_part", gaussian(rng, PART_COUNT, d, 0.1));
    for i in 0..cfg.depth {
        for sub in ["spatial", "temporal"] {
            let name = format!("block{i}.{sub}");
            init_layer_norm(&mut ps, &format!("{name}.norm"), d);
            init_linear(&mut ps, rng, &format!("{name}.q"), d, d);
            ps.insert(format!("{name}.k.w"), glorot(rng, d, d));
            init_linear(&mut ps, rng, &format!("{name}.v"), d, d);
            init_linear(&mut ps, rng, &format!("{name}.o"), d, d);
        }
        init_layer_norm(&mut ps, &format!("block{i}.ffn.norm"), d);
        init_linear(&mut ps, rng, &format!("block{i}.ffn.fc1"), d, cfg.mot_ffn);
        init_linear(&mut ps, rng, &format!("block{i}.ffn.fc2"), cfg.mot_ffn, d);
    }
    init_layer_norm(&mut ps, "out_norm", d);
    init_linear(&mut ps, rng, "head", d, cfg.output_dim);
    ps
}

/// Token row of `(item, frame, part)` in a batch padded to `t_max` frames.
pub fn token_row(item: usize, frame: usize, part: usize, t_max: usize) -> usize {
    (item * t_max + frame) * PART_COUNT + part
}

/// Spatial neighbourhoods: the five parts of each real frame.
pub fn spatial_plan(lengths: &[usize], t_max: usize) -> AttentionPlan {
    let mut groups = Vec::new();
    for (b, &len) in lengths.iter().enumerate() {
        for t in 0..len {
            let rows: Vec<usize> = (0..PART_COUNT).map(|p| token_row(b, t, p, t_max)).collect();
            groups.push(AttentionGroup {
                queries: rows.clone(),
                keys: rows,
            });
        }
    }
    AttentionPlan { groups }
}

/// Temporal neighbourhoods: each part stream over the item's real frames.
/// Padded frames are neither queries nor keys, so they get zero weight.
pub fn temporal_plan(lengths: &[usize], t_max: usize) -> AttentionPlan {
    let mut groups = Vec::new();
    for (b, &len) in lengths.iter().enumerate() {
        for p in 0..PART_COUNT {
            let rows: Vec<usize> = (0..len).map(|t| token_row(b, t, p, t_max)).collect();
            groups.push(AttentionGroup {
                queries: rows.clone(),
                keys: rows,
            });
        }
    }
    AttentionPlan { groups }
}

/// Multi-head self-attention sublayer with output projection.
pub fn multi_head_attention(
    tape: &mut Tape,
    p: &Bound,
    name: &str,
    x: Var,
    plan: Rc<AttentionPlan>,
    heads: usize,
) -> Var {
    let q = linear(tape, p, &format!("{name}.q"), x);
    let k = tape.matmul(x, p.var(&format!("{name}.k.w")));
    let v = linear(tape, p, &format!("{name}.v"), x);
    let a = tape.attention(q, k, v, plan, heads);
    linear(tape, p, &format!("{name}.o"), a)
}

fn residual_attention(
    tape: &mut Tape,
    p: &Bound,
    name: &str,
    x: Var,
    plan: Rc<AttentionPlan>,
    heads: usize,
) -> Var {
    let h = layer_norm(tape, p, &format!("{name}.norm"), x);
    let a = multi_head_attention(tape, p, name, h, plan, heads);
    tape.add(x, a)
}

pub(crate) fn forward(
    cfg: &MotionEncoderConfig,
    tape: &mut Tape,
    p: &Bound,
    batch: &PaddedBatch,
    stage: Stage,
) -> Result<Var> {
    let (b, t_max, _, d_in) = batch.features.dim();
    if batch.lengths.contains(&0) {
        return Err(Error::Invalid("empty sequence".into()));
    }
    if t_max > cfg.max_len {
        return Err(Error::Shape(format!(
            "batch has {t_max} frames but the position table holds {}",
            cfg.max_len
        )));
    }
    let n = b * t_max * PART_COUNT;
    let tokens = batch
        .features
        .to_shape((n, d_in))
        .map_err(|e| Error::Shape(e.to_string()))?
        .to_owned();
    let x = tape.constant(tokens);
    let x = linear(tape, p, "embed", x);
    let time_idx: Rc<[usize]> = (0..n).map(|r| (r / PART_COUNT) % t_max).collect();
    let part_idx: Rc<[usize]> = (0..n).map(|r| r % PART_COUNT).collect();
    let pt = tape.gather_rows(p.var("pos_time"), time_idx);
    let pp = tape.gather_rows(p.var("pos_part"), part_idx);
    let x = tape.add(x, pt);
    let mut x = tape.add(x, pp);
    if stage == Stage::Embedded {
        return Ok(x);
    }

    let spatial = Rc::new(spatial_plan(&batch.lengths, t_max));
    let temporal = Rc::new(temporal_plan(&batch.lengths, t_max));
    for i in 0..cfg.depth {
        x = residual_attention(tape, p, &format!("block{i}.spatial"), x, spatial.clone(), cfg.heads);
        if stage == Stage::AfterSpatial(i) {
            return Ok(x);
        }
        x = residual_attention(tape, p, &format!("block{i}.temporal"), x, temporal.clone(), cfg.heads);
        if stage == Stage::AfterTemporal(i) {
            return Ok(x);
        }
        let h = layer_norm(tape, p, &format!("block{i}.ffn.norm"), x);
        let h = linear(tape, p, &format!("block{i}.ffn.fc1"), h);
        let h = tape.gelu(h);
        let h = linear(tape, p, &format!("block{i}.ffn.fc2"), h);
        x = tape.add(x, h);
    }
    if stage != Stage::Output {
        return Err(Error::Invalid(format!("stage {stage:?} is beyond depth {}", cfg.depth)));
    }
    let x = layer_norm(tape, p, "out_norm", x);

    let mut pool = Array2::zeros((b, n));
    for (item, &len) in batch.lengths.iter().enumerate() {
        let w = 1.0 / (len * PART_COUNT) as f64;
        for t in 0..len {
            for part in 0..PART_COUNT {
                pool[[item, token_row(item, t, part, t_max)]] = w;
            }
        }
    }
    let pool = tape.constant(pool);
    let pooled = tape.matmul(pool, x);
    Ok(linear(tape, p, "head", pooled))
}

/// Runs the transformer up to `stage` and returns the token matrix.
pub fn trace(
    enc: &crate::motion_encoder::MotionEncoder,
    batch: &PaddedBatch,
    stage: Stage,
) -> Result<Array2<f64>> {
    let mut tape = Tape::new();
    let p = Bound::frozen(&mut tape, &enc.params);
    let out = forward(&enc.config, &mut tape, &p, batch, stage)?;
    Ok(tape.value(out).clone())
}
