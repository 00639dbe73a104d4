//! Finite-difference verification of the analytic gradients.
//!
//! Every scalar of every trainable tensor is perturbed by `±h` and the
//! central difference `(L(θ+h) − L(θ−h)) / 2h` is compared with the tape's
//! gradient. The per-element relative error is
//! `|analytic − numeric| / max(|analytic|, |numeric|, 1e-6)`; the floor
//! keeps components that are numerically zero from dividing by noise.

use ndarray::{Array2, Array4};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::data::{PaddedBatch, FEATURE_DIM, PART_COUNT};
use crate::error::{Error, Result};
use crate::motion_encoder::{MotionEncoderConfig, MotionVariant};
use crate::params::{gaussian, rand_distr_free::normal, ParamSet};
use crate::space::loss::triplet_kink_distance;
use crate::space::model::{LossKind, ModelConfig, RetrievalModel};
use crate::space::train::PairBatch;
use crate::tape::Tape;
use crate::text::{TextBatch, TextEncoderConfig, TextVariant, Vocabulary};

pub const FD_STEP: f64 = 1e-5;
pub const REL_ERROR_FLOOR: f64 = 1e-6;
/// Minimum distance of the triplet hinges from a kink before checking.
pub const KINK_MARGIN: f64 = 1e-3;

#[derive(Clone, Debug, Serialize)]
pub struct TensorCheck {
    pub name: String,
    pub elements: usize,
    pub max_rel_error: f64,
    pub max_abs_error: f64,
    pub passed: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct GradCheckReport {
    pub loss: f64,
    pub tolerance: f64,
    /// Set for triplet checks: distance of the closest hinge or
    /// hardest-negative tie from a non-differentiable point.
    pub kink_distance: Option<f64>,
    pub tensors: Vec<TensorCheck>,
}

impl GradCheckReport {
    pub fn max_rel_error(&self) -> f64 {
        self.tensors.iter().map(|t| t.max_rel_error).fold(0.0, f64::max)
    }

    pub fn passed(&self) -> bool {
        self.tensors.iter().all(|t| t.passed)
    }

    pub fn failures(&self) -> Vec<&TensorCheck> {
        self.tensors.iter().filter(|t| !t.passed).collect()
    }
}

/// A small model plus the shape of the random batch it is checked on.
#[derive(Clone, Debug)]
pub struct GradCheckConfig {
    pub model: ModelConfig,
    pub batch: usize,
    pub max_frames: usize,
    pub tolerance: f64,
}

impl GradCheckConfig {
    /// Tiny configuration for one encoder × text path × loss combination:
    /// `T ≤ 6`, `B = 3`, `d_m = 8`.
    pub fn small(motion: MotionVariant, text: TextVariant, loss: LossKind) -> Self {
        let mut m = MotionEncoderConfig::new(motion);
        m.hidden = 4;
        m.ffn_hidden = 6;
        m.depth = 1;
        m.heads = 2;
        m.model_dim = 8;
        m.mot_ffn = 12;
        m.output_dim = 6;
        m.max_len = 8;
        let t = match text {
            TextVariant::Affine => TextEncoderConfig::affine(7, 5),
            TextVariant::LstmAggregator => TextEncoderConfig::lstm_aggregator(5, 4),
            TextVariant::SelfContained => TextEncoderConfig::self_contained(
                Vocabulary::build(["a person walks", "someone jumps high"]),
                4,
                4,
            ),
        };
        GradCheckConfig {
            model: ModelConfig {
                motion: m,
                text: t,
                d_common: 5,
                l2_normalize: true,
                loss,
                margin: 0.2,
                tau_init: 0.5,
                featurizer: None,
                feature_stats: None,
            },
            batch: 3,
            max_frames: 6,
            tolerance: 1e-4,
        }
    }
}

/// Random batch of `b` items with lengths in `1..=max_frames`.
pub fn random_motion_batch(rng: &mut impl Rng, b: usize, max_frames: usize) -> PaddedBatch {
    let lengths: Vec<usize> = (0..b).map(|_| rng.random_range(1..=max_frames)).collect();
    let mut features = Array4::zeros((b, max_frames, PART_COUNT, FEATURE_DIM));
    let mut mask = Array2::from_elem((b, max_frames), false);
    for (i, &len) in lengths.iter().enumerate() {
        for t in 0..len {
            mask[[i, t]] = true;
            for p in 0..PART_COUNT {
                for d in 0..FEATURE_DIM {
                    features[[i, t, p, d]] = normal(rng) * 0.7;
                }
            }
        }
    }
    PaddedBatch {
        features,
        mask,
        lengths,
    }
}

/// Random text batch in the form `cfg.variant` consumes.
pub fn random_text_batch(rng: &mut impl Rng, cfg: &TextEncoderConfig, b: usize) -> TextBatch {
    match cfg.variant {
        TextVariant::Affine => TextBatch::Sentences(gaussian(rng, b, cfg.input_dim, 1.0)),
        TextVariant::LstmAggregator => TextBatch::Tokens(
            (0..b)
                .map(|_| {
                    let l = rng.random_range(1..=5);
                    gaussian(rng, l, cfg.input_dim, 1.0)
                })
                .collect(),
        ),
        TextVariant::SelfContained => {
            let v = cfg.vocab.as_ref().map_or(1, |v| v.len());
            TextBatch::TokenIds(
                (0..b)
                    .map(|_| {
                        let l = rng.random_range(1..=5);
                        (0..l).map(|_| rng.random_range(0..v)).collect()
                    })
                    .collect(),
            )
        }
    }
}

/// Compares `analytic` against central differences of `loss` over every
/// element of `params`, perturbing in place and restoring afterwards.
pub fn compare_with_finite_differences(
    params: &mut ParamSet,
    analytic: &ParamSet,
    h: f64,
    tolerance: f64,
    mut loss: impl FnMut(&ParamSet) -> f64,
) -> Vec<TensorCheck> {
    let names: Vec<String> = params.names().cloned().collect();
    let mut out = Vec::with_capacity(names.len());
    for name in names {
        let grad = analytic.get(&name).expect("gradient per parameter").clone();
        let mut max_rel: f64 = 0.0;
        let mut max_abs: f64 = 0.0;
        let n = grad.len();
        for idx in 0..n {
            let (r, c) = (idx / grad.ncols(), idx % grad.ncols());
            let orig = params.get(&name).expect("present")[[r, c]];
            params.get_mut(&name).expect("present")[[r, c]] = orig + h;
            let plus = loss(params);
            params.get_mut(&name).expect("present")[[r, c]] = orig - h;
            let minus = loss(params);
            params.get_mut(&name).expect("present")[[r, c]] = orig;
            let numeric = (plus - minus) / (2.0 * h);
            let a = grad[[r, c]];
            let abs = (a - numeric).abs();
            let rel = abs / a.abs().max(numeric.abs()).max(REL_ERROR_FLOOR);
            max_abs = max_abs.max(abs);
            max_rel = max_rel.max(rel);
        }
        out.push(TensorCheck {
            name,
            elements: n,
            max_rel_error: max_rel,
            max_abs_error: max_abs,
            passed: max_rel <= tolerance,
        });
    }
    out
}

/// Full-model check: random small model and batch drawn from `seed`.
/// Triplet checks redraw until every hinge is at least [`KINK_MARGIN`]
/// away from a kink.
pub fn grad_check(config: &GradCheckConfig, seed: u64) -> Result<GradCheckReport> {
    let mut attempt = 0u64;
    loop {
        let s = seed.wrapping_add(attempt.wrapping_mul(7919));
        let mut model = RetrievalModel::init(config.model.clone(), s)?;
        let mut rng = ChaCha8Rng::seed_from_u64(s ^ 0xDEAD_BEEF);
        let data = PairBatch {
            motions: random_motion_batch(&mut rng, config.batch, config.max_frames),
            texts: random_text_batch(&mut rng, &config.model.text, config.batch),
        };
        let state = crate::space::train::TrainState::new(model.clone(), Default::default(), s);
        let (loss, grads) = state.loss_and_grads(&data)?;

        let kink = if config.model.loss == LossKind::Triplet {
            let mut tape = Tape::new();
            let p = crate::params::Bound::frozen(&mut tape, &model.params);
            let (_, sim) = model.loss_on(&mut tape, &p, &data.motions, &data.texts)?;
            let d = triplet_kink_distance(tape.value(sim), config.model.margin);
            if d < KINK_MARGIN {
                attempt += 1;
                if attempt > 200 {
                    return Err(Error::Invalid(
                        "could not draw a triplet fixture away from hinge kinks".into(),
                    ));
                }
                continue;
            }
            Some(d)
        } else {
            None
        };

        let cfg = model.config.clone();
        let mut params = std::mem::take(&mut model.params);
        let tensors = compare_with_finite_differences(&mut params, &grads, FD_STEP, config.tolerance, |ps| {
            let m = RetrievalModelRef { config: &cfg, params: ps };
            m.loss(&data).expect("loss evaluates")
        });
        return Ok(GradCheckReport {
            loss,
            tolerance: config.tolerance,
            kink_distance: kink,
            tensors,
        });
    }
}

/// Borrowing evaluator so finite differences do not copy every tensor.
struct RetrievalModelRef<'a> {
    config: &'a ModelConfig,
    params: &'a ParamSet,
}

impl RetrievalModelRef<'_> {
    fn loss(&self, data: &PairBatch) -> Result<f64> {
        let shell = RetrievalModel {
            config: self.config.clone(),
            params: ParamSet::new(),
        };
        let mut tape = Tape::new();
        let p = crate::params::Bound::frozen(&mut tape, self.params);
        let (loss, _) = shell.loss_on(&mut tape, &p, &data.motions, &data.texts)?;
        Ok(tape.value(loss)[[0, 0]])
    }
}

/// Checks a lone affine projection head followed by L2 normalization and
/// the InfoNCE loss against fixed caption vectors.
pub fn grad_check_projection(seed: u64, tolerance: f64) -> GradCheckReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (b, d_in, d_out) = (4, 6, 5);
    let x = gaussian(&mut rng, b, d_in, 1.0);
    let captions = gaussian(&mut rng, b, d_out, 1.0);
    let mut params = ParamSet::new();
    params.insert("proj.w", gaussian(&mut rng, d_in, d_out, 0.5));
    params.insert("proj.b", gaussian(&mut rng, 1, d_out, 0.1));
    let eval = |ps: &ParamSet, want_grad: bool| -> (f64, Option<ParamSet>) {
        let mut tape = Tape::new();
        let p = if want_grad {
            crate::params::Bound::new(&mut tape, ps)
        } else {
            crate::params::Bound::frozen(&mut tape, ps)
        };
        let xv = tape.constant(x.clone());
        let y = crate::params::linear(&mut tape, &p, "proj", xv);
        let y = tape.l2_normalize_rows(y);
        let c = tape.constant(captions.clone());
        let s = tape.matmul_t(y, c);
        let lt = tape.constant(Array2::from_elem((1, 1), 0.3f64.ln()));
        let loss = tape.infonce(s, lt);
        let value = tape.value(loss)[[0, 0]];
        if !want_grad {
            return (value, None);
        }
        let g = tape.backward(loss);
        let mut grads = ParamSet::new();
        for (name, v) in p.all() {
            grads.insert(name, g.get(v).cloned().expect("gradient"));
        }
        (value, Some(grads))
    };
    let (loss, grads) = eval(&params, true);
    let grads = grads.expect("requested");
    let tensors = compare_with_finite_differences(&mut params, &grads, FD_STEP, tolerance, |ps| {
        eval(ps, false).0
    });
    GradCheckReport {
        loss,
        tolerance,
        kink_distance: None,
        tensors,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn projection_head_matches_finite_differences() {
        let r = grad_check_projection(3, 1e-7);
        assert!(r.passed(), "{:?}", r.failures());
    }

    #[test]
    fn every_combination_matches_finite_differences() {
        for motion in [MotionVariant::Bigru, MotionVariant::UpperLowerGru, MotionVariant::Mot] {
            for text in [TextVariant::Affine, TextVariant::LstmAggregator, TextVariant::SelfContained] {
                for loss in [LossKind::Infonce, LossKind::Triplet] {
                    let r = grad_check(&GradCheckConfig::small(motion, text, loss), 11).unwrap();
                    assert!(
                        r.passed(),
                        "{motion:?}/{text:?}/{loss:?}: {:?}",
                        r.failures()
                    );
                }
            }
        }
    }
}
