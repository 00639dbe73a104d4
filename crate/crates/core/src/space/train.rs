//! Deterministic training: Adam over every tensor of a [`RetrievalModel`].

use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::PaddedBatch;
use crate::error::{Error, Result};
use crate::params::{Bound, ParamSet};
use crate::space::model::{LossKind, RetrievalModel};
use crate::tape::Tape;
use crate::text::TextBatch;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            lr: 1e-4,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// Everything needed to continue training bit-for-bit.
#[derive(Clone, Debug, PartialEq)]
pub struct TrainState {
    pub model: RetrievalModel,
    pub adam: AdamConfig,
    pub first_moment: ParamSet,
    pub second_moment: ParamSet,
    pub step: u64,
    pub seed: u64,
}

/// Aligned motion / caption inputs: item `i` of both is a positive pair.
#[derive(Clone, Debug)]
pub struct PairBatch {
    pub motions: PaddedBatch,
    pub texts: TextBatch,
}

impl PairBatch {
    pub fn len(&self) -> usize {
        self.motions.batch_size()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn select(&self, items: &[usize]) -> PairBatch {
        PairBatch {
            motions: self.motions.select(items),
            texts: self.texts.select(items),
        }
    }
}

impl TrainState {
    pub fn new(model: RetrievalModel, adam: AdamConfig, seed: u64) -> Self {
        let zeros = model.params.map_values(|m| Array2::zeros(m.dim()));
        TrainState {
            model,
            adam,
            first_moment: zeros.clone(),
            second_moment: zeros,
            step: 0,
            seed,
        }
    }

    /// Loss and gradient for every parameter at the current state.
    pub fn loss_and_grads(&self, batch: &PairBatch) -> Result<(f64, ParamSet)> {
        let mut tape = Tape::new();
        let p = Bound::new(&mut tape, &self.model.params);
        let (loss, _) = self.model.loss_on(&mut tape, &p, &batch.motions, &batch.texts)?;
        let value = tape.value(loss)[[0, 0]];
        let g = tape.backward(loss);
        let mut grads = ParamSet::new();
        for (name, var) in p.all() {
            let grad = g
                .get(var)
                .cloned()
                .unwrap_or_else(|| Array2::zeros(tape.value(var).dim()));
            grads.insert(name, grad);
        }
        Ok((value, grads))
    }

    /// One optimizer step in place; returns the loss before the update.
    pub fn step_in_place(&mut self, batch: &PairBatch) -> Result<f64> {
        if self.model.config.loss == LossKind::Triplet && batch.len() < 2 {
            return Err(Error::Invalid("triplet loss needs a batch of at least 2".into()));
        }
        let step = self.step + 1;
        let (loss, grads) = self.loss_and_grads(batch)?;
        if !loss.is_finite() {
            return Err(Error::NonFinite {
                what: "loss".into(),
                step,
            });
        }
        if !grads.all_finite() {
            return Err(Error::NonFinite {
                what: "gradient".into(),
                step,
            });
        }
        let AdamConfig {
            lr,
            beta1,
            beta2,
            eps,
        } = self.adam;
        let bias1 = 1.0 - beta1.powi(step as i32);
        let bias2 = 1.0 - beta2.powi(step as i32);
        for (name, g) in grads.iter() {
            let m = self.first_moment.get_mut(name).expect("moment per parameter");
            m.zip_mut_with(g, |m, &g| *m = beta1 * *m + (1.0 - beta1) * g);
            let v = self.second_moment.get_mut(name).expect("moment per parameter");
            v.zip_mut_with(g, |v, &g| *v = beta2 * *v + (1.0 - beta2) * g * g);
            let (m, v) = (
                self.first_moment.get(name)?.clone(),
                self.second_moment.get(name)?,
            );
            let p = self.model.params.get_mut(name).expect("parameter");
            ndarray::Zip::from(p).and(&m).and(v).for_each(|p, &m, &v| {
                *p -= lr * (m / bias1) / ((v / bias2).sqrt() + eps);
            });
        }
        self.step = step;
        Ok(loss)
    }
}

/// Pure form of a training step: the input state is left untouched.
pub fn train_step(state: &TrainState, batch: &PairBatch) -> Result<(TrainState, f64)> {
    let mut next = state.clone();
    let loss = next.step_in_place(batch)?;
    Ok((next, loss))
}

/// Mini-batch schedule.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    pub batch_size: usize,
    pub steps: u64,
}

impl Schedule {
    pub fn with_steps(self, steps: u64) -> Self {
        Schedule { steps, ..self }
    }
}

/// Training history.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainLog {
    pub losses: Vec<f64>,
}

impl TrainLog {
    pub fn first(&self) -> Option<f64> {
        self.losses.first().copied()
    }

    /// Mean loss over the last `window` steps.
    pub fn tail_mean(&self, window: usize) -> Option<f64> {
        let w = window.min(self.losses.len());
        if w == 0 {
            return None;
        }
        Some(self.losses[self.losses.len() - w..].iter().sum::<f64>() / w as f64)
    }
}

/// Runs `schedule.steps` optimizer steps over `data`. Every epoch visits
/// the pairs in a fresh order drawn from the state's seed; a trailing
/// batch of size 1 is skipped under the triplet loss.
pub fn fit(state: &mut TrainState, data: &PairBatch, schedule: Schedule) -> Result<TrainLog> {
    fit_with(state, data, schedule, |_, _| {})
}

/// [`fit`] with a per-step callback receiving `(step, loss)`.
pub fn fit_with(
    state: &mut TrainState,
    data: &PairBatch,
    schedule: Schedule,
    mut on_step: impl FnMut(u64, f64),
) -> Result<TrainLog> {
    if data.is_empty() {
        return Err(Error::Invalid("no training pairs".into()));
    }
    let bs = schedule.batch_size.max(1).min(data.len());
    let min_batch = if state.model.config.loss == LossKind::Triplet { 2 } else { 1 };
    if bs < min_batch {
        return Err(Error::Invalid("triplet loss needs at least 2 training pairs".into()));
    }
    let full = PairBatch {
        motions: data.motions.trimmed(),
        texts: data.texts.clone(),
    };
    let mut log = TrainLog::default();
    let mut epoch = 0u64;
    while (log.losses.len() as u64) < schedule.steps {
        let mut rng = ChaCha8Rng::seed_from_u64(state.seed ^ epoch.wrapping_mul(0x9E37_79B9_7F4A_7C15));
        let mut order: Vec<usize> = (0..data.len()).collect();
        order.shuffle(&mut rng);
        for chunk in order.chunks(bs) {
            if (log.losses.len() as u64) >= schedule.steps {
                break;
            }
            if chunk.len() < min_batch {
                continue;
            }
            // Both losses are invariant to a joint permutation of the pairs,
            // so a full-batch step can use the stored order.
            let loss = if chunk.len() == data.len() {
                state.step_in_place(&full)?
            } else {
                state.step_in_place(&full.select(chunk))?
            };
            log.losses.push(loss);
            on_step(state.step, loss);
        }
        epoch += 1;
    }
    Ok(log)
}
