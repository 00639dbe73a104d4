//! Mask-aware gated recurrent layers on the tape.
//!
//! Batches are processed step by step; at a step where an item's mask is
//! false its state is carried over unchanged, so padded steps never leak
//! into the final state regardless of direction.
//!
//! LSTM (gate order i, f, g, o):
//!   `c' = σ(f)·c + σ(i)·tanh(g)`, `h' = σ(o)·tanh(c')`
//!
//! GRU (gate order r, z, n):
//!   `n = tanh(x·W_n + b_n + r·(h·U_n + c_n))`, `h' = n + z·(h − n)`

use std::rc::Rc;

use ndarray::Array2;
use rand::Rng;

use crate::params::{glorot, Bound, ParamSet};
use crate::tape::{Tape, Var};

/// Per-step item masks for a batch with the given lengths.
pub fn step_masks(lengths: &[usize], steps: usize) -> Vec<Rc<[bool]>> {
    (0..steps)
        .map(|t| lengths.iter().map(|&l| t < l).collect::<Vec<_>>().into())
        .collect()
}

/// Inputs to a recurrent layer.
pub enum StepInputs {
    /// One `(T·B)×d` matrix, row `t·B + b`.
    Stacked { rows: Var, batch: usize },
    /// One `B×d` matrix per step.
    PerStep(Vec<Var>),
}

impl StepInputs {
    fn steps(&self, tape: &Tape) -> usize {
        match self {
            StepInputs::Stacked { rows, batch } => tape.value(*rows).nrows() / batch,
            StepInputs::PerStep(v) => v.len(),
        }
    }

    /// `x_t·W + b` for every step.
    fn project(&self, tape: &mut Tape, w: Var, b: Var) -> Vec<Var> {
        match self {
            StepInputs::Stacked { rows, batch } => {
                let xw = tape.matmul(*rows, w);
                let xw = tape.add_row(xw, b);
                let steps = tape.value(*rows).nrows() / batch;
                (0..steps)
                    .map(|t| tape.slice_rows(xw, t * batch, *batch))
                    .collect()
            }
            StepInputs::PerStep(xs) => xs
                .iter()
                .map(|x| {
                    let xw = tape.matmul(*x, w);
                    tape.add_row(xw, b)
                })
                .collect(),
        }
    }
}

pub fn init_lstm(ps: &mut ParamSet, rng: &mut impl Rng, name: &str, input: usize, hidden: usize) {
    ps.insert(format!("{name}.w_ih"), glorot(rng, input, 4 * hidden));
    ps.insert(format!("{name}.w_hh"), glorot(rng, hidden, 4 * hidden));
    let mut b = Array2::zeros((1, 4 * hidden));
    // Forget-gate bias starts at 1.
    b.slice_mut(ndarray::s![.., hidden..2 * hidden]).fill(1.0);
    ps.insert(format!("{name}.b"), b);
}

/// Runs one LSTM layer forward in time; returns the hidden state after every step.
pub fn lstm(
    tape: &mut Tape,
    p: &Bound,
    name: &str,
    inputs: &StepInputs,
    masks: &[Rc<[bool]>],
    batch: usize,
) -> Vec<Var> {
    let w_hh = p.var(&format!("{name}.w_hh"));
    let hidden = tape.value(w_hh).nrows();
    let xw = inputs.project(tape, p.var(&format!("{name}.w_ih")), p.var(&format!("{name}.b")));
    debug_assert_eq!(xw.len(), inputs.steps(tape));
    let mut h = tape.constant(Array2::zeros((batch, hidden)));
    let mut c = tape.constant(Array2::zeros((batch, hidden)));
    let mut out = Vec::with_capacity(xw.len());
    for (t, x) in xw.into_iter().enumerate() {
        let hw = tape.matmul(h, w_hh);
        let gates = tape.add(x, hw);
        let i = tape.slice_cols(gates, 0, hidden);
        let i = tape.sigmoid(i);
        let f = tape.slice_cols(gates, hidden, hidden);
        let f = tape.sigmoid(f);
        let g = tape.slice_cols(gates, 2 * hidden, hidden);
        let g = tape.tanh(g);
        let o = tape.slice_cols(gates, 3 * hidden, hidden);
        let o = tape.sigmoid(o);
        let fc = tape.mul(f, c);
        let ig = tape.mul(i, g);
        let c_new = tape.add(fc, ig);
        let tc = tape.tanh(c_new);
        let h_new = tape.mul(o, tc);
        c = tape.select_rows(masks[t].clone(), c_new, c);
        h = tape.select_rows(masks[t].clone(), h_new, h);
        out.push(h);
    }
    out
}

pub fn init_gru(ps: &mut ParamSet, rng: &mut impl Rng, name: &str, input: usize, hidden: usize) {
    ps.insert(format!("{name}.w_ih"), glorot(rng, input, 3 * hidden));
    ps.insert(format!("{name}.w_hh"), glorot(rng, hidden, 3 * hidden));
    ps.insert(format!("{name}.b_ih"), Array2::zeros((1, 3 * hidden)));
    ps.insert(format!("{name}.b_hh"), Array2::zeros((1, 3 * hidden)));
}

/// Runs one GRU layer and returns its final state. With `reverse` the steps
/// are visited last to first.
pub fn gru(
    tape: &mut Tape,
    p: &Bound,
    name: &str,
    inputs: &StepInputs,
    masks: &[Rc<[bool]>],
    batch: usize,
    reverse: bool,
) -> Var {
    let w_hh = p.var(&format!("{name}.w_hh"));
    let b_hh = p.var(&format!("{name}.b_hh"));
    let hidden = tape.value(w_hh).nrows();
    let xw = inputs.project(tape, p.var(&format!("{name}.w_ih")), p.var(&format!("{name}.b_ih")));
    let mut h = tape.constant(Array2::zeros((batch, hidden)));
    let order: Vec<usize> = if reverse {
        (0..xw.len()).rev().collect()
    } else {
        (0..xw.len()).collect()
    };
    for t in order {
        let x = xw[t];
        let hw = tape.matmul(h, w_hh);
        let hw = tape.add_row(hw, b_hh);
        let xr = tape.slice_cols(x, 0, 2 * hidden);
        let hr = tape.slice_cols(hw, 0, 2 * hidden);
        let rz = tape.add(xr, hr);
        let rz = tape.sigmoid(rz);
        let r = tape.slice_cols(rz, 0, hidden);
        let z = tape.slice_cols(rz, hidden, hidden);
        let xn = tape.slice_cols(x, 2 * hidden, hidden);
        let hn = tape.slice_cols(hw, 2 * hidden, hidden);
        let rhn = tape.mul(r, hn);
        let n = tape.add(xn, rhn);
        let n = tape.tanh(n);
        let diff = tape.sub(h, n);
        let zd = tape.mul(z, diff);
        let h_new = tape.add(n, zd);
        h = tape.select_rows(masks[t].clone(), h_new, h);
    }
    h
}
