//! Named parameter tensors shared by every trainable component.

use std::collections::BTreeMap;

use ndarray::Array2;
use rand::Rng;
use rand_distr_free::normal;

use crate::error::{Error, Result};
use crate::tape::{Mat, Tape, Var};

/// Ordered map of parameter name → matrix. Iteration order is the sorted
/// name order, which keeps optimizer updates and checkpoints deterministic.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ParamSet {
    tensors: BTreeMap<String, Mat>,
}

impl ParamSet {
    pub fn new() -> Self {
        ParamSet::default()
    }

    pub fn insert(&mut self, name: impl Into<String>, value: Mat) {
        self.tensors.insert(name.into(), value);
    }

    pub fn get(&self, name: &str) -> Result<&Mat> {
        self.tensors
            .get(name)
            .ok_or_else(|| Error::Invalid(format!("missing parameter `{name}`")))
    }

    pub fn get_mut(&mut self, name: &str) -> Option<&mut Mat> {
        self.tensors.get_mut(name)
    }

    pub fn contains(&self, name: &str) -> bool {
        self.tensors.contains_key(name)
    }

    pub fn len(&self) -> usize {
        self.tensors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tensors.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &Mat)> {
        self.tensors.iter()
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = (&String, &mut Mat)> {
        self.tensors.iter_mut()
    }

    pub fn names(&self) -> impl Iterator<Item = &String> {
        self.tensors.keys()
    }

    pub fn scalar_count(&self) -> usize {
        self.tensors.values().map(|m| m.len()).sum()
    }

    /// Merges `other` under `prefix.` names.
    pub fn extend_prefixed(&mut self, prefix: &str, other: ParamSet) {
        for (k, v) in other.tensors {
            self.tensors.insert(format!("{prefix}.{k}"), v);
        }
    }

    /// The subset of tensors under `prefix.`, with the prefix stripped.
    pub fn sub(&self, prefix: &str) -> ParamSet {
        let p = format!("{prefix}.");
        ParamSet {
            tensors: self
                .tensors
                .iter()
                .filter_map(|(k, v)| k.strip_prefix(&p).map(|s| (s.to_string(), v.clone())))
                .collect(),
        }
    }

    pub fn map_values(&self, f: impl Fn(&Mat) -> Mat) -> ParamSet {
        ParamSet {
            tensors: self.tensors.iter().map(|(k, v)| (k.clone(), f(v))).collect(),
        }
    }

    pub fn all_finite(&self) -> bool {
        self.tensors.values().all(|m| m.iter().all(|v| v.is_finite()))
    }
}

/// Parameters registered as tape leaves for one forward pass.
pub struct Bound<'p> {
    params: &'p ParamSet,
    vars: BTreeMap<&'p str, Var>,
    prefix: String,
}

impl<'p> Bound<'p> {
    pub fn new(tape: &mut Tape, params: &'p ParamSet) -> Self {
        let vars = params
            .tensors
            .iter()
            .map(|(k, v)| (k.as_str(), tape.param(v.clone())))
            .collect();
        Bound {
            params,
            vars,
            prefix: String::new(),
        }
    }

    /// Like [`Bound::new`] but every leaf is a constant (inference only).
    pub fn frozen(tape: &mut Tape, params: &'p ParamSet) -> Self {
        let vars = params
            .tensors
            .iter()
            .map(|(k, v)| (k.as_str(), tape.constant(v.clone())))
            .collect();
        Bound {
            params,
            vars,
            prefix: String::new(),
        }
    }

    /// A view in which `var("x")` resolves to `prefix.x`.
    pub fn scoped(&self, prefix: &str) -> Bound<'p> {
        Bound {
            params: self.params,
            vars: self.vars.clone(),
            prefix: if self.prefix.is_empty() {
                format!("{prefix}.")
            } else {
                format!("{}{prefix}.", self.prefix)
            },
        }
    }

    pub fn var(&self, name: &str) -> Var {
        let full = format!("{}{name}", self.prefix);
        *self
            .vars
            .get(full.as_str())
            .unwrap_or_else(|| panic!("parameter `{full}` not bound"))
    }

    pub fn value(&self, name: &str) -> &'p Mat {
        let full = format!("{}{name}", self.prefix);
        self.params
            .tensors
            .get(full.as_str())
            .unwrap_or_else(|| panic!("parameter `{full}` not bound"))
    }

    /// Every bound `(name, var)` pair, in name order.
    pub fn all(&self) -> impl Iterator<Item = (&'p str, Var)> + '_ {
        self.vars.iter().map(|(k, v)| (*k, *v))
    }
}

/// Glorot-uniform `rows×cols` matrix.
pub fn glorot(rng: &mut impl Rng, rows: usize, cols: usize) -> Mat {
    let limit = (6.0 / (rows + cols) as f64).sqrt();
    Array2::from_shape_fn((rows, cols), |_| rng.random_range(-limit..limit))
}

/// Gaussian matrix with the given standard deviation.
pub fn gaussian(rng: &mut impl Rng, rows: usize, cols: usize, std: f64) -> Mat {
    Array2::from_shape_fn((rows, cols), |_| normal(rng) * std)
}

pub(crate) mod rand_distr_free {
    use rand::Rng;

    /// Standard normal sample via Box–Muller.
    pub fn normal(rng: &mut impl Rng) -> f64 {
        let u1: f64 = rng.random_range(f64::MIN_POSITIVE..1.0);
        let u2: f64 = rng.random();
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }
}

/// Affine layer `x·W + b` with weights `{name}.w` (`in×out`) and `{name}.b` (`1×out`).
pub fn linear(tape: &mut Tape, p: &Bound, name: &str, x: Var) -> Var {
    let w = p.var(&format!("{name}.w"));
    let b = p.var(&format!("{name}.b"));
    let xw = tape.matmul(x, w);
    tape.add_row(xw, b)
}

pub fn init_linear(ps: &mut ParamSet, rng: &mut impl Rng, name: &str, input: usize, output: usize) {
    ps.insert(format!("{name}.w"), glorot(rng, input, output));
    ps.insert(format!("{name}.b"), Array2::zeros((1, output)));
}

/// Per-row layer normalization followed by learned gain and bias.
pub fn layer_norm(tape: &mut Tape, p: &Bound, name: &str, x: Var) -> Var {
    let n = tape.layer_norm(x);
    let g = tape.mul_row(n, p.var(&format!("{name}.gain")));
    tape.add_row(g, p.var(&format!("{name}.bias")))
}

pub fn init_layer_norm(ps: &mut ParamSet, name: &str, width: usize) {
    ps.insert(format!("{name}.gain"), Array2::ones((1, width)));
    ps.insert(format!("{name}.bias"), Array2::zeros((1, width)));
}
