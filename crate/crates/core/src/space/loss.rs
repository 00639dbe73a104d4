//! The two metric-learning objectives over a `B×B` similarity matrix whose
//! entry `(i, j)` is the similarity of motion `i` and caption `j`.

use ndarray::Array2;

use crate::error::{Error, Result};

/// Default triplet margin.
pub const DEFAULT_MARGIN: f64 = 0.2;
/// Initial InfoNCE temperature.
pub const DEFAULT_TEMPERATURE: f64 = 0.07;

fn check_square(sim: &Array2<f64>) -> Result<usize> {
    let (r, c) = sim.dim();
    if r != c {
        return Err(Error::Shape(format!("similarity matrix must be square, got {r}×{c}")));
    }
    Ok(r)
}

/// Symmetric hardest-negative triplet loss:
/// `(1/B) Σ_i max_{j≠i}[α + S_ij − S_ii]_+ + max_{j≠i}[α + S_ji − S_ii]_+`.
pub fn triplet_loss(sim: &Array2<f64>, margin: f64) -> Result<f64> {
    let b = check_square(sim)?;
    if b < 2 {
        return Err(Error::Invalid(
            "triplet loss needs a batch of at least 2 (no negatives exist)".into(),
        ));
    }
    if !(margin >= 0.0) {
        return Err(Error::Invalid(format!("margin must be ≥ 0, got {margin}")));
    }
    Ok(triplet_with_grad(sim, margin).0)
}

/// Index of the largest off-diagonal entry; the first one wins ties.
fn hardest(values: impl Iterator<Item = f64>, skip: usize) -> (usize, f64) {
    let mut best = (usize::MAX, f64::NEG_INFINITY);
    for (j, v) in values.enumerate() {
        if j != skip && v > best.1 {
            best = (j, v);
        }
    }
    best
}

/// Loss and `dL/dS`. The hinge subgradient is 0 at exactly 0.
pub(crate) fn triplet_with_grad(sim: &Array2<f64>, margin: f64) -> (f64, Array2<f64>) {
    let b = sim.nrows();
    let mut grad = Array2::zeros(sim.dim());
    if b < 2 {
        return (0.0, grad);
    }
    let inv_b = 1.0 / b as f64;
    let mut total = 0.0;
    for i in 0..b {
        let pos = sim[[i, i]];
        let (j, neg) = hardest(sim.row(i).iter().copied(), i);
        let arg = margin + neg - pos;
        if arg > 0.0 {
            total += arg;
            grad[[i, j]] += inv_b;
            grad[[i, i]] -= inv_b;
        }
        let (j, neg) = hardest(sim.column(i).iter().copied(), i);
        let arg = margin + neg - pos;
        if arg > 0.0 {
            total += arg;
            grad[[j, i]] += inv_b;
            grad[[i, i]] -= inv_b;
        }
    }
    (total * inv_b, grad)
}

/// Smallest distance of any hinge argument or hardest-negative gap from a
/// non-differentiable point. Finite differences are only meaningful when
/// this is comfortably larger than the probe step.
pub fn triplet_kink_distance(sim: &Array2<f64>, margin: f64) -> f64 {
    let b = sim.nrows();
    let mut dist = f64::INFINITY;
    let mut gap = |vals: Vec<f64>, i: usize| {
        let (j, best) = hardest(vals.iter().copied(), i);
        let runner_up = vals
            .iter()
            .enumerate()
            .filter(|(k, _)| *k != i && *k != j)
            .map(|(_, v)| *v)
            .fold(f64::NEG_INFINITY, f64::max);
        dist = dist.min((margin + best - vals[i]).abs());
        dist = dist.min(best - runner_up);
    };
    for i in 0..b {
        gap(sim.row(i).to_vec(), i);
        gap(sim.column(i).to_vec(), i);
    }
    dist
}

/// Symmetric InfoNCE:
/// `−(1/B) Σ_i [log softmax_row(S/τ)_ii + log softmax_col(S/τ)_ii]`.
pub fn infonce_loss(sim: &Array2<f64>, temperature: f64) -> Result<f64> {
    let b = check_square(sim)?;
    if b < 1 {
        return Err(Error::Invalid("infonce needs a non-empty batch".into()));
    }
    if !(temperature > 0.0) {
        return Err(Error::Invalid(format!(
            "temperature must be > 0, got {temperature}"
        )));
    }
    Ok(infonce_with_grad(sim, temperature).0)
}

fn log_sum_exp(xs: impl Iterator<Item = f64> + Clone) -> f64 {
    let m = xs.clone().fold(f64::NEG_INFINITY, f64::max);
    m + xs.map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// Loss and gradient with respect to the logits `S/τ`.
pub(crate) fn infonce_with_grad(sim: &Array2<f64>, temperature: f64) -> (f64, Array2<f64>) {
    let b = sim.nrows();
    let logits = sim / temperature;
    let inv_b = 1.0 / b as f64;
    let mut grad = Array2::zeros(sim.dim());
    let mut total = 0.0;
    for i in 0..b {
        let row = logits.row(i);
        let lse = log_sum_exp(row.iter().copied());
        total += lse - logits[[i, i]];
        for j in 0..b {
            grad[[i, j]] += (row[j] - lse).exp() * inv_b;
        }
        grad[[i, i]] -= inv_b;

        let col = logits.column(i);
        let lse = log_sum_exp(col.iter().copied());
        total += lse - logits[[i, i]];
        for j in 0..b {
            grad[[j, i]] += (col[j] - lse).exp() * inv_b;
        }
        grad[[i, i]] -= inv_b;
    }
    (total * inv_b, grad)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn triplet_examples() {
        let s = array![[0.9, 0.1], [0.2, 0.8]];
        assert_eq!(triplet_loss(&s, 0.2).unwrap(), 0.0);

        let s = array![[0.5, 0.6], [0.4, 0.5]];
        assert!((triplet_loss(&s, 0.2).unwrap() - 0.4).abs() < 1e-12);

        let s = Array2::from_elem((5, 5), 0.3);
        assert!((triplet_loss(&s, 0.2).unwrap() - 0.4).abs() < 1e-12);
    }

    #[test]
    fn triplet_rejects_singleton_batch() {
        let s = array![[1.0]];
        assert!(triplet_loss(&s, 0.2).is_err());
    }

    #[test]
    fn infonce_examples() {
        assert_eq!(infonce_loss(&array![[0.37]], 0.5).unwrap(), 0.0);

        let s = Array2::from_elem((2, 2), 0.1);
        assert!((infonce_loss(&s, 0.07).unwrap() - 1.386_294_4).abs() < 1e-6);

        let s = array![[1.0, 0.0], [0.0, 1.0]];
        assert!((infonce_loss(&s, 1.0).unwrap() - 0.626_523_4).abs() < 1e-6);
    }

    #[test]
    fn infonce_rejects_non_positive_temperature() {
        let s = array![[1.0, 0.0], [0.0, 1.0]];
        assert!(infonce_loss(&s, 0.0).is_err());
        assert!(infonce_loss(&s, -1.0).is_err());
    }

    #[test]
    fn kink_distance_flags_ties() {
        let s = array![[0.5, 0.3, 0.3], [0.1, 0.5, 0.2], [0.0, 0.1, 0.9]];
        assert_eq!(triplet_kink_distance(&s, 0.2), 0.0);
    }
}
