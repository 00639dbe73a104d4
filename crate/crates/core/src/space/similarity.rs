use ndarray::{Array2, ArrayView1};

use crate::error::{Error, Result};

/// `u·v / (‖u‖‖v‖)`.
pub fn cosine_similarity(u: ArrayView1<f64>, v: ArrayView1<f64>) -> Result<f64> {
    if u.len() != v.len() {
        return Err(Error::Shape(format!("vector lengths differ: {} vs {}", u.len(), v.len())));
    }
    let nu = u.dot(&u).sqrt();
    let nv = v.dot(&v).sqrt();
    if nu == 0.0 || nv == 0.0 {
        return Err(Error::Invalid("cosine similarity of a zero vector".into()));
    }
    Ok(u.dot(&v) / (nu * nv))
}

/// `B×B` matrix of cosine similarities between motion rows and caption rows.
pub fn similarity_matrix(motions: &Array2<f64>, captions: &Array2<f64>) -> Result<Array2<f64>> {
    let mut s = Array2::zeros((motions.nrows(), captions.nrows()));
    for (i, m) in motions.rows().into_iter().enumerate() {
        for (j, c) in captions.rows().into_iter().enumerate() {
            s[[i, j]] = cosine_similarity(m, c)?;
        }
    }
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn examples() {
        let u = array![0.3, -2.0, 1.1];
        assert!((cosine_similarity(u.view(), u.view()).unwrap() - 1.0).abs() < 1e-15);
        let (a, b, c) = (array![1.0, 0.0], array![0.0, 1.0], array![1.0, 1.0]);
        assert_eq!(cosine_similarity(a.view(), b.view()).unwrap(), 0.0);
        assert!((cosine_similarity(a.view(), c.view()).unwrap() - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-8);
    }

    #[test]
    fn zero_vector_is_rejected() {
        let z = array![0.0, 0.0];
        let a = array![1.0, 0.0];
        assert!(cosine_similarity(z.view(), a.view()).is_err());
    }
}
