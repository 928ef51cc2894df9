use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Probabilities are floored here before taking the log.
pub const LOG_FLOOR: f64 = 1e-12;

/// `Σ (h_x − A)² + Σ (h_y − B)²` over a batch.
pub fn hash_loss(
    hash_x: &DMatrix<f64>,
    target_a: &DMatrix<f64>,
    hash_y: &DMatrix<f64>,
    target_b: &DMatrix<f64>,
) -> Result<f64> {
    if hash_x.shape() != target_a.shape() || hash_y.shape() != target_b.shape() {
        return Err(Error::shape(
            "hash loss operands",
            format!("{:?}/{:?}", hash_x.shape(), hash_y.shape()),
            format!("{:?}/{:?}", target_a.shape(), target_b.shape()),
        ));
    }
    Ok((hash_x - target_a).norm_squared() + (hash_y - target_b).norm_squared())
}

/// Per-class weights `w_j = N / n_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassWeights(pub Vec<f64>);

impl ClassWeights {
    pub fn uniform(class_count: usize) -> Self {
        Self(vec![1.0; class_count])
    }

    pub fn get(&self, class: usize) -> f64 {
        self.0[class]
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

pub fn compute_class_weights(labels: &[usize], class_count: usize) -> Result<ClassWeights> {
    let mut counts = vec![0usize; class_count];
    for &l in labels {
        if l >= class_count {
            return Err(Error::InvalidArgument(format!("label {l} out of range for {class_count} classes")));
        }
        counts[l] += 1;
    }
    if let Some(empty) = counts.iter().position(|&c| c == 0) {
        return Err(Error::EmptyClass(empty));
    }
    let total = labels.len() as f64;
    Ok(ClassWeights(counts.iter().map(|&n| total / n as f64).collect()))
}

/// `−Σ_i w_{l_i} (log p^x_{i,l_i} + log p^y_{i,l_i})`; plain cross-entropy
/// when `weights` is `None`.
pub fn weighted_ce_loss(
    probs_x: &DMatrix<f64>,
    probs_y: &DMatrix<f64>,
    labels: &[usize],
    weights: Option<&ClassWeights>,
) -> Result<f64> {
    if probs_x.shape() != probs_y.shape() || probs_x.nrows() != labels.len() {
        return Err(Error::shape(
            "cross-entropy operands",
            format!("{} rows", labels.len()),
            format!("{:?}/{:?}", probs_x.shape(), probs_y.shape()),
        ));
    }
    let classes = probs_x.ncols();
    if let Some(w) = weights {
        if w.len() != classes {
            return Err(Error::shape("class weights", classes, w.len()));
        }
    }
    let mut loss = 0.0;
    for (i, &l) in labels.iter().enumerate() {
        if l >= classes {
            return Err(Error::InvalidArgument(format!("label {l} out of range for {classes} classes")));
        }
        let w = weights.map_or(1.0, |w| w.get(l));
        loss -= w * (probs_x[(i, l)].max(LOG_FLOOR).ln() + probs_y[(i, l)].max(LOG_FLOOR).ln());
    }
    Ok(loss)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hash_loss_arithmetic() {
        let a = DMatrix::from_element(2, 3, 0.5);
        assert_eq!(hash_loss(&a, &a, &a, &a).unwrap(), 0.0);
        let mut off = a.clone();
        off[(1, 2)] = 1.0;
        assert_eq!(hash_loss(&a, &a, &off, &a).unwrap(), 0.25);
        assert!(hash_loss(&a, &DMatrix::zeros(3, 2), &a, &a).is_err());
    }

    #[test]
    fn cross_entropy_values() {
        let onehot = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 1.0]);
        assert_eq!(weighted_ce_loss(&onehot, &onehot, &[0, 1], None).unwrap(), 0.0);
        let uniform = DMatrix::from_element(1, 2, 0.5);
        let l = weighted_ce_loss(&uniform, &uniform, &[0], None).unwrap();
        assert!((l - 1.3862943611198906).abs() < 1e-15);
    }

    #[test]
    fn zero_probability_is_floored() {
        let p = DMatrix::from_row_slice(1, 2, &[0.0, 1.0]);
        let l = weighted_ce_loss(&p, &p, &[0], None).unwrap();
        assert!((l + 2.0 * LOG_FLOOR.ln()).abs() < 1e-12);
    }

    #[test]
    fn class_weight_formula() {
        assert_eq!(compute_class_weights(&[0, 1], 2).unwrap().0, vec![2.0, 2.0]);
        assert_eq!(compute_class_weights(&[0, 0, 0, 1], 2).unwrap().0, vec![4.0 / 3.0, 4.0]);
        let mut labels = vec![0; 90];
        labels.extend(vec![1; 10]);
        assert_eq!(compute_class_weights(&labels, 2).unwrap().0, vec![100.0 / 90.0, 10.0]);
        assert!(matches!(compute_class_weights(&[0, 0], 2), Err(Error::EmptyClass(1))));
    }
}
