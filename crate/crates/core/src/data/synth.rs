//! Gaussian-cluster paired datasets and preprocessing.

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand_distr::{Distribution, Normal, StandardNormal};

use super::seed::{derive_seed, rng, stream};
use super::{FeatureMatrix, LabelVector, PairedDataset};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub class_count: usize,
    pub per_class: usize,
    pub dx: usize,
    pub dy: usize,
    /// Standard deviation of the isotropic noise around each class center.
    pub spread: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            class_count: 8,
            per_class: 100,
            dx: 16,
            dy: 12,
            spread: 0.6,
            seed: 0,
        }
    }
}

/// One standard-normal center per class and modality; each sample is its
/// class center plus `N(0, spread²)` noise. Rows are grouped by class.
pub fn generate_synthetic(cfg: &SynthConfig) -> Result<PairedDataset> {
    if cfg.class_count == 0 || cfg.per_class == 0 {
        return Err(Error::InvalidArgument(
            "class count and samples per class must be >= 1".into(),
        ));
    }
    if cfg.dx < 2 || cfg.dy < 2 {
        return Err(Error::InvalidArgument("feature dimensions must be >= 2".into()));
    }
    if !(cfg.spread.is_finite() && cfg.spread > 0.0) {
        return Err(Error::InvalidArgument(format!("spread must be positive, got {}", cfg.spread)));
    }
    let n = cfg.class_count * cfg.per_class;
    let noise = Normal::new(0.0, cfg.spread).expect("positive spread");
    let modality = |dim: usize, tag: u64| {
        let mut r = rng(derive_seed(cfg.seed, &[stream::SYNTH, tag]));
        let centers = DMatrix::<f64>::from_fn(cfg.class_count, dim, |_, _| StandardNormal.sample(&mut r));
        let mut m = DMatrix::zeros(n, dim);
        for i in 0..n {
            for j in 0..dim {
                m[(i, j)] = centers[(i / cfg.per_class, j)] + noise.sample(&mut r);
            }
        }
        m
    };
    let x = FeatureMatrix::new(modality(cfg.dx, 0))?;
    let y = FeatureMatrix::new(modality(cfg.dy, 1))?;
    let labels = LabelVector::new((0..n).map(|i| i / cfg.per_class).collect(), cfg.class_count)?;
    PairedDataset::new(x, y, labels)
}

/// Per-class random split; `ceil(train_fraction * n_c)` samples of each
/// class go to the training side. Both sides keep ascending row order.
pub fn train_test_split(
    data: &PairedDataset,
    train_fraction: f64,
    seed: u64,
) -> Result<(PairedDataset, PairedDataset)> {
    if !(0.0..=1.0).contains(&train_fraction) {
        return Err(Error::InvalidArgument(format!(
            "train fraction must lie in [0, 1], got {train_fraction}"
        )));
    }
    let mut r = rng(derive_seed(seed, &[stream::SPLIT]));
    let (mut train, mut test) = (Vec::new(), Vec::new());
    for class in 0..data.class_count() {
        let mut idx = data.labels.indices_of(class);
        idx.shuffle(&mut r);
        let cut = ((idx.len() as f64) * train_fraction).ceil() as usize;
        train.extend_from_slice(&idx[..cut]);
        test.extend_from_slice(&idx[cut..]);
    }
    if train.is_empty() || test.is_empty() {
        return Err(Error::InvalidArgument("split leaves one side empty".into()));
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok((data.subset(&train), data.subset(&test)))
}

/// Per-dimension zero-mean, unit-variance scaling fitted on training data.
#[derive(Debug, Clone, PartialEq)]
pub struct Standardizer {
    mean: Vec<f64>,
    scale: Vec<f64>,
}

impl Standardizer {
    pub fn fit(m: &FeatureMatrix) -> Self {
        let m = m.as_matrix();
        let n = m.nrows() as f64;
        let mut mean = Vec::with_capacity(m.ncols());
        let mut scale = Vec::with_capacity(m.ncols());
        for col in m.column_iter() {
            let mu = col.sum() / n;
            let var = col.iter().map(|v| (v - mu).powi(2)).sum::<f64>() / n;
            mean.push(mu);
            // constant columns are only centered
            scale.push(if var > 0.0 { var.sqrt() } else { 1.0 });
        }
        Self { mean, scale }
    }

    pub fn apply(&self, m: &FeatureMatrix) -> Result<FeatureMatrix> {
        if m.cols() != self.mean.len() {
            return Err(Error::shape("standardizer input columns", self.mean.len(), m.cols()));
        }
        let src = m.as_matrix();
        FeatureMatrix::new(DMatrix::from_fn(src.nrows(), src.ncols(), |i, j| {
            (src[(i, j)] - self.mean[j]) / self.scale[j]
        }))
    }
}
