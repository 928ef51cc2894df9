use nalgebra::DMatrix;
use rand::seq::SliceRandom;

use super::{solve, Gram, IncrementalVariant, LinearHashFunction};
use crate::data::seed;
use crate::data::{FeatureMatrix, LabelVector};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct CvConfig {
    pub folds: usize,
    pub lambda_grid: Vec<f64>,
    pub gamma_grid: Vec<f64>,
    /// Samples drawn from every class into the validation pool.
    pub per_class_validation_count: usize,
    pub seed: u64,
}

pub fn log_grid() -> Vec<f64> {
    (-3..=3).map(|e| 10f64.powi(e)).collect()
}

impl Default for CvConfig {
    fn default() -> Self {
        Self {
            folds: 5,
            lambda_grid: log_grid(),
            gamma_grid: log_grid(),
            per_class_validation_count: 10,
            seed: 0,
        }
    }
}

impl CvConfig {
    pub fn validate(&self) -> Result<()> {
        if self.folds < 2 {
            return Err(Error::InvalidArgument(format!("need at least 2 folds, got {}", self.folds)));
        }
        if self.lambda_grid.is_empty() || self.gamma_grid.is_empty() {
            return Err(Error::InvalidArgument("CV grids must be non-empty".into()));
        }
        if self.lambda_grid.iter().chain(&self.gamma_grid).any(|v| !(*v > 0.0 && v.is_finite())) {
            return Err(Error::InvalidArgument("CV grid values must be positive".into()));
        }
        if self.per_class_validation_count == 0 {
            return Err(Error::InvalidArgument("per-class validation count must be >= 1".into()));
        }
        Ok(())
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        Self { seed, ..self.clone() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CvChoice {
    pub lambda: f64,
    pub gamma: f64,
    /// Mean squared code-prediction error on the held-out folds.
    pub score: f64,
}

/// `per_class` randomly chosen samples of every class present in `labels`,
/// grouped by class (ascending class order, random order within a class).
pub fn balanced_validation_pool(
    labels: &LabelVector,
    per_class: usize,
    seed: u64,
) -> Result<Vec<Vec<usize>>> {
    let mut rng = seed::rng(seed);
    let mut pool = Vec::new();
    for class in 0..labels.class_count() {
        let mut idx = labels.indices_of(class);
        if idx.is_empty() {
            continue;
        }
        if idx.len() < per_class {
            return Err(Error::InsufficientSamples {
                class,
                available: idx.len(),
                required: per_class,
            });
        }
        idx.shuffle(&mut rng);
        idx.truncate(per_class);
        pool.push(idx);
    }
    Ok(pool)
}

fn sorted(grid: &[f64]) -> Vec<f64> {
    let mut g = grid.to_vec();
    g.sort_by(f64::total_cmp);
    g.dedup();
    g
}

/// Grid search over `(λ, γ)` by k-fold rotation of a class-balanced
/// validation pool.
///
/// Each fold holds out an equal share of every class's pool samples, fits on
/// all remaining rows and scores the squared error between `X W` and the
/// relaxed codes on the held-out rows. Ties go to the smaller `λ`, then the
/// smaller `γ`. With `old == None` this tunes a base fit and `γ` is 0.
pub fn cross_validate(
    x: &FeatureMatrix,
    codes: &DMatrix<f64>,
    labels: &LabelVector,
    old: Option<(&LinearHashFunction, IncrementalVariant)>,
    cfg: &CvConfig,
) -> Result<CvChoice> {
    cfg.validate()?;
    if x.rows() != codes.nrows() || x.rows() != labels.len() {
        return Err(Error::shape("cross-validation rows", x.rows(), codes.nrows().max(labels.len())));
    }
    let pool = balanced_validation_pool(labels, cfg.per_class_validation_count, cfg.seed)?;
    let mut folds = vec![Vec::new(); cfg.folds];
    for class_pool in &pool {
        for (p, &i) in class_pool.iter().enumerate() {
            folds[p % cfg.folds].push(i);
        }
    }
    folds.retain(|f| !f.is_empty());

    let xm = x.as_matrix();
    let full = Gram::new(xm, codes);
    let splits: Vec<(Gram, DMatrix<f64>, DMatrix<f64>)> = folds
        .iter()
        .map(|held| {
            let hx = xm.select_rows(held);
            let ha = codes.select_rows(held);
            let h = Gram::new(&hx, &ha);
            let train = Gram {
                xtx: &full.xtx - h.xtx,
                xta: &full.xta - h.xta,
            };
            (train, hx, ha)
        })
        .collect();

    let gammas = match old {
        Some(_) => sorted(&cfg.gamma_grid),
        None => vec![0.0],
    };
    let old_w = old.map(|(f, v)| (&f.weights, v));
    let mut best: Option<CvChoice> = None;
    for &lambda in &sorted(&cfg.lambda_grid) {
        for &gamma in &gammas {
            let (mut sse, mut count) = (0.0, 0usize);
            for (train, hx, ha) in &splits {
                let w = solve(train, old_w, lambda, gamma)?;
                sse += (hx * w - ha).norm_squared();
                count += ha.len();
            }
            let score = sse / count as f64;
            if best.is_none_or(|b| score < b.score) {
                best = Some(CvChoice { lambda, gamma, score });
            }
        }
    }
    Ok(best.expect("grids are non-empty"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn linear_problem(seed: u64) -> (FeatureMatrix, DMatrix<f64>, LabelVector) {
        let mut rng = seed::rng(seed);
        let x = DMatrix::from_fn(60, 4, |_, _| rng.random_range(-1.0..1.0));
        let w = DMatrix::from_fn(4, 3, |_, _| rng.random_range(-0.2..0.2));
        let codes = &x * w;
        let labels = LabelVector::new((0..60).map(|i| i % 3).collect(), 3).unwrap();
        (FeatureMatrix::new(x).unwrap(), codes, labels)
    }

    #[test]
    fn single_point_grid() {
        let (x, codes, labels) = linear_problem(1);
        let cfg = CvConfig { lambda_grid: vec![0.7], gamma_grid: vec![3.0], ..Default::default() };
        let base = super::super::fit_base(&x, &codes, 1.0).unwrap();
        let c = cross_validate(&x, &codes, &labels, Some((&base, IncrementalVariant::Combined)), &cfg).unwrap();
        assert_eq!((c.lambda, c.gamma), (0.7, 3.0));
        let c = cross_validate(&x, &codes, &labels, None, &cfg).unwrap();
        assert_eq!((c.lambda, c.gamma), (0.7, 0.0));
    }

    #[test]
    fn noiseless_linear_target_prefers_smallest_lambda() {
        let (x, codes, labels) = linear_problem(2);
        let cfg = CvConfig::default();
        let c = cross_validate(&x, &codes, &labels, None, &cfg).unwrap();
        assert_eq!(c.lambda, 1e-3);
        // every cell scored independently is no better than the chosen one
        for lambda in log_grid() {
            let single = CvConfig { lambda_grid: vec![lambda], ..cfg.clone() };
            let s = cross_validate(&x, &codes, &labels, None, &single).unwrap();
            assert!(s.score >= c.score);
        }
    }

    #[test]
    fn shuffled_rows_select_same_cell() {
        let (x, codes, labels) = linear_problem(3);
        let cfg = CvConfig { seed: 9, ..Default::default() };
        let a = cross_validate(&x, &codes, &labels, None, &cfg).unwrap();
        let perm: Vec<usize> = (0..60).rev().collect();
        let b = cross_validate(&x.select_rows(&perm), &codes.select_rows(&perm), &labels.select(&perm), None, &cfg).unwrap();
        assert_eq!((a.lambda, a.gamma), (b.lambda, b.gamma));
        assert_eq!(a, cross_validate(&x, &codes, &labels, None, &cfg).unwrap());
    }

    #[test]
    fn insufficient_class_is_rejected() {
        let (x, codes, _) = linear_problem(4);
        let mut l: Vec<usize> = vec![0; 60];
        l[0] = 1;
        let labels = LabelVector::new(l, 2).unwrap();
        let err = cross_validate(&x, &codes, &labels, None, &CvConfig::default()).unwrap_err();
        assert!(matches!(err, Error::InsufficientSamples { class: 1, .. }));
    }

    #[test]
    fn pool_is_balanced() {
        let labels = LabelVector::new((0..40).map(|i| usize::from(i >= 30)).collect(), 3).unwrap();
        let pool = balanced_validation_pool(&labels, 7, 0).unwrap();
        assert_eq!(pool.len(), 2);
        assert!(pool.iter().all(|p| p.len() == 7));
    }
}
