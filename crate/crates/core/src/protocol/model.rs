use std::fmt;
use std::str::FromStr;

use crate::codes::{BinaryCodeMatrix, RelaxedCodeMatrix};
use crate::data::seed::{derive_seed, stream};
use crate::data::{FeatureMatrix, LabelVector};
use crate::error::{Error, Result};
use crate::linfn::{self, CvConfig, IncrementalVariant, LinearHashFunction};
use crate::mlp::{self, MlpHashFunction, MlpPair, MlpShape, TrainConfig};

/// Hash-function family used in stage two.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    /// Ridge regression; the variant governs incremental updates.
    Ridge(IncrementalVariant),
    Deep,
}

impl Method {
    pub const SELECTORS: &'static str = "lr1, lr2, lr3, mlp";
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Method::Ridge(v) => write!(f, "lr{v}"),
            Method::Deep => f.write_str("mlp"),
        }
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "lr1" => Ok(Method::Ridge(IncrementalVariant::Weights)),
            "lr2" => Ok(Method::Ridge(IncrementalVariant::Outputs)),
            "lr3" => Ok(Method::Ridge(IncrementalVariant::Combined)),
            "mlp" => Ok(Method::Deep),
            other => Err(Error::InvalidArgument(format!(
                "unknown method {other:?}; valid selectors: {}",
                Method::SELECTORS
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MlpConfig {
    pub hidden: (usize, usize),
    pub dropout: f64,
    /// Used for networks trained from scratch.
    pub base: TrainConfig,
    /// Used when adapting an expanded network to new classes.
    pub incremental: TrainConfig,
}

impl Default for MlpConfig {
    fn default() -> Self {
        let base = TrainConfig::default();
        Self {
            hidden: (64, 32),
            dropout: 0.5,
            incremental: TrainConfig {
                use_class_weights: true,
                use_imbalanced_sampler: true,
                ..base.clone()
            },
            base,
        }
    }
}

/// Trained hash functions for both modalities.
#[derive(Debug, Clone, PartialEq)]
pub enum HashModel {
    Linear {
        x: LinearHashFunction,
        y: LinearHashFunction,
    },
    Deep(Box<MlpPair>),
}

impl HashModel {
    pub fn encode(&self, x: &FeatureMatrix, y: &FeatureMatrix) -> Result<(BinaryCodeMatrix, BinaryCodeMatrix)> {
        match self {
            HashModel::Linear { x: fx, y: fy } => Ok((linfn::apply(fx, x)?, linfn::apply(fy, y)?)),
            HashModel::Deep(pair) => Ok((pair.x.hash(x)?, pair.y.hash(y)?)),
        }
    }
}

/// Training inputs for one fit: features, relaxed codes and labels.
pub(crate) struct FitData<'a> {
    pub x: &'a FeatureMatrix,
    pub y: &'a FeatureMatrix,
    pub a: &'a RelaxedCodeMatrix,
    pub b: &'a RelaxedCodeMatrix,
    pub labels: &'a LabelVector,
}

fn cv_for(labels: &LabelVector, cv: &CvConfig, seed: u64) -> CvConfig {
    let smallest = labels.counts().into_iter().filter(|&c| c > 0).min().unwrap_or(1);
    CvConfig {
        per_class_validation_count: cv.per_class_validation_count.min(smallest),
        ..cv.with_seed(seed)
    }
}

fn fit_ridge(
    data: &FitData<'_>,
    old: Option<(&LinearHashFunction, &LinearHashFunction, IncrementalVariant)>,
    cv: &CvConfig,
    seed: u64,
) -> Result<HashModel> {
    let cv_x = cv_for(data.labels, cv, derive_seed(seed, &[stream::CV, 0]));
    let cv_y = cv_for(data.labels, cv, derive_seed(seed, &[stream::CV, 1]));
    let (a, b) = (data.a.as_matrix(), data.b.as_matrix());
    match old {
        None => {
            let cx = linfn::cross_validate(data.x, a, data.labels, None, &cv_x)?;
            let cy = linfn::cross_validate(data.y, b, data.labels, None, &cv_y)?;
            Ok(HashModel::Linear {
                x: linfn::fit_base(data.x, a, cx.lambda)?,
                y: linfn::fit_base(data.y, b, cy.lambda)?,
            })
        }
        Some((old_x, old_y, variant)) => {
            let cx = linfn::cross_validate(data.x, a, data.labels, Some((old_x, variant)), &cv_x)?;
            let cy = linfn::cross_validate(data.y, b, data.labels, Some((old_y, variant)), &cv_y)?;
            Ok(HashModel::Linear {
                x: linfn::fit_incremental(data.x, a, old_x, cx.lambda, cx.gamma, variant)?,
                y: linfn::fit_incremental(data.y, b, old_y, cy.lambda, cy.gamma, variant)?,
            })
        }
    }
}

/// Hash functions trained from scratch on `data` with `classes` known classes.
pub(crate) fn fit_from_scratch(
    method: Method,
    data: &FitData<'_>,
    classes: usize,
    cv: &CvConfig,
    mlp_cfg: &MlpConfig,
    seed: u64,
) -> Result<HashModel> {
    match method {
        Method::Ridge(_) => fit_ridge(data, None, cv, seed),
        Method::Deep => {
            let shape = |input_dim| MlpShape {
                input_dim,
                hidden: mlp_cfg.hidden,
                bits: data.a.bits(),
                classes,
            };
            let pair = MlpPair {
                x: MlpHashFunction::new(shape(data.x.cols()), mlp_cfg.dropout, derive_seed(seed, &[stream::MLP_INIT, 0]))?,
                y: MlpHashFunction::new(shape(data.y.cols()), mlp_cfg.dropout, derive_seed(seed, &[stream::MLP_INIT, 1]))?,
            };
            let cfg = TrainConfig {
                seed: derive_seed(seed, &[stream::MLP_TRAIN]),
                ..mlp_cfg.base.clone()
            };
            let (pair, _) = mlp::train(pair, data.x, data.y, data.a.as_matrix(), data.b.as_matrix(), data.labels, &cfg)?;
            Ok(HashModel::Deep(Box::new(pair)))
        }
    }
}

/// Adapts `previous` to `data` (exemplars followed by new-class samples).
pub(crate) fn fit_incremental(
    method: Method,
    previous: &HashModel,
    data: &FitData<'_>,
    classes: usize,
    cv: &CvConfig,
    mlp_cfg: &MlpConfig,
    seed: u64,
) -> Result<HashModel> {
    match (method, previous) {
        (Method::Ridge(variant), HashModel::Linear { x, y }) => fit_ridge(data, Some((x, y, variant)), cv, seed),
        (Method::Deep, HashModel::Deep(old)) => {
            let pair = MlpPair {
                x: old.x.expand_classifier(classes, derive_seed(seed, &[stream::EXPAND, 0]))?,
                y: old.y.expand_classifier(classes, derive_seed(seed, &[stream::EXPAND, 1]))?,
            };
            let cfg = TrainConfig {
                seed: derive_seed(seed, &[stream::MLP_TRAIN]),
                ..mlp_cfg.incremental.clone()
            };
            let (pair, _) = mlp::train(pair, data.x, data.y, data.a.as_matrix(), data.b.as_matrix(), data.labels, &cfg)?;
            Ok(HashModel::Deep(Box::new(pair)))
        }
        (m, _) => Err(Error::InvalidArgument(format!("previous model does not match method {m}"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn method_selectors() {
        for s in ["lr1", "lr2", "LR3", "mlp"] {
            let m: Method = s.parse().unwrap();
            assert_eq!(m.to_string(), s.to_ascii_lowercase());
        }
        let err = "svm".parse::<Method>().unwrap_err().to_string();
        assert!(err.contains("lr1, lr2, lr3, mlp"), "{err}");
    }
}
