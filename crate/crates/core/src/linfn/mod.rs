//! Stage two, linear path: per-bit ridge regression hash functions.
//!
//! A base fit solves `min_u ‖a − X u‖² + λ‖u‖²` for every code column `a`.
//! Incremental fits add a proximity term to the previous phase's projection
//! `f_old`:
//!
//! | variant | extra term                                   | normal equations                                   |
//! |---------|----------------------------------------------|----------------------------------------------------|
//! | 1       | `γ‖u − f_old‖²`                              | `(XᵀX + (λ+γ)I) u = Xᵀa + γ f_old`                 |
//! | 2       | `γ‖Xu − X f_old‖²`                           | `((1+γ)XᵀX + λI) u = Xᵀa + γ XᵀX f_old`            |
//! | 3       | `γ‖u − f_old‖² + γ‖Xu − X f_old‖²`           | `((1+γ)XᵀX + (λ+γ)I) u = Xᵀa + γ f_old + γ XᵀX f_old` |
//!
//! All columns share one system matrix, so the `q` bits are solved together
//! with a single Cholesky factorization.

mod cv;

use std::fmt;
use std::str::FromStr;

use nalgebra::{Cholesky, DMatrix, Dyn};

use crate::codes::BinaryCodeMatrix;
use crate::data::FeatureMatrix;
use crate::error::{Error, Result};

pub use cv::{balanced_validation_pool, cross_validate, CvChoice, CvConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum IncrementalVariant {
    /// Stay close to the old weights.
    Weights,
    /// Stay close to the old outputs on the training data.
    Outputs,
    /// Both.
    Combined,
}

impl IncrementalVariant {
    pub const ALL: [IncrementalVariant; 3] = [Self::Weights, Self::Outputs, Self::Combined];

    pub fn from_index(i: u8) -> Result<Self> {
        match i {
            1 => Ok(Self::Weights),
            2 => Ok(Self::Outputs),
            3 => Ok(Self::Combined),
            other => Err(Error::InvalidArgument(format!(
                "unknown ridge variant {other}, expected 1, 2 or 3"
            ))),
        }
    }

    pub fn index(self) -> u8 {
        match self {
            Self::Weights => 1,
            Self::Outputs => 2,
            Self::Combined => 3,
        }
    }
}

impl fmt::Display for IncrementalVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.index())
    }
}

impl FromStr for IncrementalVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let i = s
            .parse::<u8>()
            .map_err(|_| Error::InvalidArgument(format!("unknown ridge variant {s:?}")))?;
        Self::from_index(i)
    }
}

/// A `d x q` projection; column `l` predicts bit `l`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearHashFunction {
    pub weights: DMatrix<f64>,
    pub reg_lambda: f64,
    /// Zero for base fits.
    pub gamma: f64,
    pub variant: Option<IncrementalVariant>,
}

impl LinearHashFunction {
    pub fn input_dim(&self) -> usize {
        self.weights.nrows()
    }

    pub fn bits(&self) -> usize {
        self.weights.ncols()
    }

    /// Real-valued outputs `X W`.
    pub fn project(&self, x: &FeatureMatrix) -> Result<DMatrix<f64>> {
        if x.cols() != self.input_dim() {
            return Err(Error::shape("hash function input", self.input_dim(), x.cols()));
        }
        Ok(x.as_matrix() * &self.weights)
    }
}

/// `sign(X W)`.
pub fn apply(f: &LinearHashFunction, x: &FeatureMatrix) -> Result<BinaryCodeMatrix> {
    Ok(BinaryCodeMatrix::from_signs(&f.project(x)?))
}

fn check_inputs(x: &FeatureMatrix, codes: &DMatrix<f64>, lambda: f64) -> Result<()> {
    if x.rows() != codes.nrows() {
        return Err(Error::shape("ridge targets", x.rows(), codes.nrows()));
    }
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidArgument(format!("lambda must be >= 0, got {lambda}")));
    }
    Ok(())
}

/// Normal-equation pieces shared by all fits on one design matrix.
#[derive(Debug, Clone)]
pub(crate) struct Gram {
    pub xtx: DMatrix<f64>,
    pub xta: DMatrix<f64>,
}

impl Gram {
    pub fn new(x: &DMatrix<f64>, codes: &DMatrix<f64>) -> Self {
        Self {
            xtx: x.tr_mul(x),
            xta: x.tr_mul(codes),
        }
    }
}

fn spd_solve(system: DMatrix<f64>, rhs: &DMatrix<f64>, what: &str) -> Result<DMatrix<f64>> {
    let chol: Cholesky<f64, Dyn> = Cholesky::new(system).ok_or_else(|| Error::Singular(what.into()))?;
    let sol = chol.solve(rhs);
    if sol.iter().any(|v| !v.is_finite()) {
        return Err(Error::Singular(what.into()));
    }
    Ok(sol)
}

pub(crate) fn solve(
    gram: &Gram,
    old: Option<(&DMatrix<f64>, IncrementalVariant)>,
    lambda: f64,
    gamma: f64,
) -> Result<DMatrix<f64>> {
    let d = gram.xtx.nrows();
    let eye = DMatrix::<f64>::identity(d, d);
    let (system, rhs) = match old {
        None => (&gram.xtx + &eye * lambda, gram.xta.clone()),
        Some((f_old, variant)) => {
            let (w_scale, ridge, mut rhs) = match variant {
                IncrementalVariant::Weights => (1.0, lambda + gamma, &gram.xta + f_old * gamma),
                IncrementalVariant::Outputs => (1.0 + gamma, lambda, gram.xta.clone()),
                IncrementalVariant::Combined => (1.0 + gamma, lambda + gamma, &gram.xta + f_old * gamma),
            };
            if variant != IncrementalVariant::Weights {
                rhs += (&gram.xtx * f_old) * gamma;
            }
            (&gram.xtx * w_scale + &eye * ridge, rhs)
        }
    };
    spd_solve(system, &rhs, "ridge normal equations")
}

/// Base fit on relaxed codes.
pub fn fit_base(x: &FeatureMatrix, codes: &DMatrix<f64>, lambda: f64) -> Result<LinearHashFunction> {
    check_inputs(x, codes, lambda)?;
    let weights = solve(&Gram::new(x.as_matrix(), codes), None, lambda, 0.0)?;
    Ok(LinearHashFunction {
        weights,
        reg_lambda: lambda,
        gamma: 0.0,
        variant: None,
    })
}

/// Incremental fit of `old` to new training data `[X_e; X̂]` with codes
/// `[A_e; Â]`.
pub fn fit_incremental(
    x: &FeatureMatrix,
    codes: &DMatrix<f64>,
    old: &LinearHashFunction,
    lambda: f64,
    gamma: f64,
    variant: IncrementalVariant,
) -> Result<LinearHashFunction> {
    check_inputs(x, codes, lambda)?;
    if old.input_dim() != x.cols() || old.bits() != codes.ncols() {
        return Err(Error::shape(
            "previous hash function",
            format!("{}x{}", x.cols(), codes.ncols()),
            format!("{}x{}", old.input_dim(), old.bits()),
        ));
    }
    if !(gamma >= 0.0 && gamma.is_finite()) {
        return Err(Error::InvalidArgument(format!("gamma must be >= 0, got {gamma}")));
    }
    let weights = solve(
        &Gram::new(x.as_matrix(), codes),
        Some((&old.weights, variant)),
        lambda,
        gamma,
    )?;
    Ok(LinearHashFunction {
        weights,
        reg_lambda: lambda,
        gamma,
        variant: Some(variant),
    })
}
