//! Stage two, deep path: a two-layer perceptron per modality with a tanh hash
//! head and a softmax classifier head.
//!
//! ```text
//! x -> fc1 -> relu -> dropout -> fc2 -> relu -> dropout = latent
//! latent -> fc_h  -> tanh    = hash output
//! latent -> fc_ce -> softmax = class probabilities
//! ```
//!
//! Gradients are computed by hand-written backpropagation.

mod loss;
mod sampler;
mod train;

use nalgebra::DMatrix;
use rand::Rng as _;

use crate::codes::BinaryCodeMatrix;
use crate::data::seed::{self, Rng};
use crate::data::FeatureMatrix;
use crate::error::{Error, Result};

pub use loss::{compute_class_weights, hash_loss, weighted_ce_loss, ClassWeights, LOG_FLOOR};
pub use sampler::{imbalanced_sample_indices, ImbalancedSampler};
pub use train::{
    loss_and_gradients, total_loss, train, AuxiliaryLoss, AuxiliaryTerm, Batch, MlpPair, TrainConfig,
    TrainReport, Trainer,
};

/// A fully connected layer `x W + b` with `W: in x out` and `b: 1 x out`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    pub weight: DMatrix<f64>,
    pub bias: DMatrix<f64>,
}

impl Dense {
    /// Uniform in `±1/√fan_in`.
    fn init(fan_in: usize, fan_out: usize, rng: &mut Rng) -> Self {
        let bound = 1.0 / (fan_in as f64).sqrt();
        let mut draw = |r: usize, c: usize| {
            let v: Vec<f64> = (0..r * c).map(|_| rng.random_range(-bound..=bound)).collect();
            DMatrix::from_row_slice(r, c, &v)
        };
        let weight = draw(fan_in, fan_out);
        let bias = draw(1, fan_out);
        Self { weight, bias }
    }

    fn zeros(fan_in: usize, fan_out: usize) -> Self {
        Self {
            weight: DMatrix::zeros(fan_in, fan_out),
            bias: DMatrix::zeros(1, fan_out),
        }
    }

    fn forward(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        let mut out = x * &self.weight;
        for mut row in out.row_iter_mut() {
            row += &self.bias;
        }
        out
    }

    pub fn in_dim(&self) -> usize {
        self.weight.nrows()
    }

    pub fn out_dim(&self) -> usize {
        self.weight.ncols()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MlpShape {
    pub input_dim: usize,
    pub hidden: (usize, usize),
    pub bits: usize,
    pub classes: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MlpHashFunction {
    pub layer1: Dense,
    pub layer2: Dense,
    pub hash_head: Dense,
    pub ce_head: Dense,
    pub dropout_rate: f64,
}

/// Parameter gradients, laid out like [`MlpHashFunction`].
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub layer1: Dense,
    pub layer2: Dense,
    pub hash_head: Dense,
    pub ce_head: Dense,
}

impl Gradients {
    pub fn parameters(&self) -> [&DMatrix<f64>; 8] {
        [
            &self.layer1.weight,
            &self.layer1.bias,
            &self.layer2.weight,
            &self.layer2.bias,
            &self.hash_head.weight,
            &self.hash_head.bias,
            &self.ce_head.weight,
            &self.ce_head.bias,
        ]
    }
}

pub enum Mode<'a> {
    /// Dropout disabled; deterministic.
    Eval,
    /// Inverted dropout with masks drawn from the given generator.
    Train(&'a mut Rng),
}

/// Activations of one forward pass, kept for backpropagation.
#[derive(Debug, Clone)]
pub struct Forward {
    pub latent: DMatrix<f64>,
    pub hash_out: DMatrix<f64>,
    pub logits: DMatrix<f64>,
    pub probs: DMatrix<f64>,
    input: DMatrix<f64>,
    pre1: DMatrix<f64>,
    mask1: Option<DMatrix<f64>>,
    hidden1: DMatrix<f64>,
    pre2: DMatrix<f64>,
    mask2: Option<DMatrix<f64>>,
}

fn relu(m: &DMatrix<f64>) -> DMatrix<f64> {
    m.map(|v| v.max(0.0))
}

fn dropout_mask(rows: usize, cols: usize, rate: f64, rng: &mut Rng) -> DMatrix<f64> {
    let keep = 1.0 - rate;
    let v: Vec<f64> = (0..rows * cols)
        .map(|_| if rng.random::<f64>() < keep { 1.0 / keep } else { 0.0 })
        .collect();
    DMatrix::from_row_slice(rows, cols, &v)
}

/// Row-wise softmax with max subtraction.
pub fn softmax(logits: &DMatrix<f64>) -> DMatrix<f64> {
    let mut p = logits.clone();
    for mut row in p.row_iter_mut() {
        let max = row.max();
        row.apply(|v| *v = (*v - max).exp());
        let sum = row.sum();
        row /= sum;
    }
    p
}

fn column_sums(m: &DMatrix<f64>) -> DMatrix<f64> {
    DMatrix::from_fn(1, m.ncols(), |_, j| m.column(j).sum())
}

impl MlpHashFunction {
    pub fn new(shape: MlpShape, dropout_rate: f64, seed: u64) -> Result<Self> {
        Self::check_shape(&shape, dropout_rate)?;
        let mut rng = seed::rng(seed);
        let (h1, h2) = shape.hidden;
        Ok(Self {
            layer1: Dense::init(shape.input_dim, h1, &mut rng),
            layer2: Dense::init(h1, h2, &mut rng),
            hash_head: Dense::init(h2, shape.bits, &mut rng),
            ce_head: Dense::init(h2, shape.classes, &mut rng),
            dropout_rate,
        })
    }

    /// All parameters zero.
    pub fn zeros(shape: MlpShape, dropout_rate: f64) -> Result<Self> {
        Self::check_shape(&shape, dropout_rate)?;
        let (h1, h2) = shape.hidden;
        Ok(Self {
            layer1: Dense::zeros(shape.input_dim, h1),
            layer2: Dense::zeros(h1, h2),
            hash_head: Dense::zeros(h2, shape.bits),
            ce_head: Dense::zeros(h2, shape.classes),
            dropout_rate,
        })
    }

    fn check_shape(shape: &MlpShape, dropout_rate: f64) -> Result<()> {
        let dims = [shape.input_dim, shape.hidden.0, shape.hidden.1, shape.bits, shape.classes];
        if dims.contains(&0) {
            return Err(Error::InvalidArgument(format!("all layer sizes must be >= 1: {shape:?}")));
        }
        if !(0.0..1.0).contains(&dropout_rate) {
            return Err(Error::InvalidArgument(format!("dropout rate must lie in [0, 1), got {dropout_rate}")));
        }
        Ok(())
    }

    pub fn shape(&self) -> MlpShape {
        MlpShape {
            input_dim: self.layer1.in_dim(),
            hidden: (self.layer1.out_dim(), self.layer2.out_dim()),
            bits: self.hash_head.out_dim(),
            classes: self.ce_head.out_dim(),
        }
    }

    pub fn input_dim(&self) -> usize {
        self.layer1.in_dim()
    }

    pub fn bits(&self) -> usize {
        self.hash_head.out_dim()
    }

    pub fn class_count(&self) -> usize {
        self.ce_head.out_dim()
    }

    pub fn parameters(&self) -> [&DMatrix<f64>; 8] {
        [
            &self.layer1.weight,
            &self.layer1.bias,
            &self.layer2.weight,
            &self.layer2.bias,
            &self.hash_head.weight,
            &self.hash_head.bias,
            &self.ce_head.weight,
            &self.ce_head.bias,
        ]
    }

    pub fn parameters_mut(&mut self) -> [&mut DMatrix<f64>; 8] {
        [
            &mut self.layer1.weight,
            &mut self.layer1.bias,
            &mut self.layer2.weight,
            &mut self.layer2.bias,
            &mut self.hash_head.weight,
            &mut self.hash_head.bias,
            &mut self.ce_head.weight,
            &mut self.ce_head.bias,
        ]
    }

    pub fn forward(&self, x: &DMatrix<f64>, mode: Mode<'_>) -> Result<Forward> {
        if x.ncols() != self.input_dim() {
            return Err(Error::shape("network input", self.input_dim(), x.ncols()));
        }
        let mut rng = match mode {
            Mode::Train(rng) if self.dropout_rate > 0.0 => Some(rng),
            _ => None,
        };
        let pre1 = self.layer1.forward(x);
        let mut hidden1 = relu(&pre1);
        let mask1 = rng
            .as_deref_mut()
            .map(|r| dropout_mask(hidden1.nrows(), hidden1.ncols(), self.dropout_rate, r));
        if let Some(m) = &mask1 {
            hidden1.component_mul_assign(m);
        }
        let pre2 = self.layer2.forward(&hidden1);
        let mut latent = relu(&pre2);
        let mask2 = rng.map(|r| dropout_mask(latent.nrows(), latent.ncols(), self.dropout_rate, r));
        if let Some(m) = &mask2 {
            latent.component_mul_assign(m);
        }
        let hash_out = self.hash_head.forward(&latent).map(f64::tanh);
        let logits = self.ce_head.forward(&latent);
        let probs = softmax(&logits);
        Ok(Forward {
            latent,
            hash_out,
            logits,
            probs,
            input: x.clone(),
            pre1,
            mask1,
            hidden1,
            pre2,
            mask2,
        })
    }

    /// Backpropagates `∂L/∂hash_out` and `∂L/∂logits` through the pass `fwd`.
    pub fn backward(&self, fwd: &Forward, d_hash: &DMatrix<f64>, d_logits: &DMatrix<f64>) -> Gradients {
        let d_hash_pre = d_hash.zip_map(&fwd.hash_out, |g, h| g * (1.0 - h * h));
        let hash_head = Dense {
            weight: fwd.latent.tr_mul(&d_hash_pre),
            bias: column_sums(&d_hash_pre),
        };
        let ce_head = Dense {
            weight: fwd.latent.tr_mul(d_logits),
            bias: column_sums(d_logits),
        };
        let mut d_latent = &d_hash_pre * self.hash_head.weight.transpose()
            + d_logits * self.ce_head.weight.transpose();
        if let Some(m) = &fwd.mask2 {
            d_latent.component_mul_assign(m);
        }
        let d_pre2 = d_latent.zip_map(&fwd.pre2, |g, z| if z > 0.0 { g } else { 0.0 });
        let layer2 = Dense {
            weight: fwd.hidden1.tr_mul(&d_pre2),
            bias: column_sums(&d_pre2),
        };
        let mut d_hidden1 = &d_pre2 * self.layer2.weight.transpose();
        if let Some(m) = &fwd.mask1 {
            d_hidden1.component_mul_assign(m);
        }
        let d_pre1 = d_hidden1.zip_map(&fwd.pre1, |g, z| if z > 0.0 { g } else { 0.0 });
        let layer1 = Dense {
            weight: fwd.input.tr_mul(&d_pre1),
            bias: column_sums(&d_pre1),
        };
        Gradients {
            layer1,
            layer2,
            hash_head,
            ce_head,
        }
    }

    /// `sign` of the hash head in evaluation mode.
    pub fn hash(&self, x: &FeatureMatrix) -> Result<BinaryCodeMatrix> {
        let out = self.forward(x.as_matrix(), Mode::Eval)?;
        Ok(BinaryCodeMatrix::from_signs(&out.hash_out))
    }

    /// Grows the classifier head to `new_class_count` outputs. Every other
    /// parameter and the existing class columns are copied unchanged; the new
    /// columns get the usual `±1/√fan_in` initialization.
    pub fn expand_classifier(&self, new_class_count: usize, seed: u64) -> Result<Self> {
        let old = self.class_count();
        if new_class_count <= old {
            return Err(Error::InvalidArgument(format!(
                "classifier can only grow: {old} -> {new_class_count}"
            )));
        }
        let fresh = Dense::init(self.ce_head.in_dim(), new_class_count - old, &mut seed::rng(seed));
        let fan_in = self.ce_head.in_dim();
        let mut weight = DMatrix::zeros(fan_in, new_class_count);
        weight.columns_mut(0, old).copy_from(&self.ce_head.weight);
        weight.columns_mut(old, new_class_count - old).copy_from(&fresh.weight);
        let mut bias = DMatrix::zeros(1, new_class_count);
        bias.columns_mut(0, old).copy_from(&self.ce_head.bias);
        bias.columns_mut(old, new_class_count - old).copy_from(&fresh.bias);
        Ok(Self {
            ce_head: Dense { weight, bias },
            ..self.clone()
        })
    }
}
