use nalgebra::DMatrix;
use rand::seq::SliceRandom;

use super::loss::{compute_class_weights, hash_loss, weighted_ce_loss, ClassWeights};
use super::sampler::ImbalancedSampler;
use super::{Forward, Gradients, MlpHashFunction, Mode};
use crate::data::seed::{self, Rng};
use crate::data::{FeatureMatrix, LabelVector};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub seed: u64,
    /// Replace cross-entropy by its class-weighted form.
    pub use_class_weights: bool,
    /// Draw batches with the class-balanced sampler instead of shuffling.
    pub use_imbalanced_sampler: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 100,
            batch_size: 32,
            learning_rate: 5e-4,
            seed: 0,
            use_class_weights: false,
            use_imbalanced_sampler: false,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 || self.batch_size == 0 {
            return Err(Error::InvalidArgument("epochs and batch size must be >= 1".into()));
        }
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "learning rate must be >= 0, got {}",
                self.learning_rate
            )));
        }
        Ok(())
    }
}

/// The two modality networks, trained jointly.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpPair {
    pub x: MlpHashFunction,
    pub y: MlpHashFunction,
}

/// Rows of one mini-batch.
#[derive(Debug, Clone)]
pub struct Batch<'a> {
    pub x: &'a DMatrix<f64>,
    pub y: &'a DMatrix<f64>,
    pub target_a: &'a DMatrix<f64>,
    pub target_b: &'a DMatrix<f64>,
    pub labels: &'a [usize],
}

/// Contribution of an additional loss term on one batch.
#[derive(Debug, Clone)]
pub struct AuxiliaryTerm {
    pub loss: f64,
    pub d_hash_x: DMatrix<f64>,
    pub d_logits_x: DMatrix<f64>,
    pub d_hash_y: DMatrix<f64>,
    pub d_logits_y: DMatrix<f64>,
}

/// An extra loss added to the hash and classification losses, expressed
/// through its gradients with respect to the network outputs.
pub trait AuxiliaryLoss: Send + Sync {
    fn evaluate(&self, rows: &[usize], out_x: &Forward, out_y: &Forward) -> AuxiliaryTerm;
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    /// Sum of batch losses for every epoch.
    pub loss_trace: Vec<f64>,
}

fn ce_grad(probs: &DMatrix<f64>, labels: &[usize], weights: Option<&ClassWeights>) -> DMatrix<f64> {
    let mut g = probs.clone();
    for (i, &l) in labels.iter().enumerate() {
        let w = weights.map_or(1.0, |w| w.get(l));
        g[(i, l)] -= 1.0;
        g.row_mut(i).scale_mut(w);
    }
    g
}

fn forward_pair(pair: &MlpPair, batch: &Batch<'_>, rng: Option<&mut Rng>) -> Result<(Forward, Forward)> {
    match rng {
        Some(rng) => Ok((pair.x.forward(batch.x, Mode::Train(rng))?, pair.y.forward(batch.y, Mode::Train(rng))?)),
        None => Ok((pair.x.forward(batch.x, Mode::Eval)?, pair.y.forward(batch.y, Mode::Eval)?)),
    }
}

fn batch_loss(out_x: &Forward, out_y: &Forward, batch: &Batch<'_>, weights: Option<&ClassWeights>) -> Result<f64> {
    Ok(hash_loss(&out_x.hash_out, batch.target_a, &out_y.hash_out, batch.target_b)?
        + weighted_ce_loss(&out_x.probs, &out_y.probs, batch.labels, weights)?)
}

/// Total loss `L_h + L_(w)ce` on a batch and its gradients for both networks.
/// Dropout is active only when `rng` is given.
pub fn loss_and_gradients(
    pair: &MlpPair,
    batch: &Batch<'_>,
    weights: Option<&ClassWeights>,
    rng: Option<&mut Rng>,
) -> Result<(f64, Gradients, Gradients)> {
    let (out_x, out_y) = forward_pair(pair, batch, rng)?;
    let loss = batch_loss(&out_x, &out_y, batch, weights)?;
    let gx = pair.x.backward(
        &out_x,
        &((&out_x.hash_out - batch.target_a) * 2.0),
        &ce_grad(&out_x.probs, batch.labels, weights),
    );
    let gy = pair.y.backward(
        &out_y,
        &((&out_y.hash_out - batch.target_b) * 2.0),
        &ce_grad(&out_y.probs, batch.labels, weights),
    );
    Ok((loss, gx, gy))
}

/// Evaluation-mode total loss over the whole set.
pub fn total_loss(
    pair: &MlpPair,
    x: &FeatureMatrix,
    y: &FeatureMatrix,
    target_a: &DMatrix<f64>,
    target_b: &DMatrix<f64>,
    labels: &LabelVector,
    weights: Option<&ClassWeights>,
) -> Result<f64> {
    let batch = Batch {
        x: x.as_matrix(),
        y: y.as_matrix(),
        target_a,
        target_b,
        labels: labels.as_slice(),
    };
    let (out_x, out_y) = forward_pair(pair, &batch, None)?;
    batch_loss(&out_x, &out_y, &batch, weights)
}

fn finite(net: &MlpHashFunction) -> bool {
    net.parameters().iter().all(|p| p.iter().all(|v| v.is_finite()))
}

fn sgd_step(net: &mut MlpHashFunction, grads: &Gradients, lr: f64) {
    for (p, g) in net.parameters_mut().into_iter().zip(grads.parameters()) {
        p.zip_apply(g, |w, d| *w -= lr * d);
    }
}

fn add_output_grads(
    net: &MlpHashFunction,
    grads: &mut Gradients,
    out: &Forward,
    d_hash: &DMatrix<f64>,
    d_logits: &DMatrix<f64>,
) {
    let extra = net.backward(out, d_hash, d_logits);
    for (g, e) in [
        (&mut grads.layer1, &extra.layer1),
        (&mut grads.layer2, &extra.layer2),
        (&mut grads.hash_head, &extra.hash_head),
        (&mut grads.ce_head, &extra.ce_head),
    ] {
        g.weight += &e.weight;
        g.bias += &e.bias;
    }
}

/// Plain mini-batch SGD on `L_h + L_(w)ce` (plus any registered auxiliary
/// losses), updating both networks after every batch.
pub struct Trainer {
    cfg: TrainConfig,
    auxiliary: Vec<Box<dyn AuxiliaryLoss>>,
}

impl Trainer {
    pub fn new(cfg: TrainConfig) -> Self {
        Self {
            cfg,
            auxiliary: Vec::new(),
        }
    }

    pub fn with_loss(mut self, loss: Box<dyn AuxiliaryLoss>) -> Self {
        self.auxiliary.push(loss);
        self
    }

    pub fn train(
        &self,
        mut pair: MlpPair,
        x: &FeatureMatrix,
        y: &FeatureMatrix,
        target_a: &DMatrix<f64>,
        target_b: &DMatrix<f64>,
        labels: &LabelVector,
    ) -> Result<(MlpPair, TrainReport)> {
        let cfg = &self.cfg;
        cfg.validate()?;
        let n = x.rows();
        if y.rows() != n || target_a.nrows() != n || target_b.nrows() != n || labels.len() != n {
            return Err(Error::shape("training rows", n, format!("{}/{}/{}/{}", y.rows(), target_a.nrows(), target_b.nrows(), labels.len())));
        }
        if target_a.ncols() != pair.x.bits() || target_b.ncols() != pair.y.bits() {
            return Err(Error::shape("hash targets", pair.x.bits(), target_a.ncols()));
        }
        if pair.x.class_count() != pair.y.class_count() {
            return Err(Error::shape("classifier heads", pair.x.class_count(), pair.y.class_count()));
        }
        let weights = if cfg.use_class_weights {
            Some(compute_class_weights(labels.as_slice(), pair.x.class_count())?)
        } else {
            None
        };
        let sampler = cfg.use_imbalanced_sampler.then(|| ImbalancedSampler::new(labels.as_slice()));
        let mut rng = seed::rng(cfg.seed);
        let mut order: Vec<usize> = (0..n).collect();
        let mut loss_trace = Vec::with_capacity(cfg.epochs);

        for epoch in 0..cfg.epochs {
            let epoch_rows = match &sampler {
                Some(s) => s.draw(n, &mut rng),
                None => {
                    order.shuffle(&mut rng);
                    order.clone()
                }
            };
            let mut epoch_loss = 0.0;
            for rows in epoch_rows.chunks(cfg.batch_size) {
                let bx = x.as_matrix().select_rows(rows);
                let by = y.as_matrix().select_rows(rows);
                let ba = target_a.select_rows(rows);
                let bb = target_b.select_rows(rows);
                let bl: Vec<usize> = rows.iter().map(|&i| labels.get(i)).collect();
                let batch = Batch {
                    x: &bx,
                    y: &by,
                    target_a: &ba,
                    target_b: &bb,
                    labels: &bl,
                };
                let (loss, gx, gy) = if self.auxiliary.is_empty() {
                    loss_and_gradients(&pair, &batch, weights.as_ref(), Some(&mut rng))?
                } else {
                    self.with_auxiliary(&pair, &batch, rows, weights.as_ref(), &mut rng)?
                };
                if !loss.is_finite() {
                    return Err(Error::Divergence { epoch, loss });
                }
                if cfg.learning_rate > 0.0 {
                    sgd_step(&mut pair.x, &gx, cfg.learning_rate);
                    sgd_step(&mut pair.y, &gy, cfg.learning_rate);
                    if !finite(&pair.x) || !finite(&pair.y) {
                        return Err(Error::Divergence { epoch, loss: f64::NAN });
                    }
                }
                epoch_loss += loss;
            }
            loss_trace.push(epoch_loss);
        }
        Ok((pair, TrainReport { loss_trace }))
    }

    fn with_auxiliary(
        &self,
        pair: &MlpPair,
        batch: &Batch<'_>,
        rows: &[usize],
        weights: Option<&ClassWeights>,
        rng: &mut Rng,
    ) -> Result<(f64, Gradients, Gradients)> {
        let (out_x, out_y) = forward_pair(pair, batch, Some(rng))?;
        let mut loss = batch_loss(&out_x, &out_y, batch, weights)?;
        let mut gx = pair.x.backward(
            &out_x,
            &((&out_x.hash_out - batch.target_a) * 2.0),
            &ce_grad(&out_x.probs, batch.labels, weights),
        );
        let mut gy = pair.y.backward(
            &out_y,
            &((&out_y.hash_out - batch.target_b) * 2.0),
            &ce_grad(&out_y.probs, batch.labels, weights),
        );
        for aux in &self.auxiliary {
            let term = aux.evaluate(rows, &out_x, &out_y);
            loss += term.loss;
            add_output_grads(&pair.x, &mut gx, &out_x, &term.d_hash_x, &term.d_logits_x);
            add_output_grads(&pair.y, &mut gy, &out_y, &term.d_hash_y, &term.d_logits_y);
        }
        Ok((loss, gx, gy))
    }
}

pub fn train(
    pair: MlpPair,
    x: &FeatureMatrix,
    y: &FeatureMatrix,
    target_a: &DMatrix<f64>,
    target_b: &DMatrix<f64>,
    labels: &LabelVector,
    cfg: &TrainConfig,
) -> Result<(MlpPair, TrainReport)> {
    Trainer::new(cfg.clone()).train(pair, x, y, target_a, target_b, labels)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mlp::MlpShape;

    fn toy() -> (FeatureMatrix, FeatureMatrix, DMatrix<f64>, DMatrix<f64>, LabelVector, MlpPair) {
        let n = 12;
        let x = FeatureMatrix::new(DMatrix::from_fn(n, 3, |i, j| ((i * 3 + j) as f64).cos() + (i % 2) as f64)).unwrap();
        let y = FeatureMatrix::new(DMatrix::from_fn(n, 2, |i, j| ((i + j) as f64).sin() - (i % 2) as f64)).unwrap();
        let a = DMatrix::from_fn(n, 4, |i, j| if (i + j) % 2 == 0 { 0.9 } else { -0.9 });
        let labels = LabelVector::new((0..n).map(|i| i % 2).collect(), 2).unwrap();
        let shape = |d| MlpShape { input_dim: d, hidden: (5, 4), bits: 4, classes: 2 };
        let pair = MlpPair {
            x: MlpHashFunction::new(shape(3), 0.3, 1).unwrap(),
            y: MlpHashFunction::new(shape(2), 0.3, 2).unwrap(),
        };
        (x, y, a.clone(), a, labels, pair)
    }

    #[test]
    fn zero_learning_rate_keeps_parameters() {
        let (x, y, a, b, l, pair) = toy();
        let cfg = TrainConfig { epochs: 3, batch_size: 5, learning_rate: 0.0, use_imbalanced_sampler: true, ..Default::default() };
        let (trained, report) = train(pair.clone(), &x, &y, &a, &b, &l, &cfg).unwrap();
        assert_eq!(trained, pair);
        assert_eq!(report.loss_trace.len(), 3);
    }

    #[test]
    fn seeded_training_repeats() {
        let (x, y, a, b, l, pair) = toy();
        let cfg = TrainConfig { epochs: 5, batch_size: 4, seed: 3, use_class_weights: true, ..Default::default() };
        let first = train(pair.clone(), &x, &y, &a, &b, &l, &cfg).unwrap();
        let second = train(pair, &x, &y, &a, &b, &l, &cfg).unwrap();
        assert_eq!(first, second);
    }

    #[test]
    fn huge_learning_rate_is_reported() {
        let (x, y, a, b, l, pair) = toy();
        let x = FeatureMatrix::new(x.as_matrix() * 1e300).unwrap();
        let cfg = TrainConfig { epochs: 50, batch_size: 12, learning_rate: 1.0, ..Default::default() };
        let err = train(pair, &x, &y, &a, &b, &l, &cfg).unwrap_err();
        assert!(matches!(err, Error::Divergence { .. }), "{err}");
    }

    struct Constant;

    impl AuxiliaryLoss for Constant {
        fn evaluate(&self, rows: &[usize], out_x: &Forward, out_y: &Forward) -> AuxiliaryTerm {
            AuxiliaryTerm {
                loss: rows.len() as f64,
                d_hash_x: DMatrix::zeros(out_x.hash_out.nrows(), out_x.hash_out.ncols()),
                d_logits_x: DMatrix::zeros(out_x.logits.nrows(), out_x.logits.ncols()),
                d_hash_y: DMatrix::zeros(out_y.hash_out.nrows(), out_y.hash_out.ncols()),
                d_logits_y: DMatrix::zeros(out_y.logits.nrows(), out_y.logits.ncols()),
            }
        }
    }

    #[test]
    fn auxiliary_loss_is_added() {
        let (x, y, a, b, l, pair) = toy();
        let cfg = TrainConfig { epochs: 2, batch_size: 4, seed: 8, ..Default::default() };
        let (plain_net, plain) = train(pair.clone(), &x, &y, &a, &b, &l, &cfg).unwrap();
        let (aux_net, aux) = Trainer::new(cfg).with_loss(Box::new(Constant)).train(pair, &x, &y, &a, &b, &l).unwrap();
        assert_eq!(plain_net, aux_net);
        for (p, q) in plain.loss_trace.iter().zip(&aux.loss_trace) {
            assert!((q - p - 12.0).abs() < 1e-9);
        }
    }
}
