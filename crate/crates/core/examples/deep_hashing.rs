//! MLP hash functions: joint training of both modality networks, classifier
//! expansion for a new class and class-weighted, class-balanced fine-tuning.

use icmh::codegen::{self, CodeLearnerConfig};
use icmh::data::{self, SynthConfig};
use icmh::mlp::{self, MlpHashFunction, MlpPair, MlpShape, TrainConfig};
use icmh::SimilarityMatrix;

pub fn run() -> anyhow::Result<()> {
    let data = data::generate_synthetic(&SynthConfig { class_count: 3, per_class: 40, ..Default::default() })?;
    let first: Vec<usize> = (0..80).collect();
    let old = data.subset(&first);
    let codes = codegen::learn_base(
        &SimilarityMatrix::from_labels(old.labels.as_slice()),
        &CodeLearnerConfig { bits: 16, max_iters: 200, ..Default::default() },
    )?;

    let shape = |d| MlpShape { input_dim: d, hidden: (32, 16), bits: 16, classes: 2 };
    let pair = MlpPair {
        x: MlpHashFunction::new(shape(old.x.cols()), 0.2, 1)?,
        y: MlpHashFunction::new(shape(old.y.cols()), 0.2, 2)?,
    };
    let cfg = TrainConfig { epochs: 40, batch_size: 16, learning_rate: 5e-4, seed: 3, ..Default::default() };
    let (pair, report) =
        mlp::train(pair, &old.x, &old.y, codes.a.as_matrix(), codes.b.as_matrix(), &old.labels, &cfg)?;
    println!(
        "training loss {:.2} -> {:.2}",
        report.loss_trace[0],
        report.loss_trace.last().copied().unwrap_or_default()
    );

    let grown = MlpPair { x: pair.x.expand_classifier(3, 4)?, y: pair.y.expand_classifier(3, 5)? };
    assert_eq!(grown.x.layer1, pair.x.layer1);
    println!("classifier grown to {} classes, hidden layers untouched", grown.x.class_count());

    // ten rows of each old class plus all of the new class: imbalanced on purpose
    let idx: Vec<usize> = (0..10).chain(40..50).chain(80..120).collect();
    let batch = data.subset(&idx);
    let weights = mlp::compute_class_weights(batch.labels.as_slice(), 3)?;
    println!("class weights {:?}", weights.0);
    let drawn = mlp::imbalanced_sample_indices(batch.labels.as_slice(), 3000, 9);
    let new_share = drawn.iter().filter(|&&i| batch.labels.get(i) == 2).count() as f64 / 3000.0;
    println!("balanced sampler draws the new class {:.0}% of the time", 100.0 * new_share);

    let hashed = grown.x.hash(&batch.x)?;
    println!("hashed {} rows into {}-bit codes", hashed.rows(), hashed.bits());
    Ok(())
}

#[allow(dead_code)]
fn main() -> anyhow::Result<()> {
    run()
}
