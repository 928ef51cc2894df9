//! Generate a paired two-modality dataset, split it per class, standardize
//! both modalities and round-trip it through the text format.

use icmh::data::{self, Standardizer, SynthConfig};
use icmh::PairedDataset;

pub fn run() -> anyhow::Result<()> {
    let cfg = SynthConfig { class_count: 4, per_class: 30, dx: 8, dy: 6, spread: 0.5, seed: 7 };
    let all = data::generate_synthetic(&cfg)?;
    println!("{} pairs, x is {}-d, y is {}-d, {} classes", all.len(), all.x.cols(), all.y.cols(), all.class_count());

    let (train, test) = data::train_test_split(&all, 0.7, 1)?;
    println!("train {} / test {}, per-class train counts {:?}", train.len(), test.len(), train.labels.counts());

    let (sx, sy) = (Standardizer::fit(&train.x), Standardizer::fit(&train.y));
    let train = PairedDataset::new(sx.apply(&train.x)?, sy.apply(&train.y)?, train.labels)?;
    let col0_mean = train.x.as_matrix().column(0).mean();
    println!("standardized column 0 mean: {col0_mean:.2e}");

    let dir = std::env::temp_dir().join(format!("icmh-example-{}", std::process::id()));
    std::fs::create_dir_all(&dir)?;
    let manifest = data::save_dataset(&dir, "train", &train)?;
    let back = data::load_dataset(&manifest)?;
    assert_eq!(back, train);
    println!("round-tripped through {}", manifest.display());
    std::fs::remove_dir_all(&dir)?;
    Ok(())
}

#[allow(dead_code)]
fn main() -> anyhow::Result<()> {
    run()
}
