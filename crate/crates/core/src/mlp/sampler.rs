use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;

use crate::data::seed::{self, Rng};

/// Draws sample indices with replacement, each with probability proportional
/// to `1 / n_{class(i)}`, so every class is drawn equally often in
/// expectation.
#[derive(Debug, Clone)]
pub struct ImbalancedSampler {
    dist: WeightedIndex<f64>,
}

impl ImbalancedSampler {
    /// Panics if `labels` is empty.
    pub fn new(labels: &[usize]) -> Self {
        assert!(!labels.is_empty(), "sampler needs at least one label");
        let classes = labels.iter().max().map_or(0, |m| m + 1);
        let mut counts = vec![0usize; classes];
        for &l in labels {
            counts[l] += 1;
        }
        let weights: Vec<f64> = labels.iter().map(|&l| 1.0 / counts[l] as f64).collect();
        Self {
            dist: WeightedIndex::new(weights).expect("positive finite weights"),
        }
    }

    pub fn draw(&self, count: usize, rng: &mut Rng) -> Vec<usize> {
        (0..count).map(|_| self.dist.sample(rng)).collect()
    }
}

pub fn imbalanced_sample_indices(labels: &[usize], count: usize, seed: u64) -> Vec<usize> {
    ImbalancedSampler::new(labels).draw(count, &mut seed::rng(seed))
}
