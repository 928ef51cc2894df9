use std::collections::{BTreeMap, HashMap};

use nalgebra::DMatrix;
use rand::seq::SliceRandom;

use super::model::HashModel;
use crate::codes::RelaxedCodeMatrix;
use crate::data::seed;
use crate::data::PairedDataset;
use crate::error::{Error, Result};

/// Uniform random choice, without replacement, of `samples_per_class`
/// indices from each class in `classes` (the whole class if it is smaller).
pub fn select_exemplars(
    data: &PairedDataset,
    classes: &[usize],
    samples_per_class: usize,
    seed: u64,
) -> Result<BTreeMap<usize, Vec<usize>>> {
    if samples_per_class == 0 {
        return Err(Error::InvalidArgument("samples per class must be >= 1".into()));
    }
    let mut out = BTreeMap::new();
    for &class in classes {
        let mut idx = data.labels.indices_of(class);
        if idx.is_empty() {
            return Err(Error::EmptyClass(class));
        }
        idx.shuffle(&mut seed::rng(seed::derive_seed(seed, &[class as u64])));
        idx.truncate(samples_per_class);
        out.insert(class, idx);
    }
    Ok(out)
}

/// Relaxed codes learned for training samples, keyed by sample index.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CodeBank {
    codes: HashMap<usize, (Vec<f64>, Vec<f64>)>,
}

impl CodeBank {
    pub fn insert(&mut self, indices: &[usize], a: &RelaxedCodeMatrix, b: &RelaxedCodeMatrix) {
        for (row, &i) in indices.iter().enumerate() {
            let ra = a.as_matrix().row(row).iter().copied().collect();
            let rb = b.as_matrix().row(row).iter().copied().collect();
            self.codes.insert(i, (ra, rb));
        }
    }

    pub fn contains(&self, index: usize) -> bool {
        self.codes.contains_key(&index)
    }

    pub fn len(&self) -> usize {
        self.codes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.codes.is_empty()
    }

    pub fn lookup(&self, indices: &[usize]) -> Result<(RelaxedCodeMatrix, RelaxedCodeMatrix)> {
        let bits = self.codes.values().next().map_or(0, |(a, _)| a.len());
        let mut a = DMatrix::zeros(indices.len(), bits);
        let mut b = DMatrix::zeros(indices.len(), bits);
        for (row, &i) in indices.iter().enumerate() {
            let (ra, rb) = self.codes.get(&i).ok_or(Error::UnknownSample(i))?;
            for j in 0..bits {
                a[(row, j)] = ra[j];
                b[(row, j)] = rb[j];
            }
        }
        Ok((RelaxedCodeMatrix::new(a)?, RelaxedCodeMatrix::new(b)?))
    }
}

/// Retained samples of old classes, their frozen codes, and the hash
/// functions of the previous phase.
#[derive(Debug, Clone)]
pub struct ExemplarStore {
    pub samples_per_class: usize,
    per_class: BTreeMap<usize, Vec<usize>>,
    frozen: CodeBank,
    pub previous: Option<HashModel>,
}

impl ExemplarStore {
    pub fn new(samples_per_class: usize) -> Self {
        Self {
            samples_per_class,
            per_class: BTreeMap::new(),
            frozen: CodeBank::default(),
            previous: None,
        }
    }

    /// Adds exemplars for classes not yet retained, freezing their current
    /// codes from `bank`. Already retained classes keep their exemplars.
    pub fn retain(&mut self, selection: BTreeMap<usize, Vec<usize>>, bank: &CodeBank) -> Result<()> {
        for (class, idx) in selection {
            if self.per_class.contains_key(&class) {
                continue;
            }
            let (a, b) = bank.lookup(&idx)?;
            self.frozen.insert(&idx, &a, &b);
            self.per_class.insert(class, idx);
        }
        Ok(())
    }

    pub fn classes(&self) -> impl Iterator<Item = usize> + '_ {
        self.per_class.keys().copied()
    }

    pub fn per_class(&self) -> &BTreeMap<usize, Vec<usize>> {
        &self.per_class
    }

    /// All exemplar indices, grouped by ascending class.
    pub fn indices(&self) -> Vec<usize> {
        self.per_class.values().flatten().copied().collect()
    }

    pub fn len(&self) -> usize {
        self.per_class.values().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Frozen codes in the order of [`indices`](Self::indices).
    pub fn codes(&self) -> Result<(RelaxedCodeMatrix, RelaxedCodeMatrix)> {
        self.frozen.lookup(&self.indices())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{generate_synthetic, SynthConfig};

    fn data(per_class: usize) -> PairedDataset {
        generate_synthetic(&SynthConfig {
            class_count: 3,
            per_class,
            dx: 2,
            dy: 2,
            spread: 1.0,
            seed: 0,
        })
        .unwrap()
    }

    #[test]
    fn selects_per_class() {
        let d = data(100);
        let sel = select_exemplars(&d, &[0, 1, 2], 10, 4).unwrap();
        assert_eq!(sel.values().map(Vec::len).sum::<usize>(), 30);
        for (class, idx) in &sel {
            assert!(idx.iter().all(|&i| d.labels.get(i) == *class));
        }
        assert_eq!(sel, select_exemplars(&d, &[0, 1, 2], 10, 4).unwrap());
    }

    #[test]
    fn small_class_is_kept_whole() {
        let d = data(4);
        let sel = select_exemplars(&d, &[1], 10, 0).unwrap();
        let mut idx = sel[&1].clone();
        idx.sort_unstable();
        assert_eq!(idx, vec![4, 5, 6, 7]);
    }

    #[test]
    fn empty_class_is_an_error() {
        let d = data(4).subset(&[0, 1, 2, 3]);
        assert!(matches!(select_exemplars(&d, &[2], 3, 0), Err(Error::EmptyClass(2))));
    }

    #[test]
    fn store_freezes_codes() {
        let mut bank = CodeBank::default();
        let a = RelaxedCodeMatrix::new(DMatrix::from_fn(3, 2, |i, j| (i as f64 - j as f64) * 0.25)).unwrap();
        bank.insert(&[7, 8, 9], &a, &a);
        let mut store = ExemplarStore::new(2);
        store.retain(BTreeMap::from([(0, vec![9, 7])]), &bank).unwrap();
        let (ea, _) = store.codes().unwrap();
        assert_eq!(ea.as_matrix(), &a.as_matrix().select_rows(&[2, 0]));
        // later bank updates do not leak into frozen codes
        let z = RelaxedCodeMatrix::new(DMatrix::zeros(3, 2)).unwrap();
        bank.insert(&[7, 8, 9], &z, &z);
        store.retain(BTreeMap::from([(0, vec![8])]), &bank).unwrap();
        assert_eq!(store.codes().unwrap().0, ea);
        assert!(matches!(bank.lookup(&[1]), Err(Error::UnknownSample(1))));
    }
}
