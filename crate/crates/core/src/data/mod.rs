//! Feature matrices, labels, paired datasets and label similarity.

pub mod io;
pub mod seed;
pub mod synth;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

pub use io::{
    load_dataset, load_labels, load_matrix, read_key_values, save_dataset, save_labels, save_matrix,
    write_key_values,
};
pub use synth::{generate_synthetic, train_test_split, Standardizer, SynthConfig};

/// An `N x d` matrix of finite real features for one modality.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix(DMatrix<f64>);

impl FeatureMatrix {
    pub fn new(values: DMatrix<f64>) -> Result<Self> {
        if values.nrows() == 0 || values.ncols() == 0 {
            return Err(Error::InvalidArgument(format!(
                "feature matrix must be non-empty, got {}x{}",
                values.nrows(),
                values.ncols()
            )));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            // column-major position
            let (r, c) = (pos % values.nrows(), pos / values.nrows());
            return Err(Error::NonFinite(format!("feature matrix at ({r}, {c})")));
        }
        Ok(Self(values))
    }

    /// Builds a matrix from row slices. All rows must have equal length.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let ncols = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().position(|r| r.len() != ncols) {
            return Err(Error::shape("feature rows", ncols, rows[bad].len()));
        }
        Self::new(DMatrix::from_fn(rows.len(), ncols, |i, j| rows[i][j]))
    }

    pub fn rows(&self) -> usize {
        self.0.nrows()
    }

    pub fn cols(&self) -> usize {
        self.0.ncols()
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.0
    }

    /// Rows at `indices`, in that order. Panics on out-of-range indices.
    pub fn select_rows(&self, indices: &[usize]) -> FeatureMatrix {
        FeatureMatrix(self.0.select_rows(indices))
    }
}

/// Dense 0-based class indices, one per sample.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelVector {
    labels: Vec<usize>,
    class_count: usize,
}

impl LabelVector {
    pub fn new(labels: Vec<usize>, class_count: usize) -> Result<Self> {
        if class_count == 0 {
            return Err(Error::InvalidArgument("class count must be >= 1".into()));
        }
        if let Some(&bad) = labels.iter().find(|&&l| l >= class_count) {
            return Err(Error::InvalidArgument(format!(
                "label {bad} out of range for {class_count} classes"
            )));
        }
        Ok(Self {
            labels,
            class_count,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn class_count(&self) -> usize {
        self.class_count
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.labels
    }

    pub fn get(&self, i: usize) -> usize {
        self.labels[i]
    }

    /// Per-class sample counts, indexed by class.
    pub fn counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.class_count];
        for &l in &self.labels {
            counts[l] += 1;
        }
        counts
    }

    pub fn select(&self, indices: &[usize]) -> LabelVector {
        LabelVector {
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            class_count: self.class_count,
        }
    }

    /// Indices of the samples belonging to `class`, ascending.
    pub fn indices_of(&self, class: usize) -> Vec<usize> {
        self.labels
            .iter()
            .enumerate()
            .filter_map(|(i, &l)| (l == class).then_some(i))
            .collect()
    }
}

/// Paired features of both modalities with shared labels.
#[derive(Debug, Clone, PartialEq)]
pub struct PairedDataset {
    pub x: FeatureMatrix,
    pub y: FeatureMatrix,
    pub labels: LabelVector,
}

impl PairedDataset {
    pub fn new(x: FeatureMatrix, y: FeatureMatrix, labels: LabelVector) -> Result<Self> {
        if x.rows() != y.rows() {
            return Err(Error::shape("paired dataset rows", x.rows(), y.rows()));
        }
        if x.rows() != labels.len() {
            return Err(Error::shape("paired dataset labels", x.rows(), labels.len()));
        }
        Ok(Self { x, y, labels })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn class_count(&self) -> usize {
        self.labels.class_count()
    }

    pub fn subset(&self, indices: &[usize]) -> PairedDataset {
        PairedDataset {
            x: self.x.select_rows(indices),
            y: self.y.select_rows(indices),
            labels: self.labels.select(indices),
        }
    }
}

/// The `N x N` label-agreement matrix `S_ij = [label_i == label_j]`.
///
/// Stored in factored form (one group id per row) since `S = L Lᵀ` for one-hot
/// labels `L`; products with `S` then cost `O(N q)` instead of `O(N² q)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimilarityMatrix {
    groups: Vec<usize>,
    group_count: usize,
}

pub fn build_similarity(labels: &LabelVector) -> SimilarityMatrix {
    SimilarityMatrix::from_labels(labels.as_slice())
}

impl SimilarityMatrix {
    /// Groups are renumbered densely in order of first appearance.
    pub fn from_labels(labels: &[usize]) -> Self {
        let mut remap = std::collections::HashMap::new();
        let groups = labels
            .iter()
            .map(|&l| {
                let next = remap.len();
                *remap.entry(l).or_insert(next)
            })
            .collect();
        Self {
            groups,
            group_count: remap.len(),
        }
    }

    /// Accepts a dense 0/1 matrix if it is an equivalence relation.
    pub fn from_dense(dense: &DMatrix<u8>) -> Result<Self> {
        let n = dense.nrows();
        if dense.ncols() != n {
            return Err(Error::shape("similarity matrix", format!("{n}x{n}"), format!("{n}x{}", dense.ncols())));
        }
        let mut groups = vec![usize::MAX; n];
        let mut group_count = 0;
        for i in 0..n {
            if groups[i] == usize::MAX {
                for j in i..n {
                    if dense[(i, j)] == 1 {
                        groups[j] = group_count;
                    }
                }
                group_count += 1;
            }
        }
        let s = Self {
            groups,
            group_count,
        };
        for i in 0..n {
            for j in 0..n {
                if dense[(i, j)] != s.get(i, j) {
                    return Err(Error::InvalidArgument(format!(
                        "not a label similarity matrix: entry ({i}, {j}) is {}",
                        dense[(i, j)]
                    )));
                }
            }
        }
        Ok(s)
    }

    pub fn len(&self) -> usize {
        self.groups.len()
    }

    pub fn is_empty(&self) -> bool {
        self.groups.is_empty()
    }

    pub fn get(&self, i: usize, j: usize) -> u8 {
        u8::from(self.groups[i] == self.groups[j])
    }

    pub fn group_of(&self, i: usize) -> usize {
        self.groups[i]
    }

    pub fn group_count(&self) -> usize {
        self.group_count
    }

    pub fn to_dense(&self) -> DMatrix<u8> {
        let n = self.len();
        DMatrix::from_fn(n, n, |i, j| self.get(i, j))
    }

    /// `‖S‖²_F`, the number of same-label ordered pairs.
    pub fn frobenius_sq(&self) -> f64 {
        let mut sizes = vec![0usize; self.group_count];
        for &g in &self.groups {
            sizes[g] += 1;
        }
        sizes.iter().map(|&n| (n * n) as f64).sum()
    }

    /// Per-group column sums of `m` (`Lᵀ m`), `group_count x m.ncols()`.
    pub fn group_sums(&self, m: &DMatrix<f64>) -> DMatrix<f64> {
        let mut sums = DMatrix::zeros(self.group_count, m.ncols());
        for (i, &g) in self.groups.iter().enumerate() {
            for j in 0..m.ncols() {
                sums[(g, j)] += m[(i, j)];
            }
        }
        sums
    }

    /// The product `S m`.
    pub fn mul(&self, m: &DMatrix<f64>) -> DMatrix<f64> {
        let sums = self.group_sums(m);
        DMatrix::from_fn(self.len(), m.ncols(), |i, j| sums[(self.groups[i], j)])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn similarity_small_cases() {
        let s = SimilarityMatrix::from_labels(&[0, 0, 1]);
        let expected = DMatrix::from_row_slice(3, 3, &[1u8, 1, 0, 1, 1, 0, 0, 0, 1]);
        assert_eq!(s.to_dense(), expected);
        assert_eq!(SimilarityMatrix::from_labels(&[2]).to_dense(), DMatrix::from_element(1, 1, 1u8));
    }

    #[test]
    fn similarity_matches_pairwise_comparison() {
        let labels = [0usize, 1, 2, 0];
        let s = SimilarityMatrix::from_labels(&labels);
        for i in 0..4 {
            for j in 0..4 {
                assert_eq!(s.get(i, j), u8::from(labels[i] == labels[j]));
            }
        }
    }

    #[test]
    fn similarity_products_match_dense() {
        let s = SimilarityMatrix::from_labels(&[3, 1, 3, 0, 1]);
        let m = DMatrix::from_fn(5, 2, |i, j| (i * 2 + j) as f64 - 3.5);
        let dense = s.to_dense().map(f64::from);
        assert_eq!(s.mul(&m), &dense * &m);
        assert_eq!(s.frobenius_sq(), dense.norm_squared());
    }

    #[test]
    fn similarity_from_dense_roundtrip_and_rejects() {
        let s = SimilarityMatrix::from_labels(&[1, 0, 1, 2]);
        assert_eq!(SimilarityMatrix::from_dense(&s.to_dense()).unwrap().to_dense(), s.to_dense());
        let bad = DMatrix::from_row_slice(2, 2, &[1u8, 1, 0, 1]);
        assert!(SimilarityMatrix::from_dense(&bad).is_err());
    }

    #[test]
    fn feature_matrix_rejects_non_finite() {
        let m = DMatrix::from_row_slice(1, 2, &[1.0, f64::NAN]);
        assert!(matches!(FeatureMatrix::new(m), Err(Error::NonFinite(_))));
    }

    #[test]
    fn label_vector_validates_range() {
        assert!(LabelVector::new(vec![0, 3], 3).is_err());
        let l = LabelVector::new(vec![0, 2, 2], 3).unwrap();
        assert_eq!(l.counts(), vec![1, 0, 2]);
        assert_eq!(l.indices_of(2), vec![1, 2]);
    }

    #[test]
    fn paired_dataset_checks_rows() {
        let x = FeatureMatrix::from_rows(&[vec![1.0], vec![2.0]]).unwrap();
        let y = FeatureMatrix::from_rows(&[vec![1.0]]).unwrap();
        let l = LabelVector::new(vec![0, 0], 1).unwrap();
        assert!(PairedDataset::new(x, y, l).is_err());
    }
}
