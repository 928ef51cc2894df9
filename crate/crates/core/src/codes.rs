//! Relaxed and binary hash code matrices.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// `N x q` codes with every entry in `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct RelaxedCodeMatrix(DMatrix<f64>);

impl RelaxedCodeMatrix {
    pub fn new(values: DMatrix<f64>) -> Result<Self> {
        if let Some(v) = values.iter().find(|v| !(-1.0..=1.0).contains(*v)) {
            return Err(Error::InvalidArgument(format!(
                "relaxed code entry {v} outside [-1, 1]"
            )));
        }
        Ok(Self(values))
    }

    pub fn empty(bits: usize) -> Self {
        Self(DMatrix::zeros(0, bits))
    }

    pub fn rows(&self) -> usize {
        self.0.nrows()
    }

    pub fn bits(&self) -> usize {
        self.0.ncols()
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.0
    }

    pub fn select_rows(&self, indices: &[usize]) -> Self {
        Self(self.0.select_rows(indices))
    }

    /// Stacks `self` on top of `below`.
    pub fn vstack(&self, below: &Self) -> Result<Self> {
        if self.bits() != below.bits() {
            return Err(Error::shape("code width", self.bits(), below.bits()));
        }
        let mut m = DMatrix::zeros(self.rows() + below.rows(), self.bits());
        m.rows_mut(0, self.rows()).copy_from(&self.0);
        m.rows_mut(self.rows(), below.rows()).copy_from(&below.0);
        Ok(Self(m))
    }
}

/// `N x q` codes in `{-1, +1}`, packed one bit per entry (set bit = `+1`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryCodeMatrix {
    rows: usize,
    bits: usize,
    words: Vec<u64>,
}

impl BinaryCodeMatrix {
    fn words_per_row(bits: usize) -> usize {
        bits.div_ceil(64)
    }

    /// `+1` where `value >= 0`, `-1` elsewhere.
    pub fn from_signs(m: &DMatrix<f64>) -> Self {
        let (rows, bits) = m.shape();
        let wpr = Self::words_per_row(bits);
        let mut words = vec![0u64; rows * wpr];
        for i in 0..rows {
            for j in 0..bits {
                if m[(i, j)] >= 0.0 {
                    words[i * wpr + j / 64] |= 1 << (j % 64);
                }
            }
        }
        Self { rows, bits, words }
    }

    /// Accepts a matrix whose entries are exactly `-1` or `+1`.
    pub fn from_pm1(m: &DMatrix<f64>) -> Result<Self> {
        if let Some(v) = m.iter().find(|&&v| v != 1.0 && v != -1.0) {
            return Err(Error::InvalidArgument(format!("binary code entry {v} is not +-1")));
        }
        Ok(Self::from_signs(m))
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn bits(&self) -> usize {
        self.bits
    }

    pub fn get(&self, i: usize, j: usize) -> i8 {
        let w = self.words[i * Self::words_per_row(self.bits) + j / 64];
        if w >> (j % 64) & 1 == 1 {
            1
        } else {
            -1
        }
    }

    pub fn row(&self, i: usize) -> Vec<i8> {
        (0..self.bits).map(|j| self.get(i, j)).collect()
    }

    pub(crate) fn row_words(&self, i: usize) -> &[u64] {
        let wpr = Self::words_per_row(self.bits);
        &self.words[i * wpr..(i + 1) * wpr]
    }

    pub fn select_rows(&self, indices: &[usize]) -> Self {
        let wpr = Self::words_per_row(self.bits);
        let mut words = Vec::with_capacity(indices.len() * wpr);
        for &i in indices {
            words.extend_from_slice(self.row_words(i));
        }
        Self {
            rows: indices.len(),
            bits: self.bits,
            words,
        }
    }

    pub fn to_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.rows, self.bits, |i, j| f64::from(self.get(i, j)))
    }
}

/// Sign quantization with `sign(0) = +1`.
pub fn quantize(m: &RelaxedCodeMatrix) -> BinaryCodeMatrix {
    BinaryCodeMatrix::from_signs(m.as_matrix())
}
