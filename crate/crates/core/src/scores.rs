//! Edge-score matrices.
//!
//! Row `i` is dependent token `i` (0-based), column 0 is the root and column
//! `j > 0` is token `j` (1-based) as head. Cell `(i, i + 1)` is the self-arc
//! and is masked.

use crate::error::{Error, Result};
use crate::tensor::DenseTensor;

/// Whether cell `(row, col)` of a score matrix is a self-arc.
#[inline]
pub fn is_self_arc(row: usize, col: usize) -> bool {
    col == row + 1
}

/// A `w × (w+1)` matrix of edge scores.
#[derive(Clone, Debug, PartialEq)]
pub struct ScoreMatrix {
    values: DenseTensor,
}

impl ScoreMatrix {
    pub fn new(values: DenseTensor) -> Result<Self> {
        let shape = values.shape();
        if shape.len() != 2 || shape[1] != shape[0] + 1 {
            return Err(Error::shape(format!(
                "score matrix must be w x (w+1), got {shape:?}"
            )));
        }
        Ok(ScoreMatrix { values })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        ScoreMatrix::new(DenseTensor::from_rows(rows)?)
    }

    pub fn zeros(w: usize) -> Self {
        assert!(w >= 1, "score matrix needs at least one token");
        ScoreMatrix {
            values: DenseTensor::zeros(&[w, w + 1]),
        }
    }

    /// Number of tokens.
    pub fn len(&self) -> usize {
        self.values.rows()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values.data()[row * (self.len() + 1) + col]
    }

    pub fn set(&mut self, row: usize, col: usize, value: f64) {
        let w = self.len();
        self.values.data_mut()[row * (w + 1) + col] = value;
    }

    pub fn values(&self) -> &DenseTensor {
        &self.values
    }

    pub fn into_values(self) -> DenseTensor {
        self.values
    }

    /// Coordinates of every unmasked cell in row-major order.
    pub fn unmasked_cells(&self) -> impl Iterator<Item = (usize, usize)> {
        let w = self.len();
        (0..w).flat_map(move |i| (0..=w).filter(move |&j| !is_self_arc(i, j)).map(move |j| (i, j)))
    }

    pub fn unmasked_count(&self) -> usize {
        let w = self.len();
        w * w
    }

    /// Copy with every masked cell set to zero.
    pub fn with_masked_zeroed(&self) -> Self {
        let mut out = self.clone();
        for i in 0..self.len() {
            out.set(i, i + 1, 0.0);
        }
        out
    }

    /// Share of unmasked cells that are exactly zero.
    pub fn zero_fraction(&self) -> f64 {
        let zeros = self
            .unmasked_cells()
            .filter(|&(i, j)| self.get(i, j) == 0.0)
            .count();
        zeros as f64 / self.unmasked_count() as f64
    }
}
