//! Dense row-major tensors of rank 1 to 3.
//!
//! Axes are numbered from zero throughout: a `w × (w+1) × d` edge tensor has
//! the dependent axis at 0, the head axis at 1 and features at 2.

use std::fmt;

use crate::error::{Error, Result};

/// A dense tensor of 64-bit floats with an explicit shape.
#[derive(Clone, PartialEq)]
pub struct DenseTensor {
    shape: Vec<usize>,
    data: Vec<f64>,
}

impl fmt::Debug for DenseTensor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DenseTensor")
            .field("shape", &self.shape)
            .field("data", &self.data)
            .finish()
    }
}

fn check_shape(shape: &[usize]) -> Result<()> {
    if shape.is_empty() || shape.len() > 3 {
        return Err(Error::shape(format!(
            "rank must be between 1 and 3, got {}",
            shape.len()
        )));
    }
    if shape.contains(&0) {
        return Err(Error::shape(format!("zero-sized axis in {shape:?}")));
    }
    Ok(())
}

impl DenseTensor {
    pub fn new(shape: Vec<usize>, data: Vec<f64>) -> Result<Self> {
        check_shape(&shape)?;
        let len: usize = shape.iter().product();
        if len != data.len() {
            return Err(Error::shape(format!(
                "shape {shape:?} needs {len} values, got {}",
                data.len()
            )));
        }
        Ok(DenseTensor { shape, data })
    }

    /// Panics on an invalid shape; for internal construction with known shapes.
    pub(crate) fn from_parts(shape: Vec<usize>, data: Vec<f64>) -> Self {
        debug_assert_eq!(shape.iter().product::<usize>(), data.len());
        DenseTensor { shape, data }
    }

    pub fn zeros(shape: &[usize]) -> Self {
        let len = shape.iter().product();
        DenseTensor {
            shape: shape.to_vec(),
            data: vec![0.0; len],
        }
    }

    pub fn filled(shape: &[usize], value: f64) -> Self {
        let len = shape.iter().product();
        DenseTensor {
            shape: shape.to_vec(),
            data: vec![value; len],
        }
    }

    pub fn vector(data: Vec<f64>) -> Self {
        DenseTensor {
            shape: vec![data.len()],
            data,
        }
    }

    pub fn scalar(value: f64) -> Self {
        DenseTensor::vector(vec![value])
    }

    /// Builds a matrix from equally long rows.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let cols = rows.first().map(|r| r.as_ref().len()).unwrap_or(0);
        let mut data = Vec::with_capacity(rows.len() * cols);
        for (i, row) in rows.iter().enumerate() {
            let row = row.as_ref();
            if row.len() != cols {
                return Err(Error::shape(format!(
                    "row {i} has {} columns, expected {cols}",
                    row.len()
                )));
            }
            data.extend_from_slice(row);
        }
        DenseTensor::new(vec![rows.len(), cols], data)
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn rank(&self) -> usize {
        self.shape.len()
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    fn strides(&self) -> Vec<usize> {
        let mut strides = vec![1; self.shape.len()];
        for k in (0..self.shape.len().saturating_sub(1)).rev() {
            strides[k] = strides[k + 1] * self.shape[k + 1];
        }
        strides
    }

    fn offset(&self, index: &[usize]) -> usize {
        assert_eq!(index.len(), self.shape.len(), "index rank mismatch");
        let mut off = 0;
        for (k, (&i, &n)) in index.iter().zip(&self.shape).enumerate() {
            assert!(i < n, "index {i} out of bounds for axis {k} of size {n}");
            off = off * n + i;
        }
        off
    }

    pub fn get(&self, index: &[usize]) -> f64 {
        self.data[self.offset(index)]
    }

    pub fn set(&mut self, index: &[usize], value: f64) {
        let off = self.offset(index);
        self.data[off] = value;
    }

    /// Row `i` of a matrix.
    pub fn row(&self, i: usize) -> &[f64] {
        assert_eq!(self.rank(), 2, "row() needs a matrix");
        let cols = self.shape[1];
        &self.data[i * cols..(i + 1) * cols]
    }

    pub fn rows(&self) -> usize {
        self.shape[0]
    }

    pub fn cols(&self) -> usize {
        self.shape[1]
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn reshape(&self, shape: &[usize]) -> Result<Self> {
        DenseTensor::new(shape.to_vec(), self.data.clone())
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        DenseTensor::from_parts(self.shape.clone(), self.data.iter().map(|&v| f(v)).collect())
    }

    pub fn zip_map(&self, other: &DenseTensor, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        if self.shape != other.shape {
            return Err(Error::shape(format!(
                "elementwise op on {:?} and {:?}",
                self.shape, other.shape
            )));
        }
        Ok(DenseTensor::from_parts(
            self.shape.clone(),
            self.data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        ))
    }

    pub fn scale(&self, c: f64) -> Self {
        self.map(|v| v * c)
    }

    /// Accumulates `other` into `self`; shapes must match.
    pub fn add_assign(&mut self, other: &DenseTensor) {
        assert_eq!(self.shape, other.shape, "add_assign shape mismatch");
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += b;
        }
    }

    pub fn sum(&self) -> f64 {
        self.data.iter().sum()
    }

    pub fn squared_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum()
    }

    /// Reverses the row order of a matrix, i.e. left-multiplies by the
    /// exchange matrix.
    pub fn row_reverse(&self) -> Result<Self> {
        if self.rank() != 2 {
            return Err(Error::shape(format!(
                "row_reverse needs rank 2, got shape {:?}",
                self.shape
            )));
        }
        let cols = self.shape[1];
        let data = self
            .data
            .chunks(cols)
            .rev()
            .flat_map(|row| row.iter().copied())
            .collect();
        Ok(DenseTensor::from_parts(self.shape.clone(), data))
    }

    /// Permutes the axes: output axis `k` is input axis `perm[k]`.
    ///
    /// `perm = [1, 0, 2]` swaps the first two axes of a rank-3 tensor.
    pub fn transpose(&self, perm: &[usize]) -> Result<Self> {
        let rank = self.rank();
        let mut seen = vec![false; rank];
        if perm.len() != rank {
            return Err(Error::Argument(format!(
                "permutation {perm:?} does not match rank {rank}"
            )));
        }
        for &p in perm {
            if p >= rank || seen[p] {
                return Err(Error::Argument(format!("{perm:?} is not a permutation")));
            }
            seen[p] = true;
        }
        let out_shape: Vec<usize> = perm.iter().map(|&p| self.shape[p]).collect();
        let in_strides = self.strides();
        let src_strides: Vec<usize> = perm.iter().map(|&p| in_strides[p]).collect();
        let mut data = Vec::with_capacity(self.len());
        let mut index = vec![0usize; rank];
        for _ in 0..self.len() {
            let off: usize = index.iter().zip(&src_strides).map(|(i, s)| i * s).sum();
            data.push(self.data[off]);
            for k in (0..rank).rev() {
                index[k] += 1;
                if index[k] < out_shape[k] {
                    break;
                }
                index[k] = 0;
            }
        }
        Ok(DenseTensor::from_parts(out_shape, data))
    }

    /// Concatenates along `axis`; all other axes must agree.
    pub fn concat(&self, other: &DenseTensor, axis: usize) -> Result<Self> {
        if self.rank() != other.rank() || axis >= self.rank() {
            return Err(Error::shape(format!(
                "cannot concatenate {:?} and {:?} along axis {axis}",
                self.shape, other.shape
            )));
        }
        for k in 0..self.rank() {
            if k != axis && self.shape[k] != other.shape[k] {
                return Err(Error::shape(format!(
                    "cannot concatenate {:?} and {:?} along axis {axis}",
                    self.shape, other.shape
                )));
            }
        }
        let outer: usize = self.shape[..axis].iter().product();
        let inner_a: usize = self.shape[axis..].iter().product();
        let inner_b: usize = other.shape[axis..].iter().product();
        let mut data = Vec::with_capacity(self.len() + other.len());
        for o in 0..outer {
            data.extend_from_slice(&self.data[o * inner_a..(o + 1) * inner_a]);
            data.extend_from_slice(&other.data[o * inner_b..(o + 1) * inner_b]);
        }
        let mut shape = self.shape.clone();
        shape[axis] += other.shape[axis];
        Ok(DenseTensor::from_parts(shape, data))
    }

    /// The half-open range `start..start+len` along `axis`.
    pub fn slice(&self, axis: usize, start: usize, len: usize) -> Result<Self> {
        if axis >= self.rank() || len == 0 || start + len > self.shape[axis] {
            return Err(Error::shape(format!(
                "slice {start}..{} of axis {axis} out of range for {:?}",
                start + len,
                self.shape
            )));
        }
        let outer: usize = self.shape[..axis].iter().product();
        let inner: usize = self.shape[axis + 1..].iter().product();
        let n = self.shape[axis];
        let mut data = Vec::with_capacity(outer * len * inner);
        for o in 0..outer {
            let base = o * n * inner;
            data.extend_from_slice(&self.data[base + start * inner..base + (start + len) * inner]);
        }
        let mut shape = self.shape.clone();
        shape[axis] = len;
        Ok(DenseTensor::from_parts(shape, data))
    }

    /// Picks index `i` along `axis`, dropping that axis.
    pub fn select(&self, axis: usize, i: usize) -> Result<Self> {
        if self.rank() < 2 {
            return Err(Error::shape("select needs rank >= 2"));
        }
        let sliced = self.slice(axis, i, 1)?;
        let mut shape = self.shape.clone();
        shape.remove(axis);
        Ok(DenseTensor::from_parts(shape, sliced.data))
    }

    /// Stacks equally shaped tensors along a new `axis`.
    pub fn stack(parts: &[DenseTensor], axis: usize) -> Result<Self> {
        let first = parts
            .first()
            .ok_or_else(|| Error::shape("stack of zero tensors"))?;
        if axis > first.rank() || first.rank() >= 3 {
            return Err(Error::shape(format!(
                "cannot stack rank {} along axis {axis}",
                first.rank()
            )));
        }
        if parts.iter().any(|p| p.shape != first.shape) {
            return Err(Error::shape("stack of differently shaped tensors"));
        }
        let outer: usize = first.shape[..axis].iter().product();
        let inner: usize = first.shape[axis..].iter().product();
        let mut data = Vec::with_capacity(first.len() * parts.len());
        for o in 0..outer {
            for p in parts {
                data.extend_from_slice(&p.data[o * inner..(o + 1) * inner]);
            }
        }
        let mut shape = first.shape.clone();
        shape.insert(axis, parts.len());
        Ok(DenseTensor::from_parts(shape, data))
    }

    /// `self · otherᵀ` for matrices `n×k` and `m×k`.
    pub fn matmul_t(&self, other: &DenseTensor) -> Result<Self> {
        if self.rank() != 2 || other.rank() != 2 || self.shape[1] != other.shape[1] {
            return Err(Error::shape(format!(
                "matmul_t of {:?} and {:?}",
                self.shape, other.shape
            )));
        }
        let (n, k, m) = (self.shape[0], self.shape[1], other.shape[0]);
        let mut data = vec![0.0; n * m];
        for i in 0..n {
            let x = &self.data[i * k..(i + 1) * k];
            for j in 0..m {
                let w = &other.data[j * k..(j + 1) * k];
                data[i * m + j] = x.iter().zip(w).map(|(a, b)| a * b).sum();
            }
        }
        Ok(DenseTensor::from_parts(vec![n, m], data))
    }
}
