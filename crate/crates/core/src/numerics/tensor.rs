//! Dense row-major tensor storage.

use crate::error::{Error, Result};

/// Dense real-valued tensor. Data is stored row-major (last axis fastest),
/// so serialized parameter blocks are portable across implementations.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    shape: Vec<usize>,
    data: Vec<f64>,
}

impl Tensor {
    /// All-zero tensor of the given shape.
    pub fn zeros(shape: &[usize]) -> Tensor {
        let n = shape.iter().product();
        Tensor { shape: shape.to_vec(), data: vec![0.0; n] }
    }

    /// Builds a tensor from row-major data, validating the element count.
    pub fn from_vec(shape: &[usize], data: Vec<f64>) -> Result<Tensor> {
        let n: usize = shape.iter().product();
        if n != data.len() {
            return Err(Error::shape(format!(
                "shape {:?} implies {} elements, got {}",
                shape,
                n,
                data.len()
            )));
        }
        Ok(Tensor { shape: shape.to_vec(), data })
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
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

    /// Element of a rank-2 tensor at (row, col).
    #[inline]
    pub fn at2(&self, row: usize, col: usize) -> f64 {
        debug_assert_eq!(self.shape.len(), 2);
        self.data[row * self.shape[1] + col]
    }

    #[inline]
    pub fn set2(&mut self, row: usize, col: usize, value: f64) {
        debug_assert_eq!(self.shape.len(), 2);
        self.data[row * self.shape[1] + col] = value;
    }

    /// Elementwise map into a new tensor of the same shape.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Tensor {
        Tensor {
            shape: self.shape.clone(),
            data: self.data.iter().map(|&x| f(x)).collect(),
        }
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    /// y = W·x for a rank-2 (rows, cols) tensor and x of length cols.
    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(self.shape.len(), 2);
        let (rows, cols) = (self.shape[0], self.shape[1]);
        debug_assert_eq!(x.len(), cols);
        let mut y = vec![0.0; rows];
        for r in 0..rows {
            let row = &self.data[r * cols..(r + 1) * cols];
            let mut acc = 0.0;
            for (w, xv) in row.iter().zip(x) {
                acc += w * xv;
            }
            y[r] = acc;
        }
        y
    }

    /// x = Wᵀ·v for a rank-2 (rows, cols) tensor and v of length rows.
    pub fn matvec_transpose(&self, v: &[f64]) -> Vec<f64> {
        debug_assert_eq!(self.shape.len(), 2);
        let (rows, cols) = (self.shape[0], self.shape[1]);
        debug_assert_eq!(v.len(), rows);
        let mut x = vec![0.0; cols];
        for r in 0..rows {
            let row = &self.data[r * cols..(r + 1) * cols];
            let vr = v[r];
            for (acc, w) in x.iter_mut().zip(row) {
                *acc += vr * w;
            }
        }
        x
    }

    /// self += y ⊗ x for a rank-2 (rows, cols) tensor; the outer-product
    /// accumulation used by gradient updates.
    pub fn add_outer(&mut self, y: &[f64], x: &[f64]) {
        debug_assert_eq!(self.shape.len(), 2);
        let (rows, cols) = (self.shape[0], self.shape[1]);
        debug_assert_eq!(y.len(), rows);
        debug_assert_eq!(x.len(), cols);
        for r in 0..rows {
            let row = &mut self.data[r * cols..(r + 1) * cols];
            let yr = y[r];
            for (acc, xv) in row.iter_mut().zip(x) {
                *acc += yr * xv;
            }
        }
    }

    /// self += other, elementwise; shapes must agree.
    pub fn add_assign(&mut self, other: &Tensor) {
        debug_assert_eq!(self.shape, other.shape);
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += b;
        }
    }
}
