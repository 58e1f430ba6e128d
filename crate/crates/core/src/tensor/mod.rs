//! Dense f64 matrices with a recording tape for reverse-mode gradients.
//!
//! [`Tensor`] is plain row-major storage. All differentiable computation goes
//! through a [`Tape`]: operations record the values needed for their backward
//! rule, and [`Tape::backward`] replays the record once in reverse. The op set
//! is exactly what the model forward pass requires — nothing speculative.

mod backward;
mod check;
mod tape;

#[cfg(test)]
mod op_tests;

pub use check::finite_difference_check;
pub use tape::{BatchStats, BinaryKind, Gradients, Tape, UnaryKind, Var};

use alloc::rc::Rc;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::TensorError;

/// Dense row-major matrix of 64-bit floats.
///
/// Scalars are 1x1, row vectors 1xN. Gradient buffers for parameters are
/// managed by the training loop, not the tensor itself; intermediate values
/// live on the tape.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Tensor {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self, TensorError> {
        if rows == 0 || cols == 0 || rows.checked_mul(cols) != Some(data.len()) {
            return Err(TensorError::BadShape { rows, cols, len: data.len() });
        }
        Ok(Tensor { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Tensor { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn filled(rows: usize, cols: usize, value: f64) -> Self {
        Tensor { rows, cols, data: vec![value; rows * cols] }
    }

    pub fn scalar(value: f64) -> Self {
        Tensor { rows: 1, cols: 1, data: vec![value] }
    }

    /// Single row vector.
    pub fn row(values: &[f64]) -> Self {
        Tensor { rows: 1, cols: values.len(), data: values.to_vec() }
    }

    /// Builds from nested rows; all rows must have equal length.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, TensorError> {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            if row.len() != c {
                return Err(TensorError::BadShape { rows: r, cols: c, len: row.len() });
            }
            data.extend_from_slice(row);
        }
        Tensor::new(r, c, data)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
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

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }

    #[inline]
    pub fn row_slice(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn is_finite_all(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// The scalar value of a 1x1 tensor.
    pub fn item(&self) -> f64 {
        debug_assert_eq!(self.data.len(), 1, "item() on a non-scalar tensor");
        self.data[0]
    }
}

/// Sparse row-weighted adjacency operator, used for neighborhood aggregation.
///
/// Stores both the matrix and its transpose in CSR form so the backward pass
/// is a plain replay with swapped arrays.
#[derive(Debug)]
pub struct SparseMat {
    rows: usize,
    cols: usize,
    fwd: Csr,
    bwd: Csr,
}

#[derive(Debug)]
struct Csr {
    indptr: Vec<usize>,
    indices: Vec<usize>,
    weights: Vec<f64>,
}

impl Csr {
    fn from_triplets(rows: usize, triplets: &[(usize, usize, f64)]) -> Csr {
        let mut counts = vec![0usize; rows + 1];
        for &(r, _, _) in triplets {
            counts[r + 1] += 1;
        }
        for i in 0..rows {
            counts[i + 1] += counts[i];
        }
        let indptr = counts.clone();
        let mut cursor = counts;
        let mut indices = vec![0usize; triplets.len()];
        let mut weights = vec![0.0; triplets.len()];
        for &(r, c, w) in triplets {
            let at = cursor[r];
            indices[at] = c;
            weights[at] = w;
            cursor[r] += 1;
        }
        Csr { indptr, indices, weights }
    }

    fn apply(&self, x: &Tensor, out_rows: usize) -> Tensor {
        let f = x.cols;
        let mut out = Tensor::zeros(out_rows, f);
        for r in 0..out_rows {
            let dst = r * f;
            for k in self.indptr[r]..self.indptr[r + 1] {
                let src = self.indices[k] * f;
                let w = self.weights[k];
                for j in 0..f {
                    out.data[dst + j] += w * x.data[src + j];
                }
            }
        }
        out
    }
}

impl SparseMat {
    /// Builds from `(row, col, weight)` triplets. Triplet order is preserved
    /// within a row, so construction is deterministic.
    pub fn from_triplets(rows: usize, cols: usize, triplets: &[(usize, usize, f64)]) -> Rc<Self> {
        debug_assert!(triplets.iter().all(|&(r, c, _)| r < rows && c < cols));
        let transposed: Vec<(usize, usize, f64)> =
            triplets.iter().map(|&(r, c, w)| (c, r, w)).collect();
        Rc::new(SparseMat {
            rows,
            cols,
            fwd: Csr::from_triplets(rows, triplets),
            bwd: Csr::from_triplets(cols, &transposed),
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub(crate) fn apply(&self, x: &Tensor) -> Tensor {
        debug_assert_eq!(x.rows, self.cols);
        self.fwd.apply(x, self.rows)
    }

    pub(crate) fn apply_transpose(&self, g: &Tensor) -> Tensor {
        debug_assert_eq!(g.rows, self.rows);
        self.bwd.apply(g, self.cols)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn new_rejects_bad_shape() {
        assert!(Tensor::new(2, 2, vec![1.0; 3]).is_err());
        assert!(Tensor::new(0, 2, vec![]).is_err());
        assert!(Tensor::new(2, 2, vec![0.0; 4]).is_ok());
    }

    #[test]
    fn sparse_apply_matches_dense() {
        // [[0,2],[1,0],[0.5,0.5]] applied to a 2x3 input.
        let m = SparseMat::from_triplets(
            3,
            2,
            &[(0, 1, 2.0), (1, 0, 1.0), (2, 0, 0.5), (2, 1, 0.5)],
        );
        let x = Tensor::from_rows(&[vec![1.0, 2.0, 3.0], vec![4.0, 5.0, 6.0]]).unwrap();
        let y = m.apply(&x);
        assert_eq!(y.row_slice(0), &[8.0, 10.0, 12.0]);
        assert_eq!(y.row_slice(1), &[1.0, 2.0, 3.0]);
        assert_eq!(y.row_slice(2), &[2.5, 3.5, 4.5]);

        // Transpose applied to a 3x3 gradient agrees with the dense transpose.
        let g = Tensor::from_rows(&[
            vec![1.0, 0.0, 0.0],
            vec![0.0, 1.0, 0.0],
            vec![1.0, 1.0, 1.0],
        ])
        .unwrap();
        let gt = m.apply_transpose(&g);
        assert_eq!(gt.row_slice(0), &[0.5, 1.5, 0.5]);
        assert_eq!(gt.row_slice(1), &[2.5, 0.5, 0.5]);
    }
}
