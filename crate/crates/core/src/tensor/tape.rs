//! The computation record: forward operations and their saved state.

use alloc::rc::Rc;
use alloc::vec;
use alloc::vec::Vec;

use super::{SparseMat, Tensor};
use crate::error::TensorError;

/// Handle to a node in the active [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Var(pub(crate) usize);

/// Pointwise unary operations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum UnaryKind {
    Tanh,
    Sigmoid,
    Relu,
    Sqrt,
    Ln,
    /// `a * x + b` with constant coefficients; covers scaling and shifting.
    Affine(f64, f64),
    Clamp(f64, f64),
}

/// Pointwise binary operations on equal shapes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BinaryKind {
    Add,
    Sub,
    Mul,
}

/// Per-feature batch statistics produced by a train-mode batch norm, consumed
/// by the running-statistics update.
#[derive(Debug, Clone)]
pub struct BatchStats {
    pub mean: Vec<f64>,
    pub var: Vec<f64>,
    pub count: usize,
}

pub(crate) enum Op {
    Leaf,
    MatmulNN(Var, Var),
    /// `a * b^T`
    MatmulNT(Var, Var),
    /// `a^T * b`
    MatmulTN(Var, Var),
    Softmax {
        x: Var,
        scale: f64,
    },
    Conv1d {
        x: Var,
        w: Var,
        stride: usize,
    },
    GroupedConv1d {
        x: Var,
        k: Var,
    },
    BatchNorm {
        x: Var,
        gamma: Var,
        beta: Var,
        mask: Option<Vec<bool>>,
        /// Normalized pre-affine values; zero at masked rows.
        xhat: Vec<f64>,
        inv_std: Vec<f64>,
        /// Unmasked row count (train mode) — eval mode stores 0 and uses the
        /// running statistics pathway in backward.
        train_count: usize,
    },
    Unary {
        x: Var,
        kind: UnaryKind,
    },
    Binary {
        a: Var,
        b: Var,
        kind: BinaryKind,
    },
    AddRow {
        x: Var,
        row: Var,
    },
    ScaleByScalar {
        x: Var,
        s: Var,
    },
    ConcatRows {
        parts: Vec<Var>,
    },
    ConcatCols {
        parts: Vec<Var>,
    },
    SliceRows {
        x: Var,
        start: usize,
    },
    SliceCols {
        x: Var,
        start: usize,
    },
    PadRows {
        x: Var,
    },
    Reshape {
        x: Var,
    },
    Regroup {
        x: Var,
        batch: usize,
        len: usize,
        feat: usize,
    },
    SumAll {
        x: Var,
    },
    SumRows {
        x: Var,
    },
    SparseApply {
        mat: Rc<SparseMat>,
        x: Var,
    },
    PerformerFeatures {
        x: Var,
        omega: Var,
    },
    DivCol {
        a: Var,
        d: Var,
    },
}

pub(crate) struct Node {
    pub op: Op,
    pub value: Tensor,
}

/// Append-only record of one forward pass.
///
/// A tape is owned by exactly one execution context; `backward` consumes the
/// record and clears it. Nodes are pushed in dependency order, so the record
/// is topologically sorted by construction.
#[derive(Default)]
pub struct Tape {
    pub(crate) nodes: Vec<Node>,
}

/// Gradient buffers produced by a backward pass, indexed by [`Var`].
pub struct Gradients {
    pub(crate) grads: Vec<Option<Tensor>>,
}

impl Gradients {
    /// Gradient for `v`, or an all-zero tensor of the given shape when `v`
    /// was not reached by the loss.
    pub fn take(&mut self, v: Var, rows: usize, cols: usize) -> Tensor {
        match self.grads.get_mut(v.0).and_then(Option::take) {
            Some(g) => {
                debug_assert_eq!(g.shape(), (rows, cols));
                g
            }
            None => Tensor::zeros(rows, cols),
        }
    }

    pub fn get(&self, v: Var) -> Option<&Tensor> {
        self.grads.get(v.0).and_then(Option::as_ref)
    }
}

impl Tape {
    pub fn new() -> Self {
        Tape { nodes: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, v: Var) -> &Tensor {
        &self.nodes[v.0].value
    }

    fn push(&mut self, op: Op, value: Tensor) -> Var {
        debug_assert!(value.is_finite_all(), "non-finite forward value");
        self.nodes.push(Node { op, value });
        Var(self.nodes.len() - 1)
    }

    /// Registers an input (parameter or constant) on the tape.
    pub fn leaf(&mut self, value: Tensor) -> Var {
        self.push(Op::Leaf, value)
    }

    pub fn leaf_scalar(&mut self, value: f64) -> Var {
        self.leaf(Tensor::scalar(value))
    }

    // ── matrix products ──────────────────────────────────────────────

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var, TensorError> {
        let (av, bv) = (self.value(a), self.value(b));
        if av.cols() != bv.rows() {
            return Err(TensorError::ShapeMismatch { op: "matmul", lhs: av.shape(), rhs: bv.shape() });
        }
        let out = matmul_nn(av, bv);
        Ok(self.push(Op::MatmulNN(a, b), out))
    }

    /// `a * b^T`
    pub fn matmul_nt(&mut self, a: Var, b: Var) -> Result<Var, TensorError> {
        let (av, bv) = (self.value(a), self.value(b));
        if av.cols() != bv.cols() {
            return Err(TensorError::ShapeMismatch { op: "matmul_nt", lhs: av.shape(), rhs: bv.shape() });
        }
        let out = matmul_nt(av, bv);
        Ok(self.push(Op::MatmulNT(a, b), out))
    }

    /// `a^T * b`
    pub fn matmul_tn(&mut self, a: Var, b: Var) -> Result<Var, TensorError> {
        let (av, bv) = (self.value(a), self.value(b));
        if av.rows() != bv.rows() {
            return Err(TensorError::ShapeMismatch { op: "matmul_tn", lhs: av.shape(), rhs: bv.shape() });
        }
        let out = matmul_tn(av, bv);
        Ok(self.push(Op::MatmulTN(a, b), out))
    }

    // ── softmax ──────────────────────────────────────────────────────

    /// Row softmax of `scale * x`, stabilized by row-max subtraction.
    pub fn softmax_rows(&mut self, x: Var, scale: f64) -> Result<Var, TensorError> {
        self.softmax_rows_masked(x, scale, None)
    }

    /// Row softmax where masked columns contribute nothing; a row with no
    /// valid column comes out all-zero.
    pub fn softmax_rows_masked(
        &mut self,
        x: Var,
        scale: f64,
        col_mask: Option<&[bool]>,
    ) -> Result<Var, TensorError> {
        if scale <= 0.0 {
            return Err(TensorError::Invalid(alloc::format!(
                "softmax scale must be positive, got {scale}"
            )));
        }
        let xv = self.value(x);
        if let Some(m) = col_mask {
            if m.len() != xv.cols() {
                return Err(TensorError::ShapeMismatch {
                    op: "softmax mask",
                    lhs: xv.shape(),
                    rhs: (1, m.len()),
                });
            }
        }
        let (rows, cols) = xv.shape();
        let mut out = Tensor::zeros(rows, cols);
        for r in 0..rows {
            let row = xv.row_slice(r);
            let mut max = f64::NEG_INFINITY;
            for c in 0..cols {
                if col_mask.is_none_or(|m| m[c]) {
                    max = max.max(scale * row[c]);
                }
            }
            if max == f64::NEG_INFINITY {
                continue; // fully masked row stays zero
            }
            let mut sum = 0.0;
            for c in 0..cols {
                if col_mask.is_none_or(|m| m[c]) {
                    let e = libm::exp(scale * row[c] - max);
                    out.data[r * cols + c] = e;
                    sum += e;
                }
            }
            for c in 0..cols {
                out.data[r * cols + c] /= sum;
            }
        }
        Ok(self.push(Op::Softmax { x, scale }, out))
    }

    // ── convolutions ─────────────────────────────────────────────────

    /// 1-d cross-correlation of a 1xL signal with H kernels of length M:
    /// `out[h, n] = sum_m w[h, m] * x[n*stride + m]`, output length
    /// `(L - M) / stride + 1`.
    pub fn conv1d(&mut self, x: Var, w: Var, stride: usize) -> Result<Var, TensorError> {
        let (xv, wv) = (self.value(x), self.value(w));
        if xv.rows() != 1 {
            return Err(TensorError::ShapeMismatch { op: "conv1d", lhs: xv.shape(), rhs: wv.shape() });
        }
        let (l, m) = (xv.cols(), wv.cols());
        if m > l || stride == 0 {
            return Err(TensorError::InvalidKernel { signal: l, kernel: m, stride });
        }
        let h = wv.rows();
        let out_len = (l - m) / stride + 1;
        let mut out = Tensor::zeros(h, out_len);
        for ch in 0..h {
            let kern = wv.row_slice(ch);
            for n in 0..out_len {
                let base = n * stride;
                let mut acc = 0.0;
                for (j, &k) in kern.iter().enumerate() {
                    acc += k * xv.data[base + j];
                }
                out.data[ch * out_len + n] = acc;
            }
        }
        Ok(self.push(Op::Conv1d { x, w, stride }, out))
    }

    /// Per-group full-overlap cross-correlation: row g of the output is the
    /// dot product of row g of `x` with row g of `k`. Groups never mix.
    pub fn grouped_conv1d(&mut self, x: Var, k: Var) -> Result<Var, TensorError> {
        let (xv, kv) = (self.value(x), self.value(k));
        if xv.shape() != kv.shape() {
            return Err(TensorError::ShapeMismatch {
                op: "grouped_conv1d",
                lhs: xv.shape(),
                rhs: kv.shape(),
            });
        }
        let g = xv.rows();
        let mut out = Tensor::zeros(g, 1);
        for r in 0..g {
            let mut acc = 0.0;
            for (a, b) in xv.row_slice(r).iter().zip(kv.row_slice(r)) {
                acc += a * b;
            }
            out.data[r] = acc;
        }
        Ok(self.push(Op::GroupedConv1d { x, k }, out))
    }

    // ── batch normalization ──────────────────────────────────────────

    /// Train-mode batch norm over unmasked rows. Masked rows are excluded
    /// from the statistics and forced back to zero in the output. Returns
    /// the batch statistics for the caller's running-average update.
    pub fn batch_norm_train(
        &mut self,
        x: Var,
        gamma: Var,
        beta: Var,
        mask: Option<&[bool]>,
    ) -> Result<(Var, BatchStats), TensorError> {
        let xv = self.value(x);
        let (n, f) = xv.shape();
        self.check_bn_shapes(x, gamma, beta, mask)?;
        let count = match mask {
            Some(m) => m.iter().filter(|&&v| v).count(),
            None => n,
        };
        if count == 0 {
            return Err(TensorError::DegenerateBatch);
        }
        let cnt = count as f64;
        let mut mean = vec![0.0; f];
        let mut var = vec![0.0; f];
        for r in 0..n {
            if mask.is_none_or(|m| m[r]) {
                for c in 0..f {
                    mean[c] += xv.data[r * f + c];
                }
            }
        }
        for v in mean.iter_mut() {
            *v /= cnt;
        }
        for r in 0..n {
            if mask.is_none_or(|m| m[r]) {
                for c in 0..f {
                    let d = xv.data[r * f + c] - mean[c];
                    var[c] += d * d;
                }
            }
        }
        for v in var.iter_mut() {
            *v /= cnt;
        }
        let inv_std: Vec<f64> = var.iter().map(|&v| 1.0 / libm::sqrt(v + BN_EPS)).collect();
        let stats = BatchStats { mean: mean.clone(), var: var.clone(), count };
        let v = self.push_bn(x, gamma, beta, mask, &mean, &inv_std, count)?;
        Ok((v, stats))
    }

    /// Eval-mode batch norm: a deterministic affine map using the provided
    /// running statistics. Masked rows are still zeroed.
    pub fn batch_norm_eval(
        &mut self,
        x: Var,
        gamma: Var,
        beta: Var,
        running_mean: &[f64],
        running_var: &[f64],
        mask: Option<&[bool]>,
    ) -> Result<Var, TensorError> {
        self.check_bn_shapes(x, gamma, beta, mask)?;
        let f = self.value(x).cols();
        if running_mean.len() != f || running_var.len() != f {
            return Err(TensorError::ShapeMismatch {
                op: "batch_norm stats",
                lhs: (1, running_mean.len()),
                rhs: (1, f),
            });
        }
        let inv_std: Vec<f64> =
            running_var.iter().map(|&v| 1.0 / libm::sqrt(v + BN_EPS)).collect();
        self.push_bn(x, gamma, beta, mask, running_mean, &inv_std, 0)
    }

    fn check_bn_shapes(
        &self,
        x: Var,
        gamma: Var,
        beta: Var,
        mask: Option<&[bool]>,
    ) -> Result<(), TensorError> {
        let (n, f) = self.value(x).shape();
        for (name, v) in [("gamma", gamma), ("beta", beta)] {
            let t = self.value(v);
            if t.shape() != (1, f) {
                return Err(TensorError::ShapeMismatch {
                    op: if name == "gamma" { "batch_norm gamma" } else { "batch_norm beta" },
                    lhs: t.shape(),
                    rhs: (1, f),
                });
            }
        }
        if let Some(m) = mask {
            if m.len() != n {
                return Err(TensorError::ShapeMismatch {
                    op: "batch_norm mask",
                    lhs: (m.len(), 1),
                    rhs: (n, 1),
                });
            }
        }
        Ok(())
    }

    fn push_bn(
        &mut self,
        x: Var,
        gamma: Var,
        beta: Var,
        mask: Option<&[bool]>,
        mean: &[f64],
        inv_std: &[f64],
        train_count: usize,
    ) -> Result<Var, TensorError> {
        let xv = self.value(x);
        let (n, f) = xv.shape();
        let gv = self.value(gamma).data().to_vec();
        let bv = self.value(beta).data().to_vec();
        let mut xhat = vec![0.0; n * f];
        let mut out = Tensor::zeros(n, f);
        for r in 0..n {
            if mask.is_none_or(|m| m[r]) {
                for c in 0..f {
                    let h = (xv.data[r * f + c] - mean[c]) * inv_std[c];
                    xhat[r * f + c] = h;
                    out.data[r * f + c] = gv[c] * h + bv[c];
                }
            }
        }
        Ok(self.push(
            Op::BatchNorm {
                x,
                gamma,
                beta,
                mask: mask.map(<[bool]>::to_vec),
                xhat,
                inv_std: inv_std.to_vec(),
                train_count,
            },
            out,
        ))
    }

    // ── pointwise ────────────────────────────────────────────────────

    pub fn unary(&mut self, x: Var, kind: UnaryKind) -> Var {
        let xv = self.value(x);
        let mut out = xv.clone();
        for v in out.data.iter_mut() {
            *v = apply_unary(*v, kind);
        }
        self.push(Op::Unary { x, kind }, out)
    }

    pub fn tanh(&mut self, x: Var) -> Var {
        self.unary(x, UnaryKind::Tanh)
    }

    pub fn sigmoid(&mut self, x: Var) -> Var {
        self.unary(x, UnaryKind::Sigmoid)
    }

    pub fn relu(&mut self, x: Var) -> Var {
        self.unary(x, UnaryKind::Relu)
    }

    pub fn sqrt(&mut self, x: Var) -> Var {
        self.unary(x, UnaryKind::Sqrt)
    }

    pub fn ln(&mut self, x: Var) -> Var {
        self.unary(x, UnaryKind::Ln)
    }

    /// `a * x + b` elementwise.
    pub fn affine(&mut self, x: Var, a: f64, b: f64) -> Var {
        self.unary(x, UnaryKind::Affine(a, b))
    }

    pub fn scale(&mut self, x: Var, a: f64) -> Var {
        self.unary(x, UnaryKind::Affine(a, 0.0))
    }

    pub fn clamp(&mut self, x: Var, lo: f64, hi: f64) -> Var {
        self.unary(x, UnaryKind::Clamp(lo, hi))
    }

    pub fn binary(&mut self, a: Var, b: Var, kind: BinaryKind) -> Result<Var, TensorError> {
        let (av, bv) = (self.value(a), self.value(b));
        if av.shape() != bv.shape() {
            return Err(TensorError::ShapeMismatch {
                op: match kind {
                    BinaryKind::Add => "add",
                    BinaryKind::Sub => "sub",
                    BinaryKind::Mul => "mul",
                },
                lhs: av.shape(),
                rhs: bv.shape(),
            });
        }
        let mut out = av.clone();
        for (o, &r) in out.data.iter_mut().zip(bv.data.iter()) {
            *o = match kind {
                BinaryKind::Add => *o + r,
                BinaryKind::Sub => *o - r,
                BinaryKind::Mul => *o * r,
            };
        }
        Ok(self.push(Op::Binary { a, b, kind }, out))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var, TensorError> {
        self.binary(a, b, BinaryKind::Add)
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var, TensorError> {
        self.binary(a, b, BinaryKind::Sub)
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var, TensorError> {
        self.binary(a, b, BinaryKind::Mul)
    }

    /// Broadcasts a 1xF row over an NxF matrix. The only broadcast shape the
    /// engine supports; anything fancier is a shape error by design.
    pub fn add_row(&mut self, x: Var, row: Var) -> Result<Var, TensorError> {
        let (xv, rv) = (self.value(x), self.value(row));
        if rv.rows() != 1 || rv.cols() != xv.cols() {
            return Err(TensorError::ShapeMismatch { op: "add_row", lhs: xv.shape(), rhs: rv.shape() });
        }
        let f = xv.cols();
        let mut out = xv.clone();
        for r in 0..out.rows {
            for c in 0..f {
                out.data[r * f + c] += rv.data[c];
            }
        }
        Ok(self.push(Op::AddRow { x, row }, out))
    }

    /// Multiplies every entry by a 1x1 scalar variable.
    pub fn scale_by(&mut self, x: Var, s: Var) -> Result<Var, TensorError> {
        let sv = self.value(s);
        if sv.shape() != (1, 1) {
            return Err(TensorError::ShapeMismatch {
                op: "scale_by",
                lhs: self.value(x).shape(),
                rhs: sv.shape(),
            });
        }
        let k = sv.item();
        let mut out = self.value(x).clone();
        for v in out.data.iter_mut() {
            *v *= k;
        }
        Ok(self.push(Op::ScaleByScalar { x, s }, out))
    }

    // ── structure ────────────────────────────────────────────────────

    pub fn concat_rows(&mut self, parts: &[Var]) -> Result<Var, TensorError> {
        let cols = self.value(parts[0]).cols();
        let mut rows = 0;
        for &p in parts {
            let t = self.value(p);
            if t.cols() != cols {
                return Err(TensorError::ShapeMismatch {
                    op: "concat_rows",
                    lhs: (rows, cols),
                    rhs: t.shape(),
                });
            }
            rows += t.rows();
        }
        let mut data = Vec::with_capacity(rows * cols);
        for &p in parts {
            data.extend_from_slice(self.value(p).data());
        }
        let out = Tensor { rows, cols, data };
        Ok(self.push(Op::ConcatRows { parts: parts.to_vec() }, out))
    }

    pub fn concat_cols(&mut self, parts: &[Var]) -> Result<Var, TensorError> {
        let rows = self.value(parts[0]).rows();
        let mut cols = 0;
        for &p in parts {
            let t = self.value(p);
            if t.rows() != rows {
                return Err(TensorError::ShapeMismatch {
                    op: "concat_cols",
                    lhs: (rows, cols),
                    rhs: t.shape(),
                });
            }
            cols += t.cols();
        }
        let mut out = Tensor::zeros(rows, cols);
        let mut at = 0;
        for &p in parts {
            let t = self.value(p);
            let w = t.cols();
            for r in 0..rows {
                out.data[r * cols + at..r * cols + at + w].copy_from_slice(t.row_slice(r));
            }
            at += w;
        }
        Ok(self.push(Op::ConcatCols { parts: parts.to_vec() }, out))
    }

    pub fn slice_rows(&mut self, x: Var, start: usize, len: usize) -> Result<Var, TensorError> {
        let xv = self.value(x);
        if start + len > xv.rows() || len == 0 {
            return Err(TensorError::ShapeMismatch { op: "slice_rows", lhs: xv.shape(), rhs: (start, len) });
        }
        let cols = xv.cols();
        let data = xv.data[start * cols..(start + len) * cols].to_vec();
        let out = Tensor { rows: len, cols, data };
        Ok(self.push(Op::SliceRows { x, start }, out))
    }

    pub fn slice_cols(&mut self, x: Var, start: usize, len: usize) -> Result<Var, TensorError> {
        let xv = self.value(x);
        if start + len > xv.cols() || len == 0 {
            return Err(TensorError::ShapeMismatch { op: "slice_cols", lhs: xv.shape(), rhs: (start, len) });
        }
        let (rows, cols) = xv.shape();
        let mut out = Tensor::zeros(rows, len);
        for r in 0..rows {
            out.data[r * len..(r + 1) * len]
                .copy_from_slice(&xv.data[r * cols + start..r * cols + start + len]);
        }
        Ok(self.push(Op::SliceCols { x, start }, out))
    }

    /// Appends zero rows until the tensor has `total_rows` rows.
    pub fn pad_rows(&mut self, x: Var, total_rows: usize) -> Result<Var, TensorError> {
        let xv = self.value(x);
        if total_rows < xv.rows() {
            return Err(TensorError::ShapeMismatch { op: "pad_rows", lhs: xv.shape(), rhs: (total_rows, xv.cols()) });
        }
        let cols = xv.cols();
        let mut data = xv.data.clone();
        data.resize(total_rows * cols, 0.0);
        let out = Tensor { rows: total_rows, cols, data };
        Ok(self.push(Op::PadRows { x }, out))
    }

    /// Reinterprets the row-major buffer under a new shape.
    pub fn reshape(&mut self, x: Var, rows: usize, cols: usize) -> Result<Var, TensorError> {
        let xv = self.value(x);
        if rows * cols != xv.len() {
            return Err(TensorError::BadShape { rows, cols, len: xv.len() });
        }
        let out = Tensor { rows, cols, data: xv.data.clone() };
        Ok(self.push(Op::Reshape { x }, out))
    }

    /// Permutes a `(batch*len) x feat` stack of sequences into
    /// `(batch*feat) x len` groups: group `b*feat + f` holds feature `f` of
    /// sequence `b` over its positions.
    pub fn regroup(&mut self, x: Var, batch: usize, len: usize, feat: usize) -> Result<Var, TensorError> {
        let xv = self.value(x);
        if xv.shape() != (batch * len, feat) {
            return Err(TensorError::ShapeMismatch {
                op: "regroup",
                lhs: xv.shape(),
                rhs: (batch * len, feat),
            });
        }
        let mut out = Tensor::zeros(batch * feat, len);
        for b in 0..batch {
            for n in 0..len {
                for f in 0..feat {
                    out.data[(b * feat + f) * len + n] = xv.data[(b * len + n) * feat + f];
                }
            }
        }
        Ok(self.push(Op::Regroup { x, batch, len, feat }, out))
    }

    pub fn sum_all(&mut self, x: Var) -> Var {
        let s: f64 = self.value(x).data().iter().sum();
        self.push(Op::SumAll { x }, Tensor::scalar(s))
    }

    /// Row sums: NxF -> Nx1.
    pub fn sum_rows(&mut self, x: Var) -> Var {
        let xv = self.value(x);
        let rows = xv.rows();
        let mut out = Tensor::zeros(rows, 1);
        for r in 0..rows {
            out.data[r] = xv.row_slice(r).iter().sum();
        }
        self.push(Op::SumRows { x }, out)
    }

    /// Applies a constant sparse operator: `y = mat * x`.
    pub fn sparse_apply(&mut self, mat: &Rc<SparseMat>, x: Var) -> Result<Var, TensorError> {
        let xv = self.value(x);
        if xv.rows() != mat.cols() {
            return Err(TensorError::ShapeMismatch {
                op: "sparse_apply",
                lhs: (mat.rows(), mat.cols()),
                rhs: xv.shape(),
            });
        }
        let out = mat.apply(xv);
        Ok(self.push(Op::SparseApply { mat: Rc::clone(mat), x }, out))
    }

    /// Positive random features for softmax-kernel attention:
    /// `phi[i, r] = exp(omega_r . x_i - |x_i|^2 / 2) / sqrt(R)`.
    pub fn performer_features(&mut self, x: Var, omega: Var) -> Result<Var, TensorError> {
        let (xv, ov) = (self.value(x), self.value(omega));
        if xv.cols() != ov.cols() {
            return Err(TensorError::ShapeMismatch {
                op: "performer_features",
                lhs: xv.shape(),
                rhs: ov.shape(),
            });
        }
        let (l, d) = xv.shape();
        let r = ov.rows();
        let inv_sqrt_r = 1.0 / libm::sqrt(r as f64);
        let mut out = Tensor::zeros(l, r);
        for i in 0..l {
            let xi = xv.row_slice(i);
            let half_sq: f64 = 0.5 * xi.iter().map(|v| v * v).sum::<f64>();
            for rr in 0..r {
                let om = ov.row_slice(rr);
                let mut dot = 0.0;
                for c in 0..d {
                    dot += om[c] * xi[c];
                }
                out.data[i * r + rr] = libm::exp(dot - half_sq) * inv_sqrt_r;
            }
        }
        Ok(self.push(Op::PerformerFeatures { x, omega }, out))
    }

    /// Divides each row of `a` by the matching entry of the Nx1 column `d`.
    /// Entries of `d` smaller in magnitude than `min_abs` are an error.
    pub fn div_col(&mut self, a: Var, d: Var, min_abs: f64) -> Result<Var, TensorError> {
        let (av, dv) = (self.value(a), self.value(d));
        if dv.cols() != 1 || dv.rows() != av.rows() {
            return Err(TensorError::ShapeMismatch { op: "div_col", lhs: av.shape(), rhs: dv.shape() });
        }
        for &v in dv.data() {
            if !(v.abs() >= min_abs) {
                return Err(TensorError::NumericalDegeneracy { what: "attention normalizer", value: v });
            }
        }
        let (rows, cols) = av.shape();
        let mut out = av.clone();
        for r in 0..rows {
            let inv = 1.0 / dv.data[r];
            for c in 0..cols {
                out.data[r * cols + c] *= inv;
            }
        }
        Ok(self.push(Op::DivCol { a, d }, out))
    }
}

pub(crate) const BN_EPS: f64 = 1e-5;

pub(crate) fn apply_unary(v: f64, kind: UnaryKind) -> f64 {
    match kind {
        UnaryKind::Tanh => libm::tanh(v),
        UnaryKind::Sigmoid => 1.0 / (1.0 + libm::exp(-v)),
        UnaryKind::Relu => {
            if v > 0.0 {
                v
            } else {
                0.0
            }
        }
        UnaryKind::Sqrt => libm::sqrt(v),
        UnaryKind::Ln => libm::log(v),
        UnaryKind::Affine(a, b) => a * v + b,
        UnaryKind::Clamp(lo, hi) => v.clamp(lo, hi),
    }
}

pub(crate) fn matmul_nn(a: &Tensor, b: &Tensor) -> Tensor {
    let (m, k) = a.shape();
    let n = b.cols();
    let mut out = Tensor::zeros(m, n);
    for i in 0..m {
        let arow = a.row_slice(i);
        let orow = &mut out.data[i * n..(i + 1) * n];
        for (l, &av) in arow.iter().enumerate() {
            if av != 0.0 {
                let brow = &b.data[l * n..(l + 1) * n];
                for (o, &bv) in orow.iter_mut().zip(brow) {
                    *o += av * bv;
                }
            }
        }
    }
    let _ = k;
    out
}

pub(crate) fn matmul_nt(a: &Tensor, b: &Tensor) -> Tensor {
    let (m, k) = a.shape();
    let n = b.rows();
    let mut out = Tensor::zeros(m, n);
    for i in 0..m {
        let arow = a.row_slice(i);
        for j in 0..n {
            let brow = b.row_slice(j);
            let mut acc = 0.0;
            for l in 0..k {
                acc += arow[l] * brow[l];
            }
            out.data[i * n + j] = acc;
        }
    }
    out
}

pub(crate) fn matmul_tn(a: &Tensor, b: &Tensor) -> Tensor {
    let (k, m) = a.shape();
    let n = b.cols();
    let mut out = Tensor::zeros(m, n);
    for l in 0..k {
        let arow = a.row_slice(l);
        let brow = b.row_slice(l);
        for (i, &av) in arow.iter().enumerate() {
            if av != 0.0 {
                let orow = &mut out.data[i * n..(i + 1) * n];
                for (o, &bv) in orow.iter_mut().zip(brow) {
                    *o += av * bv;
                }
            }
        }
    }
    out
}
