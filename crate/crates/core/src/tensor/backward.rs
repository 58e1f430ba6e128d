//! Reverse replay of the computation record.

use alloc::vec;
use alloc::vec::Vec;

use super::tape::{BinaryKind, Gradients, Op, Tape, UnaryKind, Var};
use super::Tensor;
use crate::error::TensorError;

impl Tape {
    /// Accumulates `d loss / d node` for every node reachable from `loss`,
    /// then clears the record. Leaf gradients are returned; parameters never
    /// touched by the loss simply have no entry and read back as exact zero.
    pub fn backward(&mut self, loss: Var) -> Result<Gradients, TensorError> {
        let lv = &self.nodes[loss.0].value;
        if lv.shape() != (1, 1) {
            return Err(TensorError::NonScalarLoss { rows: lv.rows(), cols: lv.cols() });
        }
        let mut grads: Vec<Option<Tensor>> = (0..self.nodes.len()).map(|_| None).collect();
        grads[loss.0] = Some(Tensor::scalar(1.0));
        for id in (0..=loss.0).rev() {
            if matches!(self.nodes[id].op, Op::Leaf) {
                continue;
            }
            let Some(g) = grads[id].take() else { continue };
            self.backprop_node(id, &g, &mut grads);
        }
        self.nodes.clear();
        Ok(Gradients { grads })
    }

    fn backprop_node(&self, id: usize, g: &Tensor, grads: &mut [Option<Tensor>]) {
        let node = &self.nodes[id];
        match &node.op {
            Op::Leaf => {}
            Op::MatmulNN(a, b) => {
                let (av, bv) = (self.val(*a), self.val(*b));
                accumulate(grads, *a, super::tape::matmul_nt(g, bv));
                accumulate(grads, *b, super::tape::matmul_tn(av, g));
            }
            Op::MatmulNT(a, b) => {
                // c = a b^T: da = g b, db = g^T a
                let (av, bv) = (self.val(*a), self.val(*b));
                accumulate(grads, *a, super::tape::matmul_nn(g, bv));
                accumulate(grads, *b, super::tape::matmul_tn(g, av));
            }
            Op::MatmulTN(a, b) => {
                // c = a^T b: da = b g^T, db = a g
                let (av, bv) = (self.val(*a), self.val(*b));
                accumulate(grads, *a, super::tape::matmul_nt(bv, g));
                accumulate(grads, *b, super::tape::matmul_nn(av, g));
            }
            Op::Softmax { x, scale } => {
                let y = &node.value;
                let (rows, cols) = y.shape();
                let mut dx = Tensor::zeros(rows, cols);
                for r in 0..rows {
                    let yr = y.row_slice(r);
                    let gr = g.row_slice(r);
                    let dot: f64 = yr.iter().zip(gr).map(|(a, b)| a * b).sum();
                    for c in 0..cols {
                        dx.data_mut()[r * cols + c] = scale * yr[c] * (gr[c] - dot);
                    }
                }
                accumulate(grads, *x, dx);
            }
            Op::Conv1d { x, w, stride } => {
                let (xv, wv) = (self.val(*x), self.val(*w));
                let (h, out_len) = node.value.shape();
                let m = wv.cols();
                let mut dx = Tensor::zeros(1, xv.cols());
                let mut dw = Tensor::zeros(h, m);
                for ch in 0..h {
                    for n in 0..out_len {
                        let go = g.get(ch, n);
                        if go == 0.0 {
                            continue;
                        }
                        let base = n * stride;
                        for j in 0..m {
                            dx.data_mut()[base + j] += go * wv.get(ch, j);
                            dw.data_mut()[ch * m + j] += go * xv.data()[base + j];
                        }
                    }
                }
                accumulate(grads, *x, dx);
                accumulate(grads, *w, dw);
            }
            Op::GroupedConv1d { x, k } => {
                let (xv, kv) = (self.val(*x), self.val(*k));
                let (gr, l) = xv.shape();
                let mut dx = Tensor::zeros(gr, l);
                let mut dk = Tensor::zeros(gr, l);
                for r in 0..gr {
                    let go = g.get(r, 0);
                    if go == 0.0 {
                        continue;
                    }
                    for c in 0..l {
                        dx.data_mut()[r * l + c] = go * kv.get(r, c);
                        dk.data_mut()[r * l + c] = go * xv.get(r, c);
                    }
                }
                accumulate(grads, *x, dx);
                accumulate(grads, *k, dk);
            }
            Op::BatchNorm { x, gamma, beta, mask, xhat, inv_std, train_count } => {
                let (n, f) = node.value.shape();
                let gv = self.val(*gamma);
                let live = |r: usize| mask.as_ref().is_none_or(|m| m[r]);
                let mut dgamma = Tensor::zeros(1, f);
                let mut dbeta = Tensor::zeros(1, f);
                for r in 0..n {
                    if live(r) {
                        for c in 0..f {
                            dgamma.data_mut()[c] += g.get(r, c) * xhat[r * f + c];
                            dbeta.data_mut()[c] += g.get(r, c);
                        }
                    }
                }
                let mut dx = Tensor::zeros(n, f);
                if *train_count > 0 {
                    // batch statistics were functions of x
                    let cnt = *train_count as f64;
                    let mut sum_dxhat = vec![0.0; f];
                    let mut sum_dxhat_xhat = vec![0.0; f];
                    for r in 0..n {
                        if live(r) {
                            for c in 0..f {
                                let dxh = g.get(r, c) * gv.data()[c];
                                sum_dxhat[c] += dxh;
                                sum_dxhat_xhat[c] += dxh * xhat[r * f + c];
                            }
                        }
                    }
                    for r in 0..n {
                        if live(r) {
                            for c in 0..f {
                                let dxh = g.get(r, c) * gv.data()[c];
                                dx.data_mut()[r * f + c] = inv_std[c] / cnt
                                    * (cnt * dxh
                                        - sum_dxhat[c]
                                        - xhat[r * f + c] * sum_dxhat_xhat[c]);
                            }
                        }
                    }
                } else {
                    for r in 0..n {
                        if live(r) {
                            for c in 0..f {
                                dx.data_mut()[r * f + c] = g.get(r, c) * gv.data()[c] * inv_std[c];
                            }
                        }
                    }
                }
                accumulate(grads, *x, dx);
                accumulate(grads, *gamma, dgamma);
                accumulate(grads, *beta, dbeta);
            }
            Op::Unary { x, kind } => {
                let xv = self.val(*x);
                let y = &node.value;
                let mut dx = g.clone();
                for (i, d) in dx.data_mut().iter_mut().enumerate() {
                    *d *= unary_derivative(*kind, xv.data()[i], y.data()[i]);
                }
                accumulate(grads, *x, dx);
            }
            Op::Binary { a, b, kind } => match kind {
                BinaryKind::Add => {
                    accumulate(grads, *a, g.clone());
                    accumulate(grads, *b, g.clone());
                }
                BinaryKind::Sub => {
                    accumulate(grads, *a, g.clone());
                    let mut db = g.clone();
                    for v in db.data_mut() {
                        *v = -*v;
                    }
                    accumulate(grads, *b, db);
                }
                BinaryKind::Mul => {
                    let (av, bv) = (self.val(*a), self.val(*b));
                    let mut da = g.clone();
                    for (v, &o) in da.data_mut().iter_mut().zip(bv.data()) {
                        *v *= o;
                    }
                    let mut db = g.clone();
                    for (v, &o) in db.data_mut().iter_mut().zip(av.data()) {
                        *v *= o;
                    }
                    accumulate(grads, *a, da);
                    accumulate(grads, *b, db);
                }
            },
            Op::AddRow { x, row } => {
                let (rows, cols) = node.value.shape();
                accumulate(grads, *x, g.clone());
                let mut dr = Tensor::zeros(1, cols);
                for r in 0..rows {
                    for c in 0..cols {
                        dr.data_mut()[c] += g.get(r, c);
                    }
                }
                accumulate(grads, *row, dr);
            }
            Op::ScaleByScalar { x, s } => {
                let (xv, sv) = (self.val(*x), self.val(*s));
                let k = sv.item();
                let mut dx = g.clone();
                for v in dx.data_mut() {
                    *v *= k;
                }
                let ds: f64 = g.data().iter().zip(xv.data()).map(|(a, b)| a * b).sum();
                accumulate(grads, *x, dx);
                accumulate(grads, *s, Tensor::scalar(ds));
            }
            Op::ConcatRows { parts } => {
                let cols = node.value.cols();
                let mut at = 0;
                for &p in parts {
                    let rows = self.val(p).rows();
                    let data = g.data()[at * cols..(at + rows) * cols].to_vec();
                    accumulate(grads, p, Tensor::new(rows, cols, data).expect("slice shape"));
                    at += rows;
                }
            }
            Op::ConcatCols { parts } => {
                let (rows, cols) = node.value.shape();
                let mut at = 0;
                for &p in parts {
                    let w = self.val(p).cols();
                    let mut dp = Tensor::zeros(rows, w);
                    for r in 0..rows {
                        dp.data_mut()[r * w..(r + 1) * w]
                            .copy_from_slice(&g.data()[r * cols + at..r * cols + at + w]);
                    }
                    accumulate(grads, p, dp);
                    at += w;
                }
            }
            Op::SliceRows { x, start } => {
                let xv = self.val(*x);
                let (rows, cols) = xv.shape();
                let mut dx = Tensor::zeros(rows, cols);
                dx.data_mut()[start * cols..(start + g.rows()) * cols].copy_from_slice(g.data());
                accumulate(grads, *x, dx);
            }
            Op::SliceCols { x, start } => {
                let xv = self.val(*x);
                let (rows, cols) = xv.shape();
                let w = g.cols();
                let mut dx = Tensor::zeros(rows, cols);
                for r in 0..rows {
                    dx.data_mut()[r * cols + start..r * cols + start + w]
                        .copy_from_slice(g.row_slice(r));
                }
                accumulate(grads, *x, dx);
            }
            Op::PadRows { x } => {
                let xv = self.val(*x);
                let (rows, cols) = xv.shape();
                let data = g.data()[..rows * cols].to_vec();
                accumulate(grads, *x, Tensor::new(rows, cols, data).expect("pad shape"));
            }
            Op::Reshape { x } => {
                let xv = self.val(*x);
                let (rows, cols) = xv.shape();
                accumulate(
                    grads,
                    *x,
                    Tensor::new(rows, cols, g.data().to_vec()).expect("reshape shape"),
                );
            }
            Op::Regroup { x, batch, len, feat } => {
                let mut dx = Tensor::zeros(batch * len, *feat);
                for b in 0..*batch {
                    for n in 0..*len {
                        for f in 0..*feat {
                            dx.data_mut()[(b * len + n) * feat + f] =
                                g.data()[(b * feat + f) * len + n];
                        }
                    }
                }
                accumulate(grads, *x, dx);
            }
            Op::SumAll { x } => {
                let xv = self.val(*x);
                let (rows, cols) = xv.shape();
                accumulate(grads, *x, Tensor::filled(rows, cols, g.item()));
            }
            Op::SumRows { x } => {
                let xv = self.val(*x);
                let (rows, cols) = xv.shape();
                let mut dx = Tensor::zeros(rows, cols);
                for r in 0..rows {
                    let gv = g.get(r, 0);
                    for c in 0..cols {
                        dx.data_mut()[r * cols + c] = gv;
                    }
                }
                accumulate(grads, *x, dx);
            }
            Op::SparseApply { mat, x } => {
                accumulate(grads, *x, mat.apply_transpose(g));
            }
            Op::PerformerFeatures { x, omega } => {
                let (xv, ov) = (self.val(*x), self.val(*omega));
                let phi = &node.value;
                let (l, d) = xv.shape();
                let r = ov.rows();
                // d phi_ir / d x_id = phi_ir * (omega_rd - x_id)
                // d phi_ir / d omega_rd = phi_ir * x_id
                let mut dx = Tensor::zeros(l, d);
                let mut dom = Tensor::zeros(r, d);
                for i in 0..l {
                    let xi = xv.row_slice(i);
                    for rr in 0..r {
                        let gp = g.get(i, rr) * phi.get(i, rr);
                        if gp == 0.0 {
                            continue;
                        }
                        let om = ov.row_slice(rr);
                        for c in 0..d {
                            dx.data_mut()[i * d + c] += gp * (om[c] - xi[c]);
                            dom.data_mut()[rr * d + c] += gp * xi[c];
                        }
                    }
                }
                accumulate(grads, *x, dx);
                accumulate(grads, *omega, dom);
            }
            Op::DivCol { a, d } => {
                let (av, dv) = (self.val(*a), self.val(*d));
                let (rows, cols) = av.shape();
                let mut da = Tensor::zeros(rows, cols);
                let mut dd = Tensor::zeros(rows, 1);
                for r in 0..rows {
                    let den = dv.get(r, 0);
                    let inv = 1.0 / den;
                    let mut acc = 0.0;
                    for c in 0..cols {
                        let gv = g.get(r, c);
                        da.data_mut()[r * cols + c] = gv * inv;
                        acc += gv * av.get(r, c);
                    }
                    dd.data_mut()[r] = -acc * inv * inv;
                }
                accumulate(grads, *a, da);
                accumulate(grads, *d, dd);
            }
        }
    }

    fn val(&self, v: Var) -> &Tensor {
        &self.nodes[v.0].value
    }
}

fn unary_derivative(kind: UnaryKind, x: f64, y: f64) -> f64 {
    match kind {
        UnaryKind::Tanh => 1.0 - y * y,
        UnaryKind::Sigmoid => y * (1.0 - y),
        UnaryKind::Relu => {
            if x > 0.0 {
                1.0
            } else {
                0.0
            }
        }
        // zero subgradient at the origin keeps identical-input distances finite
        UnaryKind::Sqrt => {
            if y > 0.0 {
                0.5 / y
            } else {
                0.0
            }
        }
        UnaryKind::Ln => 1.0 / x,
        UnaryKind::Affine(a, _) => a,
        UnaryKind::Clamp(lo, hi) => {
            if x > lo && x < hi {
                1.0
            } else {
                0.0
            }
        }
    }
}

fn accumulate(grads: &mut [Option<Tensor>], v: Var, delta: Tensor) {
    match &mut grads[v.0] {
        Some(t) => {
            debug_assert_eq!(t.shape(), delta.shape());
            for (a, b) in t.data_mut().iter_mut().zip(delta.data()) {
                *a += b;
            }
        }
        slot @ None => *slot = Some(delta),
    }
}
