use alloc::vec;
use alloc::vec::Vec;

use proptest::prelude::*;

use super::*;
use crate::error::TensorError;
use crate::rng::DetRng;

/// Independent scalar triple-loop product used as the matmul oracle.
fn matmul_oracle(a: &Tensor, b: &Tensor) -> Tensor {
    let mut out = Tensor::zeros(a.rows(), b.cols());
    for i in 0..a.rows() {
        for j in 0..b.cols() {
            let mut acc = 0.0;
            for l in 0..a.cols() {
                acc += a.get(i, l) * b.get(l, j);
            }
            out.set(i, j, acc);
        }
    }
    out
}

fn random_tensor(rng: &mut DetRng, rows: usize, cols: usize) -> Tensor {
    let data: Vec<f64> = (0..rows * cols).map(|_| rng.uniform_in(-1.0, 1.0)).collect();
    Tensor::new(rows, cols, data).unwrap()
}

/// Random values in [-1,-0.1] U [0.1,1]: keeps relu/clamp kinks and sqrt/ln
/// domain edges away from the finite-difference probes.
fn random_tensor_off_kink(rng: &mut DetRng, rows: usize, cols: usize) -> Tensor {
    let data: Vec<f64> = (0..rows * cols)
        .map(|_| {
            let v = rng.uniform_in(0.1, 1.0);
            if rng.uniform() < 0.5 {
                -v
            } else {
                v
            }
        })
        .collect();
    Tensor::new(rows, cols, data).unwrap()
}

fn assert_close(actual: &[f64], expected: &[f64], tol: f64) {
    assert_eq!(actual.len(), expected.len());
    for (i, (a, e)) in actual.iter().zip(expected).enumerate() {
        assert!((a - e).abs() <= tol, "index {i}: {a} vs {e}");
    }
}

// ── matmul ───────────────────────────────────────────────────────────

#[test]
fn matmul_identity_passthrough() {
    let mut t = Tape::new();
    let i2 = t.leaf(Tensor::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap());
    let m = t.leaf(Tensor::from_rows(&[vec![5.0, 6.0], vec![7.0, 8.0]]).unwrap());
    let y = t.matmul(i2, m).unwrap();
    assert_eq!(t.value(y).data(), &[5.0, 6.0, 7.0, 8.0]);
}

#[test]
fn matmul_matches_triple_loop_oracle() {
    // frozen from the oracle: [[1,2]] x [[3],[4]] = [[11]]
    let a = Tensor::row(&[1.0, 2.0]);
    let b = Tensor::new(2, 1, vec![3.0, 4.0]).unwrap();
    assert_eq!(matmul_oracle(&a, &b).data(), &[11.0]);

    let mut t = Tape::new();
    let av = t.leaf(a);
    let bv = t.leaf(b);
    let y = t.matmul(av, bv).unwrap();
    assert_eq!(t.value(y).data(), &[11.0]);

    // random shapes against the oracle
    let mut rng = DetRng::new(11);
    for &(m, k, n) in &[(3, 4, 5), (1, 7, 2), (6, 1, 3)] {
        let a = random_tensor(&mut rng, m, k);
        let b = random_tensor(&mut rng, k, n);
        let want = matmul_oracle(&a, &b);
        let mut t = Tape::new();
        let av = t.leaf(a);
        let bv = t.leaf(b);
        let y = t.matmul(av, bv).unwrap();
        assert_close(t.value(y).data(), want.data(), 1e-12);
    }
}

#[test]
fn matmul_zero_matrix() {
    let mut t = Tape::new();
    let z = t.leaf(Tensor::zeros(2, 3));
    let m = t.leaf(Tensor::from_rows(&[vec![1.0; 4], vec![2.0; 4], vec![3.0; 4]]).unwrap());
    let y = t.matmul(z, m).unwrap();
    assert!(t.value(y).data().iter().all(|&v| v == 0.0));
}

#[test]
fn matmul_shape_mismatch_names_both_shapes() {
    let mut t = Tape::new();
    let a = t.leaf(Tensor::zeros(2, 3));
    let b = t.leaf(Tensor::zeros(2, 3));
    let err = t.matmul(a, b).unwrap_err();
    match err {
        TensorError::ShapeMismatch { lhs, rhs, .. } => {
            assert_eq!(lhs, (2, 3));
            assert_eq!(rhs, (2, 3));
        }
        other => panic!("unexpected error {other:?}"),
    }
}

fn transpose(t: &Tensor) -> Tensor {
    let mut out = Tensor::zeros(t.cols(), t.rows());
    for r in 0..t.rows() {
        for c in 0..t.cols() {
            out.set(c, r, t.get(r, c));
        }
    }
    out
}

#[test]
fn matmul_transposed_variants_match_oracle() {
    let mut rng = DetRng::new(12);

    // a (4x3) * b^T (3x5): oracle multiplies by an explicit transpose
    let a = random_tensor(&mut rng, 4, 3);
    let b = random_tensor(&mut rng, 5, 3);
    let want = matmul_oracle(&a, &transpose(&b));
    let mut t = Tape::new();
    let av = t.leaf(a.clone());
    let bv = t.leaf(b);
    let y = t.matmul_nt(av, bv).unwrap();
    assert_close(t.value(y).data(), want.data(), 1e-12);

    // a^T (4x3 -> 3x4 transposed input is 4 rows) : a (3x4), c (3x2) -> 4x2
    let a = random_tensor(&mut rng, 3, 4);
    let c = random_tensor(&mut rng, 3, 2);
    let want = matmul_oracle(&transpose(&a), &c);
    let mut t = Tape::new();
    let av = t.leaf(a);
    let cv = t.leaf(c);
    let y = t.matmul_tn(av, cv).unwrap();
    assert_close(t.value(y).data(), want.data(), 1e-12);
}

// ── softmax ──────────────────────────────────────────────────────────

#[test]
fn softmax_symmetric_row() {
    let mut t = Tape::new();
    let x = t.leaf(Tensor::row(&[0.0, 0.0]));
    let y = t.softmax_rows(x, 1.0).unwrap();
    assert_eq!(t.value(y).data(), &[0.5, 0.5]);
}

#[test]
fn softmax_constant_row_is_uniform() {
    for c in [-3.0, 0.0, 7.5] {
        let mut t = Tape::new();
        let x = t.leaf(Tensor::row(&[c, c, c]));
        let y = t.softmax_rows(x, 1.0).unwrap();
        assert_close(t.value(y).data(), &[1.0 / 3.0; 3], 1e-15);
    }
}

#[test]
fn softmax_ln2_row() {
    // direct evaluation: (e^{ln 2}, e^0) / (2 + 1) = (2/3, 1/3)
    let mut t = Tape::new();
    let x = t.leaf(Tensor::row(&[core::f64::consts::LN_2, 0.0]));
    let y = t.softmax_rows(x, 1.0).unwrap();
    assert_close(t.value(y).data(), &[2.0 / 3.0, 1.0 / 3.0], 1e-15);
}

#[test]
fn softmax_masked_columns_contribute_nothing() {
    let mut t = Tape::new();
    let x = t.leaf(Tensor::row(&[1.0, 100.0, 2.0]));
    let y = t.softmax_rows_masked(x, 1.0, Some(&[true, false, true])).unwrap();
    let v = t.value(y).data();
    assert_eq!(v[1], 0.0);
    assert!((v[0] + v[2] - 1.0).abs() < 1e-12);

    // same as softmax over the unmasked pair
    let mut t2 = Tape::new();
    let x2 = t2.leaf(Tensor::row(&[1.0, 2.0]));
    let y2 = t2.softmax_rows(x2, 1.0).unwrap();
    assert_eq!(v[0], t2.value(y2).data()[0]);
    assert_eq!(v[2], t2.value(y2).data()[1]);
}

proptest! {
    #[test]
    fn softmax_rows_sum_to_one_and_shift_invariant(
        vals in proptest::collection::vec(-10.0f64..10.0, 2..12),
        shift in -5.0f64..5.0,
    ) {
        let mut t = Tape::new();
        let x = t.leaf(Tensor::row(&vals));
        let y = t.softmax_rows(x, 1.0).unwrap();
        let sum: f64 = t.value(y).data().iter().sum();
        prop_assert!((sum - 1.0).abs() <= 1e-12);
        prop_assert!(t.value(y).data().iter().all(|&v| v >= 0.0));

        let shifted: Vec<f64> = vals.iter().map(|v| v + shift).collect();
        let mut t2 = Tape::new();
        let x2 = t2.leaf(Tensor::row(&shifted));
        let y2 = t2.softmax_rows(x2, 1.0).unwrap();
        for (a, b) in t.value(y).data().iter().zip(t2.value(y2).data()) {
            prop_assert!((a - b).abs() <= 1e-12);
        }
    }
}

// ── conv1d ───────────────────────────────────────────────────────────

#[test]
fn conv1d_hand_evaluated() {
    // stride 1: positions sum adjacent pairs of [1,2,3,4]
    let mut t = Tape::new();
    let x = t.leaf(Tensor::row(&[1.0, 2.0, 3.0, 4.0]));
    let w = t.leaf(Tensor::row(&[1.0, 1.0]));
    let y = t.conv1d(x, w, 1).unwrap();
    assert_eq!(t.value(y).data(), &[3.0, 5.0, 7.0]);

    // stride 2 skips the middle window
    let mut t = Tape::new();
    let x = t.leaf(Tensor::row(&[1.0, 2.0, 3.0, 4.0]));
    let w = t.leaf(Tensor::row(&[1.0, 1.0]));
    let y = t.conv1d(x, w, 2).unwrap();
    assert_eq!(t.value(y).data(), &[3.0, 7.0]);
}

#[test]
fn conv1d_identity_kernel() {
    let mut t = Tape::new();
    let x = t.leaf(Tensor::row(&[4.0, -1.0, 0.5]));
    let w = t.leaf(Tensor::row(&[1.0]));
    let y = t.conv1d(x, w, 1).unwrap();
    assert_eq!(t.value(y).data(), &[4.0, -1.0, 0.5]);
}

#[test]
fn conv1d_kernel_longer_than_signal_is_error() {
    let mut t = Tape::new();
    let x = t.leaf(Tensor::row(&[1.0, 2.0]));
    let w = t.leaf(Tensor::row(&[1.0, 1.0, 1.0]));
    assert!(matches!(t.conv1d(x, w, 1), Err(TensorError::InvalidKernel { .. })));
    let x2 = t.leaf(Tensor::row(&[1.0, 2.0]));
    let w2 = t.leaf(Tensor::row(&[1.0]));
    assert!(matches!(t.conv1d(x2, w2, 0), Err(TensorError::InvalidKernel { .. })));
}

proptest! {
    #[test]
    fn conv1d_output_length_formula(l in 1usize..40, m in 1usize..40, s in 1usize..5) {
        prop_assume!(m <= l);
        let mut t = Tape::new();
        let x = t.leaf(Tensor::filled(1, l, 0.5));
        let w = t.leaf(Tensor::filled(2, m, 1.0));
        let y = t.conv1d(x, w, s).unwrap();
        prop_assert_eq!(t.value(y).shape(), (2, (l - m) / s + 1));
    }
}

// ── grouped conv ─────────────────────────────────────────────────────

#[test]
fn grouped_conv_zero_input() {
    let mut t = Tape::new();
    let x = t.leaf(Tensor::zeros(3, 4));
    let k = t.leaf(Tensor::filled(3, 4, 2.0));
    let y = t.grouped_conv1d(x, k).unwrap();
    assert!(t.value(y).data().iter().all(|&v| v == 0.0));
}

#[test]
fn grouped_conv_single_group_dot_product() {
    let mut t = Tape::new();
    let x = t.leaf(Tensor::row(&[1.0, 2.0]));
    let k = t.leaf(Tensor::row(&[3.0, 4.0]));
    let y = t.grouped_conv1d(x, k).unwrap();
    assert_eq!(t.value(y).data(), &[11.0]);
}

#[test]
fn grouped_conv_groups_do_not_mix() {
    let a = vec![vec![1.0, 2.0], vec![5.0, -1.0]];
    let b = vec![vec![0.5, 3.0], vec![2.0, 2.0]];
    let mut t = Tape::new();
    let x = t.leaf(Tensor::from_rows(&a).unwrap());
    let k = t.leaf(Tensor::from_rows(&b).unwrap());
    let y = t.grouped_conv1d(x, k).unwrap();
    let fwd = t.value(y).data().to_vec();

    // swapping the groups swaps the outputs
    let mut t2 = Tape::new();
    let xs = t2.leaf(Tensor::from_rows(&[a[1].clone(), a[0].clone()]).unwrap());
    let ks = t2.leaf(Tensor::from_rows(&[b[1].clone(), b[0].clone()]).unwrap());
    let ys = t2.grouped_conv1d(xs, ks).unwrap();
    assert_eq!(t2.value(ys).data(), &[fwd[1], fwd[0]]);
}

proptest! {
    #[test]
    fn grouped_conv_commutes(
        vals in proptest::collection::vec(-2.0f64..2.0, 12),
        kvals in proptest::collection::vec(-2.0f64..2.0, 12),
    ) {
        let x = Tensor::new(3, 4, vals).unwrap();
        let k = Tensor::new(3, 4, kvals).unwrap();
        let mut t = Tape::new();
        let xv = t.leaf(x.clone());
        let kv = t.leaf(k.clone());
        let y1 = t.grouped_conv1d(xv, kv).unwrap();
        let y1 = t.value(y1).clone();
        let mut t2 = Tape::new();
        let kv2 = t2.leaf(k);
        let xv2 = t2.leaf(x);
        let y2 = t2.grouped_conv1d(kv2, xv2).unwrap();
        prop_assert_eq!(y1.data(), t2.value(y2).data());
    }
}

// ── batch norm ───────────────────────────────────────────────────────

fn bn_train(x: Tensor, mask: Option<&[bool]>, gamma: f64, beta: f64) -> Tensor {
    let mut t = Tape::new();
    let f = x.cols();
    let xv = t.leaf(x);
    let g = t.leaf(Tensor::filled(1, f, gamma));
    let b = t.leaf(Tensor::filled(1, f, beta));
    let (y, _) = t.batch_norm_train(xv, g, b, mask).unwrap();
    t.value(y).clone()
}

#[test]
fn batch_norm_constant_column_maps_near_zero() {
    let x = Tensor::from_rows(&[vec![3.0], vec![3.0], vec![3.0]]).unwrap();
    let y = bn_train(x, None, 1.0, 0.0);
    assert!(y.data().iter().all(|&v| v.abs() <= 1e-2), "{:?}", y.data());
}

#[test]
fn batch_norm_standardizes_unmasked_rows() {
    let mut rng = DetRng::new(4);
    let x = random_tensor(&mut rng, 16, 3);
    let y = bn_train(x, None, 1.0, 0.0);
    for c in 0..3 {
        let col: Vec<f64> = (0..16).map(|r| y.get(r, c)).collect();
        let mean: f64 = col.iter().sum::<f64>() / 16.0;
        let var: f64 = col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / 16.0;
        assert!(mean.abs() < 1e-10);
        assert!((var - 1.0).abs() < 1e-2);
    }
}

#[test]
fn batch_norm_affine_collapse() {
    let mut rng = DetRng::new(5);
    let x = random_tensor(&mut rng, 6, 2);
    let y = bn_train(x, None, 0.0, 5.0);
    assert!(y.data().iter().all(|&v| v == 5.0));
}

#[test]
fn batch_norm_masked_rows_are_zeroed_and_excluded() {
    let x = Tensor::from_rows(&[vec![1.0], vec![100.0], vec![3.0]]).unwrap();
    let mask = [true, false, true];
    let y = bn_train(x.clone(), Some(&mask), 1.0, 0.0);
    assert_eq!(y.get(1, 0), 0.0);
    // statistics come from rows 0 and 2 only: mean 2, var 1
    let expect = |v: f64| (v - 2.0) / libm::sqrt(1.0 + 1e-5);
    assert!((y.get(0, 0) - expect(1.0)).abs() < 1e-12);
    assert!((y.get(2, 0) - expect(3.0)).abs() < 1e-12);
}

#[test]
fn batch_norm_all_masked_is_degenerate() {
    let mut t = Tape::new();
    let x = t.leaf(Tensor::zeros(2, 2));
    let g = t.leaf(Tensor::filled(1, 2, 1.0));
    let b = t.leaf(Tensor::zeros(1, 2));
    let err = t.batch_norm_train(x, g, b, Some(&[false, false])).unwrap_err();
    assert_eq!(err, TensorError::DegenerateBatch);
}

#[test]
fn batch_norm_eval_is_bit_deterministic() {
    let mut rng = DetRng::new(6);
    let x = random_tensor(&mut rng, 5, 4);
    let mean = vec![0.1, -0.2, 0.3, 0.0];
    let var = vec![1.0, 0.5, 2.0, 0.1];
    let run = || {
        let mut t = Tape::new();
        let xv = t.leaf(x.clone());
        let g = t.leaf(Tensor::filled(1, 4, 1.5));
        let b = t.leaf(Tensor::filled(1, 4, -0.5));
        let y = t.batch_norm_eval(xv, g, b, &mean, &var, None).unwrap();
        t.value(y).clone()
    };
    let a = run();
    let b = run();
    assert_eq!(a.data(), b.data());
}

// ── elementwise ──────────────────────────────────────────────────────

#[test]
fn elementwise_fixed_points() {
    let mut t = Tape::new();
    let x = t.leaf(Tensor::row(&[0.0, 0.0, -3.0]));
    let th = t.tanh(x);
    let sg = t.sigmoid(x);
    let rl = t.relu(x);
    assert_eq!(t.value(th).data()[0], 0.0);
    assert_eq!(t.value(sg).data()[0], 0.5);
    assert_eq!(t.value(rl).data()[2], 0.0);
}

#[test]
fn tanh_matches_exponential_formula() {
    // (e^1 - 1) / (e^1 + 1) for x = 0.5, evaluated independently
    let e = libm::exp(2.0 * 0.5);
    let want = (e - 1.0) / (e + 1.0);
    assert!((want - 0.46212).abs() < 1e-5);

    let mut t = Tape::new();
    let x = t.leaf(Tensor::row(&[0.5]));
    let y = t.tanh(x);
    assert!((t.value(y).data()[0] - want).abs() < 1e-15);
}

#[test]
fn add_zero_is_identity() {
    let mut t = Tape::new();
    let x = t.leaf(Tensor::row(&[1.5, -2.0, 0.25]));
    let z = t.leaf(Tensor::zeros(1, 3));
    let y = t.add(x, z).unwrap();
    assert_eq!(t.value(y).data(), &[1.5, -2.0, 0.25]);
}

#[test]
fn binary_shape_mismatch_is_error() {
    let mut t = Tape::new();
    let a = t.leaf(Tensor::zeros(1, 3));
    let b = t.leaf(Tensor::zeros(3, 1));
    assert!(t.add(a, b).is_err());
    assert!(t.mul(a, b).is_err());
}

// ── backward ─────────────────────────────────────────────────────────

#[test]
fn backward_square_sum() {
    // frozen via central differences (eps 1e-5): d/dx sum(x*x) at 3 = 6
    let mut t = Tape::new();
    let x = t.leaf(Tensor::row(&[3.0]));
    let sq = t.mul(x, x).unwrap();
    let loss = t.sum_all(sq);
    let mut grads = t.backward(loss).unwrap();
    let g = grads.take(x, 1, 1);
    assert!((g.data()[0] - 6.0).abs() < 1e-12);

    let fd = finite_difference_check(
        |t, x| {
            let sq = t.mul(x, x)?;
            Ok(t.sum_all(sq))
        },
        &Tensor::row(&[3.0]),
        1e-5,
    )
    .unwrap();
    assert!(fd < 1e-9);
}

#[test]
fn backward_tanh_derivative() {
    let x = Tensor::row(&[0.3, -0.7, 1.1]);
    let mut t = Tape::new();
    let xv = t.leaf(x.clone());
    let y = t.tanh(xv);
    let loss = t.sum_all(y);
    let mut grads = t.backward(loss).unwrap();
    let g = grads.take(xv, 1, 3);
    for (i, &v) in x.data().iter().enumerate() {
        let th = libm::tanh(v);
        assert!((g.data()[i] - (1.0 - th * th)).abs() < 1e-12);
    }
}

#[test]
fn backward_unused_parameter_gets_exact_zero() {
    let mut t = Tape::new();
    let x = t.leaf(Tensor::row(&[2.0]));
    let unused = t.leaf(Tensor::row(&[7.0, 8.0]));
    let y = t.mul(x, x).unwrap();
    let loss = t.sum_all(y);
    let mut grads = t.backward(loss).unwrap();
    let gu = grads.take(unused, 1, 2);
    assert_eq!(gu.data(), &[0.0, 0.0]);
}

#[test]
fn backward_requires_scalar_loss() {
    let mut t = Tape::new();
    let x = t.leaf(Tensor::row(&[1.0, 2.0]));
    let y = t.tanh(x);
    assert!(matches!(t.backward(y), Err(TensorError::NonScalarLoss { .. })));
}

#[test]
fn backward_clears_the_record() {
    let mut t = Tape::new();
    let x = t.leaf(Tensor::row(&[1.0]));
    let loss = t.sum_all(x);
    let _ = t.backward(loss).unwrap();
    assert!(t.is_empty());
}

// ── finite-difference checker ────────────────────────────────────────

#[test]
fn fd_check_linear_map_is_exact() {
    let err = finite_difference_check(
        |t, x| {
            let y = t.affine(x, 3.0, 1.0);
            Ok(t.sum_all(y))
        },
        &Tensor::row(&[0.2, -0.4, 0.9]),
        1e-5,
    )
    .unwrap();
    assert!(err <= 1e-9, "linear map error {err}");
}

#[test]
fn fd_check_sigmoid_network() {
    let mut rng = DetRng::new(7);
    let w = random_tensor(&mut rng, 4, 4);
    let x = random_tensor(&mut rng, 4, 4);
    let err = finite_difference_check(
        |t, x| {
            let wv = t.leaf(w.clone());
            let y = t.matmul(wv, x)?;
            let s = t.sigmoid(y);
            Ok(t.sum_all(s))
        },
        &x,
        1e-5,
    )
    .unwrap();
    assert!(err < 1e-4, "sigmoid net error {err}");
}

#[test]
fn fd_check_rejects_zero_step() {
    let r = finite_difference_check(|t, x| Ok(t.sum_all(x)), &Tensor::row(&[1.0]), 0.0);
    assert_eq!(r.unwrap_err(), TensorError::BadStep);
}

// ── gradient suite over every differentiable op ──────────────────────

/// Weighted sum with fixed pseudo-random weights; catches gradient errors
/// that a plain sum would cancel.
fn weighted_loss(t: &mut Tape, y: Var, seed: u64) -> Var {
    let v = t.value(y).clone();
    let mut rng = DetRng::new(seed);
    let w: Vec<f64> = (0..v.len()).map(|_| rng.uniform_in(-1.0, 1.0)).collect();
    let wv = t.leaf(Tensor::new(v.rows(), v.cols(), w).unwrap());
    let prod = t.mul(y, wv).unwrap();
    t.sum_all(prod)
}

fn check_op<F>(name: &str, x: Tensor, f: F)
where
    F: Fn(&mut Tape, Var) -> Result<Var, TensorError>,
{
    let err = finite_difference_check(
        |t, xv| {
            let y = f(t, xv)?;
            Ok(weighted_loss(t, y, 99))
        },
        &x,
        1e-5,
    )
    .unwrap();
    assert!(err < 1e-4, "{name}: gradient error {err}");
}

#[test]
fn gradient_suite_all_ops() {
    let mut rng = DetRng::new(8);

    let m43 = random_tensor(&mut rng, 4, 3);
    let m34 = random_tensor(&mut rng, 3, 4);
    let m44 = random_tensor(&mut rng, 4, 4);
    let row3 = random_tensor(&mut rng, 1, 3);
    let pos = {
        let mut t = random_tensor(&mut rng, 3, 3);
        for v in t.data_mut() {
            *v = 0.2 + v.abs();
        }
        t
    };

    // both operands of each matmul variant
    check_op("matmul lhs", m43.clone(), |t, x| {
        let b = t.leaf(m34.clone());
        t.matmul(x, b)
    });
    check_op("matmul rhs", m34.clone(), |t, x| {
        let a = t.leaf(m43.clone());
        t.matmul(a, x)
    });
    check_op("matmul_nt lhs", m43.clone(), |t, x| {
        let b = t.leaf(m43.clone());
        t.matmul_nt(x, b)
    });
    check_op("matmul_tn lhs", m43.clone(), |t, x| {
        let b = t.leaf(m44.clone());
        t.matmul_tn(x, b)
    });

    check_op("softmax", m44.clone(), |t, x| t.softmax_rows(x, 0.7));
    check_op("softmax masked", m44.clone(), |t, x| {
        t.softmax_rows_masked(x, 1.3, Some(&[true, false, true, true]))
    });

    check_op("conv1d signal", random_tensor(&mut rng, 1, 9), |t, x| {
        let w = t.leaf(Tensor::from_rows(&[vec![0.4, -0.2, 0.1], vec![1.0, 0.3, -0.5]]).unwrap());
        t.conv1d(x, w, 2)
    });
    check_op("conv1d kernel", random_tensor(&mut rng, 2, 3), |t, w| {
        let x = t.leaf(Tensor::row(&[0.1, 0.9, -0.4, 0.2, 0.6, -0.8, 0.3, 0.0, 0.5]));
        t.conv1d(x, w, 2)
    });

    check_op("grouped_conv x", random_tensor(&mut rng, 3, 5), |t, x| {
        let k = t.leaf(Tensor::filled(3, 5, 0.3));
        t.grouped_conv1d(x, k)
    });
    check_op("grouped_conv k", random_tensor(&mut rng, 3, 5), |t, k| {
        let x = t.leaf(Tensor::filled(3, 5, -0.6));
        t.grouped_conv1d(x, k)
    });

    // batch norm: input, gamma, beta, with and without mask
    let bn_input = random_tensor(&mut rng, 6, 3);
    check_op("batch_norm x", bn_input.clone(), |t, x| {
        let g = t.leaf(row3.clone());
        let b = t.leaf(row3.clone());
        let mask = [true, true, false, true, true, true];
        Ok(t.batch_norm_train(x, g, b, Some(&mask))?.0)
    });
    check_op("batch_norm gamma", row3.clone(), |t, g| {
        let x = t.leaf(bn_input.clone());
        let b = t.leaf(row3.clone());
        Ok(t.batch_norm_train(x, g, b, None)?.0)
    });
    check_op("batch_norm beta", row3.clone(), |t, b| {
        let x = t.leaf(bn_input.clone());
        let g = t.leaf(row3.clone());
        Ok(t.batch_norm_train(x, g, b, None)?.0)
    });
    check_op("batch_norm eval", bn_input.clone(), |t, x| {
        let g = t.leaf(row3.clone());
        let b = t.leaf(row3.clone());
        t.batch_norm_eval(x, g, b, &[0.1, -0.3, 0.2], &[1.2, 0.8, 0.5], None)
    });

    check_op("tanh", random_tensor(&mut rng, 3, 3), |t, x| Ok(t.tanh(x)));
    check_op("sigmoid", random_tensor(&mut rng, 3, 3), |t, x| Ok(t.sigmoid(x)));
    check_op("relu", random_tensor_off_kink(&mut rng, 3, 3), |t, x| Ok(t.relu(x)));
    check_op("sqrt", pos.clone(), |t, x| Ok(t.sqrt(x)));
    check_op("ln", pos.clone(), |t, x| Ok(t.ln(x)));
    check_op("affine", random_tensor(&mut rng, 3, 3), |t, x| Ok(t.affine(x, -2.0, 0.7)));
    check_op("clamp", random_tensor_off_kink(&mut rng, 3, 3), |t, x| {
        Ok(t.clamp(x, -0.95, 0.95))
    });

    check_op("add", m44.clone(), |t, x| {
        let b = t.leaf(m44.clone());
        t.add(x, b)
    });
    check_op("sub", m44.clone(), |t, x| {
        let b = t.leaf(m44.clone());
        t.sub(x, b)
    });
    check_op("mul", m44.clone(), |t, x| {
        let b = t.leaf(m44.clone());
        t.mul(x, b)
    });

    check_op("add_row x", m43.clone(), |t, x| {
        let r = t.leaf(row3.clone());
        t.add_row(x, r)
    });
    check_op("add_row row", row3.clone(), |t, r| {
        let x = t.leaf(m43.clone());
        t.add_row(x, r)
    });

    check_op("scale_by x", m44.clone(), |t, x| {
        let s = t.leaf_scalar(0.8);
        t.scale_by(x, s)
    });
    check_op("scale_by s", Tensor::scalar(0.8), |t, s| {
        let x = t.leaf(m44.clone());
        t.scale_by(x, s)
    });

    check_op("concat_rows", m43.clone(), |t, x| {
        let other = t.leaf(m43.clone());
        t.concat_rows(&[x, other, x])
    });
    check_op("concat_cols", m43.clone(), |t, x| {
        let other = t.leaf(m43.clone());
        t.concat_cols(&[other, x])
    });
    check_op("slice_rows", m44.clone(), |t, x| t.slice_rows(x, 1, 2));
    check_op("slice_cols", m44.clone(), |t, x| t.slice_cols(x, 2, 2));
    check_op("pad_rows", m43.clone(), |t, x| t.pad_rows(x, 7));
    check_op("reshape", m43.clone(), |t, x| t.reshape(x, 2, 6));
    check_op("regroup", random_tensor(&mut rng, 6, 4), |t, x| t.regroup(x, 2, 3, 4));
    check_op("sum_rows", m43.clone(), |t, x| Ok(t.sum_rows(x)));
    check_op("sum_all", m43.clone(), |t, x| Ok(t.sum_all(x)));

    let sp = SparseMat::from_triplets(3, 4, &[(0, 1, 0.5), (1, 0, 1.0), (1, 3, -0.7), (2, 2, 2.0)]);
    check_op("sparse_apply", m44.clone(), |t, x| t.sparse_apply(&sp, x));

    let omega = random_tensor(&mut rng, 6, 3);
    check_op("performer_features x", m43.clone(), |t, x| {
        let om = t.leaf(omega.clone());
        t.performer_features(x, om)
    });
    check_op("performer_features omega", omega.clone(), |t, om| {
        let x = t.leaf(m43.clone());
        t.performer_features(x, om)
    });

    let denom = {
        let mut d = random_tensor(&mut rng, 4, 1);
        for v in d.data_mut() {
            *v = 0.5 + v.abs();
        }
        d
    };
    check_op("div_col a", m43.clone(), |t, a| {
        let mut d4 = denom.clone();
        d4.data_mut()[3] = 1.0;
        let d = t.leaf(d4);
        t.div_col(a, d, 1e-12)
    });
    check_op("div_col d", denom.clone(), |t, d| {
        let a = t.leaf(m44.clone());
        t.div_col(a, d, 1e-12)
    });
}

#[test]
fn div_col_degeneracy_is_detected() {
    let mut t = Tape::new();
    let a = t.leaf(Tensor::zeros(2, 2));
    let d = t.leaf(Tensor::new(2, 1, vec![1.0, 1e-15]).unwrap());
    assert!(matches!(
        t.div_col(a, d, 1e-12),
        Err(TensorError::NumericalDegeneracy { .. })
    ));
}
