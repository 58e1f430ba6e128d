//! Batched forward pass, prediction, and losses.
//!
//! The batch flows as one stacked token matrix: all first-side sequences,
//! then all second-side sequences, padded per batch. Encoder aggregation is
//! a constant sparse operator per side; attention runs per pair on its
//! contiguous token slice; normalization pools statistics over every valid
//! node in the batch (padding is excluded and re-zeroed, so enlarging the
//! padding never changes an output).

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use super::{
    AttentionMode, FusionConfig, GfmParameters, CONV_CHANNELS, CONV_KERNEL_LENGTHS, CONV_STRIDES,
    DIM, HEADS, HEAD_DIM,
};
use crate::batch::PairBatch;
use crate::error::{ModelError, TensorError};
use crate::graph::{Graph, Supervision};
use crate::rng::DetRng;
use crate::tensor::{BatchStats, SparseMat, Tape, Tensor, Var};

/// Execution mode: train uses batch statistics (and reports them for the
/// running-average update); eval replays frozen statistics and is fully
/// deterministic.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Train,
    Eval,
}

/// Everything the training loop needs from one forward pass.
pub struct ForwardOutput {
    /// Predicted scores, shape (pairs, 1), each strictly inside (0, 1).
    pub scores: Var,
    /// Tape registration of every trainable tensor, in inventory order.
    pub bindings: Vec<(String, Var, (usize, usize))>,
    /// Batch statistics per normalization site (train mode only).
    pub bn_updates: Vec<(String, BatchStats)>,
}

struct Ctx<'a> {
    params: &'a GfmParameters,
    config: &'a FusionConfig,
    mode: Mode,
    bindings: Vec<(String, Var, (usize, usize))>,
    bn_updates: Vec<(String, BatchStats)>,
}

impl<'a> Ctx<'a> {
    fn bind(&mut self, tape: &mut Tape, name: &str, t: &Tensor) -> Var {
        let v = tape.leaf(t.clone());
        self.bindings.push((String::from(name), v, t.shape()));
        v
    }
}

/// Runs the model on a padded batch. `epoch_seed` only matters when the
/// configuration redraws random features per epoch.
pub fn forward_batch(
    tape: &mut Tape,
    params: &GfmParameters,
    config: &FusionConfig,
    batch: &PairBatch,
    mode: Mode,
) -> Result<ForwardOutput, ModelError> {
    config.validate()?;
    debug_assert!(!batch.is_empty());
    let mut ctx = Ctx { params, config, mode, bindings: Vec::new(), bn_updates: Vec::new() };

    let b = batch.len();
    let (l_i, l_j) = (batch.l_i, batch.l_j);

    // ── encoder on each side stack ────────────────────────────────────
    let xi = tape.leaf(batch.features_i.clone());
    let xj = tape.leaf(batch.features_j.clone());
    let agg_i = side_aggregators(batch, true);
    let agg_j = side_aggregators(batch, false);

    let sage_w = [
        ctx.bind(tape, "sage1_w", &params.sage1_w),
        ctx.bind(tape, "sage2_w", &params.sage2_w),
        ctx.bind(tape, "sage3_w", &params.sage3_w),
    ];
    let enc_i = sage_encode_stack(tape, xi, &agg_i.mean, &sage_w)?;
    let enc_j = sage_encode_stack(tape, xj, &agg_j.mean, &sage_w)?;

    // one token stack: first sides, then second sides
    let tokens = tape.concat_rows(&[enc_i, enc_j])?;
    let mut mask = batch.mask_i.clone();
    mask.extend_from_slice(&batch.mask_j);

    // ── fusion ────────────────────────────────────────────────────────
    let fused = if config.use_fusion {
        fuse_stack(tape, &mut ctx, tokens, &mask, batch, &agg_i.sum, &agg_j.sum)?
    } else {
        tokens
    };

    // ── similarity heads ──────────────────────────────────────────────
    let graph_head = if config.use_graph_sim {
        graph_level_head(tape, &mut ctx, fused, batch)?
    } else {
        tape.leaf(Tensor::zeros(b, super::SIM_WIDTH))
    };
    let node_head = if config.use_node_sim {
        node_level_head(tape, &mut ctx, fused, &mask, batch)?
    } else {
        tape.leaf(Tensor::zeros(b, super::SIM_WIDTH))
    };

    // ── output perceptron ─────────────────────────────────────────────
    let z = tape.concat_cols(&[graph_head, node_head])?;
    let w1 = ctx.bind(tape, "mlp_w1", &params.mlp_w1);
    let b1 = ctx.bind(tape, "mlp_b1", &params.mlp_b1);
    let w2 = ctx.bind(tape, "mlp_w2", &params.mlp_w2);
    let b2 = ctx.bind(tape, "mlp_b2", &params.mlp_b2);
    let w3 = ctx.bind(tape, "mlp_w3", &params.mlp_w3);
    let b3 = ctx.bind(tape, "mlp_b3", &params.mlp_b3);
    let h1 = tape.matmul(z, w1)?;
    let h1 = tape.add_row(h1, b1)?;
    let h1 = tape.relu(h1);
    let h2 = tape.matmul(h1, w2)?;
    let h2 = tape.add_row(h2, b2)?;
    let h2 = tape.relu(h2);
    let h3 = tape.matmul(h2, w3)?;
    let h3 = tape.add_row(h3, b3)?;
    let scores = tape.sigmoid(h3);

    let _ = (l_i, l_j);
    Ok(ForwardOutput { scores, bindings: ctx.bindings, bn_updates: ctx.bn_updates })
}

/// Constant aggregation operators over one side stack.
struct SideAggregators {
    /// Row-normalized neighbor mean (empty neighborhoods aggregate to zero).
    mean: alloc::rc::Rc<SparseMat>,
    /// Plain neighbor sum.
    sum: alloc::rc::Rc<SparseMat>,
}

fn side_aggregators(batch: &PairBatch, first_side: bool) -> SideAggregators {
    let l = if first_side { batch.l_i } else { batch.l_j };
    let rows = batch.len() * l;
    let mut mean_triplets = Vec::new();
    let mut sum_triplets = Vec::new();
    for (p, member) in batch.members.iter().enumerate() {
        let adj = if first_side { &member.adj_i } else { &member.adj_j };
        let base = p * l;
        for (v, neighbors) in adj.iter().enumerate() {
            if neighbors.is_empty() {
                continue;
            }
            let w = 1.0 / neighbors.len() as f64;
            for &u in neighbors {
                mean_triplets.push((base + v, base + u, w));
                sum_triplets.push((base + v, base + u, 1.0));
            }
        }
    }
    SideAggregators {
        mean: SparseMat::from_triplets(rows, rows, &mean_triplets),
        sum: SparseMat::from_triplets(rows, rows, &sum_triplets),
    }
}

/// Three encoder layers: `relu(W [h ; mean-of-neighbors])`, with residuals
/// on layers 2 and 3 (layer 1 changes width, so no residual there).
fn sage_encode_stack(
    tape: &mut Tape,
    x: Var,
    mean_agg: &alloc::rc::Rc<SparseMat>,
    weights: &[Var; 3],
) -> Result<Var, TensorError> {
    let mut h = x;
    for (layer, &w) in weights.iter().enumerate() {
        let neigh = tape.sparse_apply(mean_agg, h)?;
        let cat = tape.concat_cols(&[h, neigh])?;
        let lin = tape.matmul(cat, w)?;
        let act = tape.relu(lin);
        h = if layer == 0 { act } else { tape.add(act, h)? };
    }
    Ok(h)
}

/// Independent encoding, merge, global attention, split, residual norms.
fn fuse_stack(
    tape: &mut Tape,
    ctx: &mut Ctx,
    tokens: Var,
    mask: &[bool],
    batch: &PairBatch,
    sum_i: &alloc::rc::Rc<SparseMat>,
    sum_j: &alloc::rc::Rc<SparseMat>,
) -> Result<Var, ModelError> {
    let b = batch.len();
    let (l_i, l_j) = (batch.l_i, batch.l_j);
    let params = ctx.params;

    // independent encoding: MLP((1 + eps) h + sum of neighbors), residual,
    // then the first normalization site
    let eps = ctx.bind(tape, "gin_eps", &params.gin_eps);
    let one = tape.leaf_scalar(1.0);
    let one_eps = tape.add(one, eps)?;
    let part_i = tape.slice_rows(tokens, 0, b * l_i)?;
    let part_j = tape.slice_rows(tokens, b * l_i, b * l_j)?;
    let sum_ni = tape.sparse_apply(sum_i, part_i)?;
    let sum_nj = tape.sparse_apply(sum_j, part_j)?;
    let neigh = tape.concat_rows(&[sum_ni, sum_nj])?;
    let scaled_self = tape.scale_by(tokens, one_eps)?;
    let gin_in = tape.add(scaled_self, neigh)?;
    let w1 = ctx.bind(tape, "gin_w1", &params.gin_w1);
    let b1 = ctx.bind(tape, "gin_b1", &params.gin_b1);
    let w2 = ctx.bind(tape, "gin_w2", &params.gin_w2);
    let b2 = ctx.bind(tape, "gin_b2", &params.gin_b2);
    let g = tape.matmul(gin_in, w1)?;
    let g = tape.add_row(g, b1)?;
    let g = tape.relu(g);
    let g = tape.matmul(g, w2)?;
    let g = tape.add_row(g, b2)?;
    let g = tape.add(g, tokens)?;
    let encoded = batch_norm_site(tape, ctx, "bn_gin", g, Some(mask))?;

    // global attention per pair over its contiguous token slice
    let wq = ctx.bind(tape, "attn_wq", &params.attn_wq);
    let wk = ctx.bind(tape, "attn_wk", &params.attn_wk);
    let wv = ctx.bind(tape, "attn_wv", &params.attn_wv);
    let wo = ctx.bind(tape, "attn_wo", &params.attn_wo);
    let omega = match ctx.config.attention_mode {
        AttentionMode::Performer => {
            let raw = tape.leaf(params.performer_omega.clone());
            // stored rows are unit directions; restore the expected radius
            Some(tape.scale(raw, libm::sqrt(DIM as f64)))
        }
        AttentionMode::Transformer => None,
    };

    let mut i_parts = Vec::with_capacity(b);
    let mut j_parts = Vec::with_capacity(b);
    for (p, _) in batch.members.iter().enumerate() {
        let tok_i = tape.slice_rows(encoded, p * l_i, l_i)?;
        let tok_j = tape.slice_rows(encoded, b * l_i + p * l_j, l_j)?;
        let tok = tape.concat_rows(&[tok_i, tok_j])?;
        let mut pair_mask = Vec::with_capacity(l_i + l_j);
        pair_mask.extend_from_slice(&mask[p * l_i..(p + 1) * l_i]);
        pair_mask.extend_from_slice(&mask[b * l_i + p * l_j..b * l_i + (p + 1) * l_j]);

        let attended = match ctx.config.attention_mode {
            AttentionMode::Transformer => {
                full_attention(tape, tok, &pair_mask, wq, wk, wv, wo)?
            }
            AttentionMode::Performer => performer_attention(
                tape,
                tok,
                &pair_mask,
                wq,
                wk,
                wv,
                wo,
                omega.expect("drawn above"),
            )?,
        };
        i_parts.push(tape.slice_rows(attended, 0, l_i)?);
        j_parts.push(tape.slice_rows(attended, l_i, l_j)?);
    }
    i_parts.extend(j_parts);
    let attended = tape.concat_rows(&i_parts)?;

    // residual + norm, then feed-forward residual + norm (shared site)
    let res = tape.add(attended, encoded)?;
    let normed = batch_norm_site(tape, ctx, "bn_fuse", res, Some(mask))?;
    let ffw = ctx.bind(tape, "ffn_w", &params.ffn_w);
    let ff = tape.matmul(normed, ffw)?;
    let ff = tape.add(ff, normed)?;
    let ff = tape.relu(ff);
    let out = batch_norm_site(tape, ctx, "bn_fuse", ff, Some(mask))?;
    Ok(out)
}

/// Exact multi-head softmax attention; padded positions are excluded as
/// keys, so a row's output is a convex combination of the valid value rows.
pub(crate) fn full_attention(
    tape: &mut Tape,
    tok: Var,
    mask: &[bool],
    wq: Var,
    wk: Var,
    wv: Var,
    wo: Var,
) -> Result<Var, ModelError> {
    let q = tape.matmul(tok, wq)?;
    let k = tape.matmul(tok, wk)?;
    let v = tape.matmul(tok, wv)?;
    let scale = 1.0 / libm::sqrt(HEAD_DIM as f64);
    let all_valid = mask.iter().all(|&m| m);
    let mut heads = Vec::with_capacity(HEADS);
    for h in 0..HEADS {
        let qh = tape.slice_cols(q, h * HEAD_DIM, HEAD_DIM)?;
        let kh = tape.slice_cols(k, h * HEAD_DIM, HEAD_DIM)?;
        let vh = tape.slice_cols(v, h * HEAD_DIM, HEAD_DIM)?;
        let logits = tape.matmul_nt(qh, kh)?;
        let weights = if all_valid {
            tape.softmax_rows(logits, scale)?
        } else {
            tape.softmax_rows_masked(logits, scale, Some(mask))?
        };
        heads.push(tape.matmul(weights, vh)?);
    }
    let concat = tape.concat_cols(&heads)?;
    Ok(tape.matmul(concat, wo)?)
}

/// Linear-complexity attention through positive random features:
/// `out = diag(phi(Q) (phi(K)^T 1))^-1 (phi(Q) (phi(K)^T V))`, with one
/// 12-column block of the shared feature matrix per head. Masked positions
/// are excluded from the key-side sums.
#[allow(clippy::too_many_arguments)]
pub(crate) fn performer_attention(
    tape: &mut Tape,
    tok: Var,
    mask: &[bool],
    wq: Var,
    wk: Var,
    wv: Var,
    wo: Var,
    omega_scaled: Var,
) -> Result<Var, ModelError> {
    let q = tape.matmul(tok, wq)?;
    let k = tape.matmul(tok, wk)?;
    let v = tape.matmul(tok, wv)?;
    let t = mask.len();
    // match the exact path's exp(q k / sqrt(d)) kernel
    let pre_scale = 1.0 / libm::pow(HEAD_DIM as f64, 0.25);
    let all_valid = mask.iter().all(|&m| m);
    let key_mask = if all_valid {
        None
    } else {
        let r = tape.value(omega_scaled).rows();
        let mut m = Tensor::zeros(t, r);
        for (row, &live) in mask.iter().enumerate() {
            if live {
                for c in 0..r {
                    m.set(row, c, 1.0);
                }
            }
        }
        Some(tape.leaf(m))
    };
    let ones = tape.leaf(Tensor::filled(t, 1, 1.0));

    let mut heads = Vec::with_capacity(HEADS);
    for h in 0..HEADS {
        let qh = tape.slice_cols(q, h * HEAD_DIM, HEAD_DIM)?;
        let kh = tape.slice_cols(k, h * HEAD_DIM, HEAD_DIM)?;
        let vh = tape.slice_cols(v, h * HEAD_DIM, HEAD_DIM)?;
        let om = tape.slice_cols(omega_scaled, h * HEAD_DIM, HEAD_DIM)?;
        let qs = tape.scale(qh, pre_scale);
        let ks = tape.scale(kh, pre_scale);
        let phi_q = tape.performer_features(qs, om)?;
        let mut phi_k = tape.performer_features(ks, om)?;
        if let Some(km) = key_mask {
            phi_k = tape.mul(phi_k, km)?;
        }
        let kv = tape.matmul_tn(phi_k, vh)?;
        let numer = tape.matmul(phi_q, kv)?;
        let ksum = tape.matmul_tn(phi_k, ones)?;
        let denom = tape.matmul(phi_q, ksum)?;
        heads.push(tape.div_col(numer, denom, 1e-12)?);
    }
    let concat = tape.concat_cols(&heads)?;
    Ok(tape.matmul(concat, wo)?)
}

fn batch_norm_site(
    tape: &mut Tape,
    ctx: &mut Ctx,
    site: &str,
    x: Var,
    mask: Option<&[bool]>,
) -> Result<Var, ModelError> {
    let (bn, affine) = match site {
        "bn_gin" => (&ctx.params.bn_gin, true),
        "bn_fuse" => (&ctx.params.bn_fuse, true),
        "bn_node" => (&ctx.params.bn_node, false),
        _ => unreachable!("unknown norm site"),
    };
    let (gamma, beta) = if affine {
        (
            ctx.bind(tape, &alloc::format!("{site}.gamma"), &bn.gamma),
            ctx.bind(tape, &alloc::format!("{site}.beta"), &bn.beta),
        )
    } else {
        // statistics-only site: fixed identity affine
        (tape.leaf(Tensor::filled(1, DIM, 1.0)), tape.leaf(Tensor::zeros(1, DIM)))
    };
    match ctx.mode {
        Mode::Train => {
            let (y, stats) = tape.batch_norm_train(x, gamma, beta, mask)?;
            ctx.bn_updates.push((String::from(site), stats));
            Ok(y)
        }
        Mode::Eval => Ok(tape.batch_norm_eval(
            x,
            gamma,
            beta,
            bn.run_mean.data(),
            bn.run_var.data(),
            mask,
        )?),
    }
}

/// Pooled-embedding head: gated readout per graph, then the convolution
/// bank. For each kernel-length/stride combination both embeddings pass the
/// same learned kernels; per channel the Euclidean distance and the tanh
/// product of the projections give one score pair, averaged over channels.
/// Output ordering: kernel length ascending, stride ascending, distance
/// score before product score.
fn graph_level_head(
    tape: &mut Tape,
    ctx: &mut Ctx,
    fused: Var,
    batch: &PairBatch,
) -> Result<Var, ModelError> {
    let b = batch.len();
    let (l_i, l_j) = (batch.l_i, batch.l_j);
    let rw = ctx.bind(tape, "readout_w", &ctx.params.readout_w);
    let kernel_vars: Vec<Var> = CONV_KERNEL_LENGTHS
        .iter()
        .flat_map(|&m| CONV_STRIDES.iter().map(move |&s| (m, s)))
        .map(|(m, s)| {
            let name = alloc::format!("conv_m{m}_s{s}");
            let t = ctx.params.tensor(&name).expect("inventory kernel").clone();
            ctx.bind(tape, &name, &t)
        })
        .collect();

    let mut rows = Vec::with_capacity(b);
    for (p, member) in batch.members.iter().enumerate() {
        let tok_i = tape.slice_rows(fused, p * l_i, l_i)?;
        let tok_j = tape.slice_rows(fused, b * l_i + p * l_j, l_j)?;
        let h_i = readout(tape, tok_i, &batch.mask_i[p * l_i..(p + 1) * l_i], member.n_i, rw)?;
        let h_j = readout(tape, tok_j, &batch.mask_j[p * l_j..(p + 1) * l_j], member.n_j, rw)?;

        let mut scores = Vec::with_capacity(super::SIM_WIDTH);
        for (combo, (m, s)) in CONV_KERNEL_LENGTHS
            .iter()
            .flat_map(|&m| CONV_STRIDES.iter().map(move |&s| (m, s)))
            .enumerate()
        {
            let _ = (m, s);
            let k = kernel_vars[combo];
            let ci = tape.conv1d(h_i, k, s)?;
            let cj = tape.conv1d(h_j, k, s)?;

            let diff = tape.sub(ci, cj)?;
            let sq = tape.mul(diff, diff)?;
            let per_channel = tape.sum_rows(sq);
            let dist = tape.sqrt(per_channel);
            let dist_sum = tape.sum_all(dist);
            scores.push(tape.scale(dist_sum, 1.0 / CONV_CHANNELS as f64));

            let ti = tape.tanh(ci);
            let tj = tape.tanh(cj);
            let prod = tape.mul(ti, tj)?;
            let dots = tape.sum_rows(prod);
            let dot_sum = tape.sum_all(dots);
            scores.push(tape.scale(dot_sum, 1.0 / CONV_CHANNELS as f64));
        }
        rows.push(tape.concat_cols(&scores)?);
    }
    Ok(tape.concat_rows(&rows)?)
}

/// Gated sum readout: `c` is the masked mean, each node row is weighted by
/// `sigmoid(x_n . tanh(c W))` and summed. Padded rows are zero and weigh in
/// as exactly nothing.
fn readout(
    tape: &mut Tape,
    tok: Var,
    mask: &[bool],
    count: usize,
    rw: Var,
) -> Result<Var, ModelError> {
    debug_assert!(count >= 1, "readout needs at least one valid node");
    let l = mask.len();
    let mut mask_row = Tensor::zeros(1, l);
    for (i, &m) in mask.iter().enumerate() {
        if m {
            mask_row.set(0, i, 1.0);
        }
    }
    let mrow = tape.leaf(mask_row);
    let total = tape.matmul(mrow, tok)?;
    let c = tape.scale(total, 1.0 / count as f64);
    let cw = tape.matmul(c, rw)?;
    let gate_dir = tape.tanh(cw);
    let logits = tape.matmul_nt(tok, gate_dir)?;
    let gates = tape.sigmoid(logits);
    Ok(tape.matmul_tn(gates, tok)?)
}

/// Aligned node-sequence head: normalize, pad both sides to a common
/// length, squash with tanh, and take per-feature dot products via the
/// grouped convolution (group count = pairs * features; groups never mix).
fn node_level_head(
    tape: &mut Tape,
    ctx: &mut Ctx,
    fused: Var,
    mask: &[bool],
    batch: &PairBatch,
) -> Result<Var, ModelError> {
    let b = batch.len();
    let (l_i, l_j) = (batch.l_i, batch.l_j);
    let l = l_i.max(l_j);

    let normed = batch_norm_site(tape, ctx, "bn_node", fused, Some(mask))?;

    let mut aligned_i = Vec::with_capacity(b);
    let mut aligned_j = Vec::with_capacity(b);
    for p in 0..b {
        let ti = tape.slice_rows(normed, p * l_i, l_i)?;
        aligned_i.push(tape.pad_rows(ti, l)?);
        let tj = tape.slice_rows(normed, b * l_i + p * l_j, l_j)?;
        aligned_j.push(tape.pad_rows(tj, l)?);
    }
    let stack_i = tape.concat_rows(&aligned_i)?;
    let stack_j = tape.concat_rows(&aligned_j)?;
    let ti = tape.tanh(stack_i);
    let tj = tape.tanh(stack_j);
    let gi = tape.regroup(ti, b, l, DIM)?;
    let gj = tape.regroup(tj, b, l, DIM)?;
    let dots = tape.grouped_conv1d(gi, gj)?;
    Ok(tape.reshape(dots, b, DIM)?)
}

// ── losses ───────────────────────────────────────────────────────────

/// Mean squared error between predicted scores and targets.
pub fn loss_regression(tape: &mut Tape, scores: Var, targets: &[f64]) -> Result<Var, TensorError> {
    let n = targets.len();
    debug_assert_eq!(tape.value(scores).shape(), (n, 1));
    let y = tape.leaf(Tensor::new(n, 1, targets.to_vec())?);
    let diff = tape.sub(scores, y)?;
    let sq = tape.mul(diff, diff)?;
    let total = tape.sum_all(sq);
    Ok(tape.scale(total, 1.0 / n as f64))
}

/// Binary cross entropy; labels arrive in {-1, +1} and are mapped to {0, 1},
/// predictions are clamped to [1e-7, 1 - 1e-7].
pub fn loss_classification(
    tape: &mut Tape,
    scores: Var,
    labels: &[i8],
) -> Result<Var, TensorError> {
    let n = labels.len();
    debug_assert_eq!(tape.value(scores).shape(), (n, 1));
    let y: Vec<f64> = labels.iter().map(|&l| if l > 0 { 1.0 } else { 0.0 }).collect();
    let yv = tape.leaf(Tensor::new(n, 1, y)?);
    let clamped = tape.clamp(scores, 1e-7, 1.0 - 1e-7);
    let log_p = tape.ln(clamped);
    let one_minus = tape.affine(clamped, -1.0, 1.0);
    let log_q = tape.ln(one_minus);
    let y_neg = tape.affine(yv, -1.0, 1.0);
    let pos = tape.mul(yv, log_p)?;
    let neg = tape.mul(y_neg, log_q)?;
    let sum = tape.add(pos, neg)?;
    let total = tape.sum_all(sum);
    Ok(tape.scale(total, -1.0 / n as f64))
}

// ── single-pair prediction ───────────────────────────────────────────

/// Scores one pair of graphs. Train mode normalizes with the pair's own
/// statistics; eval mode is deterministic given the parameters.
pub fn predict(
    params: &GfmParameters,
    config: &FusionConfig,
    alphabet: &[String],
    g_i: &Graph,
    g_j: &Graph,
    mode: Mode,
) -> Result<f64, ModelError> {
    let f = if alphabet.is_empty() { 1 } else { alphabet.len() };
    let batch = crate::batch::build_batch(
        alphabet,
        f,
        &[(usize::MAX, g_i, g_j, None::<Supervision>)],
    )?;
    let mut tape = Tape::new();
    let out = forward_batch(&mut tape, params, config, &batch, mode)?;
    Ok(tape.value(out.scores).item())
}

/// Epoch-level redraw hook used by the training loop.
pub fn maybe_redraw_features(
    params: &mut GfmParameters,
    config: &FusionConfig,
    seed: u64,
    epoch: usize,
) {
    if config.redraw_features_each_epoch {
        let mut salt = DetRng::child(seed, 0x0e90c);
        let _ = epoch;
        // one child stream per epoch, derived without consuming the root
        params.redraw_performer_features(salt.next_u64().wrapping_add(epoch as u64));
    }
}
