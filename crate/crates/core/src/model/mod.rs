//! The fusion similarity model.
//!
//! Pipeline per pair: three mean-aggregation encoder layers with residuals,
//! an independent sum-aggregation layer, concatenation of the two node
//! sequences into one token sequence, global attention over it (exact
//! softmax or positive-random-feature approximation), split back, then two
//! similarity heads — a convolution bank over the pooled graph embeddings
//! and a per-feature product over the aligned node sequences — feeding a
//! small perceptron that emits one score in (0, 1).

mod forward;

pub use forward::{
    forward_batch, loss_classification, loss_regression, predict, ForwardOutput, Mode,
};

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::error::ModelError;
use crate::rng::DetRng;
use crate::tensor::Tensor;

/// Embedding width used throughout the model.
pub const DIM: usize = 48;
/// Attention heads and per-head width.
pub const HEADS: usize = 4;
pub const HEAD_DIM: usize = DIM / HEADS;
/// Convolution bank: every kernel length crossed with every stride, two
/// similarity scores per combination.
pub const CONV_KERNEL_LENGTHS: [usize; 8] = [1, 2, 3, 4, 5, 6, 7, 8];
pub const CONV_STRIDES: [usize; 3] = [1, 2, 3];
/// Output channels per convolution, mirroring the attention head count.
pub const CONV_CHANNELS: usize = 4;
/// Width of each head's similarity vector (24 combos x 2 scores).
pub const SIM_WIDTH: usize = CONV_KERNEL_LENGTHS.len() * CONV_STRIDES.len() * 2;

/// Which global-attention realization fuses the merged sequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AttentionMode {
    /// Exact softmax attention, quadratic in the token count.
    Transformer,
    /// Positive random feature approximation, linear in the token count.
    Performer,
}

/// Structural switches for the model; the ablation study toggles them.
#[derive(Debug, Clone, PartialEq)]
pub struct FusionConfig {
    pub attention_mode: AttentionMode,
    /// Random feature count for the linear attention path.
    pub performer_features: usize,
    pub use_fusion: bool,
    pub use_graph_sim: bool,
    pub use_node_sim: bool,
    /// Redraw the random features at every epoch boundary instead of
    /// freezing them at initialization.
    pub redraw_features_each_epoch: bool,
}

impl Default for FusionConfig {
    fn default() -> Self {
        FusionConfig {
            attention_mode: AttentionMode::Transformer,
            performer_features: 24,
            use_fusion: true,
            use_graph_sim: true,
            use_node_sim: true,
            redraw_features_each_epoch: false,
        }
    }
}

impl FusionConfig {
    pub fn validate(&self) -> Result<(), ModelError> {
        if !self.use_graph_sim && !self.use_node_sim {
            return Err(ModelError::NoHeads);
        }
        if self.performer_features == 0 {
            return Err(ModelError::BadFeatureCount);
        }
        Ok(())
    }
}

/// Batch-norm site: learned affine plus running statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct BnSite {
    pub gamma: Tensor,
    pub beta: Tensor,
    pub run_mean: Tensor,
    pub run_var: Tensor,
}

impl BnSite {
    fn fresh() -> Self {
        BnSite {
            gamma: Tensor::filled(1, DIM, 1.0),
            beta: Tensor::zeros(1, DIM),
            run_mean: Tensor::zeros(1, DIM),
            run_var: Tensor::filled(1, DIM, 1.0),
        }
    }

    /// Folds batch statistics into the running buffers.
    pub fn update(&mut self, mean: &[f64], var: &[f64], momentum: f64) {
        for c in 0..DIM {
            let m = self.run_mean.data()[c];
            self.run_mean.data_mut()[c] = (1.0 - momentum) * m + momentum * mean[c];
            let v = self.run_var.data()[c];
            self.run_var.data_mut()[c] = (1.0 - momentum) * v + momentum * var[c];
        }
    }
}

/// Every tensor of the model, by role. Shapes are fixed by the input feature
/// width and the random-feature count; see [`GfmParameters::inventory`].
#[derive(Debug, Clone, PartialEq)]
pub struct GfmParameters {
    pub f0: usize,
    pub feature_count: usize,

    /// Encoder weights: layer 1 maps `2*f0 -> 48`, layers 2-3 `96 -> 48`.
    pub sage1_w: Tensor,
    pub sage2_w: Tensor,
    pub sage3_w: Tensor,

    /// Independent-encoding layer: trainable epsilon plus a two-layer map.
    pub gin_eps: Tensor,
    pub gin_w1: Tensor,
    pub gin_b1: Tensor,
    pub gin_w2: Tensor,
    pub gin_b2: Tensor,

    /// Fusion attention projections (no biases) and feed-forward weight.
    pub attn_wq: Tensor,
    pub attn_wk: Tensor,
    pub attn_wv: Tensor,
    pub attn_wo: Tensor,
    pub ffn_w: Tensor,

    /// Normalization sites: one after the independent encoding, one shared
    /// by the two post-attention normalizations, and a statistics-only site
    /// in front of the node-level head.
    pub bn_gin: BnSite,
    pub bn_fuse: BnSite,
    pub bn_node: BnSite,

    pub readout_w: Tensor,
    /// 24 kernel banks of shape (channels, kernel length), kernel length
    /// ascending then stride ascending.
    pub conv_kernels: Vec<Tensor>,

    /// Output perceptron 96 -> 32 -> 16 -> 1.
    pub mlp_w1: Tensor,
    pub mlp_b1: Tensor,
    pub mlp_w2: Tensor,
    pub mlp_b2: Tensor,
    pub mlp_w3: Tensor,
    pub mlp_b3: Tensor,

    /// Unit-norm random feature directions, non-trainable.
    pub performer_omega: Tensor,
}

fn xavier(rng: &mut DetRng, rows: usize, cols: usize) -> Tensor {
    let bound = libm::sqrt(6.0 / (rows + cols) as f64);
    let data: Vec<f64> = (0..rows * cols).map(|_| rng.uniform_in(-bound, bound)).collect();
    Tensor::new(rows, cols, data).expect("positive dims")
}

fn unit_rows(rng: &mut DetRng, rows: usize, cols: usize) -> Tensor {
    let mut t = Tensor::zeros(rows, cols);
    for r in 0..rows {
        let mut norm = 0.0;
        let mut row: Vec<f64> = (0..cols).map(|_| rng.normal()).collect();
        for v in &row {
            norm += v * v;
        }
        let inv = 1.0 / libm::sqrt(norm);
        for v in row.iter_mut() {
            *v *= inv;
        }
        t.data_mut()[r * cols..(r + 1) * cols].copy_from_slice(&row);
    }
    t
}

impl GfmParameters {
    /// Deterministic initialization: the root seed is split into one stream
    /// per tensor, in inventory order, so any single tensor's values are
    /// independent of the others' shapes.
    pub fn init(f0: usize, feature_count: usize, seed: u64) -> Self {
        let mut slot = 0u64;
        let mut next = || {
            slot += 1;
            DetRng::child(seed, slot)
        };
        let mut p = GfmParameters {
            f0,
            feature_count,
            sage1_w: xavier(&mut next(), 2 * f0, DIM),
            sage2_w: xavier(&mut next(), 2 * DIM, DIM),
            sage3_w: xavier(&mut next(), 2 * DIM, DIM),
            gin_eps: Tensor::scalar(0.0),
            gin_w1: xavier(&mut next(), DIM, DIM),
            gin_b1: Tensor::zeros(1, DIM),
            gin_w2: xavier(&mut next(), DIM, DIM),
            gin_b2: Tensor::zeros(1, DIM),
            attn_wq: xavier(&mut next(), DIM, DIM),
            attn_wk: xavier(&mut next(), DIM, DIM),
            attn_wv: xavier(&mut next(), DIM, DIM),
            attn_wo: xavier(&mut next(), DIM, DIM),
            ffn_w: xavier(&mut next(), DIM, DIM),
            bn_gin: BnSite::fresh(),
            bn_fuse: BnSite::fresh(),
            bn_node: BnSite::fresh(),
            readout_w: xavier(&mut next(), DIM, DIM),
            conv_kernels: Vec::new(),
            mlp_w1: xavier(&mut next(), 2 * DIM, 32),
            mlp_b1: Tensor::zeros(1, 32),
            mlp_w2: xavier(&mut next(), 32, 16),
            mlp_b2: Tensor::zeros(1, 16),
            mlp_w3: xavier(&mut next(), 16, 1),
            mlp_b3: Tensor::zeros(1, 1),
            performer_omega: Tensor::zeros(1, 1),
        };
        for m in CONV_KERNEL_LENGTHS {
            for _s in CONV_STRIDES {
                p.conv_kernels.push(xavier(&mut next(), CONV_CHANNELS, m));
            }
        }
        p.performer_omega = unit_rows(&mut next(), feature_count, DIM);
        p
    }

    /// Redraws the random feature directions (used behind the per-epoch
    /// redraw switch; off by default so evaluation stays deterministic).
    pub fn redraw_performer_features(&mut self, seed: u64) {
        let mut rng = DetRng::child(seed, 0xfea7);
        self.performer_omega = unit_rows(&mut rng, self.feature_count, DIM);
    }

    /// Canonical name/shape listing for the given dimensions. Checkpoints
    /// serialize tensors in exactly this order and reject any deviation.
    pub fn inventory(f0: usize, feature_count: usize) -> Vec<(String, (usize, usize), bool)> {
        let mut inv: Vec<(String, (usize, usize), bool)> = Vec::new();
        let mut t = |name: &str, shape: (usize, usize)| inv.push((String::from(name), shape, true));
        t("sage1_w", (2 * f0, DIM));
        t("sage2_w", (2 * DIM, DIM));
        t("sage3_w", (2 * DIM, DIM));
        t("gin_eps", (1, 1));
        t("gin_w1", (DIM, DIM));
        t("gin_b1", (1, DIM));
        t("gin_w2", (DIM, DIM));
        t("gin_b2", (1, DIM));
        t("attn_wq", (DIM, DIM));
        t("attn_wk", (DIM, DIM));
        t("attn_wv", (DIM, DIM));
        t("attn_wo", (DIM, DIM));
        t("ffn_w", (DIM, DIM));
        for site in ["bn_gin", "bn_fuse"] {
            inv.push((format!("{site}.gamma"), (1, DIM), true));
            inv.push((format!("{site}.beta"), (1, DIM), true));
            inv.push((format!("{site}.run_mean"), (1, DIM), false));
            inv.push((format!("{site}.run_var"), (1, DIM), false));
        }
        inv.push((String::from("bn_node.run_mean"), (1, DIM), false));
        inv.push((String::from("bn_node.run_var"), (1, DIM), false));
        t("readout_w", (DIM, DIM));
        for m in CONV_KERNEL_LENGTHS {
            for s in CONV_STRIDES {
                inv.push((format!("conv_m{m}_s{s}"), (CONV_CHANNELS, m), true));
            }
        }
        t("mlp_w1", (2 * DIM, 32));
        t("mlp_b1", (1, 32));
        t("mlp_w2", (32, 16));
        t("mlp_b2", (1, 16));
        t("mlp_w3", (16, 1));
        t("mlp_b3", (1, 1));
        inv.push((String::from("performer_omega"), (feature_count, DIM), false));
        inv
    }

    /// Immutable tensor lookup by inventory name.
    pub fn tensor(&self, name: &str) -> Option<&Tensor> {
        self.tensor_ref(name)
    }

    fn tensor_ref(&self, name: &str) -> Option<&Tensor> {
        let conv = |n: &str| -> Option<usize> {
            let rest = n.strip_prefix("conv_m")?;
            let (m, s) = rest.split_once("_s")?;
            let m: usize = m.parse().ok()?;
            let s: usize = s.parse().ok()?;
            let mi = CONV_KERNEL_LENGTHS.iter().position(|&k| k == m)?;
            let si = CONV_STRIDES.iter().position(|&k| k == s)?;
            Some(mi * CONV_STRIDES.len() + si)
        };
        Some(match name {
            "sage1_w" => &self.sage1_w,
            "sage2_w" => &self.sage2_w,
            "sage3_w" => &self.sage3_w,
            "gin_eps" => &self.gin_eps,
            "gin_w1" => &self.gin_w1,
            "gin_b1" => &self.gin_b1,
            "gin_w2" => &self.gin_w2,
            "gin_b2" => &self.gin_b2,
            "attn_wq" => &self.attn_wq,
            "attn_wk" => &self.attn_wk,
            "attn_wv" => &self.attn_wv,
            "attn_wo" => &self.attn_wo,
            "ffn_w" => &self.ffn_w,
            "bn_gin.gamma" => &self.bn_gin.gamma,
            "bn_gin.beta" => &self.bn_gin.beta,
            "bn_gin.run_mean" => &self.bn_gin.run_mean,
            "bn_gin.run_var" => &self.bn_gin.run_var,
            "bn_fuse.gamma" => &self.bn_fuse.gamma,
            "bn_fuse.beta" => &self.bn_fuse.beta,
            "bn_fuse.run_mean" => &self.bn_fuse.run_mean,
            "bn_fuse.run_var" => &self.bn_fuse.run_var,
            "bn_node.run_mean" => &self.bn_node.run_mean,
            "bn_node.run_var" => &self.bn_node.run_var,
            "readout_w" => &self.readout_w,
            "mlp_w1" => &self.mlp_w1,
            "mlp_b1" => &self.mlp_b1,
            "mlp_w2" => &self.mlp_w2,
            "mlp_b2" => &self.mlp_b2,
            "mlp_w3" => &self.mlp_w3,
            "mlp_b3" => &self.mlp_b3,
            "performer_omega" => &self.performer_omega,
            other => return conv(other).map(|idx| &self.conv_kernels[idx]),
        })
    }

    /// Mutable tensor lookup by inventory name.
    pub fn tensor_mut(&mut self, name: &str) -> Option<&mut Tensor> {
        let conv = |n: &str| -> Option<usize> {
            let rest = n.strip_prefix("conv_m")?;
            let (m, s) = rest.split_once("_s")?;
            let m: usize = m.parse().ok()?;
            let s: usize = s.parse().ok()?;
            let mi = CONV_KERNEL_LENGTHS.iter().position(|&k| k == m)?;
            let si = CONV_STRIDES.iter().position(|&k| k == s)?;
            Some(mi * CONV_STRIDES.len() + si)
        };
        Some(match name {
            "sage1_w" => &mut self.sage1_w,
            "sage2_w" => &mut self.sage2_w,
            "sage3_w" => &mut self.sage3_w,
            "gin_eps" => &mut self.gin_eps,
            "gin_w1" => &mut self.gin_w1,
            "gin_b1" => &mut self.gin_b1,
            "gin_w2" => &mut self.gin_w2,
            "gin_b2" => &mut self.gin_b2,
            "attn_wq" => &mut self.attn_wq,
            "attn_wk" => &mut self.attn_wk,
            "attn_wv" => &mut self.attn_wv,
            "attn_wo" => &mut self.attn_wo,
            "ffn_w" => &mut self.ffn_w,
            "bn_gin.gamma" => &mut self.bn_gin.gamma,
            "bn_gin.beta" => &mut self.bn_gin.beta,
            "bn_gin.run_mean" => &mut self.bn_gin.run_mean,
            "bn_gin.run_var" => &mut self.bn_gin.run_var,
            "bn_fuse.gamma" => &mut self.bn_fuse.gamma,
            "bn_fuse.beta" => &mut self.bn_fuse.beta,
            "bn_fuse.run_mean" => &mut self.bn_fuse.run_mean,
            "bn_fuse.run_var" => &mut self.bn_fuse.run_var,
            "bn_node.run_mean" => &mut self.bn_node.run_mean,
            "bn_node.run_var" => &mut self.bn_node.run_var,
            "readout_w" => &mut self.readout_w,
            "mlp_w1" => &mut self.mlp_w1,
            "mlp_b1" => &mut self.mlp_b1,
            "mlp_w2" => &mut self.mlp_w2,
            "mlp_b2" => &mut self.mlp_b2,
            "mlp_w3" => &mut self.mlp_w3,
            "mlp_b3" => &mut self.mlp_b3,
            "performer_omega" => &mut self.performer_omega,
            other => return conv(other).map(move |idx| &mut self.conv_kernels[idx]),
        })
    }

    /// Names of the trainable tensors, in inventory order.
    pub fn trainable_names(&self) -> Vec<String> {
        Self::inventory(self.f0, self.feature_count)
            .into_iter()
            .filter(|(_, _, trainable)| *trainable)
            .map(|(name, _, _)| name)
            .collect()
    }

    /// Total scalar parameter count, trainable and not.
    pub fn scalar_count(&self) -> usize {
        Self::inventory(self.f0, self.feature_count)
            .iter()
            .map(|(_, (r, c), _)| r * c)
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_rejects_headless_model() {
        let cfg = FusionConfig {
            use_graph_sim: false,
            use_node_sim: false,
            ..FusionConfig::default()
        };
        assert!(matches!(cfg.validate(), Err(ModelError::NoHeads)));
    }

    #[test]
    fn init_is_seed_deterministic_and_shaped() {
        let a = GfmParameters::init(4, 24, 7);
        let b = GfmParameters::init(4, 24, 7);
        assert_eq!(a, b);
        let c = GfmParameters::init(4, 24, 8);
        assert_ne!(a, c);

        for (name, shape, _) in GfmParameters::inventory(4, 24) {
            let t = a.tensor(&name).unwrap_or_else(|| panic!("missing {name}"));
            assert_eq!(t.shape(), shape, "{name}");
        }
    }

    #[test]
    fn inventory_is_exhaustive_against_lookup() {
        let p = GfmParameters::init(3, 16, 1);
        assert_eq!(p.conv_kernels.len(), 24);
        assert!(p.tensor("no_such_tensor").is_none());
        assert!(p.tensor("conv_m9_s1").is_none());
        assert_eq!(p.tensor("conv_m8_s3").unwrap().shape(), (4, 8));
    }

    #[test]
    fn omega_rows_are_unit_norm() {
        let p = GfmParameters::init(4, 24, 3);
        for r in 0..24 {
            let norm: f64 = p.performer_omega.row_slice(r).iter().map(|v| v * v).sum();
            assert!((norm - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn parameter_count_depends_only_on_dimensions() {
        let a = GfmParameters::init(4, 24, 1);
        let b = GfmParameters::init(4, 24, 999);
        assert_eq!(a.scalar_count(), b.scalar_count());
        assert!(a.scalar_count() > 30_000);
    }
}
