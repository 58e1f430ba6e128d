//! Padded, aligned batches of graph pairs.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::GraphError;
use crate::graph::{one_hot_features, Dataset, Graph, Supervision};
use crate::rng::DetRng;
use crate::tensor::Tensor;

/// One pair inside a batch: structure, node counts, supervision.
#[derive(Debug, Clone)]
pub struct BatchMember {
    /// Index into the dataset's pair list; `usize::MAX` for ad-hoc pairs.
    pub pair_index: usize,
    pub n_i: usize,
    pub n_j: usize,
    pub adj_i: Vec<Vec<usize>>,
    pub adj_j: Vec<Vec<usize>>,
    pub supervision: Option<Supervision>,
}

/// A batch of pairs with the two sides padded to the per-batch maxima.
/// Feature rows of padding are exactly zero; masks mark the real nodes.
/// Node order within a graph is never changed.
#[derive(Debug, Clone)]
pub struct PairBatch {
    pub members: Vec<BatchMember>,
    pub l_i: usize,
    pub l_j: usize,
    /// `(members * l_i) x f` stacked padded features of the first sides.
    pub features_i: Tensor,
    pub features_j: Tensor,
    pub mask_i: Vec<bool>,
    pub mask_j: Vec<bool>,
}

impl PairBatch {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}

fn stack_side(graphs: &[&Graph], l: usize, alphabet: &[alloc::string::String], f: usize)
    -> Result<(Tensor, Vec<bool>), GraphError>
{
    let b = graphs.len();
    let mut out = Tensor::zeros(b * l, f);
    let mut mask = vec![false; b * l];
    for (p, g) in graphs.iter().enumerate() {
        let feats = one_hot_features(g, alphabet)?;
        for v in 0..g.n {
            let dst = (p * l + v) * f;
            out.data_mut()[dst..dst + f].copy_from_slice(feats.row_slice(v));
            mask[p * l + v] = true;
        }
    }
    Ok((out, mask))
}

/// Builds one batch from explicit graph references.
pub fn build_batch(
    dataset_alphabet: &[alloc::string::String],
    f: usize,
    pairs: &[(usize, &Graph, &Graph, Option<Supervision>)],
) -> Result<PairBatch, GraphError> {
    let l_i = pairs.iter().map(|p| p.1.n).max().unwrap_or(1);
    let l_j = pairs.iter().map(|p| p.2.n).max().unwrap_or(1);
    let side_i: Vec<&Graph> = pairs.iter().map(|p| p.1).collect();
    let side_j: Vec<&Graph> = pairs.iter().map(|p| p.2).collect();
    let (features_i, mask_i) = stack_side(&side_i, l_i, dataset_alphabet, f)?;
    let (features_j, mask_j) = stack_side(&side_j, l_j, dataset_alphabet, f)?;
    let members = pairs
        .iter()
        .map(|&(pair_index, gi, gj, supervision)| BatchMember {
            pair_index,
            n_i: gi.n,
            n_j: gj.n,
            adj_i: gi.adjacency(),
            adj_j: gj.adjacency(),
            supervision,
        })
        .collect();
    Ok(PairBatch { members, l_i, l_j, features_i, features_j, mask_i, mask_j })
}

/// Splits the listed pairs into batches of at most `batch_size`, padding
/// each batch to its own maxima. With a shuffle seed the iteration order is
/// a seeded permutation; otherwise pairs are taken in the given order.
pub fn pad_and_batch(
    dataset: &Dataset,
    pair_indices: &[usize],
    batch_size: usize,
    shuffle_seed: Option<u64>,
) -> Result<Vec<PairBatch>, GraphError> {
    debug_assert!(batch_size >= 1);
    let mut order: Vec<usize> = pair_indices.to_vec();
    if let Some(seed) = shuffle_seed {
        DetRng::child(seed, 0x0b).shuffle(&mut order);
    }
    let f = dataset.feature_dim();
    let mut out = Vec::new();
    for chunk in order.chunks(batch_size.max(1)) {
        let mut specs = Vec::with_capacity(chunk.len());
        for &idx in chunk {
            let pair = &dataset.pairs[idx];
            let gi = dataset.graph(pair.i)?;
            let gj = dataset.graph(pair.j)?;
            specs.push((idx, gi, gj, pair.supervision));
        }
        out.push(build_batch(&dataset.alphabet, f, &specs)?);
    }
    Ok(out)
}
