//! Graph edit distance: exact search, bounded approximations, and the label
//! normalization used to turn distances into similarity targets.
//!
//! All solvers share the unit-style [`EditCostModel`] and return a
//! [`GedResult`]. The exact A* answer sits between the Hausdorff lower bound
//! and the beam/bipartite upper bounds; that sandwich is what makes the
//! approximations useful as labeled-data generators.

mod astar;
mod beam;
mod bipartite;
mod hed;
mod lsap;

pub use astar::{astar_ged, astar_ged_with_cap, DEFAULT_EXACT_CAP};
pub use beam::beam_ged;
pub use bipartite::bipartite_ged;
pub use hed::hed_ged;
pub use lsap::lsap_solve;

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::GedError;
use crate::graph::Graph;

/// Edit operation costs. Relabeling identical labels is always free.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EditCostModel {
    pub node_insert: f64,
    pub node_delete: f64,
    pub node_relabel: f64,
    pub edge_insert: f64,
    pub edge_delete: f64,
}

impl Default for EditCostModel {
    fn default() -> Self {
        EditCostModel {
            node_insert: 1.0,
            node_delete: 1.0,
            node_relabel: 1.0,
            edge_insert: 1.0,
            edge_delete: 1.0,
        }
    }
}

/// How a distance was obtained.
#[derive(Debug, Clone, PartialEq)]
pub enum GedMethod {
    ExactAstar,
    Beam(usize),
    Bipartite,
    Hed,
    /// Minimum over several methods; keeps the winner for provenance.
    Min(alloc::boxed::Box<GedMethod>),
}

impl core::fmt::Display for GedMethod {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            GedMethod::ExactAstar => write!(f, "astar"),
            GedMethod::Beam(w) => write!(f, "beam:{w}"),
            GedMethod::Bipartite => write!(f, "bipartite"),
            GedMethod::Hed => write!(f, "hed"),
            GedMethod::Min(inner) => write!(f, "min({inner})"),
        }
    }
}

/// Distance plus provenance. `node_mapping[u]` is the image of node `u` of
/// the first graph, `None` for deletion; insertions are the unmapped nodes
/// of the second graph.
#[derive(Debug, Clone, PartialEq)]
pub struct GedResult {
    pub distance: f64,
    pub method: GedMethod,
    pub optimal: bool,
    pub node_mapping: Option<Vec<Option<usize>>>,
}

/// A requested solver, as written on the command line.
#[derive(Debug, Clone, PartialEq)]
pub enum MethodSpec {
    Astar,
    Beam(usize),
    Bipartite,
    Hed,
}

impl MethodSpec {
    pub fn run(&self, g1: &Graph, g2: &Graph, cost: &EditCostModel) -> Result<GedResult, GedError> {
        match self {
            MethodSpec::Astar => astar_ged(g1, g2, cost),
            MethodSpec::Beam(w) => beam_ged(g1, g2, cost, *w),
            MethodSpec::Bipartite => Ok(bipartite_ged(g1, g2, cost)),
            MethodSpec::Hed => Ok(hed_ged(g1, g2, cost)),
        }
    }
}

/// Runs every listed method and keeps the smallest distance.
pub fn min_label(
    g1: &Graph,
    g2: &Graph,
    cost: &EditCostModel,
    methods: &[MethodSpec],
) -> Result<GedResult, GedError> {
    if methods.is_empty() {
        return Err(GedError::NoMethods);
    }
    let mut best: Option<GedResult> = None;
    for spec in methods {
        let r = spec.run(g1, g2, cost)?;
        if best.as_ref().is_none_or(|b| r.distance < b.distance) {
            best = Some(r);
        }
    }
    let inner = best.expect("at least one method ran");
    Ok(GedResult {
        distance: inner.distance,
        optimal: inner.optimal,
        node_mapping: inner.node_mapping.clone(),
        method: GedMethod::Min(alloc::boxed::Box::new(inner.method)),
    })
}

/// Normalizes a distance by the mean node count and maps it to (0, 1]:
/// `nged = ged / ((n1 + n2) / 2)`, `s = exp(-nged)`.
pub fn nged_similarity(ged: f64, n1: usize, n2: usize) -> (f64, f64) {
    let nged = ged / ((n1 + n2) as f64 / 2.0);
    (nged, libm::exp(-nged))
}

// ── shared solver internals ──────────────────────────────────────────

/// Precomputed per-graph view: integer label codes against a joint code
/// table, bitmask adjacency, and degrees. Solvers assume at most 64 nodes.
#[derive(Debug, Clone)]
pub(crate) struct GedView {
    pub n: usize,
    pub labels: Vec<u32>,
    pub adj: Vec<u64>,
    pub degrees: Vec<usize>,
    pub edges: Vec<(usize, usize)>,
}

pub(crate) fn joint_views(g1: &Graph, g2: &Graph) -> (GedView, GedView, usize) {
    let mut codes: BTreeMap<&String, u32> = BTreeMap::new();
    for label in g1.labels.iter().chain(&g2.labels) {
        let next = codes.len() as u32;
        codes.entry(label).or_insert(next);
    }
    let n_codes = codes.len().max(1);
    let view = |g: &Graph| {
        let labels = if g.is_labeled() {
            g.labels.iter().map(|l| codes[l]).collect()
        } else {
            vec![0u32; g.n]
        };
        let mut adj = vec![0u64; g.n];
        let mut degrees = vec![0usize; g.n];
        for &(u, v) in &g.edges {
            adj[u] |= 1 << v;
            adj[v] |= 1 << u;
            degrees[u] += 1;
            degrees[v] += 1;
        }
        GedView { n: g.n, labels, adj, degrees, edges: g.edges.clone() }
    };
    (view(g1), view(g2), n_codes)
}

/// Exact edit cost realized by a node mapping: node substitutions/deletions/
/// insertions plus the induced edge edits.
pub(crate) fn mapping_cost(
    a: &GedView,
    b: &GedView,
    mapping: &[Option<usize>],
    cost: &EditCostModel,
) -> f64 {
    debug_assert_eq!(mapping.len(), a.n);
    let mut total = 0.0;
    let mut used = vec![false; b.n];
    for (u, m) in mapping.iter().enumerate() {
        match m {
            Some(v) => {
                used[*v] = true;
                if a.labels[u] != b.labels[*v] {
                    total += cost.node_relabel;
                }
            }
            None => total += cost.node_delete,
        }
    }
    total += used.iter().filter(|&&u| !u).count() as f64 * cost.node_insert;

    // edges of the first graph: preserved or deleted
    let mut preserved = 0usize;
    for &(u, v) in &a.edges {
        match (mapping[u], mapping[v]) {
            (Some(mu), Some(mv)) if b.adj[mu] >> mv & 1 == 1 => preserved += 1,
            _ => total += cost.edge_delete,
        }
    }
    // edges of the second graph that are not images of preserved edges
    total += (b.edges.len() - preserved) as f64 * cost.edge_insert;
    total
}

/// Deterministic structural key for orienting symmetric computations.
pub(crate) fn canonical_key(g: &Graph) -> (usize, usize, &Vec<String>, &Vec<(usize, usize)>) {
    (g.n, g.edges.len(), &g.labels, &g.edges)
}

/// Inverts a g1->g2 mapping into a g2->g1 mapping.
pub(crate) fn invert_mapping(mapping: &[Option<usize>], n2: usize) -> Vec<Option<usize>> {
    let mut out = vec![None; n2];
    for (u, m) in mapping.iter().enumerate() {
        if let Some(v) = m {
            out[*v] = Some(u);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;

    #[test]
    fn nged_similarity_matches_direct_formula() {
        // ged 0 -> similarity exactly 1
        assert_eq!(nged_similarity(0.0, 3, 5), (0.0, 1.0));
        // ged 4 on two 4-node graphs: nged 1, s = e^-1
        let (nged, s) = nged_similarity(4.0, 4, 4);
        assert_eq!(nged, 1.0);
        assert!((s - 0.367_879_441_171_442_3).abs() < 1e-12);
        // ged 2 on 3 and 5 nodes: nged 0.5
        let (nged, s) = nged_similarity(2.0, 3, 5);
        assert_eq!(nged, 0.5);
        assert!((s - 0.606_530_659_712_633_4).abs() < 1e-12);
    }

    #[test]
    fn mapping_cost_counts_all_edit_kinds() {
        // triangle vs 3-path, same labels: best mapping keeps two edges
        let g1 = Graph::new(0, 3, vec!["a".to_string(); 3], vec![(0, 1), (1, 2), (0, 2)]).unwrap();
        let g2 = Graph::new(1, 3, vec!["a".to_string(); 3], vec![(0, 1), (1, 2)]).unwrap();
        let (v1, v2, _) = joint_views(&g1, &g2);
        let cost = EditCostModel::default();
        let ident = vec![Some(0), Some(1), Some(2)];
        assert_eq!(mapping_cost(&v1, &v2, &ident, &cost), 1.0);
        // deleting node 0 forfeits its two incident edges and re-inserts one node
        let partial = vec![None, Some(1), Some(2)];
        assert_eq!(mapping_cost(&v1, &v2, &partial, &cost), 1.0 + 2.0 + 1.0 + 1.0);
    }
}
