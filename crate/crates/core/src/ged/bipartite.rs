//! Assignment-based upper bound on graph edit distance.

use alloc::vec;
use alloc::vec::Vec;

use super::{
    canonical_key, invert_mapping, joint_views, lsap_solve, mapping_cost, EditCostModel,
    GedMethod, GedResult, GedView,
};
use crate::graph::Graph;
use crate::tensor::Tensor;

const FORBIDDEN: f64 = 1e18;

/// Builds the standard (n1+n2) x (n1+n2) substitution / deletion / insertion
/// cost matrix with a local degree term, solves the assignment exactly, and
/// prices the induced node mapping with the true edit costs. The result is
/// always an upper bound on the exact distance.
pub fn bipartite_ged(g1: &Graph, g2: &Graph, cost: &EditCostModel) -> GedResult {
    // orient deterministically so the bound is symmetric in its arguments
    if canonical_key(g2) < canonical_key(g1) {
        let mut r = bipartite_ged(g2, g1, cost);
        if let Some(m) = &r.node_mapping {
            r.node_mapping = Some(invert_mapping(m, g2.n));
        }
        return r;
    }

    let (a, b, _) = joint_views(g1, g2);
    let mapping = assignment_mapping(&a, &b, cost);
    let distance = mapping_cost(&a, &b, &mapping, cost);
    GedResult {
        distance,
        method: GedMethod::Bipartite,
        optimal: false,
        node_mapping: Some(mapping),
    }
}

pub(crate) fn assignment_mapping(
    a: &GedView,
    b: &GedView,
    cost: &EditCostModel,
) -> Vec<Option<usize>> {
    let (n1, n2) = (a.n, b.n);
    let dim = n1 + n2;
    let mut m = Tensor::zeros(dim, dim);
    for i in 0..dim {
        for j in 0..dim {
            let v = match (i < n1, j < n2) {
                (true, true) => {
                    let relabel = if a.labels[i] == b.labels[j] { 0.0 } else { cost.node_relabel };
                    let ddiff = a.degrees[i].abs_diff(b.degrees[j]) as f64;
                    relabel + ddiff * cost.edge_delete.min(cost.edge_insert)
                }
                (true, false) => {
                    if j - n2 == i {
                        cost.node_delete + a.degrees[i] as f64 * cost.edge_delete
                    } else {
                        FORBIDDEN
                    }
                }
                (false, true) => {
                    if i - n1 == j {
                        cost.node_insert + b.degrees[j] as f64 * cost.edge_insert
                    } else {
                        FORBIDDEN
                    }
                }
                (false, false) => 0.0,
            };
            m.set(i, j, v);
        }
    }
    let (assignment, _) = lsap_solve(&m).expect("square by construction");
    let mut mapping = vec![None; n1];
    for (u, slot) in mapping.iter_mut().enumerate() {
        if assignment[u] < n2 {
            *slot = Some(assignment[u]);
        }
    }
    mapping
}
