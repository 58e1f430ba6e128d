//! Hausdorff-style lower bound on graph edit distance.

use super::{joint_views, EditCostModel, GedMethod, GedResult, GedView};
use crate::graph::Graph;

/// Sums, over the nodes of each graph, the cheapest half-cost match against
/// the other graph or the full cost of disappearing with its incident edges.
/// Never exceeds the exact distance: every unit of an optimal edit script is
/// attributed to at most the two endpoints that collect it here.
pub fn hed_ged(g1: &Graph, g2: &Graph, cost: &EditCostModel) -> GedResult {
    let (a, b, _) = joint_views(g1, g2);
    let distance = side(&a, &b, cost.node_delete, cost.edge_delete, cost)
        + side(&b, &a, cost.node_insert, cost.edge_insert, cost);
    GedResult { distance, method: GedMethod::Hed, optimal: false, node_mapping: None }
}

fn side(from: &GedView, to: &GedView, gone_node: f64, gone_edge: f64, cost: &EditCostModel) -> f64 {
    let mut total = 0.0;
    for u in 0..from.n {
        let vanish = gone_node + from.degrees[u] as f64 * gone_edge / 2.0;
        let mut best = vanish;
        for v in 0..to.n {
            let relabel = if from.labels[u] == to.labels[v] { 0.0 } else { cost.node_relabel };
            let excess = from.degrees[u].saturating_sub(to.degrees[v]) as f64 * gone_edge;
            best = best.min((relabel + excess) / 2.0);
        }
        total += best;
    }
    total
}
