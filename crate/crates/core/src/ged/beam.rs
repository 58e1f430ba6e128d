//! Width-limited layered variant of the exact search.

use alloc::vec::Vec;

use super::astar::SearchContext;
use super::{canonical_key, invert_mapping, joint_views, EditCostModel, GedMethod, GedResult};
use crate::error::GedError;
use crate::graph::Graph;

/// Same expansion as the exact search, but only the best `width` partial
/// mappings survive each depth. The result is an upper bound; an unbounded
/// width degenerates to exhaustive (exact) search.
pub fn beam_ged(
    g1: &Graph,
    g2: &Graph,
    cost: &EditCostModel,
    width: usize,
) -> Result<GedResult, GedError> {
    if width == 0 {
        return Err(GedError::NoMethods);
    }
    // orient deterministically so truncation cannot break symmetry
    if canonical_key(g2) < canonical_key(g1) {
        let mut r = beam_ged(g2, g1, cost, width)?;
        if let Some(m) = &r.node_mapping {
            r.node_mapping = Some(invert_mapping(m, g2.n));
        }
        return Ok(r);
    }

    let (a, b, n_codes) = joint_views(g1, g2);
    let ctx = SearchContext::new(&a, &b, n_codes, cost);

    let mut layer = alloc::vec![super::astar::State {
        g: 0.0,
        assignment: Vec::new(),
        used: 0,
        e2_remaining: b.edges.len(),
    }];
    for _ in 0..a.n {
        let mut next = Vec::with_capacity(layer.len() * (b.n + 1));
        for state in &layer {
            next.extend(ctx.children(state));
        }
        next.sort_by(|x, y| {
            let fx = x.g + ctx.heuristic(x);
            let fy = y.g + ctx.heuristic(y);
            fx.total_cmp(&fy).then_with(|| x.assignment.cmp(&y.assignment))
        });
        next.truncate(width);
        layer = next;
    }

    // every surviving state is complete (children add the completion cost)
    let best = layer
        .into_iter()
        .min_by(|x, y| x.g.total_cmp(&y.g).then_with(|| x.assignment.cmp(&y.assignment)))
        .expect("beam layers never empty: the deletion branch always exists");
    Ok(GedResult {
        distance: best.g,
        method: GedMethod::Beam(width),
        optimal: false,
        node_mapping: Some(ctx.mapping_of(&best)),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ged::astar_ged;
    use alloc::string::ToString;

    fn labeled(id: usize, labels: &[&str], edges: &[(usize, usize)]) -> Graph {
        Graph::new(id, labels.len(), labels.iter().map(|l| l.to_string()).collect(), edges.to_vec())
            .unwrap()
    }

    #[test]
    fn identical_graphs_any_width() {
        let g = labeled(0, &["C", "N"], &[(0, 1)]);
        for width in [1, 2, 100] {
            let r = beam_ged(&g, &g, &EditCostModel::default(), width).unwrap();
            assert_eq!(r.distance, 0.0);
        }
    }

    #[test]
    fn wide_beam_matches_exact_search() {
        let g1 = labeled(0, &["C", "N", "O", "C"], &[(0, 1), (1, 2), (2, 3)]);
        let g2 = labeled(1, &["N", "C", "C"], &[(0, 1), (0, 2)]);
        let cost = EditCostModel::default();
        let exact = astar_ged(&g1, &g2, &cost).unwrap().distance;
        let wide = beam_ged(&g1, &g2, &cost, 1_000_000).unwrap().distance;
        assert_eq!(exact, wide);
    }

    #[test]
    fn zero_width_is_rejected() {
        let g = labeled(0, &["C"], &[]);
        assert!(beam_ged(&g, &g, &EditCostModel::default(), 0).is_err());
    }
}
