//! Exact graph edit distance by best-first search over node mappings.

use alloc::collections::BinaryHeap;
use alloc::vec;
use alloc::vec::Vec;

use super::{bipartite_ged, joint_views, EditCostModel, GedMethod, GedResult, GedView};
use crate::error::GedError;
use crate::graph::Graph;

/// Combined node count beyond which exact search is refused by default.
pub const DEFAULT_EXACT_CAP: usize = 20;

/// Exact distance with the default size cap.
pub fn astar_ged(g1: &Graph, g2: &Graph, cost: &EditCostModel) -> Result<GedResult, GedError> {
    astar_ged_with_cap(g1, g2, cost, DEFAULT_EXACT_CAP)
}

/// Exact distance; `cap` bounds `|V1| + |V2|` since the search is
/// exponential in the worst case.
///
/// Nodes of the first graph are decided one at a time in descending-degree
/// order; each is either matched to an unused node of the second graph or
/// deleted. Edge edits are charged when the later endpoint is decided, so
/// every edge is counted exactly once. The heuristic is the label-multiset
/// mismatch lower bound plus the remaining-edge-count difference, and the
/// assignment bound prunes anything worse than an already-known script.
pub fn astar_ged_with_cap(
    g1: &Graph,
    g2: &Graph,
    cost: &EditCostModel,
    cap: usize,
) -> Result<GedResult, GedError> {
    let combined = g1.n + g2.n;
    if combined > cap {
        return Err(GedError::SizeLimit { combined, cap });
    }
    let (a, b, n_codes) = joint_views(g1, g2);
    let ctx = SearchContext::new(&a, &b, n_codes, cost);

    let upper = bipartite_ged(g1, g2, cost).distance;

    let mut heap: BinaryHeap<HeapEntry> = BinaryHeap::new();
    let root = State { g: 0.0, assignment: Vec::new(), used: 0, e2_remaining: b.edges.len() };
    let root_f = ctx.heuristic(&root);
    heap.push(HeapEntry { f: root_f, state: root });

    while let Some(HeapEntry { f, state }) = heap.pop() {
        if state.assignment.len() == a.n {
            let mapping = ctx.mapping_of(&state);
            return Ok(GedResult {
                distance: f,
                method: GedMethod::ExactAstar,
                optimal: true,
                node_mapping: Some(mapping),
            });
        }
        for child in ctx.children(&state) {
            let child_f = child.g + ctx.heuristic(&child);
            if child_f <= upper {
                heap.push(HeapEntry { f: child_f, state: child });
            }
        }
    }
    unreachable!("complete states are never pruned below the assignment bound");
}

pub(crate) struct State {
    pub g: f64,
    /// Decisions for the first `len` nodes in search order; -1 = deleted.
    pub assignment: Vec<i8>,
    pub used: u64,
    /// Second-graph edges with both endpoints still unmatched.
    pub e2_remaining: usize,
}

struct HeapEntry {
    f: f64,
    state: State,
}

impl PartialEq for HeapEntry {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == core::cmp::Ordering::Equal
    }
}
impl Eq for HeapEntry {}

impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<core::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for HeapEntry {
    /// BinaryHeap is a max-heap: order so the smallest f (then the
    /// lexicographically smallest partial mapping) surfaces first.
    fn cmp(&self, other: &Self) -> core::cmp::Ordering {
        other
            .f
            .total_cmp(&self.f)
            .then_with(|| other.state.assignment.cmp(&self.state.assignment))
    }
}

pub(crate) struct SearchContext<'a> {
    a: &'a GedView,
    b: &'a GedView,
    cost: &'a EditCostModel,
    /// First-graph nodes in decision order (degree descending, id ascending).
    order: Vec<usize>,
    /// Per-depth label counts of the still-undecided first-graph nodes.
    suffix_labels: Vec<Vec<u16>>,
    /// Per-depth count of first-graph edges with both endpoints undecided.
    suffix_edges: Vec<usize>,
    b_label_totals: Vec<u16>,
    n_codes: usize,
}

impl<'a> SearchContext<'a> {
    pub(crate) fn new(
        a: &'a GedView,
        b: &'a GedView,
        n_codes: usize,
        cost: &'a EditCostModel,
    ) -> Self {
        let mut order: Vec<usize> = (0..a.n).collect();
        order.sort_by_key(|&v| (core::cmp::Reverse(a.degrees[v]), v));

        let mut suffix_labels = vec![vec![0u16; n_codes]; a.n + 1];
        for d in (0..a.n).rev() {
            suffix_labels[d] = suffix_labels[d + 1].clone();
            suffix_labels[d][a.labels[order[d]] as usize] += 1;
        }
        let mut suffix_edges = vec![0usize; a.n + 1];
        for d in 0..=a.n {
            let mut remaining = 0u64;
            for &v in &order[d..] {
                remaining |= 1 << v;
            }
            suffix_edges[d] = a
                .edges
                .iter()
                .filter(|&&(u, v)| remaining >> u & 1 == 1 && remaining >> v & 1 == 1)
                .count();
        }
        let mut b_label_totals = vec![0u16; n_codes];
        for &l in &b.labels {
            b_label_totals[l as usize] += 1;
        }
        SearchContext { a, b, cost, order, suffix_labels, suffix_edges, b_label_totals, n_codes }
    }

    pub(crate) fn children(&self, state: &State) -> Vec<State> {
        let depth = state.assignment.len();
        let u = self.order[depth];
        let mut out = Vec::with_capacity(self.b.n + 1);
        for v in 0..self.b.n {
            if state.used >> v & 1 == 1 {
                continue;
            }
            let mut delta = if self.a.labels[u] == self.b.labels[v] {
                0.0
            } else {
                self.cost.node_relabel
            };
            delta += self.edge_delta(state, u, Some(v));
            let mut assignment = state.assignment.clone();
            assignment.push(v as i8);
            let lost = (self.b.adj[v] & !state.used).count_ones() as usize;
            let mut child = State {
                g: state.g + delta,
                assignment,
                used: state.used | 1 << v,
                e2_remaining: state.e2_remaining - lost,
            };
            if child.assignment.len() == self.a.n {
                child.g += self.completion_cost(&child);
            }
            out.push(child);
        }
        // deletion branch
        let delta = self.cost.node_delete + self.edge_delta(state, u, None);
        let mut assignment = state.assignment.clone();
        assignment.push(-1);
        let mut child = State {
            g: state.g + delta,
            assignment,
            used: state.used,
            e2_remaining: state.e2_remaining,
        };
        if child.assignment.len() == self.a.n {
            child.g += self.completion_cost(&child);
        }
        out.push(child);
        out
    }

    /// Edge edits charged by deciding `u`, against all earlier decisions.
    fn edge_delta(&self, state: &State, u: usize, image: Option<usize>) -> f64 {
        let mut total = 0.0;
        for (p, &decision) in state.assignment.iter().enumerate() {
            let w = self.order[p];
            let e1 = self.a.adj[u] >> w & 1 == 1;
            match (image, decision) {
                (None, _) | (_, -1) => {
                    if e1 {
                        total += self.cost.edge_delete;
                    }
                }
                (Some(v), wp) => {
                    let e2 = self.b.adj[v] >> (wp as usize) & 1 == 1;
                    if e1 && !e2 {
                        total += self.cost.edge_delete;
                    } else if !e1 && e2 {
                        total += self.cost.edge_insert;
                    }
                }
            }
        }
        total
    }

    /// Once every first-graph node is decided: unmatched second-graph nodes
    /// are inserted, along with every second-graph edge touching them.
    fn completion_cost(&self, state: &State) -> f64 {
        let unmatched = self.b.n - state.used.count_ones() as usize;
        let mut total = unmatched as f64 * self.cost.node_insert;
        for &(u, v) in &self.b.edges {
            if state.used >> u & 1 == 0 || state.used >> v & 1 == 0 {
                total += self.cost.edge_insert;
            }
        }
        total
    }

    pub(crate) fn heuristic(&self, state: &State) -> f64 {
        let depth = state.assignment.len();
        if depth == self.a.n {
            return 0.0;
        }
        let r1 = self.a.n - depth;
        let r2 = self.b.n - state.used.count_ones() as usize;

        let mut avail = self.b_label_totals.clone();
        for v in 0..self.b.n {
            if state.used >> v & 1 == 1 {
                avail[self.b.labels[v] as usize] -= 1;
            }
        }
        let mut common = 0usize;
        for code in 0..self.n_codes {
            common += (self.suffix_labels[depth][code] as usize).min(avail[code] as usize);
        }
        let substitutions = r1.min(r2).saturating_sub(common);
        let node_part = substitutions as f64
            * self
                .cost
                .node_relabel
                .min(self.cost.node_delete + self.cost.node_insert)
            + r1.saturating_sub(r2) as f64 * self.cost.node_delete
            + r2.saturating_sub(r1) as f64 * self.cost.node_insert;

        let e1r = self.suffix_edges[depth];
        let e2r = state.e2_remaining;
        let edge_part = e1r.saturating_sub(e2r) as f64 * self.cost.edge_delete
            + e2r.saturating_sub(e1r) as f64 * self.cost.edge_insert;

        node_part + edge_part
    }

    pub(crate) fn mapping_of(&self, state: &State) -> Vec<Option<usize>> {
        let mut mapping = vec![None; self.a.n];
        for (p, &decision) in state.assignment.iter().enumerate() {
            if decision >= 0 {
                mapping[self.order[p]] = Some(decision as usize);
            }
        }
        mapping
    }
}
