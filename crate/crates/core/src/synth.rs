//! Synthetic graph pairs under a controlled edit budget.
//!
//! The second graph of a pair is obtained from the first by random valid
//! edits, so the exact edit distance is bounded by the consumed budget and
//! can be labeled precisely downstream. Connectivity is maintained by
//! construction: node deletions only target degree <= 1 nodes and edge
//! deletions only target cycle edges.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::error::GraphError;
use crate::graph::{Dataset, Graph, GraphPair};
use crate::rng::DetRng;

/// Shape of one generated pair.
#[derive(Debug, Clone, Copy)]
pub struct SynthConfig {
    pub nodes_min: usize,
    pub nodes_max: usize,
    /// Label alphabet size; 0 generates unlabeled graphs.
    pub alphabet: usize,
    /// Edit budget in unit costs. A node addition consumes 2 (node + its
    /// attaching edge), likewise deleting a degree-1 node.
    pub edit_budget: usize,
}

/// Standard label alphabet: single letters, then L26, L27, ...
pub fn alphabet_labels(k: usize) -> Vec<String> {
    (0..k)
        .map(|i| {
            if i < 26 {
                String::from(char::from(b'A' + i as u8))
            } else {
                format!("L{i}")
            }
        })
        .collect()
}

/// Mutable working copy during editing.
struct Working {
    labels: Vec<usize>,
    edges: BTreeSet<(usize, usize)>,
    n: usize,
}

impl Working {
    fn degree(&self, v: usize) -> usize {
        self.edges.iter().filter(|&&(a, b)| a == v || b == v).count()
    }

    fn connected_without(&self, skip: (usize, usize)) -> bool {
        if self.n <= 1 {
            return true;
        }
        let mut adj = alloc::vec![Vec::new(); self.n];
        for &(u, v) in &self.edges {
            if (u, v) == skip {
                continue;
            }
            adj[u].push(v);
            adj[v].push(u);
        }
        let mut seen = alloc::vec![false; self.n];
        let mut stack = alloc::vec![0usize];
        seen[0] = true;
        let mut count = 1;
        while let Some(v) = stack.pop() {
            for &u in &adj[v] {
                if !seen[u] {
                    seen[u] = true;
                    count += 1;
                    stack.push(u);
                }
            }
        }
        count == self.n
    }

    fn to_graph(&self, id: usize, alphabet: &[String]) -> Result<Graph, GraphError> {
        let labels = if alphabet.is_empty() {
            Vec::new()
        } else {
            self.labels.iter().map(|&l| alphabet[l].clone()).collect()
        };
        Graph::new(id, self.n, labels, self.edges.iter().copied().collect())
    }
}

/// Random connected graph: a random attachment tree plus a few extra edges.
fn random_connected(rng: &mut DetRng, cfg: &SynthConfig) -> Working {
    let n = rng.range_inclusive(cfg.nodes_min, cfg.nodes_max);
    let labels: Vec<usize> = (0..n)
        .map(|_| if cfg.alphabet == 0 { 0 } else { rng.below(cfg.alphabet) })
        .collect();
    let mut edges = BTreeSet::new();
    for v in 1..n {
        let parent = rng.below(v);
        edges.insert((parent.min(v), parent.max(v)));
    }
    if n >= 3 {
        let extra = rng.below(n / 2 + 1);
        for _ in 0..extra {
            let a = rng.below(n);
            let b = rng.below(n);
            if a != b {
                edges.insert((a.min(b), a.max(b)));
            }
        }
    }
    Working { labels, edges, n }
}

#[derive(Clone, Copy, PartialEq)]
enum EditKind {
    Relabel,
    AddEdge,
    DeleteEdge,
    AddNode,
    DeleteNode,
}

const ALL_KINDS: [EditKind; 5] = [
    EditKind::Relabel,
    EditKind::AddEdge,
    EditKind::DeleteEdge,
    EditKind::AddNode,
    EditKind::DeleteNode,
];

impl EditKind {
    /// Unit-cost price of the edit on the current graph, or None when the
    /// kind has no valid target.
    fn price(&self, w: &Working, cfg: &SynthConfig) -> Option<usize> {
        match self {
            EditKind::Relabel => (cfg.alphabet >= 2).then_some(1),
            EditKind::AddEdge => {
                (w.n >= 2 && w.edges.len() < w.n * (w.n - 1) / 2).then_some(1)
            }
            EditKind::DeleteEdge => w
                .edges
                .iter()
                .any(|&e| w.connected_without(e))
                .then_some(1),
            // node + anchoring edge
            EditKind::AddNode => Some(2),
            // connected graphs have no isolated nodes, so the target is
            // always degree 1: node + its edge
            EditKind::DeleteNode => {
                (w.n >= 2 && (0..w.n).any(|v| w.degree(v) <= 1)).then_some(2)
            }
        }
    }

    fn apply(&self, w: &mut Working, rng: &mut DetRng, cfg: &SynthConfig) -> usize {
        match self {
            EditKind::Relabel => {
                let v = rng.below(w.n);
                let old = w.labels[v];
                let mut new = rng.below(cfg.alphabet - 1);
                if new >= old {
                    new += 1;
                }
                w.labels[v] = new;
                1
            }
            EditKind::AddEdge => {
                let mut candidates: Vec<(usize, usize)> = Vec::new();
                for a in 0..w.n {
                    for b in a + 1..w.n {
                        if !w.edges.contains(&(a, b)) {
                            candidates.push((a, b));
                        }
                    }
                }
                let e = candidates[rng.below(candidates.len())];
                w.edges.insert(e);
                1
            }
            EditKind::DeleteEdge => {
                let candidates: Vec<(usize, usize)> = w
                    .edges
                    .iter()
                    .copied()
                    .filter(|&e| w.connected_without(e))
                    .collect();
                let e = candidates[rng.below(candidates.len())];
                w.edges.remove(&e);
                1
            }
            EditKind::AddNode => {
                let v = w.n;
                w.labels.push(if cfg.alphabet == 0 { 0 } else { rng.below(cfg.alphabet) });
                w.n += 1;
                let anchor = rng.below(v);
                w.edges.insert((anchor, v));
                2
            }
            EditKind::DeleteNode => {
                let candidates: Vec<usize> =
                    (0..w.n).filter(|&v| w.degree(v) <= 1).collect();
                let v = candidates[rng.below(candidates.len())];
                let price = 1 + w.degree(v);
                let survivors: BTreeSet<(usize, usize)> = w
                    .edges
                    .iter()
                    .filter(|&&(a, b)| a != v && b != v)
                    .map(|&(a, b)| {
                        let shift = |x: usize| if x > v { x - 1 } else { x };
                        (shift(a), shift(b))
                    })
                    .collect();
                w.edges = survivors;
                w.labels.remove(v);
                w.n -= 1;
                price
            }
        }
    }
}

/// Generates a base graph and a copy perturbed by random edits whose unit
/// costs sum to at most `edit_budget`. Returns both graphs and the consumed
/// budget; the exact distance never exceeds it.
///
/// Editing stops early when no kind fits the remaining budget; it is an
/// error only if no edit kind is feasible at all.
pub fn generate_pair(
    rng: &mut DetRng,
    cfg: &SynthConfig,
    id_base: usize,
    id_edited: usize,
    alphabet: &[String],
) -> Result<(Graph, Graph, usize), GraphError> {
    let base = random_connected(rng, cfg);
    let mut edited = Working { labels: base.labels.clone(), edges: base.edges.clone(), n: base.n };

    let mut spent = 0usize;
    while spent < cfg.edit_budget {
        let affordable: Vec<EditKind> = ALL_KINDS
            .iter()
            .copied()
            .filter(|k| {
                k.price(&edited, cfg)
                    .is_some_and(|p| spent + p <= cfg.edit_budget)
            })
            .collect();
        if affordable.is_empty() {
            if ALL_KINDS.iter().all(|k| k.price(&edited, cfg).is_none()) {
                return Err(GraphError::NoFeasibleEdit);
            }
            break; // some edit exists but none fits the remaining budget
        }
        let kind = affordable[rng.below(affordable.len())];
        spent += kind.apply(&mut edited, rng, cfg);
    }

    let g1 = base.to_graph(id_base, alphabet)?;
    let g2 = edited.to_graph(id_edited, alphabet)?;
    debug_assert!(g2.is_connected());
    Ok((g1, g2, spent))
}

/// Regression-flavor dataset: `count` perturbation pairs (two fresh graphs
/// each) plus `cross_pairs` unlabeled pairs sampled across distinct graphs.
/// Everything is unlabeled; an edit-distance pass fills the targets.
pub fn generate_dataset(
    seed: u64,
    count: usize,
    cfg: &SynthConfig,
    cross_pairs: usize,
) -> Result<Dataset, GraphError> {
    let alphabet = alphabet_labels(cfg.alphabet);
    let mut rng = DetRng::child(seed, 0x01);
    let mut graphs = Vec::with_capacity(2 * count);
    let mut pairs = Vec::with_capacity(count + cross_pairs);
    for c in 0..count {
        let budget = rng.range_inclusive(0, cfg.edit_budget);
        let pair_cfg = SynthConfig { edit_budget: budget, ..*cfg };
        let (a, b, _) = generate_pair(&mut rng, &pair_cfg, 2 * c, 2 * c + 1, &alphabet)?;
        graphs.push(a);
        graphs.push(b);
        pairs.push(GraphPair::unlabeled(2 * c, 2 * c + 1));
    }
    let mut seen: BTreeSet<(usize, usize)> = pairs.iter().map(|p| (p.i, p.j)).collect();
    let total = graphs.len();
    let mut added = 0;
    let mut attempts = 0;
    while added < cross_pairs && attempts < cross_pairs * 50 {
        attempts += 1;
        let a = rng.below(total);
        let b = rng.below(total);
        if a == b {
            continue;
        }
        let key = (a.min(b), a.max(b));
        if seen.insert(key) {
            pairs.push(GraphPair::unlabeled(key.0, key.1));
            added += 1;
        }
    }
    Dataset::new(alphabet, graphs, pairs)
}

/// Classification-flavor dataset: even pairs are perturbations at most
/// `positive_budget` apart (+1), odd pairs are independent graphs (-1).
pub fn generate_classification_dataset(
    seed: u64,
    count: usize,
    cfg: &SynthConfig,
    positive_budget: usize,
) -> Result<Dataset, GraphError> {
    let alphabet = alphabet_labels(cfg.alphabet);
    let mut rng = DetRng::child(seed, 0x02);
    let mut graphs = Vec::with_capacity(2 * count);
    let mut pairs = Vec::with_capacity(count);
    for c in 0..count {
        let (i, j) = (2 * c, 2 * c + 1);
        if c % 2 == 0 {
            let budget = rng.range_inclusive(0, positive_budget);
            let pair_cfg = SynthConfig { edit_budget: budget, ..*cfg };
            let (a, b, _) = generate_pair(&mut rng, &pair_cfg, i, j, &alphabet)?;
            graphs.push(a);
            graphs.push(b);
            pairs.push(GraphPair::with_label(i, j, 1));
        } else {
            let zero_cfg = SynthConfig { edit_budget: 0, ..*cfg };
            let (a, _, _) = generate_pair(&mut rng, &zero_cfg, i, usize::MAX, &alphabet)?;
            let (b, _, _) = generate_pair(&mut rng, &zero_cfg, j, usize::MAX - 1, &alphabet)?;
            let mut a = a;
            a.id = i;
            let mut b = b;
            b.id = j;
            graphs.push(a);
            graphs.push(b);
            pairs.push(GraphPair::with_label(i, j, -1));
        }
    }
    Dataset::new(alphabet, graphs, pairs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ged::{astar_ged, EditCostModel};

    fn cfg(budget: usize) -> SynthConfig {
        SynthConfig { nodes_min: 4, nodes_max: 7, alphabet: 3, edit_budget: budget }
    }

    #[test]
    fn zero_budget_yields_identical_copies() {
        let alphabet = alphabet_labels(3);
        let mut rng = DetRng::new(1);
        for _ in 0..20 {
            let (a, b, spent) = generate_pair(&mut rng, &cfg(0), 0, 1, &alphabet).unwrap();
            assert_eq!(spent, 0);
            assert_eq!(a.labels, b.labels);
            assert_eq!(a.edges, b.edges);
            let exact = astar_ged(&a, &b, &EditCostModel::default()).unwrap();
            assert_eq!(exact.distance, 0.0);
        }
    }

    #[test]
    fn forced_relabel_on_singleton() {
        let alphabet = alphabet_labels(2);
        let mut rng = DetRng::new(2);
        let cfg = SynthConfig { nodes_min: 1, nodes_max: 1, alphabet: 2, edit_budget: 1 };
        let (a, b, spent) = generate_pair(&mut rng, &cfg, 0, 1, &alphabet).unwrap();
        assert_eq!(spent, 1);
        assert_eq!(a.n, 1);
        // the only affordable unit edit on a singleton is the relabel
        assert_ne!(a.labels, b.labels);
        let exact = astar_ged(&a, &b, &EditCostModel::default()).unwrap();
        assert_eq!(exact.distance, 1.0);
    }

    #[test]
    fn edit_budget_bounds_the_exact_distance() {
        let alphabet = alphabet_labels(3);
        let mut rng = DetRng::new(3);
        let cost = EditCostModel::default();
        for trial in 0..60 {
            let budget = trial % 5;
            let (a, b, spent) = generate_pair(&mut rng, &cfg(budget), 0, 1, &alphabet).unwrap();
            assert!(spent <= budget);
            assert!(b.is_connected());
            let exact = astar_ged(&a, &b, &cost).unwrap();
            assert!(
                exact.distance <= spent as f64,
                "trial {trial}: distance {} > spent {spent}",
                exact.distance
            );
        }
    }

    #[test]
    fn dataset_generation_is_seed_deterministic() {
        let c = cfg(4);
        let d1 = generate_dataset(7, 10, &c, 15).unwrap();
        let d2 = generate_dataset(7, 10, &c, 15).unwrap();
        assert_eq!(d1, d2);
        assert_eq!(d1.graphs.len(), 20);
        assert_eq!(d1.pairs.len(), 25);
        let d3 = generate_dataset(8, 10, &c, 15).unwrap();
        assert_ne!(d1, d3);
    }

    #[test]
    fn node_counts_respect_the_range() {
        let d = generate_dataset(11, 30, &cfg(3), 0).unwrap();
        // perturbed copies may drift one node past the range per edit, the
        // base graphs never do
        for g in d.graphs.iter().step_by(2) {
            assert!((4..=7).contains(&g.n), "base graph has {} nodes", g.n);
        }
    }

    #[test]
    fn classification_labels_alternate() {
        let c = cfg(2);
        let d = generate_classification_dataset(5, 10, &c, 2).unwrap();
        assert_eq!(d.pairs.len(), 10);
        for (idx, p) in d.pairs.iter().enumerate() {
            let expect = if idx % 2 == 0 { 1 } else { -1 };
            assert_eq!(p.supervision, Some(crate::graph::Supervision::Label(expect)));
        }
    }
}
