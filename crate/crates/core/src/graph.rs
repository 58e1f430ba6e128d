//! Graph data model: undirected labeled graphs, one-hot features, pairs.

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::GraphError;
use crate::tensor::Tensor;

/// Undirected simple graph with categorical node labels.
///
/// Edges are stored with `u < v` in sorted order; `labels` is empty for
/// unlabeled datasets (node count then carried by `n`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    pub id: usize,
    pub n: usize,
    pub labels: Vec<String>,
    pub edges: Vec<(usize, usize)>,
}

impl Graph {
    /// Builds a labeled graph, normalizing edge order and checking the
    /// invariants: at least one node, no self-loops, no duplicate edges.
    pub fn new(
        id: usize,
        n: usize,
        labels: Vec<String>,
        edges: Vec<(usize, usize)>,
    ) -> Result<Self, GraphError> {
        if n == 0 {
            return Err(GraphError::EmptyGraph { id });
        }
        if !labels.is_empty() && labels.len() != n {
            return Err(GraphError::LabelCountMismatch { id, labels: labels.len(), n });
        }
        let mut normalized = Vec::with_capacity(edges.len());
        for &(a, b) in &edges {
            if a == b {
                return Err(GraphError::SelfLoop { id, node: a });
            }
            let (u, v) = if a < b { (a, b) } else { (b, a) };
            if v >= n {
                return Err(GraphError::EdgeOutOfRange { id, u, v, n });
            }
            normalized.push((u, v));
        }
        normalized.sort_unstable();
        for w in normalized.windows(2) {
            if w[0] == w[1] {
                return Err(GraphError::DuplicateEdge { id, u: w[0].0, v: w[0].1 });
            }
        }
        Ok(Graph { id, n, labels, edges: normalized })
    }

    pub fn is_labeled(&self) -> bool {
        !self.labels.is_empty()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Neighbor lists in ascending order.
    pub fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.n];
        for &(u, v) in &self.edges {
            adj[u].push(v);
            adj[v].push(u);
        }
        adj
    }

    pub fn degree(&self, v: usize) -> usize {
        self.edges.iter().filter(|&&(a, b)| a == v || b == v).count()
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        let key = if a < b { (a, b) } else { (b, a) };
        self.edges.binary_search(&key).is_ok()
    }

    /// True when the graph is connected (singletons count as connected).
    pub fn is_connected(&self) -> bool {
        if self.n <= 1 {
            return true;
        }
        let adj = self.adjacency();
        let mut seen = vec![false; self.n];
        let mut stack = vec![0usize];
        seen[0] = true;
        let mut visited = 1;
        while let Some(v) = stack.pop() {
            for &u in &adj[v] {
                if !seen[u] {
                    seen[u] = true;
                    visited += 1;
                    stack.push(u);
                }
            }
        }
        visited == self.n
    }
}

/// Supervision attached to a pair of graphs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Supervision {
    /// Edit distance; the similarity target derives as `exp(-nGED)`.
    Ged(f64),
    /// Class label in {-1, +1}.
    Label(i8),
}

/// A pair of graph ids with optional supervision. Freshly generated pairs
/// are unlabeled until an edit-distance pass fills them in.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphPair {
    pub i: usize,
    pub j: usize,
    pub supervision: Option<Supervision>,
    /// Which solver produced the distance, when one did.
    pub method: Option<String>,
}

impl GraphPair {
    pub fn unlabeled(i: usize, j: usize) -> Self {
        GraphPair { i, j, supervision: None, method: None }
    }

    pub fn with_ged(i: usize, j: usize, ged: f64) -> Self {
        GraphPair { i, j, supervision: Some(Supervision::Ged(ged)), method: None }
    }

    pub fn with_label(i: usize, j: usize, label: i8) -> Self {
        GraphPair { i, j, supervision: Some(Supervision::Label(label)), method: None }
    }

    /// Similarity target in (0, 1] for regression pairs.
    pub fn similarity(&self, ni: usize, nj: usize) -> Option<f64> {
        match self.supervision {
            Some(Supervision::Ged(g)) => Some(crate::ged::nged_similarity(g, ni, nj).1),
            _ => None,
        }
    }
}

/// In-memory dataset: a graph pool, its label alphabet, and supervised pairs.
///
/// The alphabet is sorted lexicographically so one-hot columns are stable
/// across runs regardless of graph order.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub alphabet: Vec<String>,
    pub graphs: Vec<Graph>,
    pub pairs: Vec<GraphPair>,
}

impl Dataset {
    /// Validates referential integrity and alphabet coverage. Graph ids must
    /// be unique; pairs must reference known ids; every label must be in the
    /// alphabet (which may be empty for unlabeled graphs).
    pub fn new(
        alphabet: Vec<String>,
        graphs: Vec<Graph>,
        pairs: Vec<GraphPair>,
    ) -> Result<Self, GraphError> {
        let mut ids = BTreeSet::new();
        for g in &graphs {
            if !ids.insert(g.id) {
                return Err(GraphError::DuplicateGraphId { id: g.id });
            }
            for label in &g.labels {
                if !alphabet.contains(label) {
                    return Err(GraphError::UnknownLabel { label: label.clone() });
                }
            }
        }
        for p in &pairs {
            for id in [p.i, p.j] {
                if !ids.contains(&id) {
                    return Err(GraphError::UnknownGraphId { id });
                }
            }
        }
        Ok(Dataset { alphabet, graphs, pairs })
    }

    /// Collects and sorts the alphabet from the graphs themselves.
    pub fn from_graphs(graphs: Vec<Graph>, pairs: Vec<GraphPair>) -> Result<Self, GraphError> {
        let alphabet: Vec<String> = graphs
            .iter()
            .flat_map(|g| g.labels.iter().cloned())
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        Dataset::new(alphabet, graphs, pairs)
    }

    pub fn graph(&self, id: usize) -> Result<&Graph, GraphError> {
        self.graphs
            .iter()
            .find(|g| g.id == id)
            .ok_or(GraphError::UnknownGraphId { id })
    }

    /// Feature width: alphabet size, or 1 for unlabeled graphs.
    pub fn feature_dim(&self) -> usize {
        if self.alphabet.is_empty() {
            1
        } else {
            self.alphabet.len()
        }
    }
}

/// One-hot feature matrix for a graph: row v has a single 1 in the column of
/// its label. An empty alphabet means unlabeled mode — a single all-ones
/// column.
pub fn one_hot_features(g: &Graph, alphabet: &[String]) -> Result<Tensor, GraphError> {
    if alphabet.is_empty() {
        return Ok(Tensor::filled(g.n, 1, 1.0));
    }
    let mut out = Tensor::zeros(g.n, alphabet.len());
    for (v, label) in g.labels.iter().enumerate() {
        let col = alphabet
            .iter()
            .position(|l| l == label)
            .ok_or_else(|| GraphError::UnknownLabel { label: label.clone() })?;
        out.set(v, col, 1.0);
    }
    Ok(out)
}
