//! Reference implementations used only by tests: exhaustive enumeration and
//! quadratic-time metrics. Deliberately naive and kept independent of the
//! production code paths they validate.

use alloc::vec;
use alloc::vec::Vec;

use crate::ged::EditCostModel;
use crate::graph::Graph;
use crate::tensor::Tensor;

/// Minimum assignment cost by enumerating all permutations. Exponential;
/// keep n small.
pub fn lsap_brute_force(costs: &Tensor) -> f64 {
    let n = costs.rows();
    assert_eq!(n, costs.cols());
    let mut cols: Vec<usize> = (0..n).collect();
    let mut best = f64::INFINITY;
    permute(&mut cols, 0, &mut |perm| {
        let total: f64 = perm.iter().enumerate().map(|(i, &j)| costs.get(i, j)).sum();
        if total < best {
            best = total;
        }
    });
    best
}

fn permute<F: FnMut(&[usize])>(items: &mut Vec<usize>, at: usize, visit: &mut F) {
    if at == items.len() {
        visit(items);
        return;
    }
    for i in at..items.len() {
        items.swap(at, i);
        permute(items, at + 1, visit);
        items.swap(at, i);
    }
}

/// Exact edit distance by enumerating every injective partial node mapping
/// and pricing it directly. No heuristics, no pruning, no shared state with
/// the search implementation.
pub fn ged_brute_force(g1: &Graph, g2: &Graph, cost: &EditCostModel) -> f64 {
    let adj1 = dense_adjacency(g1);
    let adj2 = dense_adjacency(g2);
    let mut image: Vec<Option<usize>> = vec![None; g1.n];
    let mut taken = vec![false; g2.n];
    let mut best = f64::INFINITY;
    enumerate(g1, g2, &adj1, &adj2, cost, 0, &mut image, &mut taken, &mut best);
    best
}

fn dense_adjacency(g: &Graph) -> Vec<Vec<bool>> {
    let mut adj = vec![vec![false; g.n]; g.n];
    for &(u, v) in &g.edges {
        adj[u][v] = true;
        adj[v][u] = true;
    }
    adj
}

#[allow(clippy::too_many_arguments)]
fn enumerate(
    g1: &Graph,
    g2: &Graph,
    adj1: &[Vec<bool>],
    adj2: &[Vec<bool>],
    cost: &EditCostModel,
    node: usize,
    image: &mut Vec<Option<usize>>,
    taken: &mut Vec<bool>,
    best: &mut f64,
) {
    if node == g1.n {
        let total = price_mapping(g1, g2, adj1, adj2, cost, image);
        if total < *best {
            *best = total;
        }
        return;
    }
    for v in 0..g2.n {
        if !taken[v] {
            taken[v] = true;
            image[node] = Some(v);
            enumerate(g1, g2, adj1, adj2, cost, node + 1, image, taken, best);
            image[node] = None;
            taken[v] = false;
        }
    }
    enumerate(g1, g2, adj1, adj2, cost, node + 1, image, taken, best);
}

fn price_mapping(
    g1: &Graph,
    g2: &Graph,
    adj1: &[Vec<bool>],
    adj2: &[Vec<bool>],
    cost: &EditCostModel,
    image: &[Option<usize>],
) -> f64 {
    let label = |g: &Graph, v: usize| {
        if g.labels.is_empty() {
            None
        } else {
            Some(g.labels[v].as_str())
        }
    };
    let mut total = 0.0;
    for u in 0..g1.n {
        match image[u] {
            Some(v) => {
                if label(g1, u) != label(g2, v) {
                    total += cost.node_relabel;
                }
            }
            None => total += cost.node_delete,
        }
    }
    let matched: Vec<usize> = image.iter().flatten().copied().collect();
    total += (g2.n - matched.len()) as f64 * cost.node_insert;

    for u in 0..g1.n {
        for w in u + 1..g1.n {
            if adj1[u][w] {
                let kept = matches!((image[u], image[w]), (Some(a), Some(b)) if adj2[a][b]);
                if !kept {
                    total += cost.edge_delete;
                }
            }
        }
    }
    for a in 0..g2.n {
        for b in a + 1..g2.n {
            if adj2[a][b] {
                let covered = (0..g1.n).any(|u| {
                    (0..g1.n).any(|w| {
                        u != w
                            && adj1[u][w]
                            && image[u] == Some(a)
                            && image[w] == Some(b)
                    })
                });
                if !covered {
                    total += cost.edge_insert;
                }
            }
        }
    }
    total
}

// ── quadratic-time metric references ─────────────────────────────────

/// Spearman rank correlation with average ranks for ties; ranks computed by
/// quadratic counting rather than sorting.
pub fn spearman_naive(truth: &[f64], pred: &[f64]) -> f64 {
    let ra = naive_average_ranks(truth);
    let rb = naive_average_ranks(pred);
    pearson(&ra, &rb)
}

fn naive_average_ranks(xs: &[f64]) -> Vec<f64> {
    xs.iter()
        .map(|&x| {
            let smaller = xs.iter().filter(|&&y| y < x).count();
            let ties = xs.iter().filter(|&&y| y == x).count();
            smaller as f64 + (ties as f64 + 1.0) / 2.0
        })
        .collect()
}

fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut va = 0.0;
    let mut vb = 0.0;
    for (x, y) in a.iter().zip(b) {
        cov += (x - ma) * (y - mb);
        va += (x - ma) * (x - ma);
        vb += (y - mb) * (y - mb);
    }
    if va == 0.0 || vb == 0.0 {
        return 0.0;
    }
    cov / libm::sqrt(va * vb)
}

/// Probability that a random positive outranks a random negative, ties
/// counted half — by the full double loop.
pub fn auc_naive(pos: &[f64], neg: &[f64]) -> f64 {
    let mut wins = 0.0;
    for &p in pos {
        for &n in neg {
            if p > n {
                wins += 1.0;
            } else if p == n {
                wins += 0.5;
            }
        }
    }
    wins / (pos.len() as f64 * neg.len() as f64)
}

/// Top-k overlap with ties broken by ascending id, selection by repeated
/// scans instead of sorting.
pub fn precision_at_k_naive(truth: &[f64], pred: &[f64], k: usize) -> f64 {
    let top = |scores: &[f64]| -> Vec<usize> {
        let mut chosen: Vec<usize> = Vec::new();
        while chosen.len() < k.min(scores.len()) {
            let mut best: Option<usize> = None;
            for (id, &s) in scores.iter().enumerate() {
                if chosen.contains(&id) {
                    continue;
                }
                best = match best {
                    None => Some(id),
                    Some(b) => {
                        if s > scores[b] || (s == scores[b] && id < b) {
                            Some(id)
                        } else {
                            Some(b)
                        }
                    }
                };
            }
            chosen.push(best.expect("k bounded by len"));
        }
        chosen
    };
    let t = top(truth);
    let p = top(pred);
    let hits = p.iter().filter(|id| t.contains(id)).count();
    hits as f64 / k.min(truth.len()) as f64
}

/// Plain mean of squared differences.
pub fn mse_naive(truth: &[f64], pred: &[f64]) -> f64 {
    let n = truth.len() as f64;
    truth
        .iter()
        .zip(pred)
        .map(|(t, p)| (t - p) * (t - p))
        .sum::<f64>()
        / n
}
