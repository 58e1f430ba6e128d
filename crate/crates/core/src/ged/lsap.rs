//! Exact linear sum assignment via shortest augmenting paths.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::GedError;
use crate::tensor::Tensor;

/// Minimum-cost perfect matching on a square cost matrix.
///
/// Returns the column assigned to each row and the total cost
/// `sum_i costs[i, sigma(i)]`. O(n^3) potentials algorithm; handles negative
/// and non-integral costs.
pub fn lsap_solve(costs: &Tensor) -> Result<(Vec<usize>, f64), GedError> {
    let (rows, cols) = costs.shape();
    if rows != cols {
        return Err(GedError::NonSquare { rows, cols });
    }
    let n = rows;

    // 1-indexed potentials; column 0 is the virtual start of each
    // augmenting path search.
    let mut u = vec![0.0f64; n + 1];
    let mut v = vec![0.0f64; n + 1];
    let mut matched_row = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];

    for i in 1..=n {
        matched_row[0] = i;
        let mut j0 = 0usize;
        let mut min_slack = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = matched_row[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0usize;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let slack = costs.get(i0 - 1, j - 1) - u[i0] - v[j];
                if slack < min_slack[j] {
                    min_slack[j] = slack;
                    way[j] = j0;
                }
                if min_slack[j] < delta {
                    delta = min_slack[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[matched_row[j]] += delta;
                    v[j] -= delta;
                } else {
                    min_slack[j] -= delta;
                }
            }
            j0 = j1;
            if matched_row[j0] == 0 {
                break;
            }
        }
        // walk the alternating path back, flipping matches
        loop {
            let j1 = way[j0];
            matched_row[j0] = matched_row[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }

    let mut assignment = vec![0usize; n];
    for j in 1..=n {
        assignment[matched_row[j] - 1] = j - 1;
    }
    let total = assignment
        .iter()
        .enumerate()
        .map(|(i, &j)| costs.get(i, j))
        .sum();
    Ok((assignment, total))
}
