//! Maximum-agreement matching between cluster labels (Hungarian method).

use crate::error::{Error, Result};

/// Finds a permutation `sigma` maximizing `sum_i confusion[i][sigma[i]]`.
///
/// Returns the permutation and the attained agreement. Runs the O(k^3)
/// shortest-augmenting-path form of the Hungarian method on the negated
/// counts.
pub fn optimal_matching(confusion: &[Vec<u64>]) -> Result<(Vec<usize>, u64)> {
    let k = confusion.len();
    for (row, r) in confusion.iter().enumerate() {
        if r.len() != k {
            return Err(Error::NonSquare {
                rows: k,
                row,
                cols: r.len(),
            });
        }
    }
    if k == 0 {
        return Ok((Vec::new(), 0));
    }
    let max = confusion.iter().flatten().copied().max().unwrap_or(0) as i64;
    let cost = |i: usize, j: usize| max - confusion[i][j] as i64;

    // Potentials and matching use 1-based indexing with column 0 as the
    // virtual source.
    let mut u = vec![0i64; k + 1];
    let mut v = vec![0i64; k + 1];
    let mut p = vec![0usize; k + 1];
    let mut way = vec![0usize; k + 1];
    for i in 1..=k {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![i64::MAX; k + 1];
        let mut used = vec![false; k + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = i64::MAX;
            let mut j1 = 0;
            for j in 1..=k {
                if used[j] {
                    continue;
                }
                let cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=k {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut sigma = vec![0usize; k];
    for j in 1..=k {
        sigma[p[j] - 1] = j - 1;
    }
    let agreement = sigma.iter().enumerate().map(|(i, &j)| confusion[i][j]).sum();
    Ok((sigma, agreement))
}
