use alloc::format;
use alloc::vec::Vec;

use super::Matrix;
use crate::{Error, Result};

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn check_finite(x: &Matrix) -> Result<()> {
    if x.as_slice().iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::InvalidInput("data contains non-finite entries".into()))
    }
}

/// All pairwise squared Euclidean distances between rows of `x`.
pub fn pairwise_sq_dist(x: &Matrix) -> Result<Matrix> {
    check_finite(x)?;
    let n = x.nrows();
    if n == 0 {
        return Err(Error::InvalidInput("empty data matrix".into()));
    }
    let mut out = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..i {
            let d = sq_dist(x.row(i), x.row(j));
            out[(i, j)] = d;
            out[(j, i)] = d;
        }
    }
    Ok(out)
}

/// Squared distances for pairs `i < j`, row-major over the strict upper
/// triangle: (0,1), (0,2), .., (0,n-1), (1,2), ..
pub fn upper_sq_dists(x: &Matrix) -> Vec<f64> {
    let n = x.nrows();
    let mut out = Vec::with_capacity(n * n.saturating_sub(1) / 2);
    for i in 0..n {
        for j in i + 1..n {
            out.push(sq_dist(x.row(i), x.row(j)));
        }
    }
    out
}

/// The `k` nearest neighbours of every row, excluding the row itself,
/// ascending by distance with ties broken by index.
pub fn knn_indices(x: &Matrix, k: usize) -> Result<Vec<Vec<usize>>> {
    check_finite(x)?;
    let n = x.nrows();
    check_k(n, k)?;
    let mut dist = Vec::with_capacity(n);
    Ok((0..n)
        .map(|i| {
            dist.clear();
            dist.extend((0..n).filter(|&j| j != i).map(|j| (sq_dist(x.row(i), x.row(j)), j)));
            smallest_k(&mut dist, k)
        })
        .collect())
}

/// Same as [`knn_indices`] but reading a precomputed distance matrix.
pub fn knn_from_sq_dist(dist: &Matrix, k: usize) -> Result<Vec<Vec<usize>>> {
    let n = dist.nrows();
    check_k(n, k)?;
    let mut buf = Vec::with_capacity(n);
    Ok((0..n)
        .map(|i| {
            buf.clear();
            buf.extend((0..n).filter(|&j| j != i).map(|j| (dist[(i, j)], j)));
            smallest_k(&mut buf, k)
        })
        .collect())
}

fn check_k(n: usize, k: usize) -> Result<()> {
    if k == 0 || k >= n {
        return Err(Error::InvalidInput(format!("neighbour count k={k} must satisfy 1 <= k <= n-1 (n={n})")));
    }
    Ok(())
}

fn smallest_k(buf: &mut [(f64, usize)], k: usize) -> Vec<usize> {
    let cmp = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
    if k < buf.len() {
        buf.select_nth_unstable_by(k - 1, cmp);
    }
    let head = &mut buf[..k];
    head.sort_unstable_by(cmp);
    head.iter().map(|&(_, j)| j).collect()
}
