use alloc::vec;
use alloc::vec::Vec;

use super::Matrix;
use crate::{Error, Result};

/// Thin SVD `M = U diag(s) V^T` with `s` descending.
#[derive(Clone, Debug)]
pub struct Svd {
    pub u: Matrix,
    pub s: Vec<f64>,
    pub v: Matrix,
}

const MAX_SWEEPS: usize = 100;

/// One-sided Jacobi SVD for small dense matrices with `rows >= cols`.
///
/// Columns of `U` belonging to zero singular values are completed to an
/// orthonormal set, so `U` always has orthonormal columns.
pub fn svd_small(m: &Matrix) -> Result<Svd> {
    let (rows, cols) = m.shape();
    if rows < cols {
        return Err(Error::InvalidInput(alloc::format!("svd_small needs rows >= cols, got {rows}x{cols}")));
    }
    // work on columns stored contiguously
    let mut a: Vec<Vec<f64>> = (0..cols).map(|j| m.column(j)).collect();
    let mut v: Vec<Vec<f64>> = (0..cols)
        .map(|j| {
            let mut e = vec![0.0; cols];
            e[j] = 1.0;
            e
        })
        .collect();
    let dot = |x: &[f64], y: &[f64]| x.iter().zip(y).map(|(p, q)| p * q).sum::<f64>();

    let mut converged = cols < 2;
    for _ in 0..MAX_SWEEPS {
        if converged {
            break;
        }
        let mut rotated = false;
        for p in 0..cols {
            for q in p + 1..cols {
                let alpha = dot(&a[p], &a[p]);
                let beta = dot(&a[q], &a[q]);
                let gamma = dot(&a[p], &a[q]);
                if gamma == 0.0 || libm::fabs(gamma) <= 1e-15 * libm::sqrt(alpha * beta) {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = libm::copysign(1.0, zeta) / (libm::fabs(zeta) + libm::hypot(1.0, zeta));
                let c = 1.0 / libm::sqrt(1.0 + t * t);
                let s = c * t;
                rotate(&mut a, p, q, c, s);
                rotate(&mut v, p, q, c, s);
            }
        }
        converged = !rotated;
    }
    if !converged {
        return Err(Error::NoConvergence { iterations: MAX_SWEEPS });
    }

    let mut sv: Vec<(f64, usize)> = (0..cols).map(|j| (libm::sqrt(dot(&a[j], &a[j])), j)).collect();
    sv.sort_by(|x, y| y.0.total_cmp(&x.0).then(x.1.cmp(&y.1)));
    let smax = sv.first().map_or(0.0, |x| x.0);

    let mut u_cols: Vec<Vec<f64>> = Vec::with_capacity(cols);
    let mut s = Vec::with_capacity(cols);
    let mut v_cols = Vec::with_capacity(cols);
    for &(sigma, j) in &sv {
        v_cols.push(v[j].clone());
        if sigma > 1e-14 * smax && sigma > 0.0 {
            u_cols.push(a[j].iter().map(|x| x / sigma).collect());
            s.push(sigma);
        } else {
            u_cols.push(complete(&u_cols, rows));
            s.push(0.0);
        }
    }
    Ok(Svd { u: Matrix::from_columns(&u_cols)?, s, v: Matrix::from_columns(&v_cols)? })
}

fn rotate(cols: &mut [Vec<f64>], p: usize, q: usize, c: f64, s: f64) {
    let (lo, hi) = cols.split_at_mut(q);
    for (x, y) in lo[p].iter_mut().zip(hi[0].iter_mut()) {
        let (xp, xq) = (*x, *y);
        *x = c * xp - s * xq;
        *y = s * xp + c * xq;
    }
}

/// A unit vector orthogonal to `basis`, built from the standard basis
/// vector that survives projection best.
fn complete(basis: &[Vec<f64>], rows: usize) -> Vec<f64> {
    let mut best = vec![0.0; rows];
    let mut best_norm = -1.0;
    for k in 0..rows {
        let mut e = vec![0.0; rows];
        e[k] = 1.0;
        for _ in 0..2 {
            for b in basis {
                let proj: f64 = b.iter().zip(&e).map(|(x, y)| x * y).sum();
                for (ei, bi) in e.iter_mut().zip(b) {
                    *ei -= proj * bi;
                }
            }
        }
        let n = libm::sqrt(e.iter().map(|x| x * x).sum());
        if n > best_norm {
            best_norm = n;
            best = e;
        }
    }
    best.iter().map(|x| x / best_norm).collect()
}
