//! Dense symmetric eigensolvers.
//!
//! [`sym_eig`] reduces to tridiagonal form with Householder reflections and
//! runs implicit QL with Wilkinson shifts (the EISPACK `tred2`/`tql2` pair).
//! [`sym_eig_jacobi`] is a cyclic Jacobi solver. It is slower but shares no
//! code with the QL path, so the two serve as cross-checks for each other.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use super::Matrix;
use crate::{Error, Result};

const SYMMETRY_TOL: f64 = 1e-10;
const JACOBI_MAX_SWEEPS: usize = 100;
const JACOBI_OFF_TOL: f64 = 1e-12;
const QL_MAX_ITER_PER_VALUE: usize = 60;

/// Eigenvalues sorted descending; column `j` of `vectors` is the unit-norm
/// eigenvector of `values[j]`, signed so its largest-magnitude entry is
/// positive.
#[derive(Clone, Debug, PartialEq)]
pub struct EigenSystem {
    pub values: Vec<f64>,
    pub vectors: Matrix,
}

impl EigenSystem {
    pub fn vector(&self, j: usize) -> Vec<f64> {
        self.vectors.column(j)
    }
}

fn check_symmetric(s: &Matrix) -> Result<()> {
    if s.nrows() != s.ncols() {
        return Err(Error::InvalidInput(format!(
            "eigendecomposition needs a square matrix, got {}x{}",
            s.nrows(),
            s.ncols()
        )));
    }
    if !s.is_symmetric(SYMMETRY_TOL) {
        return Err(Error::InvalidInput("matrix is not symmetric".into()));
    }
    Ok(())
}

/// Full eigendecomposition of a symmetric matrix.
pub fn sym_eig(s: &Matrix) -> Result<EigenSystem> {
    check_symmetric(s)?;
    let n = s.nrows();
    if n == 0 {
        return Ok(EigenSystem { values: Vec::new(), vectors: Matrix::zeros(0, 0) });
    }
    let (mut d, mut e, v) = tred2(s);
    // Eigenvector j lives in z[j*n..(j+1)*n] so QL rotations touch contiguous memory.
    let mut z = vec![0.0; n * n];
    for k in 0..n {
        for j in 0..n {
            z[j * n + k] = v[k * n + j];
        }
    }
    tql2(&mut d, &mut e, Some(&mut z))?;
    Ok(finish(n, &d, |j| &z[j * n..(j + 1) * n]))
}

/// Eigenvalues only, sorted descending.
pub fn sym_eigvals(s: &Matrix) -> Result<Vec<f64>> {
    check_symmetric(s)?;
    if s.nrows() == 0 {
        return Ok(Vec::new());
    }
    let (mut d, mut e, _) = tred2(s);
    tql2(&mut d, &mut e, None)?;
    d.sort_by(|a, b| b.total_cmp(a));
    Ok(d)
}

/// Cyclic Jacobi eigendecomposition; stops once the off-diagonal Frobenius
/// norm falls to `1e-12 * ||S||_F`.
pub fn sym_eig_jacobi(s: &Matrix) -> Result<EigenSystem> {
    check_symmetric(s)?;
    let n = s.nrows();
    let norm = s.frobenius_norm();
    let mut a: Vec<f64> = s.as_slice().to_vec();
    // Symmetrize exactly so the rotations see a symmetric matrix.
    for i in 0..n {
        for j in 0..i {
            let m = 0.5 * (a[i * n + j] + a[j * n + i]);
            a[i * n + j] = m;
            a[j * n + i] = m;
        }
    }
    // vt[j*n + k] = V[k][j]: row j of vt is eigenvector j.
    let mut vt = vec![0.0; n * n];
    for i in 0..n {
        vt[i * n + i] = 1.0;
    }
    let mut converged = false;
    for _sweep in 0..JACOBI_MAX_SWEEPS {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i * n + j] * a[i * n + j])
            .sum();
        if libm::sqrt(off) <= JACOBI_OFF_TOL * norm {
            converged = true;
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[q * n + q] - a[p * n + p]) / (2.0 * apq);
                let t = if theta >= 0.0 {
                    1.0 / (theta + libm::sqrt(theta * theta + 1.0))
                } else {
                    -1.0 / (-theta + libm::sqrt(theta * theta + 1.0))
                };
                let c = 1.0 / libm::sqrt(t * t + 1.0);
                let sn = t * c;
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = c * akp - sn * akq;
                    a[k * n + q] = sn * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = c * apk - sn * aqk;
                    a[q * n + k] = sn * apk + c * aqk;
                }
                for k in 0..n {
                    let vkp = vt[p * n + k];
                    let vkq = vt[q * n + k];
                    vt[p * n + k] = c * vkp - sn * vkq;
                    vt[q * n + k] = sn * vkp + c * vkq;
                }
            }
        }
    }
    if !converged {
        return Err(Error::NoConvergence { iterations: JACOBI_MAX_SWEEPS });
    }
    let d: Vec<f64> = (0..n).map(|i| a[i * n + i]).collect();
    Ok(finish(n, &d, |j| &vt[j * n..(j + 1) * n]))
}

/// Sorts descending (stable on ties), normalizes and fixes signs.
fn finish<'a>(n: usize, d: &[f64], vector: impl Fn(usize) -> &'a [f64]) -> EigenSystem {
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| d[b].total_cmp(&d[a]));
    let values = order.iter().map(|&j| d[j]).collect();
    let mut vectors = Matrix::zeros(n, n);
    for (col, &j) in order.iter().enumerate() {
        let v = vector(j);
        let norm = libm::sqrt(v.iter().map(|x| x * x).sum());
        let mut pivot = 0;
        for k in 1..n {
            if libm::fabs(v[k]) > libm::fabs(v[pivot]) {
                pivot = k;
            }
        }
        let sign = if v[pivot] < 0.0 { -1.0 } else { 1.0 };
        let scale = if norm > 0.0 { sign / norm } else { sign };
        for k in 0..n {
            vectors[(k, col)] = v[k] * scale;
        }
    }
    EigenSystem { values, vectors }
}

/// Householder tridiagonalization. Returns the diagonal, the sub-diagonal
/// (in `e[1..]`) and the accumulated orthogonal transform, row-major.
fn tred2(s: &Matrix) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let n = s.nrows();
    let mut v: Vec<f64> = s.as_slice().to_vec();
    for i in 0..n {
        for j in 0..i {
            let m = 0.5 * (v[i * n + j] + v[j * n + i]);
            v[i * n + j] = m;
            v[j * n + i] = m;
        }
    }
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n];
    for j in 0..n {
        d[j] = v[(n - 1) * n + j];
    }

    for i in (1..n).rev() {
        let mut scale = 0.0;
        let mut h = 0.0;
        for k in 0..i {
            scale += libm::fabs(d[k]);
        }
        if scale == 0.0 {
            e[i] = d[i - 1];
            for j in 0..i {
                d[j] = v[(i - 1) * n + j];
                v[i * n + j] = 0.0;
                v[j * n + i] = 0.0;
            }
        } else {
            for k in 0..i {
                d[k] /= scale;
                h += d[k] * d[k];
            }
            let mut f = d[i - 1];
            let mut g = libm::sqrt(h);
            if f > 0.0 {
                g = -g;
            }
            e[i] = scale * g;
            h -= f * g;
            d[i - 1] = f - g;
            for j in 0..i {
                e[j] = 0.0;
            }
            for j in 0..i {
                f = d[j];
                v[j * n + i] = f;
                g = e[j] + v[j * n + j] * f;
                for k in j + 1..i {
                    g += v[k * n + j] * d[k];
                    e[k] += v[k * n + j] * f;
                }
                e[j] = g;
            }
            f = 0.0;
            for j in 0..i {
                e[j] /= h;
                f += e[j] * d[j];
            }
            let hh = f / (h + h);
            for j in 0..i {
                e[j] -= hh * d[j];
            }
            for j in 0..i {
                f = d[j];
                g = e[j];
                for k in j..i {
                    v[k * n + j] -= f * e[k] + g * d[k];
                }
                d[j] = v[(i - 1) * n + j];
                v[i * n + j] = 0.0;
            }
        }
        d[i] = h;
    }

    for i in 0..n.saturating_sub(1) {
        v[(n - 1) * n + i] = v[i * n + i];
        v[i * n + i] = 1.0;
        let h = d[i + 1];
        if h != 0.0 {
            for k in 0..=i {
                d[k] = v[k * n + i + 1] / h;
            }
            for j in 0..=i {
                let mut g = 0.0;
                for k in 0..=i {
                    g += v[k * n + i + 1] * v[k * n + j];
                }
                for k in 0..=i {
                    v[k * n + j] -= g * d[k];
                }
            }
        }
        for k in 0..=i {
            v[k * n + i + 1] = 0.0;
        }
    }
    for j in 0..n {
        d[j] = v[(n - 1) * n + j];
        v[(n - 1) * n + j] = 0.0;
    }
    v[(n - 1) * n + (n - 1)] = 1.0;
    e[0] = 0.0;
    (d, e, v)
}

/// Implicit QL on the tridiagonal `(d, e)`. When `z` is given, its rows
/// (`z[j*n..]`) are rotated along and end up as eigenvectors.
fn tql2(d: &mut [f64], e: &mut [f64], mut z: Option<&mut [f64]>) -> Result<()> {
    let n = d.len();
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = 0.0;

    let mut f = 0.0;
    let mut tst1: f64 = 0.0;
    let eps = f64::EPSILON;
    let mut total_iter = 0;
    for l in 0..n {
        tst1 = tst1.max(libm::fabs(d[l]) + libm::fabs(e[l]));
        let mut m = l;
        while m < n {
            if libm::fabs(e[m]) <= eps * tst1 {
                break;
            }
            m += 1;
        }
        if m > l {
            let mut iter = 0;
            loop {
                iter += 1;
                total_iter += 1;
                if iter > QL_MAX_ITER_PER_VALUE {
                    return Err(Error::NoConvergence { iterations: total_iter });
                }
                let mut g = d[l];
                let mut p = (d[l + 1] - g) / (2.0 * e[l]);
                let mut r = libm::hypot(p, 1.0);
                if p < 0.0 {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let mut h = g - d[l];
                for di in d.iter_mut().skip(l + 2) {
                    *di -= h;
                }
                f += h;

                p = d[m];
                let mut c = 1.0;
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = 0.0;
                let mut s2 = 0.0;
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    g = c * e[i];
                    h = c * p;
                    r = libm::hypot(p, e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);
                    if let Some(z) = z.as_deref_mut() {
                        let (lo, hi) = z.split_at_mut((i + 1) * n);
                        let zi = &mut lo[i * n..];
                        let zi1 = &mut hi[..n];
                        for (a, b) in zi.iter_mut().zip(zi1.iter_mut()) {
                            let hk = *b;
                            *b = s * *a + c * hk;
                            *a = c * *a - s * hk;
                        }
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if libm::fabs(e[l]) <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = 0.0;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Rng;

    fn random_symmetric(n: usize, seed: u64) -> Matrix {
        let mut rng = Rng::new(seed);
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            for j in 0..=i {
                let v = rng.normal();
                m[(i, j)] = v;
                m[(j, i)] = v;
            }
        }
        m
    }

    fn residual_ok(s: &Matrix, es: &EigenSystem, tol: f64) {
        let n = s.nrows();
        let norm = s.frobenius_norm();
        for j in 0..n {
            let v = es.vector(j);
            let mut r2 = 0.0;
            for i in 0..n {
                let sv: f64 = (0..n).map(|k| s[(i, k)] * v[k]).sum();
                r2 += (sv - es.values[j] * v[i]).powi(2);
            }
            assert!(r2.sqrt() <= tol * norm, "residual {} for pair {j}", r2.sqrt());
            let len: f64 = v.iter().map(|x| x * x).sum();
            assert!((len.sqrt() - 1.0).abs() <= 1e-12);
        }
        assert!(es.values.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn identity_spectrum() {
        let es = sym_eig(&Matrix::identity(4)).unwrap();
        assert!(es.values.iter().all(|&v| (v - 1.0).abs() < 1e-15));
    }

    #[test]
    fn diagonal_is_axis_aligned() {
        let s = Matrix::from_rows(&[[1.0, 0.0], [0.0, 3.0]]).unwrap();
        for es in [sym_eig(&s).unwrap(), sym_eig_jacobi(&s).unwrap()] {
            assert_eq!(es.values, vec![3.0, 1.0]);
            assert_eq!(es.vector(0), vec![0.0, 1.0]);
            assert_eq!(es.vector(1), vec![1.0, 0.0]);
        }
    }

    #[test]
    fn random_symmetric_residuals() {
        for seed in 0..5 {
            let s = random_symmetric(8, seed);
            residual_ok(&s, &sym_eig(&s).unwrap(), 1e-9);
            residual_ok(&s, &sym_eig_jacobi(&s).unwrap(), 1e-9);
        }
    }

    #[test]
    fn ql_and_jacobi_agree() {
        let s = random_symmetric(12, 42);
        let a = sym_eig(&s).unwrap();
        let b = sym_eig_jacobi(&s).unwrap();
        for (x, y) in a.values.iter().zip(&b.values) {
            assert!((x - y).abs() < 1e-10);
        }
        // Distinct eigenvalues: vectors agree once the sign convention is applied.
        for j in 0..12 {
            for (x, y) in a.vector(j).iter().zip(b.vector(j)) {
                assert!((x - y).abs() < 1e-8);
            }
        }
        assert_eq!(sym_eigvals(&s).unwrap().len(), 12);
        for (x, y) in sym_eigvals(&s).unwrap().iter().zip(&a.values) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn sign_convention() {
        let s = random_symmetric(6, 3);
        let es = sym_eig(&s).unwrap();
        for j in 0..6 {
            let v = es.vector(j);
            let pivot = v.iter().fold(0.0f64, |m, x| if x.abs() > m.abs() { *x } else { m });
            assert!(pivot > 0.0);
        }
    }

    #[test]
    fn rejects_asymmetric() {
        let s = Matrix::from_rows(&[[1.0, 2.0], [0.0, 1.0]]).unwrap();
        assert!(matches!(sym_eig(&s), Err(Error::InvalidInput(_))));
        assert!(matches!(sym_eig_jacobi(&s), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn one_by_one_and_empty() {
        let s = Matrix::from_rows(&[[-2.5]]).unwrap();
        let es = sym_eig(&s).unwrap();
        assert_eq!(es.values, vec![-2.5]);
        assert_eq!(es.vector(0), vec![1.0]);
        assert!(sym_eig(&Matrix::zeros(0, 0)).unwrap().values.is_empty());
    }
}
