//! Gaussian kernels, row-stochastic normalization and diffusion-maps
//! coordinates.
//!
//! Eigenpairs of `P = D^-1 K` come from the symmetric conjugate
//! `S = D^-1/2 K D^-1/2`. Right eigenvectors are recovered as
//! `psi = sqrt(sum D) * D^-1/2 v`, which normalizes them against the
//! stationary distribution `W = D / sum D`: `sum_k W_k psi_m(k)^2 = 1`, the
//! trivial vector is `psi_0 = 1`, and the diffusion distance
//! `||p_i - p_j||^2_{W^-1}` equals `sum_m lambda_m^2 (psi_m(i) - psi_m(j))^2`
//! exactly over the full spectrum.

use alloc::format;
use alloc::vec::Vec;

use crate::numerics::{pairwise_sq_dist, sym_eig, Matrix};
use crate::{Error, Result};

/// Off-diagonal kernel entries below this count as zero when checking for
/// disconnected rows.
pub const DEGENERATE_ROW_FLOOR: f64 = 1e-300;

/// How the kernel width was set.
#[derive(Clone, Debug, PartialEq)]
pub enum Bandwidth {
    /// `K_ij = exp(-r_ij / (2 eps))`.
    Global(f64),
    /// `K_ij = exp(-r_ij / (sigma_i sigma_j))`.
    Local(Vec<f64>),
}

/// Symmetric kernel `K`, its degrees and the row-stochastic `P = D^-1 K`.
#[derive(Clone, Debug)]
pub struct KernelPair {
    k: Matrix,
    p: Matrix,
    degrees: Vec<f64>,
    bandwidth: Bandwidth,
    scaling: Option<Vec<f64>>,
}

impl KernelPair {
    /// Wraps a precomputed symmetric nonnegative kernel and row-normalizes
    /// it. Only requires positive degrees; disconnected rows are accepted
    /// here (the Gaussian builders reject them).
    pub fn from_kernel(k: Matrix, bandwidth: Bandwidth, scaling: Option<Vec<f64>>) -> Result<Self> {
        let n = k.nrows();
        if n == 0 || !k.is_symmetric(1e-12) || k.as_slice().iter().any(|&v| v < 0.0) {
            return Err(Error::InvalidInput("kernel must be a non-empty symmetric nonnegative matrix".into()));
        }
        let degrees: Vec<f64> = k.rows_iter().map(|r| r.iter().sum::<f64>()).collect();
        if let Some(i) = degrees.iter().position(|&d| !(d > 0.0)) {
            return Err(Error::InvalidInput(format!("kernel row {i} has zero degree")));
        }
        let p = Matrix::from_fn(n, n, |i, j| k[(i, j)] / degrees[i]);
        check_stochastic(&p);
        Ok(Self { k, p, degrees, bandwidth, scaling })
    }

    pub fn k(&self) -> &Matrix {
        &self.k
    }

    pub fn p(&self) -> &Matrix {
        &self.p
    }

    pub fn degrees(&self) -> &[f64] {
        &self.degrees
    }

    pub fn bandwidth(&self) -> &Bandwidth {
        &self.bandwidth
    }

    /// The global `eps`, if the kernel has one.
    pub fn epsilon(&self) -> Option<f64> {
        match self.bandwidth {
            Bandwidth::Global(e) => Some(e),
            Bandwidth::Local(_) => None,
        }
    }

    pub fn scaling(&self) -> Option<&[f64]> {
        self.scaling.as_deref()
    }

    pub fn len(&self) -> usize {
        self.k.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.k.nrows() == 0
    }

    /// `sum_ij K_ij`.
    pub fn total_mass(&self) -> f64 {
        self.degrees.iter().sum()
    }
}

fn check_eps(epsilon: f64) -> Result<()> {
    if epsilon > 0.0 && epsilon.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("eps must be positive and finite, got {epsilon}")))
    }
}

/// Errors on the first row whose off-diagonal entries all fall below
/// [`DEGENERATE_ROW_FLOOR`].
pub(crate) fn check_connected(k: &Matrix, epsilon: f64) -> Result<()> {
    let n = k.nrows();
    if n < 2 {
        return Ok(());
    }
    for i in 0..n {
        if k.row(i).iter().enumerate().all(|(j, &v)| j == i || v < DEGENERATE_ROW_FLOOR) {
            return Err(Error::DegenerateKernel { row: i, epsilon });
        }
    }
    Ok(())
}

/// Gaussian kernel from precomputed squared distances.
pub fn kernel_from_sq_dist(dist: &Matrix, epsilon: f64) -> Result<KernelPair> {
    check_eps(epsilon)?;
    let n = dist.nrows();
    let k = Matrix::from_fn(n, n, |i, j| libm::exp(-dist[(i, j)] / (2.0 * epsilon)));
    check_connected(&k, epsilon)?;
    KernelPair::from_kernel(k, Bandwidth::Global(epsilon), None)
}

/// `K_ij = exp(-||x_i - x_j||^2 / (2 eps))`.
pub fn gaussian_kernel(x: &Matrix, epsilon: f64) -> Result<KernelPair> {
    check_eps(epsilon)?;
    kernel_from_sq_dist(&pairwise_sq_dist(x)?, epsilon)
}

/// Kernel of the column-scaled data `x * diag(a)`.
pub fn scaled_kernel(x: &Matrix, a: &[f64], epsilon: f64) -> Result<KernelPair> {
    check_scaling(x, a)?;
    check_eps(epsilon)?;
    let dist = pairwise_sq_dist(&x.scale_columns(a))?;
    let n = dist.nrows();
    let k = Matrix::from_fn(n, n, |i, j| libm::exp(-dist[(i, j)] / (2.0 * epsilon)));
    check_connected(&k, epsilon)?;
    KernelPair::from_kernel(k, Bandwidth::Global(epsilon), Some(a.to_vec()))
}

pub(crate) fn check_scaling(x: &Matrix, a: &[f64]) -> Result<()> {
    if a.len() != x.ncols() {
        return Err(Error::InvalidInput(format!("scaling has {} entries for {} features", a.len(), x.ncols())));
    }
    if let Some(l) = a.iter().position(|&v| !(v > 0.0 && v.is_finite())) {
        return Err(Error::InvalidInput(format!("scaling entry {l} is not positive ({})", a[l])));
    }
    Ok(())
}

/// Full spectrum of `P` with right eigenvectors.
#[derive(Clone, Debug)]
pub struct Spectrum {
    /// Descending; `values[0]` is the trivial eigenvalue 1.
    pub values: Vec<f64>,
    /// Column `m` is `psi_m`, normalized so `sum_k W_k psi_m(k)^2 = 1`.
    pub psi: Matrix,
    pub epsilon: Option<f64>,
}

/// Eigendecomposition of `P` through its symmetric conjugate.
pub fn dm_spectrum(kp: &KernelPair) -> Result<Spectrum> {
    let n = kp.len();
    let inv_sqrt: Vec<f64> = kp.degrees.iter().map(|&d| 1.0 / libm::sqrt(d)).collect();
    let s = Matrix::from_fn(n, n, |i, j| kp.k[(i, j)] * (inv_sqrt[i] * inv_sqrt[j]));
    let eig = sym_eig(&s)?;
    check_spectrum(&eig.values);
    let mass = libm::sqrt(kp.total_mass());
    let psi = Matrix::from_fn(n, n, |i, m| mass * inv_sqrt[i] * eig.vectors[(i, m)]);
    Ok(Spectrum { values: eig.values, psi, epsilon: kp.epsilon() })
}

/// Diffusion-maps coordinates.
#[derive(Clone, Debug)]
pub struct Embedding {
    /// All eigenvalues of `P`, descending, trivial one first.
    pub eigenvalues: Vec<f64>,
    /// `N x d`; column `m - 1` holds `lambda_m psi_m` for `m = 1..=d`.
    pub coords: Matrix,
    pub epsilon: Option<f64>,
    pub dim: usize,
}

impl Spectrum {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// The first `d` nontrivial coordinates.
    pub fn embedding(&self, d: usize) -> Result<Embedding> {
        let n = self.values.len();
        if d == 0 || d >= n {
            return Err(Error::InvalidInput(format!("embedding dimension {d} must satisfy 1 <= d <= N-1 (N={n})")));
        }
        let coords = Matrix::from_fn(n, d, |i, m| self.values[m + 1] * self.psi[(i, m + 1)]);
        Ok(Embedding { eigenvalues: self.values.clone(), coords, epsilon: self.epsilon, dim: d })
    }

    /// Rows of `[psi_0, .., psi_{n-1}]` scaled to unit length.
    ///
    /// For a kernel made of `n` disconnected blocks the leading vectors are
    /// constant on blocks with mutually orthogonal block values, so this maps
    /// every block to its own unit vector: cross-block squared distance 2,
    /// within-block distance 0.
    pub fn unit_row_coordinates(&self, n: usize) -> Result<Matrix> {
        let len = self.values.len();
        if n == 0 || n > len {
            return Err(Error::InvalidInput(format!("need 1 <= n <= {len}, got {n}")));
        }
        let mut out = Matrix::from_fn(len, n, |i, m| self.psi[(i, m)]);
        for i in 0..len {
            let row = out.row_mut(i);
            let norm = libm::sqrt(row.iter().map(|v| v * v).sum());
            if norm > 0.0 {
                row.iter_mut().for_each(|v| *v /= norm);
            }
        }
        Ok(out)
    }
}

/// Top-`d` nontrivial diffusion coordinates of `kp`.
pub fn dm_embed(kp: &KernelPair, d: usize) -> Result<Embedding> {
    let n = kp.len();
    if d == 0 || d >= n {
        return Err(Error::InvalidInput(format!("embedding dimension {d} must satisfy 1 <= d <= N-1 (N={n})")));
    }
    dm_spectrum(kp)?.embedding(d)
}

/// `sum_m lambda_m^2 (psi_m(i) - psi_m(j))^2` over the retained coordinates.
pub fn diffusion_distance(e: &Embedding, i: usize, j: usize) -> f64 {
    let (a, b) = (e.coords.row(i), e.coords.row(j));
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

#[cfg(any(test, feature = "kernel-checks"))]
pub mod checks {
    //! Assertions run on every kernel and spectrum when the
    //! `kernel-checks` feature (or a unit-test build) is active.

    use core::sync::atomic::{AtomicUsize, Ordering};

    use crate::Matrix;

    static KERNELS: AtomicUsize = AtomicUsize::new(0);
    static SPECTRA: AtomicUsize = AtomicUsize::new(0);

    /// Kernels checked so far in this process.
    pub fn kernels_checked() -> usize {
        KERNELS.load(Ordering::Relaxed)
    }

    /// Spectra checked so far in this process.
    pub fn spectra_checked() -> usize {
        SPECTRA.load(Ordering::Relaxed)
    }

    pub(super) fn stochastic(p: &Matrix) {
        for (i, row) in p.rows_iter().enumerate() {
            let s: f64 = row.iter().sum();
            assert!((s - 1.0).abs() <= 1e-12, "row {i} of P sums to {s}");
            assert!(row.iter().all(|&v| v >= 0.0), "row {i} of P has a negative entry");
        }
        KERNELS.fetch_add(1, Ordering::Relaxed);
    }

    pub(super) fn spectrum(values: &[f64]) {
        for &l in values {
            assert!((-1.0 - 1e-9..=1.0 + 1e-9).contains(&l), "eigenvalue {l} outside [-1, 1]");
        }
        SPECTRA.fetch_add(1, Ordering::Relaxed);
    }
}

#[inline]
fn check_stochastic(_p: &Matrix) {
    #[cfg(any(test, feature = "kernel-checks"))]
    checks::stochastic(_p);
}

#[inline]
fn check_spectrum(_values: &[f64]) {
    #[cfg(any(test, feature = "kernel-checks"))]
    checks::spectrum(_values);
}
