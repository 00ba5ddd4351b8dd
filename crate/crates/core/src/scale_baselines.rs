//! Established bandwidth selectors: per-feature std scaling, MaxMin, the
//! kernel-sum linear range, and self-tuning local scales.

use alloc::format;
use alloc::vec::Vec;

use crate::diffusion::{check_connected, Bandwidth, KernelPair};
use crate::numerics::{knn_from_sq_dist, median, pairwise_sq_dist, population_std, upper_sq_dists};
use crate::{log_grid, Error, Flag, Matrix, Result};

/// Default multiplier for [`maxmin_scale`].
pub const DEFAULT_MAXMIN_C: f64 = 2.0;
/// Default neighbour rank for [`zelnik_scales`].
pub const DEFAULT_ZELNIK_R: usize = 7;
/// Points in the default kernel-sum grid.
pub const DEFAULT_SINGER_POINTS: usize = 64;
/// Slopes within this fraction of the maximum belong to the linear range.
pub const SINGER_SLOPE_FRACTION: f64 = 0.8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Method {
    /// Features multiplied by their standard deviation, `eps = 1`.
    Std,
    /// Features divided by their standard deviation, `eps = 1`.
    StdInverse,
    MaxMin,
    Singer,
    Zelnik,
    Manifold,
    RhoPsi,
    Ge,
    RhoP,
}

impl Method {
    pub const ALL: [Method; 9] = [
        Method::Std,
        Method::StdInverse,
        Method::MaxMin,
        Method::Singer,
        Method::Zelnik,
        Method::Manifold,
        Method::RhoPsi,
        Method::Ge,
        Method::RhoP,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::Std => "std",
            Method::StdInverse => "std-inverse",
            Method::MaxMin => "maxmin",
            Method::Singer => "singer",
            Method::Zelnik => "zelnik",
            Method::Manifold => "manifold",
            Method::RhoPsi => "rho_psi",
            Method::Ge => "ge",
            Method::RhoP => "rho_p",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|m| m.name() == s)
    }

    /// Whether the selector needs class labels.
    pub fn is_supervised(self) -> bool {
        matches!(self, Method::RhoPsi | Method::Ge | Method::RhoP)
    }
}

/// A chosen bandwidth with whatever the selector produced along the way.
#[derive(Clone, Debug, PartialEq)]
pub struct ScaleSelection {
    pub method: Method,
    /// The scalar used downstream. For [`Method::Singer`] this is the start
    /// of the range; for [`Method::Zelnik`] it is 1/2, since
    /// `exp(-r / (2 eps sigma_i sigma_j))` with `eps = 1/2` is the local-scale
    /// kernel.
    pub epsilon: f64,
    pub range: Option<(f64, f64)>,
    pub scaling: Option<Vec<f64>>,
    pub local_sigmas: Option<Vec<f64>>,
    pub curve: Option<Vec<(f64, f64)>>,
    pub flags: Vec<Flag>,
}

impl ScaleSelection {
    pub fn scalar(method: Method, epsilon: f64) -> Self {
        Self { method, epsilon, range: None, scaling: None, local_sigmas: None, curve: None, flags: Vec::new() }
    }
}

fn need_two(x: &Matrix) -> Result<()> {
    if x.nrows() < 2 {
        return Err(Error::InvalidInput(format!("need at least 2 samples, got {}", x.nrows())));
    }
    Ok(())
}

fn feature_stds(x: &Matrix, flags: &mut Vec<Flag>) -> Vec<f64> {
    (0..x.ncols())
        .map(|l| {
            let s = population_std(&x.column(l));
            if s > 0.0 {
                s
            } else {
                flags.push(Flag::ZeroVarianceFeature { feature: l });
                1.0
            }
        })
        .collect()
}

/// `A_ll = std(feature l)` (population normalization), `eps = 1`.
pub fn std_scaling(x: &Matrix) -> Result<ScaleSelection> {
    need_two(x)?;
    let mut sel = ScaleSelection::scalar(Method::Std, 1.0);
    sel.scaling = Some(feature_stds(x, &mut sel.flags));
    Ok(sel)
}

/// `A_ll = 1 / std(feature l)`, `eps = 1`: conventional standardization.
pub fn std_inverse_scaling(x: &Matrix) -> Result<ScaleSelection> {
    need_two(x)?;
    let mut sel = ScaleSelection::scalar(Method::StdInverse, 1.0);
    let stds = feature_stds(x, &mut sel.flags);
    sel.scaling = Some(stds.iter().map(|s| 1.0 / s).collect());
    Ok(sel)
}

/// `eps = C * max_j min_{i != j} ||x_i - x_j||^2`.
pub fn maxmin_scale(x: &Matrix, c: f64) -> Result<ScaleSelection> {
    need_two(x)?;
    maxmin_from_sq_dist(&pairwise_sq_dist(x)?, c)
}

pub fn maxmin_from_sq_dist(dist: &Matrix, c: f64) -> Result<ScaleSelection> {
    if !(2.0..=3.0).contains(&c) {
        return Err(Error::InvalidInput(format!("MaxMin constant must lie in [2, 3], got {c}")));
    }
    let n = dist.nrows();
    if n < 2 {
        return Err(Error::InvalidInput("MaxMin needs at least 2 samples".into()));
    }
    let worst = (0..n)
        .map(|j| (0..n).filter(|&i| i != j).map(|i| dist[(i, j)]).fold(f64::INFINITY, f64::min))
        .fold(0.0, f64::max);
    let mut sel = ScaleSelection::scalar(Method::MaxMin, c * worst);
    if worst == 0.0 {
        sel.flags.push(Flag::NoDistinctPairs);
    }
    Ok(sel)
}

/// `L(eps) = sum_ij exp(-r_ij / (2 eps))` from the strict upper-triangle
/// distances of `n` points.
pub fn kernel_sum_from_upper(upper: &[f64], n: usize, epsilon: f64) -> f64 {
    let off: f64 = upper.iter().map(|&r| libm::exp(-r / (2.0 * epsilon))).sum();
    n as f64 + 2.0 * off
}

fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::InvalidInput("empty eps grid".into()));
    }
    if grid.iter().any(|&e| !(e > 0.0 && e.is_finite())) {
        return Err(Error::InvalidInput("eps grid values must be positive and finite".into()));
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidInput("eps grid must be strictly ascending".into()));
    }
    Ok(())
}

/// `(eps, L(eps))` for every grid point.
pub fn kernel_sum_curve(x: &Matrix, grid: &[f64]) -> Result<Vec<(f64, f64)>> {
    check_grid(grid)?;
    if x.nrows() == 0 {
        return Err(Error::InvalidInput("empty data matrix".into()));
    }
    if x.as_slice().iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("data contains non-finite entries".into()));
    }
    let upper = upper_sq_dists(x);
    Ok(grid.iter().map(|&e| (e, kernel_sum_from_upper(&upper, x.nrows(), e))).collect())
}

/// 64 log-spaced points over `[1e-4 m, 1e4 m]`, `m` the median pairwise
/// squared distance.
pub fn default_singer_grid(x: &Matrix) -> Result<Vec<f64>> {
    let m = median(&upper_sq_dists(x));
    if !(m > 0.0) {
        return Err(Error::InvalidInput("median pairwise distance is zero; cannot place a default grid".into()));
    }
    log_grid(1e-4 * m, 1e4 * m, DEFAULT_SINGER_POINTS)
}

/// Local slopes `d log L / d log eps`: central differences inside, one-sided
/// at the ends.
pub fn log_log_slopes(curve: &[(f64, f64)]) -> Vec<f64> {
    let n = curve.len();
    let lx: Vec<f64> = curve.iter().map(|c| libm::log(c.0)).collect();
    let ly: Vec<f64> = curve.iter().map(|c| libm::log(c.1)).collect();
    (0..n)
        .map(|i| {
            let (a, b) = if i == 0 {
                (0, 1)
            } else if i == n - 1 {
                (n - 2, n - 1)
            } else {
                (i - 1, i + 1)
            };
            (ly[b] - ly[a]) / (lx[b] - lx[a])
        })
        .collect()
}

/// The widest linear stretch of `log L` against `log eps`.
///
/// The range is the longest contiguous run of grid points whose local slope
/// is at least 0.8 of the largest slope (earliest run on ties). `epsilon` is
/// the start of the run.
pub fn singer_range(curve: &[(f64, f64)]) -> Result<ScaleSelection> {
    let n = curve.len();
    if n < 8 {
        return Err(Error::InvalidInput(format!("linear-range search needs >= 8 grid points, got {n}")));
    }
    let grid: Vec<f64> = curve.iter().map(|c| c.0).collect();
    check_grid(&grid)?;
    if curve.iter().any(|c| !(c.1 > 0.0 && c.1.is_finite())) {
        return Err(Error::InvalidInput("kernel sums must be positive and finite".into()));
    }
    let decades = libm::log10(grid[n - 1] / grid[0]);
    if decades < 4.0 - 1e-9 {
        return Err(Error::InvalidInput(format!("grid spans {decades:.3} decades, need >= 4")));
    }
    let step = libm::log(grid[1] / grid[0]);
    if grid.windows(2).any(|w| libm::fabs(libm::log(w[1] / w[0]) - step) > 1e-6 * step) {
        return Err(Error::InvalidInput("grid must be log-spaced".into()));
    }

    let slopes = log_log_slopes(curve);
    let max = slopes.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(max > 0.0) {
        return Err(Error::SelectionFailed("kernel sum is flat over the whole grid".into()));
    }
    let best = longest_run_above(&slopes, SINGER_SLOPE_FRACTION * max);
    if best.1 - best.0 < 3 {
        return Err(Error::SelectionFailed(format!("longest linear run has {} points, need >= 3", best.1 - best.0)));
    }
    let (e0, e1) = (grid[best.0], grid[best.1 - 1]);
    let mut sel = ScaleSelection::scalar(Method::Singer, e0);
    sel.range = Some((e0, e1));
    sel.curve = Some(curve.to_vec());
    Ok(sel)
}

/// Half-open index range of the longest run with `values[i] >= cut`,
/// earliest on ties; empty when no value reaches `cut`.
pub(crate) fn longest_run_above(values: &[f64], cut: f64) -> (usize, usize) {
    let n = values.len();
    let (mut best, mut start) = ((0usize, 0usize), None);
    for i in 0..=n {
        let inside = i < n && values[i] >= cut;
        match (inside, start) {
            (true, None) => start = Some(i),
            (false, Some(s)) => {
                if i - s > best.1 - best.0 {
                    best = (s, i);
                }
                start = None;
            }
            _ => {}
        }
    }
    best
}

/// `sigma_i` = distance from `x_i` to its `r`-th nearest neighbour.
///
/// Zero scales (duplicates) are replaced by the smallest positive scale and
/// flagged.
pub fn zelnik_scales(x: &Matrix, r: usize) -> Result<ScaleSelection> {
    let dist = pairwise_sq_dist(x)?;
    let nn = knn_from_sq_dist(&dist, r)?;
    let mut sigmas: Vec<f64> = nn.iter().enumerate().map(|(i, nb)| libm::sqrt(dist[(i, nb[r - 1])])).collect();
    let floor = sigmas.iter().copied().filter(|&s| s > 0.0).fold(f64::INFINITY, f64::min);
    if !floor.is_finite() {
        return Err(Error::InvalidInput("all points coincide; local scales are zero".into()));
    }
    let mut sel = ScaleSelection::scalar(Method::Zelnik, 0.5);
    for (i, s) in sigmas.iter_mut().enumerate() {
        if *s == 0.0 {
            *s = floor;
            sel.flags.push(Flag::DuplicatePoint { index: i });
        }
    }
    sel.local_sigmas = Some(sigmas);
    Ok(sel)
}

/// `K_ij = exp(-||x_i - x_j||^2 / (sigma_i sigma_j))`.
pub fn local_scale_kernel(x: &Matrix, sigmas: &[f64]) -> Result<KernelPair> {
    let n = x.nrows();
    if sigmas.len() != n || sigmas.iter().any(|&s| !(s > 0.0 && s.is_finite())) {
        return Err(Error::InvalidInput("need one positive scale per sample".into()));
    }
    let dist = pairwise_sq_dist(x)?;
    let k = Matrix::from_fn(n, n, |i, j| libm::exp(-dist[(i, j)] / (sigmas[i] * sigmas[j])));
    check_connected(&k, f64::NAN)?;
    KernelPair::from_kernel(k, Bandwidth::Local(sigmas.to_vec()), None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Rng;
    use alloc::vec;

    fn random(n: usize, d: usize, seed: u64) -> Matrix {
        let mut rng = Rng::new(seed);
        Matrix::from_fn(n, d, |_, _| rng.normal())
    }

    #[test]
    fn std_two_point_and_constant() {
        let x = Matrix::from_rows(&[[0.0, 5.0], [2.0, 5.0]]).unwrap();
        let s = std_scaling(&x).unwrap();
        assert_eq!(s.scaling, Some(vec![1.0, 1.0]));
        assert_eq!(s.flags, vec![Flag::ZeroVarianceFeature { feature: 1 }]);
        assert_eq!(s.epsilon, 1.0);
        let inv = std_inverse_scaling(&Matrix::from_rows(&[[0.0], [4.0]]).unwrap()).unwrap();
        assert_eq!(inv.scaling, Some(vec![0.5]));
    }

    #[test]
    fn std_matches_formula() {
        let x = random(50, 3, 1);
        let s = std_scaling(&x).unwrap().scaling.unwrap();
        for l in 0..3 {
            let col = x.column(l);
            let m = col.iter().sum::<f64>() / 50.0;
            let v = col.iter().map(|c| (c - m) * (c - m)).sum::<f64>() / 50.0;
            assert!((s[l] - v.sqrt()).abs() < 1e-12);
        }
    }

    #[test]
    fn maxmin_cases() {
        let two = Matrix::from_rows(&[[0.0], [1.0]]).unwrap();
        assert_eq!(maxmin_scale(&two, 2.0).unwrap().epsilon, 2.0);
        let outlier = Matrix::from_rows(&[[0.0], [0.1], [0.3], [10.0]]).unwrap();
        assert!((maxmin_scale(&outlier, 2.0).unwrap().epsilon - 2.0 * 9.7 * 9.7).abs() < 1e-9);
        assert!(maxmin_scale(&two, 1.0).is_err());
    }

    #[test]
    fn kernel_sum_asymptotes() {
        let x = random(5, 2, 2);
        let c = kernel_sum_curve(&x, &[1e-6, 1.0, 1e9]).unwrap();
        assert!((c[0].1 - 5.0).abs() < 1e-9);
        assert!((c[2].1 - 25.0).abs() < 1e-6);
        assert!(c[0].1 < c[1].1 && c[1].1 < c[2].1);
        let one = Matrix::from_rows(&[[1.0, 1.0]]).unwrap();
        assert_eq!(kernel_sum_curve(&one, &[0.1, 10.0]).unwrap()[1].1, 1.0);
        assert!(kernel_sum_curve(&x, &[]).is_err());
    }

    #[test]
    fn linear_curve_gives_full_range() {
        let grid = log_grid(1e-2, 1e3, 12).unwrap();
        let curve: Vec<(f64, f64)> = grid.iter().map(|&e| (e, 3.0 * e.powf(0.7))).collect();
        let s = singer_range(&curve).unwrap();
        assert_eq!(s.range, Some((grid[0], grid[11])));
        assert_eq!(s.epsilon, grid[0]);
    }

    #[test]
    fn singer_rejects_short_or_narrow_grids() {
        let short: Vec<(f64, f64)> = (1..5).map(|k| (k as f64, k as f64)).collect();
        assert!(singer_range(&short).is_err());
        let narrow: Vec<(f64, f64)> = log_grid(1.0, 100.0, 10).unwrap().into_iter().map(|e| (e, e)).collect();
        assert!(singer_range(&narrow).is_err());
    }

    #[test]
    fn zelnik_line() {
        let x = Matrix::from_fn(6, 1, |i, _| i as f64);
        let s = zelnik_scales(&x, 1).unwrap();
        assert_eq!(s.local_sigmas, Some(vec![1.0; 6]));
        let far = zelnik_scales(&x, 5).unwrap().local_sigmas.unwrap();
        assert_eq!(far, vec![5.0, 4.0, 3.0, 3.0, 4.0, 5.0]);
    }

    #[test]
    fn zelnik_duplicates_are_patched() {
        let x = Matrix::from_rows(&[[0.0], [0.0], [2.0], [5.0]]).unwrap();
        let s = zelnik_scales(&x, 1).unwrap();
        assert_eq!(s.local_sigmas, Some(vec![2.0, 2.0, 2.0, 3.0]));
        assert_eq!(s.flags.len(), 2);
        let kp = local_scale_kernel(&x, s.local_sigmas.as_ref().unwrap()).unwrap();
        assert!(kp.k().is_symmetric(0.0));
        assert!((0..4).all(|i| kp.k()[(i, i)] == 1.0));
    }

    #[test]
    fn method_names_round_trip() {
        for m in Method::ALL {
            assert_eq!(Method::from_name(m.name()), Some(m));
        }
    }
}
