//! Feature scaling and bandwidth chosen so that the kernel-implied dimension
//! `d_eps = 2 eps d(log S)/d(eps)` matches an intrinsic-dimension estimate.
//!
//! `S(eps) = sum_ij exp(-r_ij(A) / (2 eps))` with
//! `r_ij(A) = (x_i - x_j)^T A^T A (x_i - x_j)` and `A` diagonal, so
//! `d_eps = sum_ij r_ij e^(-r_ij / 2eps) / (eps sum_ij e^(-r_ij / 2eps))`.
//! Sums run over all ordered pairs including `i = j`.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::diffusion::{check_scaling, dm_spectrum, kernel_from_sq_dist};
use crate::intrinsic_dim::{danco, DancoConfig};
use crate::numerics::{median, pairwise_sq_dist, pearson_corr, population_std, NeumaierSum};
use crate::scale_baselines::{longest_run_above, maxmin_from_sq_dist, DEFAULT_MAXMIN_C, SINGER_SLOPE_FRACTION};
use crate::{log_grid, Error, Flag, Matrix, Result, Rng};

/// Exponents below `-745` underflow to zero in double precision.
const EXP_FLOOR: f64 = 745.0;

/// Grid sizes and ranges for the greedy search.
#[derive(Clone, Debug, PartialEq)]
pub struct ManifoldConfig {
    pub danco: DancoConfig,
    /// Reorder features by correlation with the leading diffusion
    /// coordinates before the greedy pass.
    pub permute: bool,
    /// Use this target dimension instead of estimating it.
    pub d_hat: Option<usize>,
    pub grid_points: usize,
    /// Range of candidate per-feature scales, in units of the feature's
    /// standard deviation.
    pub a_range: (f64, f64),
    /// Range of candidate `eps`, as multiples of the median squared distance
    /// of the current view.
    pub eps_range: (f64, f64),
    pub search: SearchOptions,
}

impl Default for ManifoldConfig {
    fn default() -> Self {
        Self {
            danco: DancoConfig::default(),
            permute: true,
            d_hat: None,
            grid_points: 32,
            a_range: (1e-3, 1e3),
            eps_range: (1e-3, 1e3),
            search: SearchOptions { linear_region: true, tolerance: 0.0 },
        }
    }
}

/// One greedy step: the feature added (original index) and what was chosen.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TraceStep {
    pub feature: usize,
    pub a: f64,
    pub epsilon: f64,
    pub objective: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ManifoldScaling {
    /// Per-feature scale in the original feature order.
    pub a: Vec<f64>,
    pub epsilon: f64,
    pub d_hat: usize,
    pub d_eps_final: f64,
    pub objective: f64,
    pub trace: Vec<TraceStep>,
    /// Feature order used by the greedy pass.
    pub permutation: Vec<usize>,
    pub flags: Vec<Flag>,
}

/// Best grid point of the two-parameter search.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PairOptimum {
    pub a: f64,
    pub epsilon: f64,
    pub objective: f64,
    pub d_eps: f64,
}

fn scaled_upper(x: &Matrix, a: &[f64]) -> Vec<f64> {
    let n = x.nrows();
    let mut out = Vec::with_capacity(n * n.saturating_sub(1) / 2);
    for i in 0..n {
        let xi = x.row(i);
        for j in i + 1..n {
            out.push(
                x.row(j)
                    .iter()
                    .zip(xi)
                    .zip(a)
                    .map(|((p, q), s)| {
                        let t = s * (p - q);
                        t * t
                    })
                    .sum(),
            );
        }
    }
    out
}

fn check_inputs(x: &Matrix, a: &[f64], epsilon: f64) -> Result<()> {
    if x.nrows() == 0 {
        return Err(Error::InvalidInput("empty data matrix".into()));
    }
    if x.as_slice().iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("data contains non-finite entries".into()));
    }
    check_scaling(x, a)?;
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::InvalidInput(format!("eps must be positive, got {epsilon}")));
    }
    Ok(())
}

/// `S(eps)` for the scaled data.
pub fn kernel_sum_scaled(x: &Matrix, a: &[f64], epsilon: f64) -> Result<f64> {
    check_inputs(x, a, epsilon)?;
    let mut s = NeumaierSum::default();
    for r in scaled_upper(x, a) {
        s.add(libm::exp(-r / (2.0 * epsilon)));
    }
    Ok(x.nrows() as f64 + 2.0 * s.total())
}

/// Kernel-implied dimension; `0` with a flag when all points coincide.
pub fn d_eps(x: &Matrix, a: &[f64], epsilon: f64) -> Result<(f64, Option<Flag>)> {
    check_inputs(x, a, epsilon)?;
    let mut r = scaled_upper(x, a);
    if r.iter().all(|&v| v == 0.0) {
        return Ok((0.0, Some(Flag::NoDistinctPairs)));
    }
    r.sort_unstable_by(f64::total_cmp);
    Ok((d_eps_sorted(&r, x.nrows(), epsilon), None))
}

/// `d_eps` from ascending strict-upper-triangle distances of `n` points.
fn d_eps_sorted(r: &[f64], n: usize, epsilon: f64) -> f64 {
    let inv = 1.0 / (2.0 * epsilon);
    let (mut num, mut den) = (NeumaierSum::default(), NeumaierSum::default());
    for &v in r {
        let t = v * inv;
        if t > EXP_FLOOR {
            break;
        }
        let e = libm::exp(-t);
        den.add(e);
        num.add(v * e);
    }
    2.0 * num.total() / (epsilon * (n as f64 + 2.0 * den.total()))
}

/// Distances split into the fixed part of the view and the last feature.
struct PairTerms {
    base: Vec<f64>,
    last: Vec<f64>,
    n: usize,
}

impl PairTerms {
    fn new(view: &Matrix) -> Self {
        let (n, d) = view.shape();
        let m = n * n.saturating_sub(1) / 2;
        let (mut base, mut last) = (Vec::with_capacity(m), Vec::with_capacity(m));
        for i in 0..n {
            let xi = view.row(i);
            for j in i + 1..n {
                let xj = view.row(j);
                base.push((0..d - 1).map(|l| (xi[l] - xj[l]) * (xi[l] - xj[l])).sum::<f64>());
                last.push((xi[d - 1] - xj[d - 1]) * (xi[d - 1] - xj[d - 1]));
            }
        }
        Self { base, last, n }
    }

    fn sorted_for(&self, a: f64, buf: &mut Vec<f64>) {
        buf.clear();
        let a2 = a * a;
        buf.extend(self.base.iter().zip(&self.last).map(|(b, c)| b + a2 * c));
        buf.sort_unstable_by(f64::total_cmp);
    }
}

/// Exhaustive search over the last feature's scale and `eps` minimizing
/// `|d_eps - d_hat|`; ties go to the smaller `eps`, then the smaller scale.
pub fn optimize_pair(view: &Matrix, d_hat: f64, a_grid: &[f64], eps_grid: &[f64]) -> Result<PairOptimum> {
    optimize_pair_with(view, d_hat, a_grid, eps_grid, SearchOptions::default())
}

/// Variations of the pair search.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct SearchOptions {
    /// For each scale, only the `eps` inside the linear range of `log S`
    /// are candidates: the longest run of grid points with
    /// `d_eps >= 0.8 max d_eps` (the linear-range rule applied to `d_eps`,
    /// which is twice the log-log slope). Outside that range `d_eps` falls
    /// towards 0 on both sides, so almost any scale reaches `d_hat`
    /// somewhere.
    pub linear_region: bool,
    /// Candidates within this distance of the best objective count as
    /// optimal; among them the smallest scale wins, then the smaller
    /// objective, then the smaller `eps`. With `0` the plain tie rule
    /// applies.
    pub tolerance: f64,
}

pub fn optimize_pair_with(
    view: &Matrix,
    d_hat: f64,
    a_grid: &[f64],
    eps_grid: &[f64],
    opts: SearchOptions,
) -> Result<PairOptimum> {
    if view.ncols() == 0 || view.nrows() < 2 {
        return Err(Error::InvalidInput("view needs >= 2 samples and >= 1 feature".into()));
    }
    if a_grid.is_empty() || eps_grid.is_empty() {
        return Err(Error::InvalidInput("empty search grid".into()));
    }
    if a_grid.iter().chain(eps_grid).any(|&v| !(v > 0.0 && v.is_finite())) {
        return Err(Error::InvalidInput("search grids must be positive".into()));
    }
    if !(opts.tolerance >= 0.0) {
        return Err(Error::InvalidInput("objective tolerance must be nonnegative".into()));
    }
    if view.as_slice().iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("view contains non-finite entries".into()));
    }
    let terms = PairTerms::new(view);
    let mut buf = Vec::with_capacity(terms.base.len());
    let mut curve = Vec::with_capacity(eps_grid.len());
    let mut cands: Vec<PairOptimum> = Vec::new();
    for &a in a_grid {
        terms.sorted_for(a, &mut buf);
        curve.clear();
        curve.extend(eps_grid.iter().map(|&eps| d_eps_sorted(&buf, terms.n, eps)));
        let range = if opts.linear_region {
            let max = curve.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            if !(max > 0.0) {
                continue;
            }
            longest_run_above(&curve, SINGER_SLOPE_FRACTION * max)
        } else {
            (0, curve.len())
        };
        for k in range.0..range.1 {
            let (eps, d) = (eps_grid[k], curve[k]);
            cands.push(PairOptimum { a, epsilon: eps, objective: libm::fabs(d - d_hat), d_eps: d });
        }
    }
    let min = cands.iter().map(|c| c.objective).fold(f64::INFINITY, f64::min);
    let plain = |p: &PairOptimum, q: &PairOptimum| {
        p.objective.total_cmp(&q.objective).then(p.epsilon.total_cmp(&q.epsilon)).then(p.a.total_cmp(&q.a))
    };
    let best = if opts.tolerance > 0.0 {
        cands.into_iter().filter(|c| c.objective <= min + opts.tolerance).min_by(|p, q| {
            p.a.total_cmp(&q.a).then(p.objective.total_cmp(&q.objective)).then(p.epsilon.total_cmp(&q.epsilon))
        })
    } else {
        cands.into_iter().min_by(plain)
    };
    best.ok_or_else(|| Error::SelectionFailed("kernel sum is flat for every candidate scale".into()))
}

/// Features ordered by `C_i = sum_l |corr(x_i, psi_l)|` against the first
/// `d_hat` diffusion coordinates at the MaxMin bandwidth, most correlated
/// first (stable on ties).
pub fn cbfp_with_dim(x: &Matrix, d_hat: usize) -> Result<(Vec<usize>, Vec<f64>)> {
    let (n, big_d) = x.shape();
    if n < 3 {
        return Err(Error::InvalidInput("feature permutation needs >= 3 samples".into()));
    }
    if big_d == 1 {
        return Ok((vec![0], vec![0.0]));
    }
    let dist = pairwise_sq_dist(x)?;
    let eps = maxmin_from_sq_dist(&dist, DEFAULT_MAXMIN_C)?.epsilon;
    let emb = dm_spectrum(&kernel_from_sq_dist(&dist, eps)?)?.embedding(d_hat.clamp(1, n - 1))?;
    let coords: Vec<Vec<f64>> = (0..emb.dim).map(|m| emb.coords.column(m)).collect();
    let mut scores = Vec::with_capacity(big_d);
    for l in 0..big_d {
        let col = x.column(l);
        let mut c = 0.0;
        for psi in &coords {
            c += libm::fabs(pearson_corr(&col, psi)?);
        }
        scores.push(c);
    }
    let mut order: Vec<usize> = (0..big_d).collect();
    order.sort_by(|&i, &j| scores[j].total_cmp(&scores[i]));
    Ok((order, scores))
}

/// Feature permutation with the target dimension estimated from `x`.
pub fn cbfp(x: &Matrix, config: &DancoConfig, rng: &Rng) -> Result<Vec<usize>> {
    if x.ncols() == 1 {
        return Ok(vec![0]);
    }
    let d_hat = danco(x, config, rng)?.d_hat;
    Ok(cbfp_with_dim(x, d_hat)?.0)
}

fn view_eps_grid(view: &Matrix, config: &ManifoldConfig) -> Result<Vec<f64>> {
    let upper = crate::numerics::upper_sq_dists(view);
    let m = median(&upper);
    if !(m > 0.0) {
        return Err(Error::InvalidInput(
            "median squared distance of the view is zero; cannot place an eps grid".into(),
        ));
    }
    log_grid(config.eps_range.0 * m, config.eps_range.1 * m, config.grid_points)
}

/// Greedy per-feature scaling followed by a joint `eps`.
///
/// The first `d_hat` features (after the optional reordering) are
/// standardized. Each further feature is appended, its scale and `eps` are
/// chosen by [`optimize_pair`], and the whole view is divided by
/// `sqrt(eps)`. The returned `(a, epsilon)` reproduce the final search
/// state: `a` holds the accumulated scales before the last division and
/// `epsilon` is the last chosen bandwidth. When no feature is added the
/// bandwidth comes from a search over `eps` alone.
pub fn manifold_vector_scaling(x: &Matrix, rng: &Rng, config: &ManifoldConfig) -> Result<ManifoldScaling> {
    let (n, big_d) = x.shape();
    if n < 3 || big_d == 0 {
        return Err(Error::InvalidInput("need >= 3 samples and >= 1 feature".into()));
    }
    if config.grid_points == 0 {
        return Err(Error::InvalidInput("grid_points must be >= 1".into()));
    }
    let mut flags = Vec::new();
    let d_hat = match config.d_hat {
        Some(d) => d,
        None => danco(x, &config.danco, rng)?.d_hat,
    };
    if d_hat == 0 || d_hat > big_d {
        return Err(Error::InvalidInput(format!("target dimension {d_hat} outside 1..={big_d}")));
    }
    let permutation = if config.permute && big_d > 1 { cbfp_with_dim(x, d_hat)?.0 } else { (0..big_d).collect() };
    let xp = x.select_columns(&permutation);

    // accumulated scales in permuted order
    let mut scales = vec![0.0; big_d];
    for l in 0..d_hat {
        let s = population_std(&xp.column(l));
        scales[l] = if s > 0.0 {
            1.0 / s
        } else {
            flags.push(Flag::ZeroVarianceFeature { feature: permutation[l] });
            1.0
        };
    }
    let a_grid = log_grid(config.a_range.0, config.a_range.1, config.grid_points)?;
    let mut trace = Vec::with_capacity(big_d - d_hat);
    let mut view = xp.select_columns(&(0..d_hat).collect::<Vec<_>>()).scale_columns(&scales[..d_hat]);
    let mut final_eps = None;
    let mut objective = f64::NAN;

    for l in d_hat..big_d {
        // candidate scales are relative to the feature's own spread
        let sd = population_std(&xp.column(l));
        let unit = if sd > 0.0 {
            1.0 / sd
        } else {
            flags.push(Flag::ZeroVarianceFeature { feature: permutation[l] });
            1.0
        };
        let col: Vec<f64> = xp.column(l).iter().map(|v| v * unit).collect();
        let candidate = Matrix::from_fn(n, l + 1, |i, j| if j < l { view[(i, j)] } else { col[i] });
        let eps_grid = view_eps_grid(&candidate, config)?;
        let best = optimize_pair_with(&candidate, d_hat as f64, &a_grid, &eps_grid, config.search)?;
        scales[l] = best.a * unit;
        trace.push(TraceStep {
            feature: permutation[l],
            a: best.a * unit,
            epsilon: best.epsilon,
            objective: best.objective,
        });
        objective = best.objective;
        if l + 1 < big_d {
            let root = libm::sqrt(best.epsilon);
            scales[..=l].iter_mut().for_each(|s| *s /= root);
            view = Matrix::from_fn(n, l + 1, |i, j| if j < l { view[(i, j)] / root } else { col[i] * best.a / root });
        }
        final_eps = Some(best.epsilon);
    }

    let epsilon = match final_eps {
        Some(e) => e,
        None => {
            let eps_grid = view_eps_grid(&view, config)?;
            let mut r = crate::numerics::upper_sq_dists(&view);
            r.sort_unstable_by(f64::total_cmp);
            let curve: Vec<f64> = eps_grid.iter().map(|&e| d_eps_sorted(&r, n, e)).collect();
            let range = if config.search.linear_region {
                let max = curve.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                longest_run_above(&curve, SINGER_SLOPE_FRACTION * max)
            } else {
                (0, curve.len())
            };
            if range.0 == range.1 {
                return Err(Error::SelectionFailed("kernel sum is flat over the eps grid".into()));
            }
            let mut best = (f64::INFINITY, eps_grid[range.0]);
            for k in range.0..range.1 {
                let obj = libm::fabs(curve[k] - d_hat as f64);
                if obj < best.0 {
                    best = (obj, eps_grid[k]);
                }
            }
            objective = best.0;
            best.1
        }
    };

    let mut a = vec![0.0; big_d];
    for (k, &f) in permutation.iter().enumerate() {
        a[f] = scales[k];
    }
    let (d_final, flag) = d_eps(x, &a, epsilon)?;
    flags.extend(flag);
    Ok(ManifoldScaling { a, epsilon, d_hat, d_eps_final: d_final, objective, trace, permutation, flags })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn random(n: usize, d: usize, seed: u64) -> Matrix {
        let mut rng = Rng::new(seed);
        Matrix::from_fn(n, d, |_, _| rng.normal())
    }

    #[test]
    fn kernel_sum_double_loop() {
        let x = random(8, 3, 1);
        let a = [0.5, 2.0, 1.3];
        let eps = 0.9;
        let mut s = 0.0;
        for i in 0..8 {
            for j in 0..8 {
                let r: f64 = (0..3).map(|l| (a[l] * (x[(i, l)] - x[(j, l)])).powi(2)).sum();
                s += (-r / (2.0 * eps)).exp();
            }
        }
        assert!((kernel_sum_scaled(&x, &a, eps).unwrap() - s).abs() < 1e-10);
    }

    #[test]
    fn d_eps_is_log_slope() {
        let x = random(30, 4, 2);
        let a = [1.0, 0.3, 2.0, 0.7];
        for &eps in &[0.05, 0.5, 3.0, 40.0] {
            let h = 1e-4 * eps;
            let lp = kernel_sum_scaled(&x, &a, eps + h).unwrap().ln();
            let lm = kernel_sum_scaled(&x, &a, eps - h).unwrap().ln();
            let fd = 2.0 * eps * (lp - lm) / (2.0 * h);
            let (d, _) = d_eps(&x, &a, eps).unwrap();
            assert!((d - fd).abs() <= 1e-5 * d.abs(), "eps={eps}: {d} vs {fd}");
        }
    }

    #[test]
    fn coincident_points_give_zero() {
        let x = Matrix::from_rows(&[[1.0, 2.0], [1.0, 2.0]]).unwrap();
        assert_eq!(d_eps(&x, &[1.0, 1.0], 1.0).unwrap(), (0.0, Some(Flag::NoDistinctPairs)));
    }

    #[test]
    fn single_point_grid() {
        let x = random(10, 2, 3);
        let p = optimize_pair(&x, 2.0, &[0.5], &[1.5]).unwrap();
        assert_eq!((p.a, p.epsilon), (0.5, 1.5));
        let a = [1.0, 0.5];
        let (d, _) = d_eps(&x, &a, 1.5).unwrap();
        assert!((p.objective - (d - 2.0).abs()).abs() < 1e-12);
    }

    #[test]
    fn exact_hit_is_returned() {
        let x = random(12, 2, 4);
        let (target, _) = d_eps(&x, &[1.0, 0.2], 0.8).unwrap();
        let p = optimize_pair(&x, target, &[0.1, 0.2, 5.0], &[0.1, 0.8, 9.0]).unwrap();
        assert_eq!((p.a, p.epsilon), (0.2, 0.8));
        assert!(p.objective < 1e-12);
    }

    #[test]
    fn single_feature_permutation() {
        let x = random(10, 1, 5);
        assert_eq!(cbfp_with_dim(&x, 1).unwrap().0, alloc::vec![0]);
    }
}
