//! Intrinsic dimension from angle and norm concentration.
//!
//! Normalized nearest-neighbour distances and pairwise neighbour angles of the
//! data are summarized by a maximum-likelihood dimension and von Mises
//! parameters, then compared (KL divergence) against the same statistics of
//! uniform samples from unit `d`-balls for every candidate `d`.

use alloc::format;
use alloc::vec::Vec;

use crate::numerics::special::{bessel_ratio, ln_i0};
use crate::numerics::{knn_indices, mean};
use crate::{Error, Flag, Matrix, Result, Rng};

/// Default neighbourhood size.
pub const DEFAULT_ELL: usize = 10;
/// Concentration assigned when the angles are (numerically) a point mass.
pub const TAU_CAP: f64 = 1e6;
/// Replacement for a zero normalized distance.
pub const RHO_FLOOR: f64 = 1e-12;
/// Candidate dimensions above this need an explicit cap.
pub const MAX_UNCAPPED_DIM: usize = 50;

const KL_TOL: f64 = 1e-8;
const GOLDEN_TOL: f64 = 1e-6;

/// Statistics of one dataset: normalized distances, ML dimension and the
/// averaged von Mises fit of neighbour angles.
#[derive(Clone, Debug, PartialEq)]
pub struct DancoStats {
    pub d_ml: f64,
    pub nu_mean: f64,
    pub tau_mean: f64,
    pub rho: Vec<f64>,
    pub ell: usize,
    pub flags: Vec<Flag>,
}

/// Calibration statistics for one candidate dimension.
#[derive(Clone, Debug, PartialEq)]
pub struct Calibration {
    pub d: usize,
    pub d_ml: f64,
    pub nu_mean: f64,
    pub tau_mean: f64,
    pub kl_g: f64,
    pub kl_q: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DimEstimate {
    pub d_hat: usize,
    /// `(d, KL_g + KL_q)` for each candidate `d`.
    pub kl_curve: Vec<(usize, f64)>,
    pub calibration: Vec<Calibration>,
    pub stats: DancoStats,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DancoConfig {
    pub ell: usize,
    /// Largest candidate dimension; defaults to the ambient dimension.
    pub max_dim: Option<usize>,
}

impl Default for DancoConfig {
    fn default() -> Self {
        Self { ell: DEFAULT_ELL, max_dim: None }
    }
}

fn norm(v: &[f64]) -> f64 {
    libm::sqrt(v.iter().map(|a| a * a).sum())
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    libm::sqrt(a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum())
}

/// `rho_i = ||x_i - nearest|| / ||x_i - farthest||` over the `ell + 1`
/// nearest neighbours, from precomputed neighbour lists.
fn rho_from_neighbors(x: &Matrix, nn: &[Vec<usize>], flags: &mut Vec<Flag>) -> Vec<f64> {
    nn.iter()
        .enumerate()
        .map(|(i, nb)| {
            let near = dist(x.row(i), x.row(nb[0]));
            let far = dist(x.row(i), x.row(*nb.last().unwrap()));
            let r = if far > 0.0 { near / far } else { 0.0 };
            if r <= 0.0 {
                flags.push(Flag::DuplicatePoint { index: i });
                RHO_FLOOR
            } else if r >= 1.0 {
                flags.push(Flag::TiedNeighbourDistance { index: i });
                1.0 - RHO_FLOOR
            } else {
                r
            }
        })
        .collect()
}

fn check_ell(n: usize, ell: usize) -> Result<()> {
    if ell == 0 || ell + 1 > n.saturating_sub(1) {
        return Err(Error::InvalidInput(format!("neighbourhood size ell={ell} needs ell + 1 <= N - 1 (N={n})")));
    }
    Ok(())
}

/// Normalized closest distances; zero values are floored at `1e-12` and
/// values of 1 pulled to `1 - 1e-12`, each with a flag.
pub fn normalized_closest_distance(x: &Matrix, ell: usize) -> Result<(Vec<f64>, Vec<Flag>)> {
    check_ell(x.nrows(), ell)?;
    let nn = knn_indices(x, ell + 1)?;
    let mut flags = Vec::new();
    let rho = rho_from_neighbors(x, &nn, &mut flags);
    Ok((rho, flags))
}

/// `ln g(rho; ell, d) = ln(ell d) + (d - 1) ln rho + (ell - 1) ln(1 - rho^d)`.
pub fn ln_g(rho: f64, ell: usize, d: f64) -> f64 {
    libm::log(ell as f64 * d) + (d - 1.0) * libm::log(rho) + (ell as f64 - 1.0) * libm::log1p(-libm::pow(rho, d))
}

/// Log-likelihood of dimension `d` for normalized distances `rho`.
pub fn ml_log_likelihood(rho: &[f64], ell: usize, d: f64) -> f64 {
    let n = rho.len() as f64;
    let s_log: f64 = rho.iter().map(|&r| libm::log(r)).sum();
    let s_tail: f64 = rho.iter().map(|&r| libm::log1p(-libm::pow(r, d))).sum();
    n * libm::log(ell as f64 * d) + (d - 1.0) * s_log + (ell as f64 - 1.0) * s_tail
}

/// Maximum-likelihood dimension on `[1, upper]` by golden-section search.
///
/// Returns the estimate and a flag when it sits on the search boundary.
pub fn ml_dimension(rho: &[f64], ell: usize, upper: f64) -> Result<(f64, Option<Flag>)> {
    if rho.is_empty() {
        return Err(Error::InvalidInput("no normalized distances".into()));
    }
    if rho.iter().any(|&r| !(r > 0.0 && r < 1.0)) {
        return Err(Error::InvalidInput("normalized distances must lie in (0, 1)".into()));
    }
    if !(upper > 1.0) || ell == 0 {
        return Err(Error::InvalidInput(format!("bad search range [1, {upper}] or ell={ell}")));
    }
    let s_log: f64 = rho.iter().map(|&r| libm::log(r)).sum();
    let n = rho.len() as f64;
    let f = |d: f64| {
        let tail: f64 = rho.iter().map(|&r| libm::log1p(-libm::pow(r, d))).sum();
        n * libm::log(ell as f64 * d) + (d - 1.0) * s_log + (ell as f64 - 1.0) * tail
    };
    let d = golden_max(f, 1.0, upper, GOLDEN_TOL);
    let flag =
        (d - 1.0 < 10.0 * GOLDEN_TOL || upper - d < 10.0 * GOLDEN_TOL).then_some(Flag::BoundaryMaximum { value: d });
    Ok((d, flag))
}

fn golden_max(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let inv_phi = (libm::sqrt(5.0) - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while b - a > tol {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    let mid = 0.5 * (a + b);
    // the ends are only reachable by shrinking onto them; report them exactly
    let (fa, fb, fm) = (f(a), f(b), f(mid));
    if fa > fm && fa >= fb {
        a
    } else if fb > fm {
        b
    } else {
        mid
    }
}

/// Angles between all pairs of centred neighbour vectors `x_s - x_i`.
fn angles_from_neighbors(x: &Matrix, i: usize, nb: &[usize], flags: &mut Vec<Flag>) -> Vec<f64> {
    let xi = x.row(i);
    let vecs: Vec<Vec<f64>> = nb.iter().map(|&s| x.row(s).iter().zip(xi).map(|(a, b)| a - b).collect()).collect();
    let norms: Vec<f64> = vecs.iter().map(|v| norm(v)).collect();
    let mut out = Vec::with_capacity(nb.len() * nb.len().saturating_sub(1) / 2);
    let mut skipped = false;
    for j in 0..vecs.len() {
        for m in j + 1..vecs.len() {
            if norms[j] == 0.0 || norms[m] == 0.0 {
                skipped = true;
                continue;
            }
            let dot: f64 = vecs[j].iter().zip(&vecs[m]).map(|(a, b)| a * b).sum();
            out.push(libm::acos((dot / (norms[j] * norms[m])).clamp(-1.0, 1.0)));
        }
    }
    if skipped {
        flags.push(Flag::SkippedAngle { index: i });
    }
    out
}

/// The `C(ell, 2)` angles at `x_i` spanned by its `ell` nearest neighbours.
pub fn neighbor_angles(x: &Matrix, i: usize, ell: usize) -> Result<(Vec<f64>, Vec<Flag>)> {
    let n = x.nrows();
    if ell < 2 || ell > n.saturating_sub(1) {
        return Err(Error::InvalidInput(format!("need 2 <= ell <= N-1, got ell={ell}, N={n}")));
    }
    if i >= n {
        return Err(Error::InvalidInput(format!("index {i} out of range for N={n}")));
    }
    let mut cand: Vec<(f64, usize)> = (0..n).filter(|&j| j != i).map(|j| (dist(x.row(i), x.row(j)), j)).collect();
    cand.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let nb: Vec<usize> = cand[..ell].iter().map(|c| c.1).collect();
    let mut flags = Vec::new();
    let angles = angles_from_neighbors(x, i, &nb, &mut flags);
    Ok((angles, flags))
}

/// Maximum-likelihood von Mises parameters.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct VmFit {
    pub nu: f64,
    pub tau: f64,
    /// The mean resultant length reached 1 and `tau` was capped.
    pub capped: bool,
}

/// Solves `I1(tau) / I0(tau) = r` by Newton's method from the usual
/// three-piece starting approximation.
pub fn vm_concentration(r: f64) -> (f64, bool) {
    if r >= 1.0 - 1e-12 {
        return (TAU_CAP, true);
    }
    if r <= 0.0 {
        return (0.0, false);
    }
    let mut tau = if r < 0.53 {
        2.0 * r + r * r * r + 5.0 * libm::pow(r, 5.0) / 6.0
    } else if r < 0.85 {
        -0.4 + 1.39 * r + 0.43 / (1.0 - r)
    } else {
        1.0 / (r * r * r - 4.0 * r * r + 3.0 * r)
    };
    for _ in 0..100 {
        let a = bessel_ratio(tau);
        let da = if tau < 1e-8 { 0.5 } else { 1.0 - a / tau - a * a };
        if !(da > 0.0) {
            break;
        }
        let mut next = tau - (a - r) / da;
        if next <= 0.0 {
            next = 0.5 * tau;
        }
        let done = libm::fabs(next - tau) <= 1e-14 * next.max(1e-300);
        tau = next;
        if done {
            break;
        }
    }
    if tau > TAU_CAP {
        return (TAU_CAP, true);
    }
    (tau, false)
}

/// Fits a von Mises law to angles.
pub fn vm_fit(theta: &[f64]) -> Result<VmFit> {
    if theta.len() < 2 {
        return Err(Error::InvalidInput(format!("von Mises fit needs >= 2 angles, got {}", theta.len())));
    }
    let s: f64 = theta.iter().map(|&t| libm::sin(t)).sum();
    let c: f64 = theta.iter().map(|&t| libm::cos(t)).sum();
    let nu = libm::atan2(s, c);
    let r = (libm::hypot(s, c) / theta.len() as f64).min(1.0);
    let (tau, capped) = vm_concentration(r);
    Ok(VmFit { nu, tau, capped })
}

/// Uniform samples from the solid unit `d`-ball.
pub fn sample_unit_ball(d: usize, n: usize, rng: &mut Rng) -> Result<Matrix> {
    if d == 0 {
        return Err(Error::InvalidInput("ball dimension must be >= 1".into()));
    }
    let mut data = Vec::with_capacity(n * d);
    let mut dir = alloc::vec![0.0; d];
    for _ in 0..n {
        let len = loop {
            dir.iter_mut().for_each(|v| *v = rng.normal());
            let l = norm(&dir);
            if l > 0.0 {
                break l;
            }
        };
        let radius = libm::pow(rng.uniform(), 1.0 / d as f64);
        data.extend(dir.iter().map(|v| v / len * radius));
    }
    Matrix::from_vec(n, d, data)
}

/// Steps shared by the data and every calibration set: neighbours,
/// normalized distances, ML dimension on `[1, upper]`, averaged angle fit.
pub fn danco_stats(x: &Matrix, ell: usize, upper: f64) -> Result<DancoStats> {
    check_ell(x.nrows(), ell)?;
    if ell < 2 {
        return Err(Error::InvalidInput("angle statistics need ell >= 2".into()));
    }
    let nn = knn_indices(x, ell + 1)?;
    let mut flags = Vec::new();
    let rho = rho_from_neighbors(x, &nn, &mut flags);
    let (d_ml, bound) = ml_dimension(&rho, ell, upper)?;
    flags.extend(bound);

    let (mut sin_sum, mut cos_sum) = (0.0, 0.0);
    let mut taus = Vec::with_capacity(x.nrows());
    for (i, nb) in nn.iter().enumerate() {
        let theta = angles_from_neighbors(x, i, &nb[..ell], &mut flags);
        if theta.len() < 2 {
            continue;
        }
        let fit = vm_fit(&theta)?;
        if fit.capped {
            flags.push(Flag::ConcentrationCapped { index: Some(i) });
        }
        sin_sum += libm::sin(fit.nu);
        cos_sum += libm::cos(fit.nu);
        taus.push(fit.tau);
    }
    if taus.is_empty() {
        return Err(Error::InvalidInput("no point has two usable neighbour angles".into()));
    }
    Ok(DancoStats { d_ml, nu_mean: libm::atan2(sin_sum, cos_sum), tau_mean: mean(&taus), rho, ell, flags })
}

/// `KL(g(.; ell, d1) || g(.; ell, d2))` by adaptive Simpson quadrature.
pub fn kl_g(ell: usize, d1: f64, d2: f64) -> f64 {
    if d1 == d2 {
        return 0.0;
    }
    let f = |r: f64| {
        let l1 = ln_g(r, ell, d1);
        let l2 = ln_g(r, ell, d2);
        let g1 = libm::exp(l1);
        if g1 == 0.0 || !g1.is_finite() {
            0.0
        } else {
            g1 * (l1 - l2)
        }
    };
    let (lo, hi) = (1e-12, 1.0 - 1e-12);
    // start from 32 panels so narrow peaks near 1 are not stepped over
    let panels = 32;
    let w = (hi - lo) / panels as f64;
    (0..panels)
        .map(|k| {
            let a = lo + w * k as f64;
            let b = if k == panels - 1 { hi } else { a + w };
            adaptive_simpson(&f, a, b, KL_TOL / panels as f64)
        })
        .sum()
}

fn adaptive_simpson(f: &impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    let m = 0.5 * (a + b);
    let (fa, fm, fb) = (f(a), f(m), f(b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_step(f, a, b, fa, fm, fb, whole, tol, 50)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step(
    f: &impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || libm::fabs(delta) <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

/// Closed-form `KL(VM(nu1, tau1) || VM(nu2, tau2))`.
pub fn kl_vm(nu1: f64, tau1: f64, nu2: f64, tau2: f64) -> f64 {
    ln_i0(tau2) - ln_i0(tau1) + (tau1 - tau2 * libm::cos(nu1 - nu2)) * bessel_ratio(tau1)
}

/// Estimates the intrinsic dimension of `x`.
///
/// The calibration set for candidate `d` is drawn from `rng.derive(d)`, so
/// the result depends only on the generator's seed.
pub fn danco(x: &Matrix, config: &DancoConfig, rng: &Rng) -> Result<DimEstimate> {
    let (n, big_d) = x.shape();
    if big_d == 0 {
        return Err(Error::InvalidInput("data has no features".into()));
    }
    let top = match config.max_dim {
        Some(0) => return Err(Error::InvalidInput("max_dim must be >= 1".into())),
        Some(m) => m.min(big_d),
        None if big_d > MAX_UNCAPPED_DIM => {
            return Err(Error::InvalidInput(format!("{big_d} candidate dimensions; set max_dim to bound the search")))
        }
        None => big_d,
    };
    let upper = 10.0 * big_d.max(2) as f64;
    let stats = danco_stats(x, config.ell, upper)?;
    let mut calibration = Vec::with_capacity(top);
    let mut kl_curve = Vec::with_capacity(top);
    for d in 1..=top {
        let mut r = rng.derive(d as u64);
        let y = sample_unit_ball(d, n, &mut r)?;
        let cal = danco_stats(&y, config.ell, upper)?;
        let kg = kl_g(config.ell, stats.d_ml, cal.d_ml);
        let kq = kl_vm(stats.nu_mean, stats.tau_mean, cal.nu_mean, cal.tau_mean);
        kl_curve.push((d, kg + kq));
        calibration.push(Calibration {
            d,
            d_ml: cal.d_ml,
            nu_mean: cal.nu_mean,
            tau_mean: cal.tau_mean,
            kl_g: kg,
            kl_q: kq,
        });
    }
    let mut d_hat = 1;
    let mut best = f64::INFINITY;
    for &(d, kl) in &kl_curve {
        if kl < best {
            best = kl;
            d_hat = d;
        }
    }
    Ok(DimEstimate { d_hat, kl_curve, calibration, stats })
}

/// Uniform angles wrapped into `(-pi, pi]`.
#[cfg(test)]
fn wrap(t: f64) -> f64 {
    use core::f64::consts::PI;
    let mut t = libm::fmod(t + PI, 2.0 * PI);
    if t <= 0.0 {
        t += 2.0 * PI;
    }
    t - PI
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use core::f64::consts::PI;

    #[test]
    fn collinear_hand_case() {
        let x = Matrix::from_rows(&[[0.0], [1.0], [3.0], [7.0]]).unwrap();
        let (rho, flags) = normalized_closest_distance(&x, 1).unwrap();
        assert!((rho[0] - 1.0 / 3.0).abs() < 1e-15);
        assert!(flags.is_empty());
        assert!(rho.iter().all(|&r| r > 0.0 && r < 1.0));
    }

    #[test]
    fn duplicates_are_floored() {
        let x = Matrix::from_rows(&[[0.0], [0.0], [1.0], [2.0]]).unwrap();
        let (rho, flags) = normalized_closest_distance(&x, 1).unwrap();
        assert_eq!(rho[0], RHO_FLOOR);
        assert!(flags.contains(&Flag::DuplicatePoint { index: 0 }));
    }

    #[test]
    fn ml_matches_grid_scan() {
        for &ell in &[3usize, 10] {
            let rho = vec![0.1; 25];
            let (d, _) = ml_dimension(&rho, ell, 30.0).unwrap();
            let (mut best, mut arg) = (f64::NEG_INFINITY, 0.0);
            let mut t = 1.0;
            while t <= 30.0 {
                let v = ml_log_likelihood(&rho, ell, t);
                if v > best {
                    best = v;
                    arg = t;
                }
                t += 1e-4;
            }
            assert!((d - arg).abs() <= 2e-4, "ell={ell}: {d} vs {arg}");
        }
        assert!(ml_dimension(&[], 10, 30.0).is_err());
    }

    #[test]
    fn ml_recovers_sampled_dimension() {
        // u = rho^d ~ Beta(1, ell): rho = (1 - (1 - v)^(1/ell))^(1/d)
        let mut rng = Rng::new(8);
        let (ell, d) = (10usize, 3.0);
        let rho: Vec<f64> = (0..2000)
            .map(|_| {
                let v: f64 = rng.uniform();
                (1.0 - (1.0 - v).powf(1.0 / ell as f64)).powf(1.0 / d)
            })
            .collect();
        let (est, flag) = ml_dimension(&rho, ell, 100.0).unwrap();
        assert!((est - 3.0).abs() <= 0.3, "{est}");
        assert!(flag.is_none());
    }

    #[test]
    fn angle_cases() {
        let x = Matrix::from_rows(&[[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]).unwrap();
        let (t, _) = neighbor_angles(&x, 0, 2).unwrap();
        assert!((t[0] - PI / 2.0).abs() < 1e-15);
        let x = Matrix::from_rows(&[[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]]).unwrap();
        assert_eq!(neighbor_angles(&x, 0, 2).unwrap().0, vec![0.0]);
        assert!(neighbor_angles(&x, 0, 1).is_err());
    }

    #[test]
    fn zero_length_neighbour_is_skipped() {
        let x = Matrix::from_rows(&[[0.0, 0.0], [0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]).unwrap();
        let (t, flags) = neighbor_angles(&x, 0, 3).unwrap();
        assert_eq!(t.len(), 1);
        assert_eq!(flags, vec![Flag::SkippedAngle { index: 0 }]);
    }

    #[test]
    fn vm_point_mass_is_capped() {
        let fit = vm_fit(&[0.7; 5]).unwrap();
        assert!((fit.nu - 0.7).abs() < 1e-12);
        assert!(fit.capped && fit.tau == TAU_CAP);
    }

    #[test]
    fn vm_uniform_has_no_concentration() {
        let mut rng = Rng::new(4);
        let t: Vec<f64> = (0..20000).map(|_| rng.uniform_in(-PI, PI)).collect();
        assert!(vm_fit(&t).unwrap().tau < 0.1);
    }

    #[test]
    fn vm_concentration_inverts_ratio() {
        for &tau in &[0.01, 0.3, 1.0, 2.5, 5.0, 20.0, 300.0] {
            let (back, capped) = vm_concentration(bessel_ratio(tau));
            assert!(!capped);
            assert!((back - tau).abs() < 1e-8 * tau.max(1.0), "{tau} -> {back}");
        }
    }

    /// Best-Fisher rejection sampler.
    fn sample_vm(nu: f64, tau: f64, rng: &mut Rng) -> f64 {
        let a = 1.0 + (1.0 + 4.0 * tau * tau).sqrt();
        let b = (a - (2.0 * a).sqrt()) / (2.0 * tau);
        let r = (1.0 + b * b) / (2.0 * b);
        loop {
            let u1 = rng.uniform();
            let z = (PI * u1).cos();
            let f = (1.0 + r * z) / (r + z);
            let c = tau * (r - f);
            let u2 = rng.uniform();
            if c * (2.0 - c) - u2 > 0.0 || (c / u2).ln() + 1.0 - c >= 0.0 {
                let u3 = rng.uniform();
                let sign = if u3 > 0.5 { 1.0 } else { -1.0 };
                return wrap(nu + sign * f.acos());
            }
        }
    }

    #[test]
    fn vm_recovers_parameters() {
        let mut rng = Rng::new(5);
        let t: Vec<f64> = (0..5000).map(|_| sample_vm(1.0, 5.0, &mut rng)).collect();
        let fit = vm_fit(&t).unwrap();
        assert!((fit.nu - 1.0).abs() < 0.05, "{fit:?}");
        assert!((fit.tau - 5.0).abs() < 0.5, "{fit:?}");
    }

    #[test]
    fn ball_samples() {
        let mut rng = Rng::new(6);
        let y = sample_unit_ball(2, 100_000, &mut rng).unwrap();
        let inside = y.rows_iter().filter(|r| norm(r) < 0.5).count() as f64 / 1e5;
        assert!((inside - 0.25).abs() < 0.01);
        assert!(y.rows_iter().all(|r| norm(r) <= 1.0));
        let line = sample_unit_ball(1, 4000, &mut rng).unwrap();
        assert!(mean(line.as_slice()).abs() < 3.0 / (4000f64).sqrt());
    }

    #[test]
    #[allow(clippy::excessive_precision)]
    fn kl_g_against_high_precision_quadrature() {
        // references: 30-digit Gauss-Legendre quadrature, split at
        // 0.001, 0.1, 0.5, 0.9, 0.99
        let cases = [
            (10usize, 2.0, 3.0, 0.494083334005206320058142351218),
            (10, 3.0, 2.0, 0.467748185204049609666000056047),
            (5, 1.2, 7.5, 9.36275982211354268066639994916),
            (10, 9.0, 10.0, 0.0327210208173154669344867317034),
        ];
        for (ell, d1, d2, expect) in cases {
            let k = kl_g(ell, d1, d2);
            assert!((k - expect).abs() < 1e-8, "{k} vs {expect}");
        }
        assert_eq!(kl_g(10, 2.0, 2.0), 0.0);
    }

    #[test]
    fn kl_vm_zero_for_equal_and_positive_otherwise() {
        assert!(kl_vm(0.3, 2.0, 0.3, 2.0).abs() < 1e-15);
        assert!(kl_vm(0.3, 2.0, 1.0, 4.0) > 0.0);
        assert!(kl_vm(0.0, 1e6, 0.0, 1e6).abs() < 1e-9);
    }

    #[test]
    fn danco_line_in_five_dims() {
        let mut rng = Rng::new(21);
        let dir = [0.3, -0.5, 0.1, 0.7, 0.4];
        let x = Matrix::from_fn(500, 5, |_, _| 0.0);
        let t: Vec<f64> = (0..500).map(|_| rng.uniform()).collect();
        let x = Matrix::from_fn(x.nrows(), 5, |i, l| t[i] * dir[l]);
        let est = danco(&x, &DancoConfig::default(), &Rng::new(1)).unwrap();
        assert_eq!(est.d_hat, 1, "{:?}", est.kl_curve);
    }
}
