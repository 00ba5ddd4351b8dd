//! Synthetic benchmarks, Procrustes alignment, embedding error and k-NN
//! classification protocols.
//!
//! File formats live in the companion command-line crate.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::class_scale::LabeledDataset;
use crate::diffusion::{dm_embed, kernel_from_sq_dist};
use crate::numerics::{pairwise_sq_dist, svd_small};
use crate::{Error, Flag, Matrix, Result, Rng};

/// Default sample count for the Swiss roll.
pub const SWISS_ROLL_N: usize = 2000;

#[derive(Clone, Debug, PartialEq)]
pub struct SwissRoll {
    /// `n x 3` points `(6 theta cos theta, h, 6 theta sin theta)`.
    pub y: Matrix,
    pub theta: Vec<f64>,
    pub h: Vec<f64>,
}

/// `theta ~ U[3 pi / 2, 9 pi / 2]`, `h ~ U[0, 100]`, drawn per sample in
/// that order.
pub fn gen_swiss_roll(n: usize, rng: &mut Rng) -> Result<SwissRoll> {
    if n == 0 {
        return Err(Error::InvalidInput("Swiss roll needs n >= 1".into()));
    }
    let (mut theta, mut h) = (Vec::with_capacity(n), Vec::with_capacity(n));
    let mut data = Vec::with_capacity(3 * n);
    for _ in 0..n {
        let t = rng.uniform_in(1.5 * PI, 4.5 * PI);
        let hh = rng.uniform_in(0.0, 100.0);
        data.extend([6.0 * t * libm::cos(t), hh, 6.0 * t * libm::sin(t)]);
        theta.push(t);
        h.push(hh);
    }
    Ok(SwissRoll { y: Matrix::from_vec(n, 3, data)?, theta, h })
}

/// `[N_T y_i, noise_i]` with `N_T` a `d1 x 3` matrix of `N(0, sigma_t^2)`
/// entries and `d2` columns of `N(0, sigma_n^2)` noise. `N_T` is drawn
/// first, then the noise row by row.
pub fn embed_in_noise(y: &Matrix, d1: usize, d2: usize, sigma_t: f64, sigma_n: f64, rng: &mut Rng) -> Result<Matrix> {
    if y.ncols() != 3 {
        return Err(Error::InvalidInput(format!("expected 3 columns, got {}", y.ncols())));
    }
    if d1 < 3 {
        return Err(Error::InvalidInput(format!("projection dimension must be >= 3, got {d1}")));
    }
    if !(sigma_t >= 0.0 && sigma_n >= 0.0) {
        return Err(Error::InvalidInput("noise scales must be nonnegative".into()));
    }
    let nt = Matrix::from_fn(3, d1, |_, _| sigma_t * rng.normal());
    let projected = y.matmul(&nt)?;
    let noise = Matrix::from_fn(y.nrows(), d2, |_, _| sigma_n * rng.normal());
    projected.hstack(&noise)
}

#[derive(Clone, Debug, PartialEq)]
pub struct Mixture {
    pub data: LabeledDataset,
    pub means: Vec<Vec<f64>>,
}

/// Class centres `mu_c ~ N(0, sigma_m^2 I)`, then `n_per_class` points per
/// class from `N(mu_c, sigma_v^2 I)`, classes in order.
pub fn gen_gaussian_mixture(
    sigma_m: f64,
    sigma_v: f64,
    n_per_class: usize,
    dim: usize,
    n_classes: usize,
    rng: &mut Rng,
) -> Result<Mixture> {
    if !(sigma_m > 0.0 && sigma_v > 0.0) {
        return Err(Error::InvalidInput("mixture scales must be positive".into()));
    }
    if n_per_class == 0 || dim == 0 || n_classes == 0 {
        return Err(Error::InvalidInput("mixture sizes must be positive".into()));
    }
    let means: Vec<Vec<f64>> = (0..n_classes).map(|_| (0..dim).map(|_| sigma_m * rng.normal()).collect()).collect();
    let mut data = Vec::with_capacity(n_classes * n_per_class * dim);
    let mut labels = Vec::with_capacity(n_classes * n_per_class);
    for (c, mu) in means.iter().enumerate() {
        for _ in 0..n_per_class {
            data.extend(mu.iter().map(|m| m + sigma_v * rng.normal()));
            labels.push(c);
        }
    }
    let x = Matrix::from_vec(labels.len(), dim, data)?;
    Ok(Mixture { data: LabeledDataset::new(x, labels)?, means })
}

#[derive(Clone, Debug, PartialEq)]
pub struct Spiral {
    pub data: LabeledDataset,
    /// The 1-D parameter of every sample.
    pub r: Vec<f64>,
}

/// Maps `r` onto the spiral `(6 pi r cos 6 pi r, 6 pi r sin 6 pi r, r^3 - r^2)`.
pub fn spiral_point(r: f64) -> [f64; 3] {
    let t = 6.0 * PI * r;
    [t * libm::cos(t), t * libm::sin(t), r * r * r - r * r]
}

/// Class `l` takes `n_p` parameters uniform on `[l L, (l + 1) L - gap]`,
/// `L = 1 / n_c`, mapped onto the spiral plus `N(0, sigma_s^2 I)` noise.
pub fn gen_spiral_classes(n_c: usize, n_p: usize, gap: f64, sigma_s: f64, rng: &mut Rng) -> Result<Spiral> {
    if n_c == 0 || n_p == 0 {
        return Err(Error::InvalidInput("spiral needs n_c >= 1 and n_p >= 1".into()));
    }
    let len = 1.0 / n_c as f64;
    if !(0.0..len).contains(&gap) {
        return Err(Error::InvalidInput(format!("gap must lie in [0, {len}), got {gap}")));
    }
    if !(sigma_s >= 0.0) {
        return Err(Error::InvalidInput("noise scale must be nonnegative".into()));
    }
    let mut data = Vec::with_capacity(3 * n_c * n_p);
    let mut labels = Vec::with_capacity(n_c * n_p);
    let mut rs = Vec::with_capacity(n_c * n_p);
    for l in 0..n_c {
        let lo = l as f64 * len;
        for _ in 0..n_p {
            let r = rng.uniform_in(lo, lo + len - gap);
            let p = spiral_point(r);
            data.extend(p.iter().map(|v| v + sigma_s * rng.normal()));
            labels.push(l);
            rs.push(r);
        }
    }
    let x = Matrix::from_vec(labels.len(), 3, data)?;
    Ok(Spiral { data: LabeledDataset::new(x, labels)?, r: rs })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AlignMode {
    /// Any orthogonal map, reflections included.
    Orthogonal,
    /// Column signs of the source are matched to the target first, then a
    /// proper rotation (determinant +1) is fitted.
    SignsThenRotation,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AlignmentResult {
    /// Orthogonal `d x d`; aligned row `i` is `R source_i + t`.
    pub r: Matrix,
    pub t: Vec<f64>,
    pub err: f64,
    pub flags: Vec<Flag>,
}

impl AlignmentResult {
    pub fn apply(&self, source: &Matrix) -> Matrix {
        let d = self.t.len();
        Matrix::from_fn(source.nrows(), d, |i, a| {
            self.t[a] + (0..d).map(|b| self.r[(a, b)] * source[(i, b)]).sum::<f64>()
        })
    }
}

fn column_means(m: &Matrix) -> Vec<f64> {
    let n = m.nrows() as f64;
    (0..m.ncols()).map(|j| m.column(j).iter().sum::<f64>() / n).collect()
}

/// Orthogonal `R` and translation `t` minimizing
/// `sum_i ||R source_i + t - target_i||^2`.
pub fn procrustes_align(source: &Matrix, target: &Matrix, mode: AlignMode) -> Result<AlignmentResult> {
    let (n, d) = source.shape();
    if target.shape() != (n, d) {
        return Err(Error::InvalidInput(format!("shapes differ: {:?} vs {:?}", source.shape(), target.shape())));
    }
    if n < d || d == 0 {
        return Err(Error::InvalidInput(format!("need n >= d >= 1, got n={n}, d={d}")));
    }
    let (ms, mt) = (column_means(source), column_means(target));
    let sc = Matrix::from_fn(n, d, |i, j| source[(i, j)] - ms[j]);
    let tc = Matrix::from_fn(n, d, |i, j| target[(i, j)] - mt[j]);
    let mut flags = Vec::new();

    let r = if sc.frobenius_norm() == 0.0 {
        flags.push(Flag::DegenerateAlignment);
        Matrix::identity(d)
    } else {
        let signs: Vec<f64> = match mode {
            AlignMode::Orthogonal => vec![1.0; d],
            AlignMode::SignsThenRotation => (0..d)
                .map(|j| {
                    let c: f64 = (0..n).map(|i| sc[(i, j)] * tc[(i, j)]).sum();
                    if c < 0.0 {
                        -1.0
                    } else {
                        1.0
                    }
                })
                .collect(),
        };
        let ss = sc.scale_columns(&signs);
        // M = Tc^T Ss, R = U V^T
        let m = tc.transpose().matmul(&ss)?;
        let svd = svd_small(&m)?;
        let mut u = svd.u;
        if mode == AlignMode::SignsThenRotation && det(&u.matmul(&svd.v.transpose())?) < 0.0 {
            for i in 0..d {
                u[(i, d - 1)] = -u[(i, d - 1)];
            }
        }
        let rot = u.matmul(&svd.v.transpose())?;
        rot.scale_columns(&signs)
    };
    let t: Vec<f64> = (0..d).map(|a| mt[a] - (0..d).map(|b| r[(a, b)] * ms[b]).sum::<f64>()).collect();
    let mut out = AlignmentResult { r, t, err: 0.0, flags };
    let aligned = out.apply(source);
    out.err = aligned.as_slice().iter().zip(target.as_slice()).map(|(a, b)| (a - b) * (a - b)).sum();
    Ok(out)
}

/// Determinant by Gaussian elimination with partial pivoting.
fn det(m: &Matrix) -> f64 {
    let n = m.nrows();
    let mut a = m.clone();
    let mut det = 1.0;
    for c in 0..n {
        let p = (c..n).max_by(|&i, &j| libm::fabs(a[(i, c)]).total_cmp(&libm::fabs(a[(j, c)]))).unwrap();
        if a[(p, c)] == 0.0 {
            return 0.0;
        }
        if p != c {
            for k in 0..n {
                let tmp = a[(c, k)];
                a[(c, k)] = a[(p, k)];
                a[(p, k)] = tmp;
            }
            det = -det;
        }
        det *= a[(c, c)];
        for i in c + 1..n {
            let f = a[(i, c)] / a[(c, c)];
            for k in c..n {
                a[(i, k)] -= f * a[(c, k)];
            }
        }
    }
    det
}

/// `(1/N) sum_i ||a_i - b_i||^2`.
pub fn embedding_mse(aligned: &Matrix, reference: &Matrix) -> Result<f64> {
    if aligned.shape() != reference.shape() || aligned.nrows() == 0 {
        return Err(Error::InvalidInput("embedding shapes differ or are empty".into()));
    }
    let s: f64 = aligned.as_slice().iter().zip(reference.as_slice()).map(|(a, b)| (a - b) * (a - b)).sum();
    Ok(s / aligned.nrows() as f64)
}

/// Aligns `source` onto `reference` and returns the mean squared error.
pub fn aligned_mse(source: &Matrix, reference: &Matrix, mode: AlignMode) -> Result<f64> {
    let al = procrustes_align(source, reference, mode)?;
    embedding_mse(&al.apply(source), reference)
}

/// Majority vote over the `k` nearest of `candidates` (pairs of squared
/// distance and training index). Ties: smaller summed distance, then
/// smaller class id.
fn vote(candidates: &mut [(f64, usize)], labels: &[usize], n_classes: usize, k: usize) -> usize {
    let cmp = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
    let k = k.min(candidates.len());
    if k < candidates.len() {
        candidates.select_nth_unstable_by(k - 1, cmp);
    }
    let mut counts = vec![0usize; n_classes];
    let mut sums = vec![0.0; n_classes];
    for &(d, j) in &candidates[..k] {
        counts[labels[j]] += 1;
        sums[labels[j]] += libm::sqrt(d);
    }
    let mut best = 0;
    for c in 1..n_classes {
        if counts[c] > counts[best] || (counts[c] == counts[best] && sums[c] < sums[best]) {
            best = c;
        }
    }
    best
}

/// k-NN predictions for `test` points from labelled `train` points.
pub fn knn_classify(train: &Matrix, labels: &[usize], test: &Matrix, k: usize) -> Result<Vec<usize>> {
    if labels.len() != train.nrows() || train.nrows() == 0 {
        return Err(Error::InvalidInput("training labels do not match training points".into()));
    }
    if train.ncols() != test.ncols() {
        return Err(Error::InvalidInput("train and test dimensions differ".into()));
    }
    if k == 0 {
        return Err(Error::InvalidInput("k must be >= 1".into()));
    }
    let nc = labels.iter().max().unwrap() + 1;
    let mut buf = Vec::with_capacity(train.nrows());
    Ok(test
        .rows_iter()
        .map(|q| {
            buf.clear();
            buf.extend(
                train
                    .rows_iter()
                    .enumerate()
                    .map(|(j, p)| (p.iter().zip(q).map(|(a, b)| (a - b) * (a - b)).sum::<f64>(), j)),
            );
            vote(&mut buf, labels, nc, k)
        })
        .collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Protocol {
    LeaveOneOut,
    KFold(usize),
}

#[derive(Clone, Debug, PartialEq)]
pub struct CvReport {
    pub protocol: Protocol,
    pub k_neighbors: usize,
    /// Mean of `fold_accuracies`.
    pub accuracy: f64,
    pub fold_accuracies: Vec<f64>,
    pub seed: u64,
    pub flags: Vec<Flag>,
}

/// Cross-validated k-NN accuracy on fixed points (an embedding computed on
/// all samples, or the raw data).
///
/// k-fold splits shuffle the sample order with `rng` and put shuffled
/// positions `f, f + k, f + 2k, ..` in fold `f`. A fold whose training part
/// lacks a class is skipped and flagged.
pub fn cross_validate(
    points: &Matrix,
    labels: &[usize],
    protocol: Protocol,
    k_neighbors: usize,
    rng: &mut Rng,
) -> Result<CvReport> {
    let n = points.nrows();
    if labels.len() != n || n < 2 {
        return Err(Error::InvalidInput("need >= 2 labelled points".into()));
    }
    if k_neighbors == 0 {
        return Err(Error::InvalidInput("k must be >= 1".into()));
    }
    let nc = labels.iter().max().unwrap() + 1;
    let folds: Vec<Vec<usize>> = match protocol {
        Protocol::LeaveOneOut => (0..n).map(|i| vec![i]).collect(),
        Protocol::KFold(k) => {
            if k < 2 || k > n {
                return Err(Error::InvalidInput(format!("fold count {k} must lie in 2..={n}")));
            }
            let mut order: Vec<usize> = (0..n).collect();
            rng.shuffle(&mut order);
            (0..k).map(|f| order.iter().skip(f).step_by(k).copied().collect()).collect()
        }
    };
    let dist = pairwise_sq_dist(points)?;
    let mut held = vec![false; n];
    let mut flags = Vec::new();
    let mut fold_accuracies = Vec::with_capacity(folds.len());
    let mut buf = Vec::with_capacity(n);
    for (f, fold) in folds.iter().enumerate() {
        fold.iter().for_each(|&i| held[i] = true);
        let mut present = vec![false; nc];
        (0..n).filter(|&j| !held[j]).for_each(|j| present[labels[j]] = true);
        if present.iter().any(|p| !p) {
            flags.push(Flag::FoldExcluded { fold: f });
        } else {
            let mut correct = 0usize;
            for &i in fold {
                buf.clear();
                buf.extend((0..n).filter(|&j| !held[j]).map(|j| (dist[(i, j)], j)));
                if vote(&mut buf, labels, nc, k_neighbors) == labels[i] {
                    correct += 1;
                }
            }
            fold_accuracies.push(correct as f64 / fold.len() as f64);
        }
        fold.iter().for_each(|&i| held[i] = false);
    }
    if fold_accuracies.is_empty() {
        return Err(Error::InvalidInput("every fold was excluded".into()));
    }
    let accuracy = fold_accuracies.iter().sum::<f64>() / fold_accuracies.len() as f64;
    Ok(CvReport { protocol, k_neighbors, accuracy, fold_accuracies, seed: rng.seed(), flags })
}

/// Embeds the whole dataset at `eps` with `d` coordinates, then
/// cross-validates k-NN in the embedding.
pub fn cross_validate_embedding(
    ds: &LabeledDataset,
    epsilon: f64,
    d: usize,
    protocol: Protocol,
    k_neighbors: usize,
    rng: &mut Rng,
) -> Result<CvReport> {
    let kp = kernel_from_sq_dist(&pairwise_sq_dist(ds.x())?, epsilon)?;
    let emb = dm_embed(&kp, d)?;
    cross_validate(&emb.coords, ds.labels(), protocol, k_neighbors, rng)
}
