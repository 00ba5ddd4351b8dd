//! Bandwidth selection for classification: embedding scatter ratio,
//! generalized eigengap and within-class transition mass, evaluated over an
//! `eps` grid.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::diffusion::{dm_spectrum, kernel_from_sq_dist, Embedding, KernelPair};
use crate::numerics::{median, pairwise_sq_dist, upper_sq_dists};
use crate::{log_grid, Error, Flag, Matrix, Result};

/// Upper end of the default sweep grid, in multiples of the median squared
/// distance. Beyond it the kernel tends to all-ones and the eigengap
/// saturates at 1.
pub const GRID_UPPER_FACTOR: f64 = 1e2;
/// Lower end of the default sweep grid, in multiples of the median squared
/// distance.
pub const GRID_LOWER_FACTOR: f64 = 1e-3;

/// Samples with integer class ids `0..n_classes`, every class nonempty.
#[derive(Clone, Debug, PartialEq)]
pub struct LabeledDataset {
    x: Matrix,
    labels: Vec<usize>,
    n_classes: usize,
}

impl LabeledDataset {
    pub fn new(x: Matrix, labels: Vec<usize>) -> Result<Self> {
        if labels.len() != x.nrows() {
            return Err(Error::InvalidInput(format!("{} labels for {} samples", labels.len(), x.nrows())));
        }
        if labels.is_empty() {
            return Err(Error::InvalidInput("empty dataset".into()));
        }
        let n_classes = labels.iter().max().unwrap() + 1;
        let mut seen = vec![false; n_classes];
        labels.iter().for_each(|&c| seen[c] = true);
        if let Some(c) = seen.iter().position(|s| !s) {
            return Err(Error::InvalidInput(format!("class {c} has no samples")));
        }
        Ok(Self { x, labels, n_classes })
    }

    /// Maps arbitrary integer labels to `0..n_classes` in ascending order;
    /// returns the dataset and the original label of each class id.
    pub fn from_raw_labels(x: Matrix, raw: &[i64]) -> Result<(Self, Vec<i64>)> {
        let mut classes: Vec<i64> = raw.to_vec();
        classes.sort_unstable();
        classes.dedup();
        let labels = raw.iter().map(|r| classes.binary_search(r).unwrap()).collect();
        Ok((Self::new(x, labels)?, classes))
    }

    pub fn x(&self) -> &Matrix {
        &self.x
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn class_sizes(&self) -> Vec<usize> {
        let mut s = vec![0; self.n_classes];
        self.labels.iter().for_each(|&c| s[c] += 1);
        s
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Criterion {
    RhoPsi,
    Ge,
    RhoP,
}

impl Criterion {
    pub fn name(self) -> &'static str {
        match self {
            Criterion::RhoPsi => "rho_psi",
            Criterion::Ge => "ge",
            Criterion::RhoP => "rho_p",
        }
    }
}

fn check_labels(points: &Matrix, labels: &[usize]) -> Result<usize> {
    if labels.len() != points.nrows() || labels.is_empty() {
        return Err(Error::InvalidInput(format!("{} labels for {} points", labels.len(), points.nrows())));
    }
    Ok(labels.iter().max().unwrap() + 1)
}

fn sq(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Global scatter over summed within-class scatter, each the mean squared
/// distance to the relevant centroid. `+inf` with a flag when the
/// within-class scatter vanishes.
pub fn scatter_ratio(points: &Matrix, labels: &[usize]) -> Result<(f64, Option<Flag>)> {
    let nc = check_labels(points, labels)?;
    let (n, d) = points.shape();
    let mut centroids = vec![vec![0.0; d]; nc];
    let mut counts = vec![0usize; nc];
    let mut global = vec![0.0; d];
    for (i, &c) in labels.iter().enumerate() {
        counts[c] += 1;
        for (l, v) in points.row(i).iter().enumerate() {
            centroids[c][l] += v;
            global[l] += v;
        }
    }
    for (c, cnt) in centroids.iter_mut().zip(&counts) {
        if *cnt > 0 {
            c.iter_mut().for_each(|v| *v /= *cnt as f64);
        }
    }
    global.iter_mut().for_each(|v| *v /= n as f64);
    let mut within = vec![0.0; nc];
    let mut total = 0.0;
    for (i, &c) in labels.iter().enumerate() {
        within[c] += sq(points.row(i), &centroids[c]);
        total += sq(points.row(i), &global);
    }
    let d_a = total / n as f64;
    let sum_within: f64 = within.iter().zip(&counts).filter(|(_, &c)| c > 0).map(|(w, &c)| w / c as f64).sum();
    if sum_within == 0.0 {
        return Ok((f64::INFINITY, Some(Flag::ZeroScatter)));
    }
    Ok((d_a / sum_within, None))
}

/// Minimum squared distance between points of different classes.
pub fn d_gap(points: &Matrix, labels: &[usize]) -> Result<f64> {
    let nc = check_labels(points, labels)?;
    if nc < 2 {
        return Err(Error::InvalidInput("gap needs at least two classes".into()));
    }
    let n = points.nrows();
    let mut best = f64::INFINITY;
    for i in 0..n {
        for j in i + 1..n {
            if labels[i] != labels[j] {
                best = best.min(sq(points.row(i), points.row(j)));
            }
        }
    }
    Ok(best)
}

/// Maximum squared distance between points of the same class.
pub fn d_class(points: &Matrix, labels: &[usize]) -> Result<f64> {
    check_labels(points, labels)?;
    let n = points.nrows();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            if labels[i] == labels[j] {
                worst = worst.max(sq(points.row(i), points.row(j)));
            }
        }
    }
    Ok(worst)
}

/// `1 - lambda_{N_C + 1}`, with the trivial eigenvalue counted as the first.
pub fn eigengap_from_values(values: &[f64], n_classes: usize) -> Result<f64> {
    values.get(n_classes).map(|l| 1.0 - l).ok_or_else(|| {
        Error::InvalidInput(format!("eigengap for {n_classes} classes needs more than {n_classes} eigenvalues"))
    })
}

/// Within-class share of the off-diagonal transition mass, averaged over
/// rows. Rows without off-diagonal mass are skipped and flagged.
pub fn rho_p_from_kernel(kp: &KernelPair, labels: &[usize]) -> Result<(f64, Vec<Flag>)> {
    let k = kp.k();
    if labels.len() != k.nrows() {
        return Err(Error::InvalidInput("label count does not match kernel size".into()));
    }
    let mut flags = Vec::new();
    let (mut acc, mut rows) = (0.0, 0usize);
    for (i, row) in k.rows_iter().enumerate() {
        let (mut same, mut off) = (0.0, 0.0);
        for (j, &v) in row.iter().enumerate() {
            if j == i {
                continue;
            }
            off += v;
            if labels[j] == labels[i] {
                same += v;
            }
        }
        if off > 0.0 {
            acc += same / off;
            rows += 1;
        } else {
            flags.push(Flag::IsolatedRow { row: i });
        }
    }
    if rows == 0 {
        return Err(Error::InvalidInput("every row is isolated".into()));
    }
    Ok((acc / rows as f64, flags))
}

/// All three criteria and the embedding at one `eps`.
#[derive(Clone, Debug)]
pub struct Evaluation {
    pub epsilon: f64,
    pub rho_psi: f64,
    pub ge: f64,
    pub rho_p: f64,
    pub embedding: Embedding,
    pub flags: Vec<Flag>,
}

impl Evaluation {
    pub fn score(&self, c: Criterion) -> f64 {
        match c {
            Criterion::RhoPsi => self.rho_psi,
            Criterion::Ge => self.ge,
            Criterion::RhoP => self.rho_p,
        }
    }
}

/// Builds the kernel from precomputed squared distances and evaluates every
/// criterion with a `d`-dimensional embedding.
pub fn evaluate_at(dist: &Matrix, labels: &[usize], epsilon: f64, d: usize) -> Result<Evaluation> {
    let n = dist.nrows();
    if labels.len() != n {
        return Err(Error::InvalidInput("label count does not match sample count".into()));
    }
    let nc = labels.iter().max().map_or(0, |m| m + 1);
    let kp = kernel_from_sq_dist(dist, epsilon)?;
    let spectrum = dm_spectrum(&kp)?;
    let embedding = spectrum.embedding(d)?;
    let (rho_psi, f1) = scatter_ratio(&embedding.coords, labels)?;
    let ge = eigengap_from_values(&spectrum.values, nc)?;
    let (rho_p, mut flags) = rho_p_from_kernel(&kp, labels)?;
    flags.extend(f1);
    Ok(Evaluation { epsilon, rho_psi, ge, rho_p, embedding, flags })
}

/// Scatter ratio of the `d`-dimensional embedding at `eps`.
pub fn rho_psi(ds: &LabeledDataset, epsilon: f64, d: usize) -> Result<(f64, Option<Flag>)> {
    let kp = kernel_from_sq_dist(&pairwise_sq_dist(ds.x())?, epsilon)?;
    let emb = dm_spectrum(&kp)?.embedding(d)?;
    scatter_ratio(&emb.coords, ds.labels())
}

/// Generalized eigengap at `eps`.
pub fn generalized_eigengap(ds: &LabeledDataset, epsilon: f64) -> Result<f64> {
    let kp = kernel_from_sq_dist(&pairwise_sq_dist(ds.x())?, epsilon)?;
    eigengap_from_values(&dm_spectrum(&kp)?.values, ds.n_classes())
}

/// Within-class transition mass at `eps`.
pub fn rho_p(ds: &LabeledDataset, epsilon: f64) -> Result<(f64, Vec<Flag>)> {
    let kp = kernel_from_sq_dist(&pairwise_sq_dist(ds.x())?, epsilon)?;
    rho_p_from_kernel(&kp, ds.labels())
}

/// Index of the first maximum among finite scores; `+inf` scores win only
/// when no finite score exists. `None` when nothing was scored.
pub fn argmax_first(scores: &[Option<f64>]) -> Option<usize> {
    let pick = |accept: &dyn Fn(f64) -> bool| {
        let mut best: Option<(usize, f64)> = None;
        for (i, s) in scores.iter().enumerate() {
            if let Some(v) = *s {
                if accept(v) && best.is_none_or(|(_, b)| v > b) {
                    best = Some((i, v));
                }
            }
        }
        best.map(|b| b.0)
    };
    pick(&|v: f64| v.is_finite()).or_else(|| pick(&|v: f64| v == f64::INFINITY))
}

#[derive(Clone, Debug)]
pub struct CriterionCurve {
    pub criterion: Criterion,
    pub grid: Vec<f64>,
    /// `None` where evaluation failed.
    pub scores: Vec<Option<f64>>,
    pub argmax: Option<usize>,
    /// Leading eigenvalues (up to `N_C + 2`) per grid point.
    pub eigenvalues: Vec<Vec<f64>>,
    pub flags: Vec<Vec<Flag>>,
    pub failures: Vec<(usize, Error)>,
}

impl CriterionCurve {
    pub fn argmax_eps(&self) -> Option<f64> {
        self.argmax.map(|i| self.grid[i])
    }
}

/// Default sweep grid: log-spaced over `[1e-3 m, 1e2 m]`, `m` the median
/// pairwise squared distance.
pub fn default_grid(x: &Matrix, count: usize) -> Result<Vec<f64>> {
    let m = median(&upper_sq_dists(x));
    if !(m > 0.0) {
        return Err(Error::InvalidInput("median pairwise distance is zero".into()));
    }
    log_grid(GRID_LOWER_FACTOR * m, GRID_UPPER_FACTOR * m, count)
}

/// Evaluates all three criteria over `grid` with a `d`-dimensional
/// embedding (`None` means `N_C`).
pub fn sweep_all(ds: &LabeledDataset, grid: &[f64], d: Option<usize>) -> Result<Vec<Result<Evaluation>>> {
    if grid.is_empty() {
        return Err(Error::InvalidInput("empty eps grid".into()));
    }
    let dist = pairwise_sq_dist(ds.x())?;
    let d = d.unwrap_or(ds.n_classes());
    Ok(grid.iter().map(|&e| evaluate_at(&dist, ds.labels(), e, d)).collect())
}

/// Packs per-point evaluations into a curve for one criterion.
pub fn curve_from_evaluations(criterion: Criterion, grid: &[f64], evals: &[Result<Evaluation>]) -> CriterionCurve {
    let mut scores = Vec::with_capacity(grid.len());
    let mut eigenvalues = Vec::with_capacity(grid.len());
    let mut flags = Vec::with_capacity(grid.len());
    let mut failures = Vec::new();
    for (i, ev) in evals.iter().enumerate() {
        match ev {
            Ok(e) => {
                scores.push(Some(e.score(criterion)));
                let keep = e.embedding.eigenvalues.len().min(e.embedding.dim + 3);
                eigenvalues.push(e.embedding.eigenvalues[..keep].to_vec());
                flags.push(e.flags.clone());
            }
            Err(err) => {
                scores.push(None);
                eigenvalues.push(Vec::new());
                flags.push(Vec::new());
                failures.push((i, err.clone()));
            }
        }
    }
    let argmax = argmax_first(&scores);
    CriterionCurve { criterion, grid: grid.to_vec(), scores, argmax, eigenvalues, flags, failures }
}

/// One criterion over `grid`; failed grid points are recorded and excluded
/// from the argmax.
pub fn criterion_sweep(
    ds: &LabeledDataset,
    grid: &[f64],
    criterion: Criterion,
    d: Option<usize>,
) -> Result<CriterionCurve> {
    let evals = sweep_all(ds, grid, d)?;
    Ok(curve_from_evaluations(criterion, grid, &evals))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diffusion::Bandwidth;
    use crate::Rng;

    #[test]
    fn gap_and_class_small_cases() {
        let p = Matrix::from_rows(&[[0.0], [3.0]]).unwrap();
        assert_eq!(d_gap(&p, &[0, 1]).unwrap(), 9.0);
        assert_eq!(d_class(&p, &[0, 1]).unwrap(), 0.0);
        assert!(d_gap(&p, &[0, 0]).is_err());
    }

    #[test]
    fn zero_scatter_is_infinite() {
        let p = Matrix::from_rows(&[[0.0, 0.0], [0.0, 0.0], [1.0, 1.0], [1.0, 1.0]]).unwrap();
        assert_eq!(scatter_ratio(&p, &[0, 0, 1, 1]).unwrap(), (f64::INFINITY, Some(Flag::ZeroScatter)));
    }

    #[test]
    fn argmax_rules() {
        assert_eq!(argmax_first(&[Some(1.0), Some(3.0), Some(3.0)]), Some(1));
        assert_eq!(argmax_first(&[Some(f64::INFINITY), Some(0.5), None]), Some(1));
        assert_eq!(argmax_first(&[Some(f64::INFINITY), None]), Some(0));
        assert_eq!(argmax_first(&[None, None]), None);
        assert_eq!(argmax_first(&[Some(2.0)]), Some(0));
    }

    #[test]
    fn block_kernel_rho_p_is_one() {
        let k = Matrix::from_rows(&[
            [1.0, 0.5, 0.0, 0.0],
            [0.5, 1.0, 0.0, 0.0],
            [0.0, 0.0, 1.0, 0.2],
            [0.0, 0.0, 0.2, 1.0],
        ])
        .unwrap();
        let kp = KernelPair::from_kernel(k, Bandwidth::Global(1.0), None).unwrap();
        assert_eq!(rho_p_from_kernel(&kp, &[0, 0, 1, 1]).unwrap().0, 1.0);
        let sp = dm_spectrum(&kp).unwrap();
        assert!((sp.values[1] - 1.0).abs() < 1e-12);
        assert!(eigengap_from_values(&sp.values, 2).unwrap() > 0.0);
    }

    #[test]
    fn single_class_rho_p_is_one() {
        let mut rng = Rng::new(1);
        let x = Matrix::from_fn(6, 2, |_, _| rng.normal());
        let ds = LabeledDataset::new(x, alloc::vec![0; 6]).unwrap();
        for &e in &[0.1, 1.0, 10.0] {
            assert_eq!(rho_p(&ds, e).unwrap().0, 1.0);
        }
    }

    #[test]
    fn labels_validated_and_remapped() {
        let x = Matrix::zeros(3, 1);
        assert!(LabeledDataset::new(x.clone(), alloc::vec![0, 2, 2]).is_err());
        let (ds, map) = LabeledDataset::from_raw_labels(x, &[7, -1, 7]).unwrap();
        assert_eq!(ds.labels(), &[1, 0, 1]);
        assert_eq!(map, alloc::vec![-1, 7]);
    }
}
