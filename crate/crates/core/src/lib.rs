//! Kernel scale selection for diffusion-maps embeddings.
//!
//! The crate builds Gaussian kernels over a sample-major data matrix
//! (rows are samples), turns them into row-stochastic transition matrices,
//! extracts diffusion coordinates, and chooses the kernel bandwidth `eps`
//! (and optionally a diagonal per-feature scaling) by several criteria:
//!
//! | Module | Selectors |
//! |--------|-----------|
//! | [`scale_baselines`] | std scaling, MaxMin, kernel-sum linear range, local (self-tuning) scales |
//! | [`manifold_scale`] | kernel-implied dimension matched to an intrinsic-dimension estimate |
//! | [`class_scale`] | embedding scatter ratio, generalized eigengap, within-class transition mass |
//!
//! Supporting pieces: [`intrinsic_dim`] (angle and norm concentration
//! estimator), [`datasets`] (synthetic benchmarks, Procrustes alignment,
//! k-NN protocols) and [`numerics`] (dense symmetric eigensolvers,
//! distances, neighbours, seeded RNG).
//!
//! The crate is `no_std` and only needs `alloc`. Every transcendental goes
//! through `libm`, so results are bit-identical across platforms for a given
//! seed.

#![no_std]
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod class_scale;
pub mod datasets;
pub mod diffusion;
mod error;
pub mod intrinsic_dim;
pub mod manifold_scale;
pub mod numerics;
pub mod scale_baselines;

pub use error::{Error, Flag, Result};
pub use numerics::{Matrix, Rng};

/// Log-spaced grid of `count` points from `lo` to `hi` inclusive.
pub fn log_grid(lo: f64, hi: f64, count: usize) -> Result<alloc::vec::Vec<f64>> {
    if !(lo > 0.0 && hi >= lo && lo.is_finite() && hi.is_finite()) || count == 0 {
        return Err(Error::InvalidInput(alloc::format!(
            "log grid needs 0 < lo <= hi and count >= 1 (lo={lo}, hi={hi}, count={count})"
        )));
    }
    if count == 1 {
        return Ok(alloc::vec![lo]);
    }
    let (a, b) = (libm::log(lo), libm::log(hi));
    let step = (b - a) / (count - 1) as f64;
    Ok((0..count).map(|k| if k == count - 1 { hi } else { libm::exp(a + step * k as f64) }).collect())
}

/// Linearly spaced grid of `count` points from `lo` to `hi` inclusive.
pub fn linear_grid(lo: f64, hi: f64, count: usize) -> Result<alloc::vec::Vec<f64>> {
    if !(hi >= lo && lo.is_finite() && hi.is_finite()) || count == 0 {
        return Err(Error::InvalidInput(alloc::format!(
            "linear grid needs lo <= hi and count >= 1 (lo={lo}, hi={hi}, count={count})"
        )));
    }
    if count == 1 {
        return Ok(alloc::vec![lo]);
    }
    let step = (hi - lo) / (count - 1) as f64;
    Ok((0..count).map(|k| if k == count - 1 { hi } else { lo + step * k as f64 }).collect())
}
