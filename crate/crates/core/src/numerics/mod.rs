//! Dense-matrix substrate shared by every other module.

mod eigen;
mod matrix;
mod neighbors;
mod rng;
pub mod special;
mod stats;
mod svd;

pub use eigen::{sym_eig, sym_eig_jacobi, sym_eigvals, EigenSystem};
pub use matrix::Matrix;
pub use neighbors::{knn_from_sq_dist, knn_indices, pairwise_sq_dist, upper_sq_dists};
pub use rng::Rng;
pub use stats::{mean, median, pearson_corr, population_std, NeumaierSum};
pub use svd::{svd_small, Svd};
