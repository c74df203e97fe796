//! Mixed-noise restoration of third-order data cubes.
//!
//! The observation model is Y = X + S + N: a low-tubal-rank signal X, sparse
//! outliers S (impulse pixels, stripes), and dense Gaussian noise N. Recovery
//! runs an ADMM loop whose per-mode subproblems shrink singular values of the
//! frontal slices of the mode-3 spectrum, with per-frequency weights derived
//! from the current iterate. Two regularizers are provided: a weighted convex
//! one (soft singular-value thresholding per frequency) and a nonconvex log
//! surrogate with a closed-form scalar shrinkage.
//!
//! Layout:
//! - [`tensor3`]: cube container, mode permutations, tube FFTs
//! - [`shrinkage`]: scalar and per-slice proximal operators
//! - [`weights`]: frequency weights and closed-form parameter defaults
//! - [`solver`]: the ADMM loop
//! - [`noise`]: mixed-noise simulator with preset cases
//! - [`metrics`]: MPSNR / MSSIM / ERGAS / MSAM
//! - [`io`]: cube container files, key-value configs, CSV outputs

pub mod error;
pub mod io;
pub mod metrics;
pub mod noise;
pub mod shrinkage;
pub mod solver;
pub mod tensor3;
pub mod weights;

pub use error::{Error, Result};
