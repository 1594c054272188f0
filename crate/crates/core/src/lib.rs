//! Joint inference of multiple sparse Gaussian graphical models.
//!
//! Given `T` related samples measuring the same `p` variables, this crate
//! estimates one conditional-dependency graph per sample by penalized
//! pseudo-likelihood neighborhood selection. Estimation is coupled across
//! samples in one of three ways:
//!
//! * **intertwined** — each sample's covariance is blended with the pooled
//!   covariance before independent L1 regressions,
//! * **group** — one L2 group per edge across samples, so edges enter and
//!   leave all graphs together,
//! * **coop** — the group norm is split into positive and negative parts,
//!   favoring sign-coherent edges while still allowing a given edge to be
//!   absent from some graphs.
//!
//! Two baselines (`independent`, `pooled`) complete the method set. The
//! crate also ships the benchmark generator used to compare the methods
//! (random ancestor graph, perturbed children, diagonally dominant signed
//! concentration matrices, Gaussian sampling) and cumulative
//! precision/recall scoring of inferred graph sets.
//!
//! The crate is `no_std` (with `alloc`); all floating-point work goes
//! through `libm` so results are identical across platforms. File formats,
//! the command-line interface and thread-parallel drivers live in the
//! companion `multiggm` crate.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod covariance;
pub mod engine;
pub mod eval;
pub mod mat;
pub mod model;
pub mod penalty;
pub mod rng;
pub mod sim;
pub mod solver;

/// Coefficients with magnitude below this are treated as exactly zero
/// everywhere: active-set membership, edge detection, group norms.
pub const ZERO_TOL: f64 = 1e-10;

pub use covariance::{block_problem, empirical_covariance, pseudo_loglik, BlockCovariance, CovarianceSet};
pub use engine::{infer, infer_path, InferredGraphSet, SolutionPath, Symmetrization};
pub use model::{center_columns, validate_dataset, Method, PenaltySpec, TaskDataset};
pub use rng::SeededRng;
