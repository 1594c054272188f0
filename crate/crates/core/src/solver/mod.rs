//! Active-set solvers for the per-node problems
//! `min_b  1/2 b'Qb + b'l + lambda g(b)`.
//!
//! All three share the same outer scheme: solve a smooth master problem on
//! the coordinates (or groups) currently believed nonzero, drop what the
//! master zeroed, then admit the worst violator of the first-order
//! conditions, until the full subgradient certificate holds. They differ in
//! the master step: a closed-form linear solve for the L1 penalty, BFGS for
//! the group penalty, sign-boxed BFGS for the coop penalty.

use alloc::vec::Vec;

use crate::penalty::SubgradientCertificate;

mod coop;
mod group;
mod lasso;

pub use coop::solve_coop;
pub use group::solve_group;
pub use lasso::{lambda_max, solve_lasso};

/// Internal target: drive the certificate residual below this.
pub(crate) const TOL_TARGET: f64 = 1e-9;
/// Residual bound the solver promises on converged output, as a multiple of
/// `lambda + |l|_inf`.
pub(crate) const TOL_ACCEPT: f64 = 1e-8;
/// Armijo sufficient-decrease constant for the quasi-Newton masters.
pub(crate) const ARMIJO_C1: f64 = 1e-4;
/// Step halvings before a line search gives up.
pub(crate) const MAX_HALVINGS: usize = 50;

/// Convergence scale: tolerances are relative to `lambda + |l|_inf`.
pub(crate) fn tol_scale(lambda: f64, linear_inf: f64) -> f64 {
    lambda + linear_inf
}

#[derive(Clone, Debug, Default)]
pub struct Diagnostics {
    /// Master solves performed.
    pub iterations: usize,
    /// Certificate residual of the returned point.
    pub residual: f64,
    /// False when an iteration cap or line-search failure ended the solve
    /// before the certificate target was reached.
    pub converged: bool,
    /// The line search ran out of halvings at least once.
    pub line_search_failed: bool,
}

/// A solved node problem: stacked coefficients, the optimality certificate
/// at that point, and convergence bookkeeping.
#[derive(Clone, Debug)]
pub struct Solution {
    pub beta: Vec<f64>,
    pub certificate: SubgradientCertificate,
    pub diagnostics: Diagnostics,
}

#[derive(Clone, Debug, PartialEq)]
pub enum SolveError {
    /// The restricted system stayed singular even after jitter.
    SingularSystem { node: usize },
    /// A warm start of the wrong length was supplied.
    WarmStartLength { expected: usize, got: usize },
    BadLambda { lambda: f64 },
}

impl core::fmt::Display for SolveError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            SolveError::SingularSystem { node } => {
                write!(f, "restricted system singular after jitter (node {node})")
            }
            SolveError::WarmStartLength { expected, got } => {
                write!(f, "warm start length {got}, expected {expected}")
            }
            SolveError::BadLambda { lambda } => write!(f, "lambda must be >= 0, got {lambda}"),
        }
    }
}

impl core::error::Error for SolveError {}

pub(crate) fn check_warm(
    warm: Option<&[f64]>,
    dim: usize,
) -> Result<Option<Vec<f64>>, SolveError> {
    match warm {
        None => Ok(None),
        Some(w) if w.len() == dim => {
            // snap sub-threshold entries to exact zero
            let mut v = w.to_vec();
            for x in &mut v {
                if x.abs() <= crate::ZERO_TOL {
                    *x = 0.0;
                }
            }
            Ok(Some(v))
        }
        Some(w) => Err(SolveError::WarmStartLength { expected: dim, got: w.len() }),
    }
}

/// Why a quasi-Newton master solve handed control back.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum MasterExit {
    /// Inner stationarity target reached.
    Converged,
    /// Returned early so the active-set bookkeeping can run (crossing
    /// truncation, collapsed group, inner iteration budget); resume after.
    Rebook,
    /// No measurable progress possible (line search and polish exhausted).
    Stalled,
}

/// Dense inverse-Hessian approximation with BFGS updates. The curvature is
/// kept across active-set changes: surviving coordinates retain their block,
/// new ones start from the identity.
#[derive(Clone, Debug)]
pub(crate) struct Bfgs {
    h: crate::mat::Mat,
}

impl Bfgs {
    pub(crate) fn identity(n: usize) -> Self {
        Bfgs { h: crate::mat::Mat::identity(n) }
    }

    pub(crate) fn dim(&self) -> usize {
        self.h.rows()
    }

    pub(crate) fn reset(&mut self) {
        self.h = crate::mat::Mat::identity(self.h.rows());
    }

    /// d = -H g
    pub(crate) fn direction(&self, g: &[f64], d: &mut [f64]) {
        d.iter_mut().for_each(|x| *x = 0.0);
        self.h.matvec_add(g, d);
        d.iter_mut().for_each(|x| *x = -*x);
    }

    /// Standard inverse update; skipped when the curvature s'y is not
    /// safely positive.
    pub(crate) fn update(&mut self, s: &[f64], y: &[f64]) {
        let n = self.dim();
        assert_eq!(s.len(), n);
        assert_eq!(y.len(), n);
        let sy: f64 = s.iter().zip(y).map(|(a, b)| a * b).sum();
        let ss = s.iter().map(|a| a * a).sum::<f64>();
        let yy = y.iter().map(|a| a * a).sum::<f64>();
        if !(sy > 1e-12 * libm::sqrt(ss * yy)) {
            return;
        }
        let rho = 1.0 / sy;
        let mut hy = alloc::vec![0.0; n];
        self.h.matvec_add(y, &mut hy);
        let yhy: f64 = y.iter().zip(&hy).map(|(a, b)| a * b).sum();
        // H <- H - rho (s (Hy)' + (Hy) s') + rho^2 (y'Hy) s s' + rho s s'
        let c = rho * rho * yhy + rho;
        for i in 0..n {
            for j in 0..n {
                let v = self.h.get(i, j) - rho * (s[i] * hy[j] + hy[i] * s[j]) + c * s[i] * s[j];
                self.h.set(i, j, v);
            }
        }
    }

    /// Remap curvature when the coordinate list changes: `kept[new] =
    /// Some(old)` for surviving coordinates, `None` for fresh ones.
    pub(crate) fn remap(&self, kept: &[Option<usize>]) -> Bfgs {
        let n = kept.len();
        let mut h = crate::mat::Mat::identity(n);
        for (a, ka) in kept.iter().enumerate() {
            for (b, kb) in kept.iter().enumerate() {
                if let (Some(i), Some(j)) = (ka, kb) {
                    h.set(a, b, self.h.get(*i, *j));
                }
            }
        }
        Bfgs { h }
    }
}
