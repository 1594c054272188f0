//! Active-set solver for the weighted L1 problems (independent, pooled and
//! intertwined methods).
//!
//! The master step on the active set solves the stationarity system with
//! the current sign vector fixed,
//!
//! ```text
//! h = -b_A - Q(A,A)^-1 (l(A) + lambda W theta_A),
//! ```
//!
//! then takes the largest sign-consistent step along h. A coefficient
//! driven to zero leaves the active set when its gradient fits under the
//! penalty, otherwise its sign estimate flips. Coordinates enter the active
//! set by largest violation of `|grad_j| <= lambda w_j`.

use alloc::vec;
use alloc::vec::Vec;

use crate::covariance::BlockCovariance;
use crate::mat::Cholesky;
use crate::penalty::{lasso_subdiff_element, GroupView};
use crate::ZERO_TOL;

use super::{check_warm, tol_scale, Diagnostics, Solution, SolveError, TOL_ACCEPT, TOL_TARGET};

/// Smallest lambda at which the all-zero vector is optimal:
/// `max_j |l_j| / w_(task of j)`.
pub fn lambda_max(problem: &BlockCovariance, task_weights: &[f64]) -> f64 {
    assert_eq!(task_weights.len(), problem.num_tasks());
    let m = problem.features();
    let mut best = 0.0f64;
    for (j, &l) in problem.linear.iter().enumerate() {
        let w = task_weights[j / m];
        if w > 0.0 {
            best = best.max(l.abs() / w);
        } else if l != 0.0 {
            best = f64::INFINITY;
        }
    }
    best
}

pub fn solve_lasso(
    problem: &BlockCovariance,
    lambda: f64,
    task_weights: &[f64],
    warm: Option<&[f64]>,
) -> Result<Solution, SolveError> {
    if !(lambda >= 0.0) {
        return Err(SolveError::BadLambda { lambda });
    }
    assert_eq!(task_weights.len(), problem.num_tasks());
    let dim = problem.dim();
    let m = problem.features();
    let lam = |j: usize| lambda * task_weights[j / m];
    let scale = tol_scale(lambda, problem.linear_inf_norm());
    let tol = TOL_TARGET * scale;

    let mut beta = check_warm(warm, dim)?.unwrap_or_else(|| vec![0.0; dim]);
    let mut theta = vec![0.0; dim];
    let mut active: Vec<usize> = (0..dim).filter(|&j| beta[j] != 0.0).collect();
    let mut grad = vec![0.0; dim];
    problem.gradient(&beta, &mut grad);
    for &j in &active {
        theta[j] = if beta[j] > 0.0 { 1.0 } else { -1.0 };
    }

    let cap = 10 * problem.num_tasks() * problem.p;
    let mut masters = 0;
    let mut converged = false;

    'outer: loop {
        // master problem on the current active set
        while !active.is_empty() {
            if masters >= cap {
                break 'outer;
            }
            masters += 1;
            let sub = problem.restricted(&active);
            let chol = Cholesky::factor(&sub)
                .map_err(|_| SolveError::SingularSystem { node: problem.node })?;
            let rhs: Vec<f64> =
                active.iter().map(|&j| problem.linear[j] + lam(j) * theta[j]).collect();
            let x = chol.solve(&rhs);
            // h = -beta_A - Q^-1 rhs
            let h: Vec<f64> = active.iter().zip(&x).map(|(&j, xi)| -beta[j] - xi).collect();

            let hmax = h.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
            let bscale = active.iter().fold(1.0f64, |acc, &j| acc.max(beta[j].abs()));
            if hmax <= 1e-14 * bscale {
                break; // stationary on the active set
            }

            // largest sign-consistent step: zero coefficients may take any
            // sign, nonzero ones must not cross
            let mut rho = 1.0f64;
            let mut crossing: Option<usize> = None; // position in `active`
            for (a, (&j, &hj)) in active.iter().zip(&h).enumerate() {
                let bj = beta[j];
                if bj != 0.0 {
                    let target = bj + hj;
                    if target == 0.0 || (target < 0.0) != (bj < 0.0) {
                        let r = -bj / hj;
                        if r < rho - 1e-15 {
                            rho = r;
                            crossing = Some(a);
                        } else if (r - rho).abs() <= 1e-15 && crossing.is_none() {
                            rho = rho.min(r);
                            crossing = Some(a);
                        }
                    }
                }
            }

            match crossing {
                None => {
                    for (a, &j) in active.iter().enumerate() {
                        beta[j] += h[a];
                        if beta[j].abs() <= ZERO_TOL {
                            beta[j] = 0.0;
                        } else {
                            theta[j] = if beta[j] > 0.0 { 1.0 } else { -1.0 };
                        }
                    }
                    // drop any coordinate the full step landed exactly at zero
                    problem.gradient(&beta, &mut grad);
                    let mut removed = false;
                    active.retain(|&j| {
                        if beta[j] == 0.0 {
                            removed = true;
                            false
                        } else {
                            true
                        }
                    });
                    if !removed {
                        continue;
                    }
                }
                Some(a_cross) => {
                    let j_cross = active[a_cross];
                    for (a, &j) in active.iter().enumerate() {
                        beta[j] += rho * h[a];
                    }
                    beta[j_cross] = 0.0;
                    problem.gradient(&beta, &mut grad);
                    if grad[j_cross].abs() < lam(j_cross) {
                        active.remove(a_cross);
                    } else {
                        theta[j_cross] = if grad[j_cross] > 0.0 { -1.0 } else { 1.0 };
                    }
                }
            }
        }

        // admit the worst violator outside the active set
        problem.gradient(&beta, &mut grad);
        let mut best: Option<(usize, f64)> = None;
        for j in 0..dim {
            if beta[j] != 0.0 || active.contains(&j) {
                continue;
            }
            let v = grad[j].abs() - lam(j);
            if v > tol && best.map_or(true, |(_, bv)| v > bv) {
                best = Some((j, v));
            }
        }
        match best {
            Some((j, _)) if masters < cap => {
                theta[j] = if grad[j] > 0.0 { -1.0 } else { 1.0 };
                let pos = active.binary_search(&j).unwrap_err();
                active.insert(pos, j);
            }
            _ => {
                converged = best.is_none();
                break;
            }
        }
    }

    problem.gradient(&beta, &mut grad);
    let cert = lasso_subdiff_element(
        GroupView::new(&beta, m, problem.num_tasks()),
        &grad,
        lambda,
        task_weights,
    );
    let residual = cert.residual;
    Ok(Solution {
        beta,
        certificate: cert,
        diagnostics: Diagnostics {
            iterations: masters,
            residual,
            converged: converged && residual <= TOL_ACCEPT * scale,
            line_search_failed: false,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mat::Mat;

    fn problem_1d(q: f64, l: f64) -> BlockCovariance {
        BlockCovariance {
            node: 0,
            blocks: alloc::vec![Mat::from_rows(&[alloc::vec![q]])],
            linear: alloc::vec![l],
            p: 2,
        }
    }

    #[test]
    fn scalar_soft_threshold() {
        // Q = [1], l = [-c], c > lambda: beta = c - lambda
        let c = 2.0;
        let lambda = 0.5;
        let sol = solve_lasso(&problem_1d(1.0, -c), lambda, &[1.0], None).unwrap();
        assert!((sol.beta[0] - (c - lambda)).abs() < 1e-12);
        assert!(sol.diagnostics.converged);
    }

    #[test]
    fn zero_above_lambda_max() {
        let prob = BlockCovariance {
            node: 0,
            blocks: alloc::vec![Mat::from_rows(&[
                alloc::vec![1.0, 0.2],
                alloc::vec![0.2, 1.0],
            ])],
            linear: alloc::vec![-3.0, 1.0],
            p: 3,
        };
        let lmax = lambda_max(&prob, &[1.0]);
        assert_eq!(lmax, 3.0);
        let sol = solve_lasso(&prob, lmax, &[1.0], None).unwrap();
        assert!(sol.beta.iter().all(|&b| b == 0.0));
        let sol = solve_lasso(&prob, 1.01 * lmax, &[1.0], None).unwrap();
        assert!(sol.beta.iter().all(|&b| b == 0.0));
        let sol = solve_lasso(&prob, 0.99 * lmax, &[1.0], None).unwrap();
        assert!(sol.beta.iter().any(|&b| b != 0.0));
    }

    #[test]
    fn lambda_max_degenerate_zero_linear() {
        let prob = BlockCovariance {
            node: 0,
            blocks: alloc::vec![Mat::identity(2)],
            linear: alloc::vec![0.0, 0.0],
            p: 3,
        };
        assert_eq!(lambda_max(&prob, &[1.0]), 0.0);
    }

    #[test]
    fn weighted_lambda_max_uses_task_weights() {
        let prob = BlockCovariance {
            node: 0,
            blocks: alloc::vec![Mat::identity(1), Mat::identity(1)],
            linear: alloc::vec![-3.0, 1.0],
            p: 2,
        };
        // task 0 weight 0.5 -> 3/0.5 = 6; task 1 weight 2 -> 0.5
        assert_eq!(lambda_max(&prob, &[0.5, 2.0]), 6.0);
    }
}
