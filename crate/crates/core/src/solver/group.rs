//! Active-set solver for the group penalty.
//!
//! Groups (one feature across all tasks) enter the active set when the
//! gradient norm over the group exceeds lambda. The master problem on the
//! active groups is smooth away from zero and is driven by BFGS steps with
//! Armijo backtracking; a group whose norm collapses below the zero
//! threshold is zeroed and evicted before the next master solve.

use alloc::vec;
use alloc::vec::Vec;
use libm::sqrt;

use crate::covariance::BlockCovariance;
use crate::mat::Cholesky;
use crate::penalty::{group_subdiff_element, GroupView};
use crate::ZERO_TOL;

use super::{
    check_warm, tol_scale, Bfgs, Diagnostics, MasterExit, Solution, SolveError, ARMIJO_C1,
    MAX_HALVINGS, TOL_ACCEPT, TOL_TARGET,
};

const MAX_INNER: usize = 500;

struct Workspace<'a> {
    problem: &'a BlockCovariance,
    lambda: f64,
    /// active group indices, ascending
    active: Vec<usize>,
    /// stacked coordinates of the active groups, group-major
    coords: Vec<usize>,
    tasks: usize,
}

impl<'a> Workspace<'a> {
    fn rebuild_coords(&mut self) {
        let m = self.problem.features();
        self.coords.clear();
        for &i in &self.active {
            for t in 0..self.tasks {
                self.coords.push(t * m + i);
            }
        }
    }

    fn objective(&self, beta: &[f64]) -> f64 {
        let mut val = self.problem.objective(beta);
        let m = self.problem.features();
        for &i in &self.active {
            let mut n2 = 0.0;
            for t in 0..self.tasks {
                let b = beta[t * m + i];
                n2 += b * b;
            }
            val += self.lambda * sqrt(n2);
        }
        val
    }

    /// Pseudo-gradient of the master objective on the active coordinates.
    /// For a group sitting at zero (just activated) the penalty direction
    /// is the violation-minimizing subgradient, which is a descent
    /// surrogate.
    fn master_gradient(&self, beta: &[f64], grad_f: &[f64], out: &mut [f64]) {
        let m = self.problem.features();
        for (k, &i) in self.active.iter().enumerate() {
            let mut n2 = 0.0;
            for t in 0..self.tasks {
                let b = beta[t * m + i];
                n2 += b * b;
            }
            let norm = sqrt(n2);
            if norm > ZERO_TOL {
                for t in 0..self.tasks {
                    let c = t * m + i;
                    out[k * self.tasks + t] = grad_f[c] + self.lambda * beta[c] / norm;
                }
            } else {
                let mut g2 = 0.0;
                for t in 0..self.tasks {
                    let g = grad_f[t * m + i];
                    g2 += g * g;
                }
                let gnorm = sqrt(g2);
                let denom = gnorm.max(self.lambda);
                let shrink = if denom > 0.0 { 1.0 - self.lambda / denom } else { 0.0 };
                for t in 0..self.tasks {
                    out[k * self.tasks + t] = shrink * grad_f[t * m + i];
                }
            }
        }
    }

    /// Worst stationarity violation over the active groups.
    fn inner_residual(&self, beta: &[f64], grad_f: &[f64]) -> f64 {
        let m = self.problem.features();
        let mut worst = 0.0f64;
        for &i in &self.active {
            let mut n2 = 0.0;
            let mut g2 = 0.0;
            for t in 0..self.tasks {
                let b = beta[t * m + i];
                n2 += b * b;
                g2 += grad_f[t * m + i] * grad_f[t * m + i];
            }
            let norm = sqrt(n2);
            let viol = if norm > ZERO_TOL {
                let mut r2 = 0.0;
                for t in 0..self.tasks {
                    let c = t * m + i;
                    let r = grad_f[c] + self.lambda * beta[c] / norm;
                    r2 += r * r;
                }
                sqrt(r2)
            } else {
                (sqrt(g2) - self.lambda).max(0.0)
            };
            worst = worst.max(viol);
        }
        worst
    }
}

pub fn solve_group(
    problem: &BlockCovariance,
    lambda: f64,
    warm: Option<&[f64]>,
) -> Result<Solution, SolveError> {
    if !(lambda >= 0.0) {
        return Err(SolveError::BadLambda { lambda });
    }
    let dim = problem.dim();
    let m = problem.features();
    let tasks = problem.num_tasks();
    let scale = tol_scale(lambda, problem.linear_inf_norm());
    let tol = TOL_TARGET * scale;
    let inner_tol = 0.3 * tol;

    let mut beta = check_warm(warm, dim)?.unwrap_or_else(|| vec![0.0; dim]);
    let mut grad_f = vec![0.0; dim];
    problem.gradient(&beta, &mut grad_f);

    let mut ws = Workspace { problem, lambda, active: Vec::new(), coords: Vec::new(), tasks };
    for i in 0..m {
        let nonzero = (0..tasks).any(|t| beta[t * m + i] != 0.0);
        if nonzero {
            ws.active.push(i);
        }
    }
    ws.rebuild_coords();
    let mut bfgs = Bfgs::identity(ws.coords.len());

    let cap = 10 * tasks * problem.p;
    let mut masters = 0;
    let mut converged = false;
    let mut line_search_failed = false;

    loop {
        if !ws.active.is_empty() {
            if masters >= cap {
                break;
            }
            masters += 1;
            let exit = run_master(&mut ws, &mut beta, &mut grad_f, &mut bfgs, inner_tol);
            line_search_failed |= exit == MasterExit::Stalled;

            // evict collapsed groups, keeping curvature of the survivors
            let mut evicted = false;
            let survivors: Vec<usize> = ws
                .active
                .iter()
                .copied()
                .filter(|&i| {
                    let n2: f64 = (0..tasks).map(|t| { let b = beta[t * m + i]; b * b }).sum();
                    if sqrt(n2) < ZERO_TOL {
                        for t in 0..tasks {
                            beta[t * m + i] = 0.0;
                        }
                        evicted = true;
                        false
                    } else {
                        true
                    }
                })
                .collect();
            if evicted {
                let old_active = core::mem::replace(&mut ws.active, survivors);
                remap_curvature(&mut bfgs, &old_active, &ws.active, tasks);
                ws.rebuild_coords();
                problem.gradient(&beta, &mut grad_f);
                continue;
            }
            if exit == MasterExit::Rebook {
                continue; // resume the master; the iteration cap bounds this
            }
            // Converged or Stalled: fall through to the activation scan
        }

        // activation: worst violating inactive group
        problem.gradient(&beta, &mut grad_f);
        let mut best: Option<(usize, f64)> = None;
        for i in 0..m {
            if ws.active.binary_search(&i).is_ok() {
                continue;
            }
            let g2: f64 = (0..tasks).map(|t| { let g = grad_f[t * m + i]; g * g }).sum();
            let v = sqrt(g2) - lambda;
            if v > tol && best.map_or(true, |(_, bv)| v > bv) {
                best = Some((i, v));
            }
        }
        match best {
            Some((i, _)) if masters < cap => {
                let pos = ws.active.binary_search(&i).unwrap_err();
                let old_active: Vec<usize> =
                    ws.active[..pos].iter().chain(&ws.active[pos..]).copied().collect();
                ws.active.insert(pos, i);
                remap_curvature(&mut bfgs, &old_active, &ws.active, tasks);
                ws.rebuild_coords();
            }
            _ => {
                let inner_ok = ws.inner_residual(&beta, &grad_f) <= tol;
                converged = best.is_none() && inner_ok;
                break;
            }
        }
    }

    problem.gradient(&beta, &mut grad_f);
    let cert = group_subdiff_element(GroupView::new(&beta, m, tasks), &grad_f, lambda);
    let residual = cert.residual;
    Ok(Solution {
        beta,
        certificate: cert,
        diagnostics: Diagnostics {
            iterations: masters,
            residual,
            converged: converged && residual <= TOL_ACCEPT * scale,
            line_search_failed,
        },
    })
}

fn remap_curvature(bfgs: &mut Bfgs, old_active: &[usize], new_active: &[usize], tasks: usize) {
    let mut kept = Vec::with_capacity(new_active.len() * tasks);
    for &i in new_active {
        match old_active.iter().position(|&o| o == i) {
            Some(pos) => {
                for t in 0..tasks {
                    kept.push(Some(pos * tasks + t));
                }
            }
            None => {
                for _ in 0..tasks {
                    kept.push(None);
                }
            }
        }
    }
    *bfgs = bfgs.remap(&kept);
}

/// Newton iterations on the active coordinates with the exact penalty
/// curvature, accepted on residual decrease (objective comparisons are
/// blind below the floating-point floor where this runs). Stops at the
/// target, at a stall, or when a group collapses.
fn polish(ws: &Workspace<'_>, beta: &mut [f64], grad_f: &mut [f64], inner_tol: f64) {
    let n = ws.coords.len();
    let m = ws.problem.features();
    let lambda = ws.lambda;
    for _ in 0..30 {
        ws.problem.gradient(beta, grad_f);
        let res = ws.inner_residual(beta, grad_f);
        if res <= inner_tol {
            return;
        }
        // residual and curvature of the penalty on the active coordinates
        let mut r = vec![0.0; n];
        let mut h = ws.problem.restricted(&ws.coords);
        let mut ok = true;
        for (k, &i) in ws.active.iter().enumerate() {
            let mut n2 = 0.0;
            for t in 0..ws.tasks {
                let b = beta[t * m + i];
                n2 += b * b;
            }
            let norm = sqrt(n2);
            if norm <= ZERO_TOL {
                ok = false;
                break;
            }
            for t in 0..ws.tasks {
                let row = k * ws.tasks + t;
                let bt = beta[t * m + i];
                r[row] = grad_f[t * m + i] + lambda * bt / norm;
                for u in 0..ws.tasks {
                    let col = k * ws.tasks + u;
                    let bu = beta[u * m + i];
                    let eye = if t == u { 1.0 } else { 0.0 };
                    let add = lambda * (eye - bt * bu / n2) / norm;
                    h.set(row, col, h.get(row, col) + add);
                }
            }
        }
        if !ok {
            return;
        }
        let chol = match Cholesky::factor(&h) {
            Ok(c) => c,
            Err(_) => return,
        };
        let neg_r: Vec<f64> = r.iter().map(|x| -x).collect();
        let delta = chol.solve(&neg_r);
        let mut step = 1.0f64;
        let mut improved = false;
        for _ in 0..20 {
            let mut trial = beta.to_vec();
            for (k, &c) in ws.coords.iter().enumerate() {
                trial[c] += step * delta[k];
            }
            let mut trial_grad = vec![0.0; beta.len()];
            ws.problem.gradient(&trial, &mut trial_grad);
            if ws.inner_residual(&trial, &trial_grad) < res {
                beta.copy_from_slice(&trial);
                improved = true;
                break;
            }
            step *= 0.5;
        }
        if !improved {
            return;
        }
    }
}

/// BFGS with Armijo backtracking on the active groups until the inner
/// stationarity target holds.
fn run_master(
    ws: &mut Workspace<'_>,
    beta: &mut [f64],
    grad_f: &mut [f64],
    bfgs: &mut Bfgs,
    inner_tol: f64,
) -> MasterExit {
    let n = ws.coords.len();
    debug_assert_eq!(bfgs.dim(), n);
    let mut g = vec![0.0; n];
    let mut d = vec![0.0; n];
    let mut trial = beta.to_vec();
    // hand over to Newton once BFGS is in its basin
    let switch = 1e6 * inner_tol;

    for _ in 0..MAX_INNER {
        ws.problem.gradient(beta, grad_f);
        let res = ws.inner_residual(beta, grad_f);
        if res <= inner_tol {
            return MasterExit::Converged;
        }
        if res <= switch {
            polish(ws, beta, grad_f, inner_tol);
            if ws.inner_residual(beta, grad_f) <= inner_tol {
                return MasterExit::Converged;
            }
        }
        ws.master_gradient(beta, grad_f, &mut g);
        if g.iter().all(|&x| x == 0.0) {
            return MasterExit::Converged;
        }

        let f0 = ws.objective(beta);
        let mut accepted = false;
        // retry a failed quasi-Newton step once along the steepest
        // direction with reset curvature
        'attempt: for attempt in 0..2 {
            if attempt == 1 {
                bfgs.reset();
            }
            bfgs.direction(&g, &mut d);
            let slope: f64 = g.iter().zip(&d).map(|(a, b)| a * b).sum();
            if !(slope < 0.0) {
                continue 'attempt;
            }
            let mut alpha = 1.0f64;
            for _ in 0..=MAX_HALVINGS {
                trial.copy_from_slice(beta);
                for (k, &c) in ws.coords.iter().enumerate() {
                    trial[c] += alpha * d[k];
                }
                let ft = ws.objective(&trial);
                if ft <= f0 + ARMIJO_C1 * alpha * slope {
                    accepted = true;
                    break 'attempt;
                }
                alpha *= 0.5;
            }
        }
        if !accepted {
            // objective comparisons have bottomed out; polish decides
            polish(ws, beta, grad_f, inner_tol);
            ws.problem.gradient(beta, grad_f);
            if ws.inner_residual(beta, grad_f) <= inner_tol {
                return MasterExit::Converged;
            }
            return MasterExit::Stalled;
        }

        let mut s = vec![0.0; n];
        for (k, &c) in ws.coords.iter().enumerate() {
            if trial[c].abs() <= ZERO_TOL {
                trial[c] = 0.0;
            }
            s[k] = trial[c] - beta[c];
            beta[c] = trial[c];
        }
        if s.iter().all(|&x| x == 0.0) {
            // the accepted step changed no bits: at the arithmetic floor
            polish(ws, beta, grad_f, inner_tol);
            ws.problem.gradient(beta, grad_f);
            if ws.inner_residual(beta, grad_f) <= inner_tol {
                return MasterExit::Converged;
            }
            return MasterExit::Stalled;
        }
        let g_old = g.clone();
        ws.problem.gradient(beta, grad_f);
        ws.master_gradient(beta, grad_f, &mut g);
        let y: Vec<f64> = g.iter().zip(&g_old).map(|(a, b)| a - b).collect();
        bfgs.update(&s, &y);

        // a collapsed group makes the penalty gradient unreliable: hand
        // control back so the eviction pass can run
        let m = ws.problem.features();
        let collapsed = ws.active.iter().any(|&i| {
            let n2: f64 = (0..ws.tasks).map(|t| { let b = beta[t * m + i]; b * b }).sum();
            sqrt(n2) < ZERO_TOL
        });
        if collapsed {
            return MasterExit::Rebook;
        }
    }
    MasterExit::Rebook
}
