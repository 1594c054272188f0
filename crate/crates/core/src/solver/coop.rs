//! Active-set solver for the coop penalty.
//!
//! Bookkeeping distinguishes, per group, whether the current coefficients
//! have positive components, negative components, or both. One-sided
//! groups are solved under sign box constraints (componentwise >= 0 or
//! <= 0), kept by projection inside the master line search; genuinely
//! mixed groups are smooth and run unconstrained until a coordinate
//! crosses zero, at which point the step is truncated at the crossing and
//! the bookkeeping updated.
//!
//! The violation-minimizing subgradient drives both activation and
//! convergence. When a group's blocked sign side is at fault, the group is
//! re-minimized exactly with everything else held fixed: within a group
//! tasks do not interact, so each sign side reduces to a one-dimensional
//! root find on its part norm. The joint master (projected BFGS with a
//! Newton polish on the support) then resumes.

use alloc::vec;
use alloc::vec::Vec;
use libm::sqrt;

use crate::covariance::BlockCovariance;
use crate::mat::Cholesky;
use crate::penalty::{coop_group_violation, coop_subdiff_element, GroupView};
use crate::ZERO_TOL;

use super::{
    check_warm, tol_scale, Bfgs, Diagnostics, MasterExit, Solution, SolveError, ARMIJO_C1,
    MAX_HALVINGS, TOL_ACCEPT, TOL_TARGET,
};

const MAX_INNER: usize = 500;

/// Sign regime a group is currently solved under.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Status {
    Zero,
    /// Box beta >= 0 componentwise.
    Plus,
    /// Box beta <= 0 componentwise.
    Minus,
    /// Mixed signs, unconstrained.
    Full,
}

struct Workspace<'a> {
    problem: &'a BlockCovariance,
    lambda: f64,
    status: Vec<Status>,
    /// active group indices (status != Zero), ascending
    active: Vec<usize>,
    /// stacked coordinates of the active groups, group-major
    coords: Vec<usize>,
    tasks: usize,
}

impl<'a> Workspace<'a> {
    fn rebuild(&mut self) {
        let m = self.problem.features();
        self.active = (0..m).filter(|&i| self.status[i] != Status::Zero).collect();
        self.coords.clear();
        for &i in &self.active {
            for t in 0..self.tasks {
                self.coords.push(t * m + i);
            }
        }
    }

    fn group(&self, beta: &[f64], i: usize) -> Vec<f64> {
        let m = self.problem.features();
        (0..self.tasks).map(|t| beta[t * m + i]).collect()
    }

    fn group_grad(&self, grad: &[f64], i: usize) -> Vec<f64> {
        let m = self.problem.features();
        (0..self.tasks).map(|t| grad[t * m + i]).collect()
    }

    fn objective(&self, beta: &[f64]) -> f64 {
        let mut val = self.problem.objective(beta);
        for &i in &self.active {
            let g = self.group(beta, i);
            let (mut p2, mut n2) = (0.0, 0.0);
            for &x in &g {
                if x > 0.0 {
                    p2 += x * x;
                } else {
                    n2 += x * x;
                }
            }
            val += self.lambda * (sqrt(p2) + sqrt(n2));
        }
        val
    }

    /// Pseudo-gradient on the active coordinates: the exact penalty
    /// gradient wherever the penalty is smooth, and the
    /// violation-minimizing subgradient at kinks.
    fn master_gradient(&self, beta: &[f64], grad_f: &[f64], out: &mut [f64]) {
        for (k, &i) in self.active.iter().enumerate() {
            let b = self.group(beta, i);
            let g = self.group_grad(grad_f, i);
            let (_, theta) = coop_group_violation(&b, &g, self.lambda);
            for t in 0..self.tasks {
                out[k * self.tasks + t] = g[t] + self.lambda * theta[t];
            }
        }
    }

    /// Stationarity violation of one group inside its current sign regime
    /// (box directions that are blocked do not count; the outer loop
    /// decides whether to open them).
    fn regime_violation(&self, beta: &[f64], grad_f: &[f64], i: usize) -> f64 {
        let b = self.group(beta, i);
        let g = self.group_grad(grad_f, i);
        match self.status[i] {
            Status::Zero => 0.0,
            Status::Full => coop_group_violation(&b, &g, self.lambda).0,
            Status::Plus | Status::Minus => {
                let plus = self.status[i] == Status::Plus;
                let support: f64 = sqrt(b.iter().map(|x| x * x).sum::<f64>());
                let mut v2 = 0.0;
                for t in 0..self.tasks {
                    if b[t].abs() > ZERO_TOL {
                        let r = g[t] + self.lambda * b[t] / support;
                        v2 += r * r;
                    } else {
                        // at the bound only moves into the box count
                        let free = if plus { (-g[t]).max(0.0) } else { g[t].max(0.0) };
                        v2 += free * free;
                    }
                }
                sqrt(v2)
            }
        }
    }

    /// Worst regime violation over the active groups.
    fn inner_residual(&self, beta: &[f64], grad_f: &[f64]) -> f64 {
        self.active
            .iter()
            .map(|&i| self.regime_violation(beta, grad_f, i))
            .fold(0.0f64, f64::max)
    }

    /// Clamp a trial point into the sign boxes.
    fn project(&self, trial: &mut [f64]) {
        let m = self.problem.features();
        for &i in &self.active {
            match self.status[i] {
                Status::Plus => {
                    for t in 0..self.tasks {
                        let c = t * m + i;
                        if trial[c] < 0.0 {
                            trial[c] = 0.0;
                        }
                    }
                }
                Status::Minus => {
                    for t in 0..self.tasks {
                        let c = t * m + i;
                        if trial[c] > 0.0 {
                            trial[c] = 0.0;
                        }
                    }
                }
                _ => {}
            }
        }
    }

    /// Largest step fraction <= 1 at which no coordinate of a Full group
    /// strictly crosses zero; returns the first crossing coordinate.
    fn crossing_fraction(&self, beta: &[f64], trial: &[f64]) -> (f64, Option<usize>) {
        let m = self.problem.features();
        let mut rho = 1.0f64;
        let mut who = None;
        for &i in &self.active {
            if self.status[i] != Status::Full {
                continue;
            }
            for t in 0..self.tasks {
                let c = t * m + i;
                let (b0, b1) = (beta[c], trial[c]);
                if b0 != 0.0 && ((b1 < 0.0) != (b0 < 0.0) || b1 == 0.0) && b1 != b0 {
                    let r = b0 / (b0 - b1);
                    if r < rho - 1e-15 || (r <= rho + 1e-15 && who.is_none()) {
                        rho = r.min(rho);
                        who = Some(c);
                    }
                }
            }
        }
        (rho, who)
    }

    /// Re-derive each group's regime from its actual signs: lift newly
    /// nonzero groups, evict collapsed ones, demote one-signed Full groups
    /// back to a box once their full violation is settled (a group that is
    /// still violating keeps its crossing freedom). Returns true when any
    /// status changed.
    fn refresh_statuses(&mut self, beta: &mut [f64], grad_f: &[f64], tol: f64) -> bool {
        let m = self.problem.features();
        let mut changed = false;
        for idx in 0..self.status.len() {
            let b = self.group(beta, idx);
            let has_pos = b.iter().any(|&x| x > ZERO_TOL);
            let has_neg = b.iter().any(|&x| x < -ZERO_TOL);
            let next = match (has_pos, has_neg) {
                (false, false) => Status::Zero,
                (true, true) => Status::Full,
                (true, false) | (false, true) => match self.status[idx] {
                    Status::Full => {
                        let g = self.group_grad(grad_f, idx);
                        if coop_group_violation(&b, &g, self.lambda).0 <= tol {
                            if has_pos {
                                Status::Plus
                            } else {
                                Status::Minus
                            }
                        } else {
                            Status::Full
                        }
                    }
                    Status::Zero => {
                        if has_pos {
                            Status::Plus
                        } else {
                            Status::Minus
                        }
                    }
                    s => s,
                },
            };
            if next == Status::Zero && self.status[idx] != Status::Zero {
                for t in 0..self.tasks {
                    beta[t * m + idx] = 0.0;
                }
            }
            if next != self.status[idx] {
                self.status[idx] = next;
                changed = true;
            }
        }
        changed
    }
}

/// Exact minimizer of 1/2 sum d_t u^2 + sum c_t u + lam |u|_2 over u >= 0.
/// Only coordinates with c_t < 0 activate; the part norm s solves the
/// fixed point s = |u(s)| with u_t(s) = (-c_t)+ / (d_t + lam / s).
fn nonneg_part_solve(c: &[f64], d: &[f64], lam: f64) -> Vec<f64> {
    let t = c.len();
    let drive = sqrt(c.iter().map(|&x| if x < 0.0 { x * x } else { 0.0 }).sum::<f64>());
    if drive <= lam || drive == 0.0 {
        return vec![0.0; t];
    }
    let u_at = |s: f64| -> Vec<f64> {
        (0..t).map(|i| (-c[i]).max(0.0) / (d[i] + lam / s)).collect()
    };
    let norm_at = |s: f64| -> f64 { sqrt(u_at(s).iter().map(|x| x * x).sum::<f64>()) };
    let mut lo = 1e-300;
    let mut hi = 1.0;
    while norm_at(hi) > hi && hi < 1e300 {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if norm_at(mid) > mid {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    u_at(0.5 * (lo + hi))
}

pub fn solve_coop(
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

    let mut ws = Workspace {
        problem,
        lambda,
        status: vec![Status::Zero; m],
        active: Vec::new(),
        coords: Vec::new(),
        tasks,
    };
    ws.refresh_statuses(&mut beta, &grad_f, tol);
    ws.rebuild();
    let mut bfgs = Bfgs::identity(ws.coords.len());

    let cap = 10 * tasks * problem.p;
    let mut masters = 0;
    let mut converged = false;
    let mut line_search_failed = false;

    loop {
        if masters >= cap {
            break;
        }
        masters += 1;

        // settle sign patterns: every group whose certificate still fails
        // is re-minimized exactly with the others held fixed (within a
        // group tasks do not interact, so each sign side is a nonnegative
        // block with diagonal curvature and a 1-d root find). This is the
        // activation, deactivation and sign-flip mechanism in one.
        let mut updated = false;
        problem.gradient(&beta, &mut grad_f);
        for i in 0..m {
            let b = ws.group(&beta, i);
            let g = ws.group_grad(&grad_f, i);
            if coop_group_violation(&b, &g, lambda).0 <= tol {
                continue;
            }
            let d: Vec<f64> = (0..tasks).map(|t| problem.blocks[t].get(i, i)).collect();
            let c: Vec<f64> = (0..tasks)
                .map(|t| {
                    let cc = t * m + i;
                    grad_f[cc] - d[t] * beta[cc]
                })
                .collect();
            let up = nonneg_part_solve(&c, &d, lambda);
            let neg_c: Vec<f64> = c.iter().map(|x| -x).collect();
            let down = nonneg_part_solve(&neg_c, &d, lambda);
            for t in 0..tasks {
                let v = up[t] - down[t];
                beta[t * m + i] = if v.abs() <= ZERO_TOL { 0.0 } else { v };
            }
            problem.gradient(&beta, &mut grad_f);
            updated = true;
        }

        let old_active = ws.active.clone();
        ws.refresh_statuses(&mut beta, &grad_f, tol);
        ws.rebuild();
        remap_curvature(&mut bfgs, &old_active, &ws.active, tasks);

        if !updated {
            // every group passes its own certificate, so the max does too
            converged = true;
            break;
        }
        if ws.active.is_empty() {
            continue;
        }

        // joint quasi-Newton refinement on the settled pattern
        let exit = run_master(&mut ws, &mut beta, &mut grad_f, &mut bfgs, inner_tol);
        line_search_failed |= exit == MasterExit::Stalled;
        let old_active = ws.active.clone();
        problem.gradient(&beta, &mut grad_f);
        if ws.refresh_statuses(&mut beta, &grad_f, tol) {
            ws.rebuild();
            remap_curvature(&mut bfgs, &old_active, &ws.active, tasks);
        }
    }

    problem.gradient(&beta, &mut grad_f);
    let cert = coop_subdiff_element(GroupView::new(&beta, m, tasks), &grad_f, lambda);
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

/// Newton iterations on the nonzero support with the sign pattern held
/// fixed, accepted on residual decrease (objective comparisons are blind
/// below the floating-point floor where this runs). Zero coordinates stay
/// zero; a step that would flip a sign is truncated just inside the
/// orthant.
fn polish(ws: &Workspace<'_>, beta: &mut [f64], grad_f: &mut [f64], inner_tol: f64) {
    let m = ws.problem.features();
    let lambda = ws.lambda;
    for _ in 0..30 {
        ws.problem.gradient(beta, grad_f);
        let res = ws.inner_residual(beta, grad_f);
        if res <= inner_tol {
            return;
        }
        // support = nonzero coordinates of the active groups, plus bound
        // coordinates of boxed groups whose into-box direction descends
        // (each entry is tagged with the sign side it belongs to, since the
        // one-sided curvature at a bound depends on the entering side)
        let mut support: Vec<(usize, bool)> = Vec::new();
        for &i in &ws.active {
            for t in 0..ws.tasks {
                let c = t * m + i;
                if beta[c].abs() > ZERO_TOL {
                    support.push((c, beta[c] > 0.0));
                } else {
                    match ws.status[i] {
                        Status::Plus if grad_f[c] < 0.0 => support.push((c, true)),
                        Status::Minus if grad_f[c] > 0.0 => support.push((c, false)),
                        _ => {}
                    }
                }
            }
        }
        if support.is_empty() {
            return;
        }
        let n = support.len();
        let coords: Vec<usize> = support.iter().map(|&(c, _)| c).collect();
        let mut r = vec![0.0; n];
        let mut h = ws.problem.restricted(&coords);
        for &i in &ws.active {
            let b = ws.group(beta, i);
            let (mut p2, mut n2) = (0.0, 0.0);
            for &x in &b {
                if x > 0.0 {
                    p2 += x * x;
                } else {
                    n2 += x * x;
                }
            }
            let (pn, nn) = (sqrt(p2), sqrt(n2));
            // gradient and curvature split by sign side
            for t in 0..ws.tasks {
                let c = t * m + i;
                let Some(row) = support.iter().position(|&(s, _)| s == c) else { continue };
                let bt = beta[c];
                let pos_side = support[row].1;
                let (norm, part2) = if pos_side { (pn, p2) } else { (nn, n2) };
                if norm <= ZERO_TOL {
                    return; // entering side has no mass to normalize by
                }
                r[row] = grad_f[c] + lambda * bt / norm;
                for u in 0..ws.tasks {
                    let cu = u * m + i;
                    let Some(col) = support.iter().position(|&(s, _)| s == cu) else {
                        continue;
                    };
                    if pos_side != support[col].1 {
                        continue; // opposite sides do not interact
                    }
                    let bu = beta[cu];
                    let eye = if t == u { 1.0 } else { 0.0 };
                    let add = lambda * (eye - bt * bu / part2) / norm;
                    h.set(row, col, h.get(row, col) + add);
                }
            }
        }
        let chol = match Cholesky::factor(&h) {
            Ok(c) => c,
            Err(_) => return,
        };
        let neg_r: Vec<f64> = r.iter().map(|x| -x).collect();
        let mut delta = chol.solve(&neg_r);
        // entering coordinates may only move into their side
        for (k, &(c, pos_side)) in support.iter().enumerate() {
            if beta[c] == 0.0 && ((pos_side && delta[k] < 0.0) || (!pos_side && delta[k] > 0.0)) {
                delta[k] = 0.0;
            }
        }
        // largest fraction that keeps every nonzero support sign
        let mut rho = 1.0f64;
        for (k, &(c, _)) in support.iter().enumerate() {
            if beta[c] == 0.0 {
                continue;
            }
            let target = beta[c] + delta[k];
            if (target < 0.0) != (beta[c] < 0.0) || target == 0.0 {
                rho = rho.min(-beta[c] / delta[k]).max(0.0);
            }
        }
        let mut step = 0.999 * rho; // stay strictly inside the orthant
        if step <= 0.0 {
            return;
        }
        let mut improved = false;
        for _ in 0..20 {
            let mut trial = beta.to_vec();
            for (k, &(c, _)) in support.iter().enumerate() {
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

/// Projected BFGS with Armijo backtracking and zero-crossing truncation
/// for mixed-sign groups.
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
        // projected Armijo measures decrease against g' (x_alpha - x)
        let slope_of = |g: &[f64], trialv: &[f64], beta: &[f64]| -> f64 {
            let mut s = 0.0;
            for (k, &c) in ws.coords.iter().enumerate() {
                s += g[k] * (trialv[c] - beta[c]);
            }
            s
        };

        let f0 = ws.objective(beta);
        let mut accepted = false;
        let mut used_rho = 1.0f64;
        let mut forced_zero: Option<usize> = None;
        // the quasi-Newton direction can fail where the penalty has kinks;
        // the steepest (violation-minimizing subgradient) direction cannot,
        // so retry once with reset curvature before giving up
        'attempt: for attempt in 0..2 {
            if attempt == 1 {
                bfgs.reset();
            }
            bfgs.direction(&g, &mut d);
            let raw_slope: f64 = g.iter().zip(&d).map(|(a, b)| a * b).sum();
            if !(raw_slope < 0.0) {
                continue 'attempt;
            }
            let mut alpha = 1.0f64;
            for _ in 0..=MAX_HALVINGS {
                trial.copy_from_slice(beta);
                for (k, &c) in ws.coords.iter().enumerate() {
                    trial[c] += alpha * d[k];
                }
                ws.project(&mut trial);
                let (rho, who) = ws.crossing_fraction(beta, &trial);
                if rho < 1.0 {
                    for &c in &ws.coords {
                        trial[c] = beta[c] + rho * (trial[c] - beta[c]);
                    }
                    if let Some(c) = who {
                        trial[c] = 0.0;
                    }
                }
                let slope = slope_of(&g, &trial, beta);
                if slope >= 0.0 {
                    // projection/truncation removed all descent at this
                    // step size; shorten and retry
                    alpha *= 0.5;
                    continue;
                }
                let ft = ws.objective(&trial);
                if ft <= f0 + ARMIJO_C1 * slope {
                    accepted = true;
                    used_rho = rho;
                    forced_zero = who;
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

        // a truncated or sign-collapsing step changes the regime: let the
        // outer loop rebook before continuing
        if used_rho < 1.0 || forced_zero.is_some() {
            return MasterExit::Rebook;
        }
        let collapsed = ws.active.iter().any(|&i| {
            let b = ws.group(beta, i);
            !b.iter().any(|&x| x > ZERO_TOL) && !b.iter().any(|&x| x < -ZERO_TOL)
        });
        if collapsed {
            return MasterExit::Rebook;
        }

        ws.master_gradient(beta, grad_f, &mut g);
        let y: Vec<f64> = g.iter().zip(&g_old).map(|(a, b)| a - b).collect();
        bfgs.update(&s, &y);
    }
    MasterExit::Rebook
}
