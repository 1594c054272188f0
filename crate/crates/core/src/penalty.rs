//! The three penalties and their subdifferential certificates.
//!
//! Coefficients for one node problem are stacked task-major: coordinate
//! `t * (p-1) + i` is feature `i` of task `t`. "Group `i`" collects feature
//! `i` across all tasks. The penalties are
//!
//! ```text
//! l1:    sum_t w_t |beta_t|_1
//! group: sum_i |beta_i[1:T]|_2
//! coop:  sum_i ( |(beta_i[1:T])+|_2 + |(-beta_i[1:T])+|_2 )
//! ```
//!
//! where (u)+ = max(0, u) componentwise and 0/0 is taken as 0 throughout.
//!
//! Each `*_subdiff_element` picks, within the penalty's subdifferential at
//! `beta`, the element theta that comes closest to cancelling the gradient,
//! and reports the remaining violation per group. A residual of zero
//! certifies first-order optimality of `beta`.

use alloc::vec;
use alloc::vec::Vec;
use libm::sqrt;

use crate::ZERO_TOL;

/// Task-major view of a stacked coefficient vector.
#[derive(Clone, Copy, Debug)]
pub struct GroupView<'a> {
    beta: &'a [f64],
    features: usize,
    tasks: usize,
}

impl<'a> GroupView<'a> {
    pub fn new(beta: &'a [f64], features: usize, tasks: usize) -> Self {
        assert_eq!(beta.len(), features * tasks, "stacked length mismatch");
        GroupView { beta, features, tasks }
    }

    pub fn features(&self) -> usize {
        self.features
    }

    pub fn tasks(&self) -> usize {
        self.tasks
    }

    #[inline]
    pub fn coord(&self, task: usize, feature: usize) -> usize {
        task * self.features + feature
    }

    #[inline]
    pub fn component(&self, feature: usize, task: usize) -> f64 {
        self.beta[self.coord(task, feature)]
    }

    /// The across-task vector of feature `i`.
    pub fn gather(&self, feature: usize) -> Vec<f64> {
        (0..self.tasks).map(|t| self.component(feature, t)).collect()
    }

    pub fn flat(&self) -> &[f64] {
        self.beta
    }
}

fn pos_norm(v: &[f64]) -> f64 {
    sqrt(v.iter().map(|&x| if x > 0.0 { x * x } else { 0.0 }).sum())
}

fn neg_norm(v: &[f64]) -> f64 {
    sqrt(v.iter().map(|&x| if x < 0.0 { x * x } else { 0.0 }).sum())
}

fn norm2(v: &[f64]) -> f64 {
    sqrt(v.iter().map(|&x| x * x).sum())
}

/// Which penalty applies.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PenaltyKind {
    /// Weighted per-coordinate L1.
    L1,
    /// Per-feature L2 across tasks.
    Group,
    /// Per-feature L2 of positive and negative parts separately.
    Coop,
}

/// Value of the penalty at `beta`. `task_weights` applies to `L1` only and
/// defaults to unit weights when `None`.
pub fn penalty_value(kind: PenaltyKind, beta: GroupView<'_>, task_weights: Option<&[f64]>) -> f64 {
    match kind {
        PenaltyKind::L1 => {
            let mut total = 0.0;
            for t in 0..beta.tasks() {
                let w = task_weights.map_or(1.0, |ws| ws[t]);
                let mut l1 = 0.0;
                for i in 0..beta.features() {
                    l1 += beta.component(i, t).abs();
                }
                total += w * l1;
            }
            total
        }
        PenaltyKind::Group => {
            (0..beta.features()).map(|i| norm2(&beta.gather(i))).sum()
        }
        PenaltyKind::Coop => (0..beta.features())
            .map(|i| {
                let g = beta.gather(i);
                pos_norm(&g) + neg_norm(&g)
            })
            .sum(),
    }
}

/// An element of the penalty subdifferential at the tested point, chosen to
/// minimize the stationarity violation, plus that violation per group.
/// `residual` is the maximum over groups; zero (to tolerance) certifies
/// that 0 is in the subdifferential of f + lambda g at `beta`.
#[derive(Clone, Debug)]
pub struct SubgradientCertificate {
    pub theta: Vec<f64>,
    pub residual: f64,
    pub per_group_violation: Vec<f64>,
}

/// Certificate for the weighted L1 penalty. `weights` are per task; the
/// effective penalty on coordinate (t, i) is `lambda * weights[t]`.
pub fn lasso_subdiff_element(
    beta: GroupView<'_>,
    grad_f: &[f64],
    lambda: f64,
    weights: &[f64],
) -> SubgradientCertificate {
    assert_eq!(grad_f.len(), beta.flat().len());
    assert_eq!(weights.len(), beta.tasks());
    let features = beta.features();
    let mut theta = vec![0.0; grad_f.len()];
    let mut per_group = vec![0.0f64; features];
    for t in 0..beta.tasks() {
        let lam = lambda * weights[t];
        for i in 0..features {
            let j = beta.coord(t, i);
            let b = beta.flat()[j];
            let g = grad_f[j];
            let viol;
            if b.abs() > ZERO_TOL {
                theta[j] = if b > 0.0 { 1.0 } else { -1.0 };
                viol = (g + lam * theta[j]).abs();
            } else if lam > 0.0 {
                let raw = -g / lam;
                theta[j] = raw.clamp(-1.0, 1.0);
                viol = (g + lam * theta[j]).abs();
            } else {
                theta[j] = 0.0;
                viol = g.abs();
            }
            per_group[i] = per_group[i].max(viol);
        }
    }
    let residual = per_group.iter().fold(0.0f64, |m, v| m.max(*v));
    SubgradientCertificate { theta, residual, per_group_violation: per_group }
}

/// Certificate for the group penalty: theta is beta_i normalized on active
/// groups, and the clipped negative gradient direction on zero groups.
pub fn group_subdiff_element(
    beta: GroupView<'_>,
    grad_f: &[f64],
    lambda: f64,
) -> SubgradientCertificate {
    assert_eq!(grad_f.len(), beta.flat().len());
    let features = beta.features();
    let tasks = beta.tasks();
    let mut theta = vec![0.0; grad_f.len()];
    let mut per_group = vec![0.0f64; features];
    for i in 0..features {
        let b: Vec<f64> = beta.gather(i);
        let g: Vec<f64> = (0..tasks).map(|t| grad_f[beta.coord(t, i)]).collect();
        let bnorm = norm2(&b);
        if bnorm > ZERO_TOL {
            let mut viol2 = 0.0;
            for t in 0..tasks {
                let th = b[t] / bnorm;
                theta[beta.coord(t, i)] = th;
                let r = g[t] + lambda * th;
                viol2 += r * r;
            }
            per_group[i] = sqrt(viol2);
        } else {
            let gnorm = norm2(&g);
            let denom = if gnorm > lambda { gnorm } else { lambda };
            if denom > 0.0 {
                for t in 0..tasks {
                    theta[beta.coord(t, i)] = -g[t] / denom;
                }
            }
            per_group[i] = (gnorm - lambda).max(0.0);
        }
    }
    let residual = per_group.iter().fold(0.0f64, |m, v| m.max(*v));
    SubgradientCertificate { theta, residual, per_group_violation: per_group }
}

/// Sign classification of one group used by the coop subdifferential.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GroupSigns {
    Zero,
    /// No negative component, at least one positive.
    PlusOnly,
    /// No positive component, at least one negative.
    MinusOnly,
    Mixed,
}

pub fn classify_group(b: &[f64]) -> GroupSigns {
    let mut has_pos = false;
    let mut has_neg = false;
    for &x in b {
        if x > ZERO_TOL {
            has_pos = true;
        } else if x < -ZERO_TOL {
            has_neg = true;
        }
    }
    match (has_pos, has_neg) {
        (false, false) => GroupSigns::Zero,
        (true, false) => GroupSigns::PlusOnly,
        (false, true) => GroupSigns::MinusOnly,
        (true, true) => GroupSigns::Mixed,
    }
}

/// Violation of one coop group together with the minimizing theta, covering
/// the four membership cases. Returns (violation, theta over tasks).
pub fn coop_group_violation(b: &[f64], g: &[f64], lambda: f64) -> (f64, Vec<f64>) {
    let tasks = b.len();
    let mut theta = vec![0.0; tasks];
    match classify_group(b) {
        GroupSigns::Zero => {
            // theta free in { max(|(th)+|, |(-th)+|) <= 1 }: shrink the
            // positive and negative parts of the gradient into their own
            // balls of radius lambda.
            let gp = pos_norm(g);
            let gn = neg_norm(g);
            let dp = if gp > lambda { gp } else { lambda };
            let dn = if gn > lambda { gn } else { lambda };
            for t in 0..tasks {
                if g[t] > 0.0 && dp > 0.0 {
                    theta[t] = -g[t] / dp;
                } else if g[t] < 0.0 && dn > 0.0 {
                    theta[t] = -g[t] / dn;
                }
            }
            ((gp - lambda).max(0.0) + (gn - lambda).max(0.0), theta)
        }
        GroupSigns::Mixed => {
            // Unique subgradient: positive components normalized by the
            // positive part, negative by the negative part.
            let pn = pos_norm(b);
            let nn = neg_norm(b);
            for t in 0..tasks {
                if b[t] > ZERO_TOL {
                    theta[t] = b[t] / pn;
                } else if b[t] < -ZERO_TOL {
                    theta[t] = b[t] / nn;
                }
            }
            let r: Vec<f64> = (0..tasks).map(|t| g[t] + lambda * theta[t]).collect();
            (pos_norm(&r) + neg_norm(&r), theta)
        }
        half @ (GroupSigns::PlusOnly | GroupSigns::MinusOnly) => {
            let plus = half == GroupSigns::PlusOnly;
            let support_norm = if plus { pos_norm(b) } else { neg_norm(b) };
            // fixed part on the support
            for t in 0..tasks {
                if b[t].abs() > ZERO_TOL {
                    theta[t] = b[t] / support_norm;
                }
            }
            // free part on the complement: one-sided unit ball opposing the
            // support's sign; only the opposite-side gradient can shrink.
            let mut shrinkable2 = 0.0; // gradient part the free theta can act on
            for t in 0..tasks {
                if b[t].abs() <= ZERO_TOL {
                    let gt = g[t];
                    if (plus && gt > 0.0) || (!plus && gt < 0.0) {
                        shrinkable2 += gt * gt;
                    }
                }
            }
            let shrinkable = sqrt(shrinkable2);
            let denom = if shrinkable > lambda { shrinkable } else { lambda };
            for t in 0..tasks {
                if b[t].abs() <= ZERO_TOL && denom > 0.0 {
                    let gt = g[t];
                    if (plus && gt > 0.0) || (!plus && gt < 0.0) {
                        theta[t] = -gt / denom;
                    }
                }
            }
            let r: Vec<f64> = (0..tasks).map(|t| g[t] + lambda * theta[t]).collect();
            (pos_norm(&r) + neg_norm(&r), theta)
        }
    }
}

/// Certificate for the coop penalty.
pub fn coop_subdiff_element(
    beta: GroupView<'_>,
    grad_f: &[f64],
    lambda: f64,
) -> SubgradientCertificate {
    assert_eq!(grad_f.len(), beta.flat().len());
    let features = beta.features();
    let tasks = beta.tasks();
    let mut theta = vec![0.0; grad_f.len()];
    let mut per_group = vec![0.0f64; features];
    for i in 0..features {
        let b = beta.gather(i);
        let g: Vec<f64> = (0..tasks).map(|t| grad_f[beta.coord(t, i)]).collect();
        let (viol, th) = coop_group_violation(&b, &g, lambda);
        per_group[i] = viol;
        for t in 0..tasks {
            theta[beta.coord(t, i)] = th[t];
        }
    }
    let residual = per_group.iter().fold(0.0f64, |m, v| m.max(*v));
    SubgradientCertificate { theta, residual, per_group_violation: per_group }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn view(beta: &[f64], features: usize, tasks: usize) -> GroupView<'_> {
        GroupView::new(beta, features, tasks)
    }

    #[test]
    fn regroup_then_flatten_roundtrip() {
        let beta = [1.0, 2.0, 3.0, 10.0, 20.0, 30.0]; // 3 features, 2 tasks
        let v = view(&beta, 3, 2);
        let mut flat = vec![0.0; 6];
        for i in 0..3 {
            let g = v.gather(i);
            for (t, &x) in g.iter().enumerate() {
                flat[v.coord(t, i)] = x;
            }
        }
        assert_eq!(flat.as_slice(), beta.as_slice());
    }

    #[test]
    fn penalty_values_three_four_five() {
        // single group (3, 4): all positive, so group and coop agree at 5
        let beta = [3.0, 4.0];
        let v = view(&beta, 1, 2);
        assert!((penalty_value(PenaltyKind::Group, v, None) - 5.0).abs() < 1e-15);
        assert!((penalty_value(PenaltyKind::Coop, v, None) - 5.0).abs() < 1e-15);
        // (3, -4): the sign split turns coop into the L1 value 7
        let beta = [3.0, -4.0];
        let v = view(&beta, 1, 2);
        assert!((penalty_value(PenaltyKind::Group, v, None) - 5.0).abs() < 1e-15);
        assert!((penalty_value(PenaltyKind::Coop, v, None) - 7.0).abs() < 1e-15);
    }

    #[test]
    fn single_task_penalties_collapse_to_l1() {
        let beta = [1.5, -2.0, 0.0, 3.0];
        let v = view(&beta, 4, 1);
        let l1 = penalty_value(PenaltyKind::L1, v, None);
        assert!((penalty_value(PenaltyKind::Group, v, None) - l1).abs() < 1e-15);
        assert!((penalty_value(PenaltyKind::Coop, v, None) - l1).abs() < 1e-15);
        assert!((l1 - 6.5).abs() < 1e-15);
    }

    #[test]
    fn lasso_certificate_cases() {
        let lambda = 2.0;
        let w = [1.0];
        // active coordinate at stationarity: grad = -lambda * sign(beta)
        let beta = [1.5];
        let grad = [-2.0];
        let cert = lasso_subdiff_element(view(&beta, 1, 1), &grad, lambda, &w);
        assert!(cert.residual < 1e-15);
        // zero coordinate strictly inside the dual interval
        let beta = [0.0];
        let grad = [1.0];
        let cert = lasso_subdiff_element(view(&beta, 1, 1), &grad, lambda, &w);
        assert!(cert.residual < 1e-15);
        assert!((cert.theta[0] + 0.5).abs() < 1e-15);
        // zero coordinate outside: grad = 2 lambda leaves violation lambda
        let grad = [4.0];
        let cert = lasso_subdiff_element(view(&beta, 1, 1), &grad, lambda, &w);
        assert!((cert.residual - lambda).abs() < 1e-15);
        assert!((cert.theta[0] + 1.0).abs() < 1e-15);
    }

    #[test]
    fn group_certificate_zero_group_cases() {
        let lambda = 1.0;
        // inside the dual ball
        let beta = [0.0, 0.0];
        let grad = [0.3, 0.4];
        let cert = group_subdiff_element(view(&beta, 1, 2), &grad, lambda);
        assert!(cert.residual < 1e-15);
        // |grad| = 2 lambda leaves violation lambda
        let grad = [1.2, 1.6];
        let cert = group_subdiff_element(view(&beta, 1, 2), &grad, lambda);
        assert!((cert.residual - lambda).abs() < 1e-14);
    }

    #[test]
    fn coop_zero_group_membership_example() {
        // grad = (-lambda/2, -lambda/2): theta = (1/2, 1/2) is feasible, so
        // the violation is exactly zero.
        let lambda = 0.8;
        let beta = [0.0, 0.0];
        let grad = [-0.4, -0.4];
        let cert = coop_subdiff_element(view(&beta, 1, 2), &grad, lambda);
        assert!(cert.residual < 1e-15);
        assert!((cert.theta[0] - 0.5).abs() < 1e-12);
        assert!((cert.theta[1] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn coop_mixed_sign_theta_matches_lasso_signs() {
        // group (a, -b): theta must equal sign(beta) componentwise
        let beta = [2.0, -3.0];
        let grad = [-1.0, 1.0];
        let cert = coop_subdiff_element(view(&beta, 1, 2), &grad, 1.0);
        assert!((cert.theta[0] - 1.0).abs() < 1e-15);
        assert!((cert.theta[1] + 1.0).abs() < 1e-15);
        // at the lasso stationary point both certificates vanish
        let grad = [-1.0, 1.0];
        let cert_coop = coop_subdiff_element(view(&beta, 1, 2), &grad, 1.0);
        let cert_lasso = lasso_subdiff_element(view(&beta, 1, 2), &grad, 1.0, &[1.0, 1.0]);
        assert!(cert_coop.residual < 1e-15);
        assert!(cert_lasso.residual < 1e-15);
    }

    #[test]
    fn coop_half_active_support_theta_is_normalized() {
        let beta = [0.0, 2.0];
        let grad = [0.0, -1.0];
        let cert = coop_subdiff_element(view(&beta, 1, 2), &grad, 1.0);
        assert_eq!(cert.theta[0], 0.0);
        assert!((cert.theta[1] - 1.0).abs() < 1e-15);
        assert!(cert.residual < 1e-15);
    }

    #[test]
    fn coop_half_active_blocked_direction_is_violation() {
        // PlusOnly group; the zero coordinate's gradient is negative, which
        // only a positive (infeasible) theta could cancel: violation stays.
        let lambda = 1.0;
        let beta = [0.0, 2.0];
        let grad = [-3.0, -lambda];
        let cert = coop_subdiff_element(view(&beta, 1, 2), &grad, lambda);
        assert!((cert.residual - 3.0).abs() < 1e-12);
    }
}
