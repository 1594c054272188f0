//! Reference oracles for the solver and covariance tests.
//!
//! Everything here recomputes results through a route independent of the
//! code under test: dense matrices instead of block products, cyclic
//! coordinate descent instead of active sets, exact block minimization
//! instead of BFGS, grid search and subgradient descent as ground truth
//! for the coop penalty. Slow and simple on purpose.

use multiggm_core::covariance::BlockCovariance;
use multiggm_core::mat::Mat;
use multiggm_core::model::TaskDataset;
use multiggm_core::rng::SeededRng;

/// Materialize the stacked quadratic as one dense matrix plus linear term.
pub fn dense_problem(problem: &BlockCovariance) -> (Vec<Vec<f64>>, Vec<f64>) {
    let dim = problem.dim();
    let m = problem.features();
    let mut q = vec![vec![0.0; dim]; dim];
    for (t, block) in problem.blocks.iter().enumerate() {
        for a in 0..m {
            for b in 0..m {
                q[t * m + a][t * m + b] = block.get(a, b);
            }
        }
    }
    (q, problem.linear.clone())
}

fn dense_grad(q: &[Vec<f64>], l: &[f64], beta: &[f64], out: &mut [f64]) {
    for i in 0..beta.len() {
        let mut acc = l[i];
        for (j, b) in beta.iter().enumerate() {
            acc += q[i][j] * b;
        }
        out[i] = acc;
    }
}

/// f(beta) evaluated densely.
pub fn dense_objective(q: &[Vec<f64>], l: &[f64], beta: &[f64]) -> f64 {
    let mut val = 0.0;
    for i in 0..beta.len() {
        let mut acc = 0.0;
        for (j, b) in beta.iter().enumerate() {
            acc += q[i][j] * b;
        }
        val += 0.5 * beta[i] * acc + l[i] * beta[i];
    }
    val
}

fn soft_threshold(z: f64, lam: f64) -> f64 {
    if z > lam {
        z - lam
    } else if z < -lam {
        z + lam
    } else {
        0.0
    }
}

/// Cyclic coordinate descent for the weighted L1 problem; runs until the
/// largest coordinate change in a sweep drops below `tol`.
pub fn cd_lasso(
    problem: &BlockCovariance,
    lambda: f64,
    task_weights: &[f64],
    tol: f64,
    max_sweeps: usize,
) -> Vec<f64> {
    let (q, l) = dense_problem(problem);
    let dim = problem.dim();
    let m = problem.features();
    let mut beta = vec![0.0; dim];
    for _ in 0..max_sweeps {
        let mut delta_max = 0.0f64;
        for j in 0..dim {
            let lam = lambda * task_weights[j / m];
            let mut c = l[j];
            for (k, b) in beta.iter().enumerate() {
                if k != j {
                    c += q[j][k] * b;
                }
            }
            let d = q[j][j];
            let new = if d > 1e-300 { soft_threshold(-c, lam) / d } else { 0.0 };
            delta_max = delta_max.max((new - beta[j]).abs());
            beta[j] = new;
        }
        if delta_max < tol {
            break;
        }
    }
    beta
}

/// Exact minimizer of 1/2 sum d_t v^2 + sum c_t v + lam |v|_2 over v >= 0
/// restricted to coordinates where c_t < 0 (the only ones that activate).
/// Solved by bisection on the norm s of the fixed point
/// v_t(s) = (-c_t)+ / (d_t + lam/s).
fn nonneg_group_solve(c: &[f64], d: &[f64], lam: f64) -> Vec<f64> {
    let t = c.len();
    let drive: f64 = c.iter().map(|&x| if x < 0.0 { x * x } else { 0.0 }).sum::<f64>().sqrt();
    if drive <= lam || drive == 0.0 {
        return vec![0.0; t];
    }
    let v_at = |s: f64| -> Vec<f64> {
        (0..t)
            .map(|i| {
                let num = (-c[i]).max(0.0);
                num / (d[i] + lam / s)
            })
            .collect()
    };
    let norm_at = |s: f64| -> f64 { v_at(s).iter().map(|x| x * x).sum::<f64>().sqrt() };
    // f(s) = |v(s)| - s is positive near zero (drive > lam) and negative
    // for large s
    let mut lo = 1e-300;
    let mut hi = 1.0;
    while norm_at(hi) > hi {
        hi *= 2.0;
        if hi > 1e300 {
            break;
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if norm_at(mid) > mid {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    v_at(0.5 * (lo + hi))
}

/// Exact minimizer of 1/2 sum d_t v^2 + sum c_t v + lam |v|_2 (free sign).
fn group_block_solve(c: &[f64], d: &[f64], lam: f64) -> Vec<f64> {
    let t = c.len();
    let drive: f64 = c.iter().map(|x| x * x).sum::<f64>().sqrt();
    if drive <= lam || drive == 0.0 {
        return vec![0.0; t];
    }
    let v_at = |s: f64| -> Vec<f64> { (0..t).map(|i| -c[i] / (d[i] + lam / s)).collect() };
    let norm_at = |s: f64| -> f64 { v_at(s).iter().map(|x| x * x).sum::<f64>().sqrt() };
    let mut lo = 1e-300;
    let mut hi = 1.0;
    while norm_at(hi) > hi {
        hi *= 2.0;
        if hi > 1e300 {
            break;
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if norm_at(mid) > mid {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    v_at(0.5 * (lo + hi))
}

/// Block coordinate descent for the group penalty with exact per-group
/// minimization (the within-group Hessian is diagonal because tasks do not
/// interact).
pub fn bcd_group(problem: &BlockCovariance, lambda: f64, tol: f64, max_sweeps: usize) -> Vec<f64> {
    let (q, l) = dense_problem(problem);
    let dim = problem.dim();
    let m = problem.features();
    let tasks = problem.num_tasks();
    let mut beta = vec![0.0; dim];
    let mut grad = vec![0.0; dim];
    for _ in 0..max_sweeps {
        let mut delta_max = 0.0f64;
        for i in 0..m {
            dense_grad(&q, &l, &beta, &mut grad);
            let coords: Vec<usize> = (0..tasks).map(|t| t * m + i).collect();
            let c: Vec<f64> =
                coords.iter().map(|&cc| grad[cc] - q[cc][cc] * beta[cc]).collect();
            let d: Vec<f64> = coords.iter().map(|&cc| q[cc][cc]).collect();
            let v = group_block_solve(&c, &d, lambda);
            for (t, &cc) in coords.iter().enumerate() {
                delta_max = delta_max.max((v[t] - beta[cc]).abs());
                beta[cc] = v[t];
            }
        }
        if delta_max < tol {
            break;
        }
    }
    beta
}

/// Block coordinate descent for the coop penalty. Each block splits into a
/// nonnegative part (driven by negative gradients) and a nonpositive part
/// (driven by positive gradients); their supports cannot overlap.
pub fn bcd_coop(problem: &BlockCovariance, lambda: f64, tol: f64, max_sweeps: usize) -> Vec<f64> {
    let (q, l) = dense_problem(problem);
    let dim = problem.dim();
    let m = problem.features();
    let tasks = problem.num_tasks();
    let mut beta = vec![0.0; dim];
    let mut grad = vec![0.0; dim];
    for _ in 0..max_sweeps {
        let mut delta_max = 0.0f64;
        for i in 0..m {
            dense_grad(&q, &l, &beta, &mut grad);
            let coords: Vec<usize> = (0..tasks).map(|t| t * m + i).collect();
            let c: Vec<f64> =
                coords.iter().map(|&cc| grad[cc] - q[cc][cc] * beta[cc]).collect();
            let d: Vec<f64> = coords.iter().map(|&cc| q[cc][cc]).collect();
            let up = nonneg_group_solve(&c, &d, lambda);
            let neg_c: Vec<f64> = c.iter().map(|x| -x).collect();
            let down = nonneg_group_solve(&neg_c, &d, lambda);
            for (t, &cc) in coords.iter().enumerate() {
                let v = up[t] - down[t];
                delta_max = delta_max.max((v - beta[cc]).abs());
                beta[cc] = v;
            }
        }
        if delta_max < tol {
            break;
        }
    }
    beta
}

/// Coop objective f + lambda g3 evaluated densely.
pub fn coop_objective(q: &[Vec<f64>], l: &[f64], beta: &[f64], m: usize, tasks: usize, lambda: f64) -> f64 {
    let mut val = dense_objective(q, l, beta);
    for i in 0..m {
        let (mut p2, mut n2) = (0.0, 0.0);
        for t in 0..tasks {
            let b = beta[t * m + i];
            if b > 0.0 {
                p2 += b * b;
            } else {
                n2 += b * b;
            }
        }
        val += lambda * (p2.sqrt() + n2.sqrt());
    }
    val
}

/// Group objective f + lambda g2 evaluated densely.
pub fn group_objective(q: &[Vec<f64>], l: &[f64], beta: &[f64], m: usize, tasks: usize, lambda: f64) -> f64 {
    let mut val = dense_objective(q, l, beta);
    for i in 0..m {
        let mut s2 = 0.0;
        for t in 0..tasks {
            let b = beta[t * m + i];
            s2 += b * b;
        }
        val += lambda * s2.sqrt();
    }
    val
}

/// Weighted L1 objective evaluated densely.
pub fn l1_objective(
    q: &[Vec<f64>],
    l: &[f64],
    beta: &[f64],
    m: usize,
    weights: &[f64],
    lambda: f64,
) -> f64 {
    let mut val = dense_objective(q, l, beta);
    for (j, b) in beta.iter().enumerate() {
        val += lambda * weights[j / m] * b.abs();
    }
    val
}

/// Plain subgradient descent on f + lambda g3 with diminishing steps,
/// keeping the best iterate. Slow; use for validating the sharper oracles.
pub fn subgradient_coop(
    problem: &BlockCovariance,
    lambda: f64,
    iters: usize,
    step0: f64,
) -> Vec<f64> {
    let (q, l) = dense_problem(problem);
    let dim = problem.dim();
    let m = problem.features();
    let tasks = problem.num_tasks();
    let mut x = vec![0.0; dim];
    let mut best = x.clone();
    let mut best_val = coop_objective(&q, &l, &x, m, tasks, lambda);
    let mut grad = vec![0.0; dim];
    for it in 0..iters {
        dense_grad(&q, &l, &x, &mut grad);
        let mut sg = grad.clone();
        for i in 0..m {
            let (mut p2, mut n2) = (0.0, 0.0);
            for t in 0..tasks {
                let b = x[t * m + i];
                if b > 0.0 {
                    p2 += b * b;
                } else {
                    n2 += b * b;
                }
            }
            let (pn, nn) = (p2.sqrt(), n2.sqrt());
            for t in 0..tasks {
                let b = x[t * m + i];
                if b > 0.0 {
                    sg[t * m + i] += lambda * b / pn;
                } else if b < 0.0 {
                    sg[t * m + i] += lambda * b / nn;
                }
            }
        }
        let step = step0 / ((it + 1) as f64).sqrt();
        for (xi, g) in x.iter_mut().zip(&sg) {
            *xi -= step * g;
        }
        let val = coop_objective(&q, &l, &x, m, tasks, lambda);
        if val < best_val {
            best_val = val;
            best = x.clone();
        }
    }
    best
}

/// Minimize a 2-d function by coarse-to-fine grid search: `rounds` rounds
/// of a `steps`-per-axis grid, each zooming on a window of a few cells
/// around the incumbent (kinks and flat valleys can park the sampled
/// argmin a cell or two away from the true one).
pub fn grid_search_2d(
    f: impl Fn(f64, f64) -> f64,
    center: (f64, f64),
    half_width: f64,
    steps: usize,
    rounds: usize,
) -> (f64, f64, f64) {
    let (mut cx, mut cy) = center;
    let mut hw = half_width;
    let mut best = (cx, cy, f(cx, cy));
    for _ in 0..rounds {
        for a in 0..=steps {
            for b in 0..=steps {
                let x = cx - hw + 2.0 * hw * a as f64 / steps as f64;
                let y = cy - hw + 2.0 * hw * b as f64 / steps as f64;
                let v = f(x, y);
                if v < best.2 {
                    best = (x, y, v);
                }
            }
        }
        cx = best.0;
        cy = best.1;
        hw = 8.0 * hw / steps as f64;
    }
    best
}

/// Central finite-difference gradient.
pub fn finite_diff_grad(f: impl Fn(&[f64]) -> f64, x: &[f64], h: f64) -> Vec<f64> {
    let mut g = vec![0.0; x.len()];
    let mut xp = x.to_vec();
    for i in 0..x.len() {
        let orig = xp[i];
        xp[i] = orig + h;
        let fp = f(&xp);
        xp[i] = orig - h;
        let fm = f(&xp);
        xp[i] = orig;
        g[i] = (fp - fm) / (2.0 * h);
    }
    g
}

/// Brute-force covariance of a centered matrix: S_ij = (1/n) sum_r x_ri x_rj.
pub fn naive_covariance(m: &Mat) -> Vec<Vec<f64>> {
    let (n, p) = (m.rows(), m.cols());
    let mut s = vec![vec![0.0; p]; p];
    for i in 0..p {
        for j in 0..p {
            let mut acc = 0.0;
            for r in 0..n {
                acc += m.get(r, i) * m.get(r, j);
            }
            s[i][j] = acc / n as f64;
        }
    }
    s
}

/// Sum of conditional Gaussian log densities: for each variable i and
/// observation row, X_i | X_rest is normal with mean
/// -(K_(i,rest) . x_rest) / K_ii and variance 1 / K_ii.
pub fn conditional_loglik(k: &Mat, x: &Mat) -> f64 {
    let p = k.rows();
    let n = x.rows();
    let mut total = 0.0;
    for i in 0..p {
        let kii = k.get(i, i);
        let var = 1.0 / kii;
        for r in 0..n {
            let mut dot = 0.0;
            for j in 0..p {
                if j != i {
                    dot += k.get(j, i) * x.get(r, j);
                }
            }
            let mu = -dot / kii;
            let d = x.get(r, i) - mu;
            total += -0.5 * (2.0 * std::f64::consts::PI * var).ln() - d * d / (2.0 * var);
        }
    }
    total
}

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations.
pub fn jacobi_eigenvalues(m: &Mat) -> Vec<f64> {
    let n = m.rows();
    let mut a: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| m.get(i, j)).collect()).collect();
    for _ in 0..100 {
        let mut off = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                off += a[i][j] * a[i][j];
            }
        }
        if off < 1e-24 {
            break;
        }
        for i in 0..n {
            for j in (i + 1)..n {
                if a[i][j].abs() < 1e-300 {
                    continue;
                }
                let theta = 0.5 * (a[j][j] - a[i][i]) / a[i][j];
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (aki, akj) = (a[k][i], a[k][j]);
                    a[k][i] = c * aki - s * akj;
                    a[k][j] = s * aki + c * akj;
                }
                for k in 0..n {
                    let (aik, ajk) = (a[i][k], a[j][k]);
                    a[i][k] = c * aik - s * ajk;
                    a[j][k] = s * aik + c * ajk;
                }
            }
        }
    }
    (0..n).map(|i| a[i][i]).collect()
}

/// Random centered dataset with i.i.d. standard normal entries.
pub fn random_dataset(seed: u64, tasks: usize, n_per_task: usize, p: usize) -> TaskDataset {
    let mut rng = SeededRng::new(seed);
    let mats: Vec<Mat> = (0..tasks)
        .map(|_| {
            let rows: Vec<Vec<f64>> = (0..n_per_task)
                .map(|_| (0..p).map(|_| rng.next_gaussian()).collect())
                .collect();
            Mat::from_rows(&rows)
        })
        .collect();
    let data = TaskDataset {
        tasks: mats,
        variable_names: (1..=p).map(|i| format!("x{i}")).collect(),
        task_names: (1..=tasks).map(|t| format!("t{t}")).collect(),
    };
    multiggm_core::model::center_columns(data)
}
