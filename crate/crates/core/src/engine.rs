//! Full inference: per-node problems, method dispatch, penalty paths with
//! warm starts, and symmetrization into per-task signed graphs.
//!
//! Node sub-problems are independent given the shared covariance set, so
//! callers may solve them in any order or in parallel; assembly sorts by
//! node index and is deterministic. Path solving is sequential in lambda
//! (each level warm-starts from the previous one) and independent across
//! nodes.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use libm::{exp, log, sqrt};

use crate::covariance::{block_problem, empirical_covariance, pseudo_loglik, BlockCovariance, CovarianceSet};
use crate::mat::Mat;
use crate::model::{Method, ModelError, PenaltySpec, TaskDataset};
use crate::solver::{lambda_max, solve_coop, solve_group, solve_lasso, Solution, SolveError};
use crate::ZERO_TOL;

/// Rule reconciling the two directed estimates of an undirected edge.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Symmetrization {
    /// Edge present when both directed coefficients are nonzero (default).
    And,
    /// Edge present when either directed coefficient is nonzero.
    Or,
}

impl Symmetrization {
    pub fn name(self) -> &'static str {
        match self {
            Symmetrization::And => "and",
            Symmetrization::Or => "or",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "and" => Some(Symmetrization::And),
            "or" => Some(Symmetrization::Or),
            _ => None,
        }
    }
}

/// Undirected edge with 0-based endpoints `i < j`. `sign` is the sign of
/// the symmetrized coefficient (0 when the two directions disagree) and
/// `weight` its magnitude, proportional to |K_ij| / K_ii rather than a
/// calibrated partial correlation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Edge {
    pub i: usize,
    pub j: usize,
    pub sign: i8,
    pub weight: f64,
}

/// One task's inferred graph; edges sorted by (i, j).
#[derive(Clone, Debug, Default, PartialEq)]
pub struct TaskGraph {
    pub edges: Vec<Edge>,
}

impl TaskGraph {
    pub fn contains(&self, i: usize, j: usize) -> bool {
        let (i, j) = if i < j { (i, j) } else { (j, i) };
        self.edges.binary_search_by(|e| (e.i, e.j).cmp(&(i, j))).is_ok()
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }
}

#[derive(Clone, Debug)]
pub struct NodeDiagnostics {
    pub node: usize,
    pub iterations: usize,
    pub residual: f64,
    pub converged: bool,
    pub error: Option<String>,
}

/// T signed graphs inferred at one penalty level.
#[derive(Clone, Debug)]
pub struct InferredGraphSet {
    pub lambda: f64,
    pub method: Method,
    pub alpha: f64,
    pub symmetrization: Symmetrization,
    pub graphs: Vec<TaskGraph>,
    pub node_diagnostics: Vec<NodeDiagnostics>,
}

/// Per-node, per-level solution record of a penalty path.
#[derive(Clone, Debug)]
pub struct PathEntry {
    pub beta: Vec<f64>,
    pub residual: f64,
    pub converged: bool,
    pub iterations: usize,
}

/// Coefficients along a descending lambda grid; `node_entries[node][k]`
/// matches `lambda_grid[k]`.
#[derive(Clone, Debug)]
pub struct SolutionPath {
    pub lambda_grid: Vec<f64>,
    pub node_entries: Vec<Vec<PathEntry>>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum EngineError {
    Model(ModelError),
    /// Every node sub-problem failed.
    AllNodesFailed,
    WeightCount { weights: usize, tasks: usize },
    /// Group and coop weights rescale coordinates and must be positive.
    NonPositiveWeight { task: usize },
    BadGrid,
}

impl core::fmt::Display for EngineError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            EngineError::Model(e) => write!(f, "{e}"),
            EngineError::AllNodesFailed => write!(f, "all node sub-problems failed"),
            EngineError::WeightCount { weights, tasks } => {
                write!(f, "{weights} task weights for {tasks} tasks")
            }
            EngineError::NonPositiveWeight { task } => {
                write!(f, "task {task} weight must be > 0 for group/coop")
            }
            EngineError::BadGrid => write!(f, "grid size must be >= 1 and 0 < ratio < 1"),
        }
    }
}

impl core::error::Error for EngineError {}

impl From<ModelError> for EngineError {
    fn from(e: ModelError) -> Self {
        EngineError::Model(e)
    }
}

fn checked_weights(spec: &PenaltySpec, cov: &CovarianceSet) -> Result<Vec<f64>, EngineError> {
    let w = spec.effective_weights(&cov.task_sizes);
    if w.len() != cov.num_tasks() {
        return Err(EngineError::WeightCount { weights: w.len(), tasks: cov.num_tasks() });
    }
    if !spec.method.is_l1() {
        if let Some(t) = w.iter().position(|&x| !(x > 0.0)) {
            return Err(EngineError::NonPositiveWeight { task: t });
        }
    }
    Ok(w)
}

fn unit_weights(w: &[f64]) -> bool {
    w.iter().all(|&x| x == 1.0)
}

/// Rescale a problem so that a task-weighted group norm becomes the plain
/// one: gamma = w beta turns sum_i |W beta_i|_2 into sum_i |gamma_i|_2 with
/// blocks S/w^2 and linear l/w.
fn reweight_problem(problem: &BlockCovariance, weights: &[f64]) -> BlockCovariance {
    let m = problem.features();
    let blocks = problem
        .blocks
        .iter()
        .enumerate()
        .map(|(t, b)| {
            let s = 1.0 / (weights[t] * weights[t]);
            Mat::from_fn(m, m, |i, j| s * b.get(i, j))
        })
        .collect();
    let linear = problem
        .linear
        .iter()
        .enumerate()
        .map(|(c, v)| v / weights[c / m])
        .collect();
    BlockCovariance { node: problem.node, blocks, linear, p: problem.p }
}

fn unscale_beta(beta: &mut [f64], weights: &[f64], features: usize) {
    for (c, b) in beta.iter_mut().enumerate() {
        *b /= weights[c / features];
    }
}

fn scale_beta(beta: &[f64], weights: &[f64], features: usize) -> Vec<f64> {
    beta.iter()
        .enumerate()
        .map(|(c, b)| b * weights[c / features])
        .collect()
}

/// Solve one node's sub-problem at the given penalty level.
pub fn solve_node(
    cov: &CovarianceSet,
    spec: &PenaltySpec,
    node: usize,
    lambda: f64,
    warm: Option<&[f64]>,
) -> Result<Solution, SolveError> {
    let weights = spec.effective_weights(&cov.task_sizes);
    let problem = block_problem(cov, node, spec);
    let m = problem.features();
    match spec.method {
        Method::Independent | Method::Pooled | Method::Intertwined => {
            solve_lasso(&problem, lambda, &weights, warm)
        }
        Method::Group | Method::Coop => {
            if unit_weights(&weights) {
                if spec.method == Method::Group {
                    solve_group(&problem, lambda, warm)
                } else {
                    solve_coop(&problem, lambda, warm)
                }
            } else {
                let scaled = reweight_problem(&problem, &weights);
                let warm_scaled = warm.map(|w| scale_beta(w, &weights, m));
                let mut sol = if spec.method == Method::Group {
                    solve_group(&scaled, lambda, warm_scaled.as_deref())?
                } else {
                    solve_coop(&scaled, lambda, warm_scaled.as_deref())?
                };
                unscale_beta(&mut sol.beta, &weights, m);
                Ok(sol)
            }
        }
    }
}

/// Smallest lambda at which node's solution is all-zero, in the method's
/// dual norm.
pub fn node_lambda_max(cov: &CovarianceSet, spec: &PenaltySpec, node: usize) -> f64 {
    let weights = spec.effective_weights(&cov.task_sizes);
    let problem = block_problem(cov, node, spec);
    match spec.method {
        Method::Independent | Method::Pooled | Method::Intertwined => {
            lambda_max(&problem, &weights)
        }
        Method::Group | Method::Coop => {
            let problem = if unit_weights(&weights) {
                problem
            } else {
                reweight_problem(&problem, &weights)
            };
            let m = problem.features();
            let tasks = problem.num_tasks();
            let mut best = 0.0f64;
            for i in 0..m {
                let (mut p2, mut n2, mut a2) = (0.0, 0.0, 0.0);
                for t in 0..tasks {
                    let v = problem.linear[t * m + i];
                    a2 += v * v;
                    if v > 0.0 {
                        p2 += v * v;
                    } else {
                        n2 += v * v;
                    }
                }
                best = best.max(match spec.method {
                    Method::Group => sqrt(a2),
                    _ => sqrt(p2).max(sqrt(n2)),
                });
            }
            best
        }
    }
}

/// Largest node lambda-max: at or above this level every graph is empty.
pub fn global_lambda_max(cov: &CovarianceSet, spec: &PenaltySpec) -> f64 {
    (0..cov.num_variables())
        .map(|node| node_lambda_max(cov, spec, node))
        .fold(0.0f64, f64::max)
}

/// Log-spaced descending grid from `lmax` down to `ratio * lmax`.
pub fn log_grid(lmax: f64, size: usize, ratio: f64) -> Result<Vec<f64>, EngineError> {
    if size == 0 || !(ratio > 0.0 && ratio < 1.0) {
        return Err(EngineError::BadGrid);
    }
    if size == 1 {
        return Ok(vec![lmax]);
    }
    let lr = log(ratio);
    Ok((0..size)
        .map(|k| lmax * exp(lr * k as f64 / (size - 1) as f64))
        .collect())
}

/// Build per-task graphs from the stacked per-node coefficient vectors
/// (`None` marks a failed node, treated as all-zero).
pub fn assemble_graphs(
    p: usize,
    tasks: usize,
    sym: Symmetrization,
    node_betas: &[Option<&[f64]>],
) -> Vec<TaskGraph> {
    assert_eq!(node_betas.len(), p);
    let m = p - 1;
    // directed coefficient of node i on variable j in task t
    let coef = |i: usize, j: usize, t: usize| -> f64 {
        match node_betas[i] {
            Some(beta) => {
                let f = if j < i { j } else { j - 1 };
                let v = beta[t * m + f];
                if v.abs() > ZERO_TOL {
                    v
                } else {
                    0.0
                }
            }
            None => 0.0,
        }
    };
    (0..tasks)
        .map(|t| {
            let mut edges = Vec::new();
            for i in 0..p {
                for j in (i + 1)..p {
                    let a = coef(i, j, t);
                    let b = coef(j, i, t);
                    let present = match sym {
                        Symmetrization::And => a != 0.0 && b != 0.0,
                        Symmetrization::Or => a != 0.0 || b != 0.0,
                    };
                    if !present {
                        continue;
                    }
                    let (sign, weight) = if a != 0.0 && b != 0.0 {
                        let s = if a > 0.0 && b > 0.0 {
                            1
                        } else if a < 0.0 && b < 0.0 {
                            -1
                        } else {
                            0
                        };
                        (s, 0.5 * (a.abs() + b.abs()))
                    } else {
                        let v = if a != 0.0 { a } else { b };
                        (if v > 0.0 { 1 } else { -1 }, v.abs())
                    };
                    edges.push(Edge { i, j, sign, weight });
                }
            }
            TaskGraph { edges }
        })
        .collect()
}

fn assemble_set(
    cov: &CovarianceSet,
    spec: &PenaltySpec,
    sym: Symmetrization,
    lambda: f64,
    solutions: &[Result<Solution, SolveError>],
) -> Result<InferredGraphSet, EngineError> {
    if solutions.iter().all(|s| s.is_err()) {
        return Err(EngineError::AllNodesFailed);
    }
    let p = cov.num_variables();
    let node_betas: Vec<Option<&[f64]>> = solutions
        .iter()
        .map(|s| s.as_ref().ok().map(|sol| sol.beta.as_slice()))
        .collect();
    let graphs = assemble_graphs(p, cov.num_tasks(), sym, &node_betas);
    let node_diagnostics = solutions
        .iter()
        .enumerate()
        .map(|(node, s)| match s {
            Ok(sol) => NodeDiagnostics {
                node,
                iterations: sol.diagnostics.iterations,
                residual: sol.diagnostics.residual,
                converged: sol.diagnostics.converged,
                error: None,
            },
            Err(e) => NodeDiagnostics {
                node,
                iterations: 0,
                residual: f64::INFINITY,
                converged: false,
                error: Some(alloc::format!("{e}")),
            },
        })
        .collect();
    Ok(InferredGraphSet {
        lambda,
        method: spec.method,
        alpha: spec.alpha,
        symmetrization: sym,
        graphs,
        node_diagnostics,
    })
}

/// Infer the graph set at the spec's fixed lambda.
pub fn infer(
    data: &TaskDataset,
    spec: &PenaltySpec,
    sym: Symmetrization,
) -> Result<InferredGraphSet, EngineError> {
    let cov = empirical_covariance(data, spec.alpha);
    infer_from_cov(&cov, spec, sym)
}

pub fn infer_from_cov(
    cov: &CovarianceSet,
    spec: &PenaltySpec,
    sym: Symmetrization,
) -> Result<InferredGraphSet, EngineError> {
    checked_weights(spec, cov)?;
    let p = cov.num_variables();
    let solutions: Vec<Result<Solution, SolveError>> =
        (0..p).map(|node| solve_node(cov, spec, node, spec.lambda, None)).collect();
    assemble_set(cov, spec, sym, spec.lambda, &solutions)
}

/// One node's warm-started sweep down the grid.
pub fn solve_node_path(
    cov: &CovarianceSet,
    spec: &PenaltySpec,
    node: usize,
    grid: &[f64],
) -> Vec<Result<Solution, SolveError>> {
    let mut out = Vec::with_capacity(grid.len());
    let mut warm: Option<Vec<f64>> = None;
    for &lambda in grid {
        let sol = solve_node(cov, spec, node, lambda, warm.as_deref());
        if let Ok(s) = &sol {
            warm = Some(s.beta.clone());
        }
        out.push(sol);
    }
    out
}

/// Warm-started path over a log-spaced grid anchored at the global
/// lambda-max (the first graph is empty by construction).
pub fn infer_path(
    data: &TaskDataset,
    spec: &PenaltySpec,
    grid_size: usize,
    grid_ratio: f64,
    sym: Symmetrization,
) -> Result<(SolutionPath, Vec<InferredGraphSet>), EngineError> {
    let cov = empirical_covariance(data, spec.alpha);
    let lmax = global_lambda_max(&cov, spec);
    let grid = log_grid(lmax, grid_size, grid_ratio)?;
    infer_path_from_cov(&cov, spec, &grid, sym)
}

/// Path over an explicit descending grid (shared grids across replicates
/// make fixed-lambda averaging possible).
pub fn infer_path_from_cov(
    cov: &CovarianceSet,
    spec: &PenaltySpec,
    grid: &[f64],
    sym: Symmetrization,
) -> Result<(SolutionPath, Vec<InferredGraphSet>), EngineError> {
    checked_weights(spec, cov)?;
    if grid.is_empty() {
        return Err(EngineError::BadGrid);
    }
    let p = cov.num_variables();
    let per_node: Vec<Vec<Result<Solution, SolveError>>> =
        (0..p).map(|node| solve_node_path(cov, spec, node, grid)).collect();
    collect_path(cov, spec, sym, grid, per_node)
}

/// Assemble a path from already-solved per-node sweeps (the parallel
/// drivers compute `per_node` on worker threads and reduce here).
pub fn collect_path(
    cov: &CovarianceSet,
    spec: &PenaltySpec,
    sym: Symmetrization,
    grid: &[f64],
    per_node: Vec<Vec<Result<Solution, SolveError>>>,
) -> Result<(SolutionPath, Vec<InferredGraphSet>), EngineError> {
    let p = cov.num_variables();
    assert_eq!(per_node.len(), p);
    let mut graphs = Vec::with_capacity(grid.len());
    for (k, &lambda) in grid.iter().enumerate() {
        let level: Vec<Result<Solution, SolveError>> = (0..p)
            .map(|node| per_node[node][k].clone())
            .collect();
        graphs.push(assemble_set(cov, spec, sym, lambda, &level)?);
    }
    let node_entries = per_node
        .into_iter()
        .map(|sols| {
            sols.into_iter()
                .map(|s| match s {
                    Ok(sol) => PathEntry {
                        beta: sol.beta,
                        residual: sol.diagnostics.residual,
                        converged: sol.diagnostics.converged,
                        iterations: sol.diagnostics.iterations,
                    },
                    Err(_) => PathEntry {
                        beta: Vec::new(),
                        residual: f64::INFINITY,
                        converged: false,
                        iterations: 0,
                    },
                })
                .collect()
        })
        .collect();
    Ok((SolutionPath { lambda_grid: grid.to_vec(), node_entries }, graphs))
}

/// Per-task pseudo-log-likelihood of a graph set: the concentration matrix
/// is taken with unit diagonal and the signed symmetrized weights off the
/// diagonal (edges with ambiguous sign contribute zero).
pub fn graph_pseudo_loglik(cov: &CovarianceSet, set: &InferredGraphSet) -> Vec<f64> {
    let p = cov.num_variables();
    set.graphs
        .iter()
        .enumerate()
        .map(|(t, graph)| {
            let mut k = Mat::identity(p);
            for e in &graph.edges {
                let v = e.sign as f64 * e.weight;
                k.set(e.i, e.j, v);
                k.set(e.j, e.i, v);
            }
            let n = cov.task_sizes[t];
            pseudo_loglik(&k, &cov.per_task[t], n).unwrap_or(f64::NEG_INFINITY)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_grid_endpoints() {
        let g = log_grid(2.0, 5, 0.01).unwrap();
        assert_eq!(g.len(), 5);
        assert!((g[0] - 2.0).abs() < 1e-15);
        assert!((g[4] - 0.02).abs() < 1e-12);
        for w in g.windows(2) {
            assert!(w[1] < w[0]);
        }
        assert_eq!(log_grid(2.0, 1, 0.5).unwrap(), vec![2.0]);
        assert!(log_grid(2.0, 0, 0.5).is_err());
        assert!(log_grid(2.0, 3, 1.5).is_err());
    }

    #[test]
    fn assemble_and_or_rules() {
        // p = 3, T = 1; node 0 points at 1, node 1 points at 0 and 2,
        // node 2 points at nothing
        let b0 = [0.5, 0.0];
        let b1 = [0.4, 0.3];
        let b2 = [0.0, 0.0];
        let betas: Vec<Option<&[f64]>> = vec![Some(&b0), Some(&b1), Some(&b2)];
        let and = assemble_graphs(3, 1, Symmetrization::And, &betas);
        assert_eq!(and[0].edges.len(), 1);
        assert!(and[0].contains(0, 1));
        let e = and[0].edges[0];
        assert_eq!(e.sign, 1);
        assert!((e.weight - 0.45).abs() < 1e-15);
        let or = assemble_graphs(3, 1, Symmetrization::Or, &betas);
        assert_eq!(or[0].edges.len(), 2);
        assert!(or[0].contains(1, 2));
        // AND-graph is a subset of the OR-graph
        for e in &and[0].edges {
            assert!(or[0].contains(e.i, e.j));
        }
    }

    #[test]
    fn ambiguous_sign_is_zero() {
        let b0 = [0.5];
        let b1 = [-0.2];
        let betas: Vec<Option<&[f64]>> = vec![Some(&b0), Some(&b1)];
        let g = assemble_graphs(2, 1, Symmetrization::And, &betas);
        assert_eq!(g[0].edges[0].sign, 0);
        assert!((g[0].edges[0].weight - 0.35).abs() < 1e-15);
    }

    #[test]
    fn failed_node_counts_as_zero() {
        let b1 = [0.4, 0.3];
        let betas: Vec<Option<&[f64]>> = vec![None, Some(&b1), None];
        let and = assemble_graphs(3, 1, Symmetrization::And, &betas);
        assert!(and[0].edges.is_empty());
        let or = assemble_graphs(3, 1, Symmetrization::Or, &betas);
        assert_eq!(or[0].edges.len(), 2);
    }
}
