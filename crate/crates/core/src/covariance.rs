//! Empirical covariances, their pooled and blended variants, the stacked
//! per-node quadratic sub-problems, and the pseudo-log-likelihood.

use alloc::vec;
use alloc::vec::Vec;
use libm::log;

use crate::mat::Mat;
use crate::model::{Method, PenaltySpec, TaskDataset};

/// Per-task covariances S_t (1/n_t normalization), their size-weighted
/// average, and the alpha-blend of the two.
#[derive(Clone, Debug)]
pub struct CovarianceSet {
    pub per_task: Vec<Mat>,
    pub pooled: Mat,
    pub blended: Vec<Mat>,
    pub task_sizes: Vec<usize>,
    pub alpha: f64,
}

impl CovarianceSet {
    pub fn num_tasks(&self) -> usize {
        self.per_task.len()
    }

    pub fn num_variables(&self) -> usize {
        self.pooled.rows()
    }
}

/// Covariance of each centered task, S_t = X_t' X_t / n_t, together with
/// pooled = sum_t (n_t/n) S_t and blended_t = alpha S_t + (1-alpha) pooled.
pub fn empirical_covariance(data: &TaskDataset, alpha: f64) -> CovarianceSet {
    let p = data.num_variables();
    let sizes = data.task_sizes();
    let n_total: usize = sizes.iter().sum();
    let mut per_task = Vec::with_capacity(data.num_tasks());
    for m in &data.tasks {
        let n = m.rows() as f64;
        let mut s = Mat::zeros(p, p);
        for i in 0..p {
            for j in i..p {
                let mut acc = 0.0;
                for r in 0..m.rows() {
                    acc += m.get(r, i) * m.get(r, j);
                }
                let v = acc / n;
                s.set(i, j, v);
                s.set(j, i, v);
            }
        }
        per_task.push(s);
    }
    let mut pooled = Mat::zeros(p, p);
    for (s, &nt) in per_task.iter().zip(&sizes) {
        let w = nt as f64 / n_total as f64;
        for i in 0..p {
            for j in 0..p {
                pooled.set(i, j, pooled.get(i, j) + w * s.get(i, j));
            }
        }
    }
    let blended = per_task
        .iter()
        .map(|s| {
            Mat::from_fn(p, p, |i, j| alpha * s.get(i, j) + (1.0 - alpha) * pooled.get(i, j))
        })
        .collect();
    CovarianceSet { per_task, pooled, blended, task_sizes: sizes, alpha }
}

/// The stacked quadratic sub-problem for one node: minimize
/// 1/2 b' Q b + b' l (+ penalty), where Q is block-diagonal with one
/// (p-1) x (p-1) covariance block per task and l stacks the node's
/// covariance columns in the same task-major order.
///
/// The blocks are never materialized as one T(p-1) square matrix; all
/// products run block-wise.
#[derive(Clone, Debug)]
pub struct BlockCovariance {
    pub node: usize,
    pub blocks: Vec<Mat>,
    pub linear: Vec<f64>,
    pub p: usize,
}

impl BlockCovariance {
    pub fn num_tasks(&self) -> usize {
        self.blocks.len()
    }

    /// Stacked dimension T(p-1).
    pub fn dim(&self) -> usize {
        self.linear.len()
    }

    pub fn features(&self) -> usize {
        self.p - 1
    }

    /// grad = Q beta + l, written into `out`.
    pub fn gradient(&self, beta: &[f64], out: &mut [f64]) {
        assert_eq!(beta.len(), self.dim());
        assert_eq!(out.len(), self.dim());
        out.copy_from_slice(&self.linear);
        let m = self.features();
        for (t, block) in self.blocks.iter().enumerate() {
            block.matvec_add(&beta[t * m..(t + 1) * m], &mut out[t * m..(t + 1) * m]);
        }
    }

    /// f(beta) = 1/2 beta' Q beta + beta' l, block-wise.
    pub fn objective(&self, beta: &[f64]) -> f64 {
        assert_eq!(beta.len(), self.dim());
        let m = self.features();
        let mut total = 0.0;
        for (t, block) in self.blocks.iter().enumerate() {
            let bt = &beta[t * m..(t + 1) * m];
            total += 0.5 * block.quad_form(bt);
            for (b, l) in bt.iter().zip(&self.linear[t * m..(t + 1) * m]) {
                total += b * l;
            }
        }
        total
    }

    /// Largest absolute entry of the linear term.
    pub fn linear_inf_norm(&self) -> f64 {
        self.linear.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// Task index of a stacked coordinate.
    #[inline]
    pub fn task_of(&self, coord: usize) -> usize {
        coord / self.features()
    }

    /// Dense submatrix of the block-diagonal quadratic on the given
    /// coordinates; cross-task entries are structurally zero.
    pub fn restricted(&self, coords: &[usize]) -> Mat {
        let m = self.features();
        let n = coords.len();
        let mut out = Mat::zeros(n, n);
        for (a, &ca) in coords.iter().enumerate() {
            let (ta, ia) = (ca / m, ca % m);
            for (b, &cb) in coords.iter().enumerate() {
                let (tb, ib) = (cb / m, cb % m);
                if ta == tb {
                    out.set(a, b, self.blocks[ta].get(ia, ib));
                }
            }
        }
        out
    }
}

/// Errors from covariance-level operations.
#[derive(Clone, Debug, PartialEq)]
pub enum CovarianceError {
    /// K must have a strictly positive diagonal for the pseudo-likelihood.
    NonPositiveDiagonal { index: usize, value: f64 },
    LengthMismatch { expected: usize, got: usize },
}

impl core::fmt::Display for CovarianceError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            CovarianceError::NonPositiveDiagonal { index, value } => {
                write!(f, "K[{index},{index}] = {value} must be > 0")
            }
            CovarianceError::LengthMismatch { expected, got } => {
                write!(f, "vector length {got}, expected {expected}")
            }
        }
    }
}

impl core::error::Error for CovarianceError {}

/// Build node `i`'s stacked sub-problem from the covariance set.
/// Which matrix fills the blocks depends on the method: the blended
/// covariances for `intertwined`, the pooled covariance replicated for
/// `pooled`, and each task's own covariance otherwise.
pub fn block_problem(cov: &CovarianceSet, node: usize, spec: &PenaltySpec) -> BlockCovariance {
    let p = cov.num_variables();
    assert!(node < p, "node {node} out of range for p = {p}");
    let tasks = cov.num_tasks();
    let source = |t: usize| -> &Mat {
        match spec.method {
            Method::Intertwined => &cov.blended[t],
            Method::Pooled => &cov.pooled,
            _ => &cov.per_task[t],
        }
    };
    let m = p - 1;
    let mut blocks = Vec::with_capacity(tasks);
    let mut linear = Vec::with_capacity(tasks * m);
    let keep: Vec<usize> = (0..p).filter(|&j| j != node).collect();
    for t in 0..tasks {
        let s = source(t);
        let mut block = Mat::zeros(m, m);
        for (a, &ja) in keep.iter().enumerate() {
            for (b, &jb) in keep.iter().enumerate() {
                block.set(a, b, s.get(ja, jb));
            }
        }
        blocks.push(block);
        for &j in &keep {
            linear.push(s.get(j, node));
        }
    }
    BlockCovariance { node, blocks, linear, p }
}

/// Pseudo-log-likelihood of a concentration matrix K given covariance S
/// over n observations:
///
/// ```text
/// n/2 log det D - n/2 tr(D^-1/2 K S K D^-1/2) - np/2 log(2 pi),
/// ```
///
/// with D = diag(K). The trace reduces to sum_i (K_i' S K_i) / K_ii.
pub fn pseudo_loglik(k: &Mat, s: &Mat, n: usize) -> Result<f64, CovarianceError> {
    let p = k.rows();
    assert_eq!(k.cols(), p);
    assert_eq!(s.rows(), p);
    assert_eq!(s.cols(), p);
    let mut logdet = 0.0;
    for i in 0..p {
        let d = k.get(i, i);
        if !(d > 0.0) {
            return Err(CovarianceError::NonPositiveDiagonal { index: i, value: d });
        }
        logdet += log(d);
    }
    let mut trace = 0.0;
    for i in 0..p {
        // K_i' S K_i with K_i the i-th column of K
        let mut quad = 0.0;
        for a in 0..p {
            let ka = k.get(a, i);
            if ka == 0.0 {
                continue;
            }
            let mut acc = 0.0;
            for b in 0..p {
                acc += s.get(a, b) * k.get(b, i);
            }
            quad += ka * acc;
        }
        trace += quad / k.get(i, i);
    }
    let nf = n as f64;
    Ok(0.5 * nf * logdet
        - 0.5 * nf * trace
        - 0.5 * nf * p as f64 * log(2.0 * core::f64::consts::PI))
}

/// f(beta) for a stacked problem; errors on length mismatch.
pub fn quad_objective(problem: &BlockCovariance, beta: &[f64]) -> Result<f64, CovarianceError> {
    if beta.len() != problem.dim() {
        return Err(CovarianceError::LengthMismatch { expected: problem.dim(), got: beta.len() });
    }
    Ok(problem.objective(beta))
}

/// grad f(beta) = Q beta + l for a stacked problem.
pub fn quad_gradient(problem: &BlockCovariance, beta: &[f64]) -> Result<Vec<f64>, CovarianceError> {
    if beta.len() != problem.dim() {
        return Err(CovarianceError::LengthMismatch { expected: problem.dim(), got: beta.len() });
    }
    let mut out = vec![0.0; problem.dim()];
    problem.gradient(beta, &mut out);
    Ok(out)
}
