//! Benchmark generator: a random ancestor graph, children obtained by edge
//! perturbation, signed diagonally dominant concentration matrices built
//! from deflated normalized adjacencies, and Gaussian task samples drawn
//! from their inverses.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use libm::sqrt;

use crate::mat::{Cholesky, Mat};
use crate::model::TaskDataset;
use crate::rng::SeededRng;

/// Undirected edge list with `i < j`, kept sorted.
pub type EdgeSet = Vec<(usize, usize)>;

#[derive(Clone, Debug)]
pub struct SimParams {
    pub p: usize,
    pub k: usize,
    pub tasks: usize,
    pub delta: usize,
    pub n_per_task: Vec<usize>,
    pub deflation: f64,
    pub seed: u64,
}

/// Everything the evaluation needs to score inferred graphs: the ancestor,
/// the per-task true graphs, their concentration matrices and the sign
/// matrix they share.
#[derive(Clone, Debug)]
pub struct GroundTruth {
    pub ancestor: EdgeSet,
    pub children: Vec<EdgeSet>,
    pub concentrations: Vec<Mat>,
    pub signs: Mat,
    pub params: SimParams,
}

#[derive(Clone, Debug, PartialEq)]
pub enum SimError {
    /// k exceeds the number of distinct node pairs.
    TooManyEdges { k: usize, max: usize },
    /// delta exceeds the present or absent edge count.
    InfeasibleDelta { delta: usize, present: usize, absent: usize },
    BadDeflation { deflation: f64 },
    /// The concentration matrix failed to factor; upstream invariant broken.
    NotPositiveDefinite { task: usize },
    BadParams(String),
}

impl core::fmt::Display for SimError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            SimError::TooManyEdges { k, max } => {
                write!(f, "k = {k} exceeds the {max} possible edges")
            }
            SimError::InfeasibleDelta { delta, present, absent } => write!(
                f,
                "delta = {delta} infeasible with {present} present and {absent} absent edges"
            ),
            SimError::BadDeflation { deflation } => {
                write!(f, "deflation must be in (0, 1), got {deflation}")
            }
            SimError::NotPositiveDefinite { task } => {
                write!(f, "concentration matrix of task {task} is not positive definite")
            }
            SimError::BadParams(s) => write!(f, "{s}"),
        }
    }
}

impl core::error::Error for SimError {}

fn pair_count(p: usize) -> usize {
    p * (p - 1) / 2
}

/// Map a flat index in 0..p(p-1)/2 to the lexicographic pair (i, j), i < j.
fn unrank_pair(p: usize, mut idx: usize) -> (usize, usize) {
    for i in 0..p {
        let row = p - 1 - i;
        if idx < row {
            return (i, i + 1 + idx);
        }
        idx -= row;
    }
    unreachable!("pair index out of range")
}

/// Uniform k-subset of all node pairs (Floyd's algorithm), returned sorted.
pub fn draw_ancestor(p: usize, k: usize, rng: &mut SeededRng) -> Result<EdgeSet, SimError> {
    let total = pair_count(p);
    if k > total {
        return Err(SimError::TooManyEdges { k, max: total });
    }
    let mut chosen: Vec<usize> = Vec::with_capacity(k);
    for m in (total - k)..total {
        let r = rng.below(m + 1);
        if chosen.contains(&r) {
            chosen.push(m);
        } else {
            chosen.push(r);
        }
    }
    let mut edges: EdgeSet = chosen.into_iter().map(|idx| unrank_pair(p, idx)).collect();
    edges.sort_unstable();
    Ok(edges)
}

/// Remove `delta` uniformly chosen existing edges and add `delta` uniformly
/// chosen absent ones; the edge count is preserved and the symmetric
/// difference with the ancestor is exactly 2 delta.
pub fn perturb_child(
    ancestor: &EdgeSet,
    p: usize,
    delta: usize,
    rng: &mut SeededRng,
) -> Result<EdgeSet, SimError> {
    let total = pair_count(p);
    let present = ancestor.len();
    let absent = total - present;
    if delta > present || delta > absent {
        return Err(SimError::InfeasibleDelta { delta, present, absent });
    }
    // delete delta existing edges
    let mut keep = ancestor.clone();
    for _ in 0..delta {
        let r = rng.below(keep.len());
        keep.remove(r);
    }
    // add delta absent edges (absent from the ancestor, so disjoint from
    // the removals and from everything kept)
    let absent_edges: EdgeSet = (0..total)
        .map(|idx| unrank_pair(p, idx))
        .filter(|e| ancestor.binary_search(e).is_err())
        .collect();
    let mut pool = absent_edges;
    for _ in 0..delta {
        let r = rng.below(pool.len());
        keep.push(pool.swap_remove(r));
    }
    keep.sort_unstable();
    Ok(keep)
}

/// Symmetric +-1 matrix with unit diagonal; the strict upper triangle is
/// i.i.d. Rademacher, drawn row-major.
pub fn rademacher_signs(p: usize, rng: &mut SeededRng) -> Mat {
    let mut s = Mat::identity(p);
    for i in 0..p {
        for j in (i + 1)..p {
            let v = if rng.next_u64() & 1 == 1 { 1.0 } else { -1.0 };
            s.set(i, j, v);
            s.set(j, i, v);
        }
    }
    s
}

/// Concentration matrix for one child graph: unit diagonal, and for each
/// edge (i, j)
///
/// ```text
/// K_ij = -deflation * sign_ij / (sqrt(d_i d_j) * max(1, r_i, r_j)),
/// ```
///
/// where d is the node degree and r_i = sum_j 1/sqrt(d_i d_j) is row i's
/// normalized adjacency row sum. Plain sqrt(d_i d_j) normalization alone
/// can exceed row sum one (e.g. on stars); the per-row cap deflates only
/// the rows that need it and makes every row strictly diagonally dominant
/// with margin at least 1 - deflation.
pub fn build_concentration(
    edges: &EdgeSet,
    signs: &Mat,
    deflation: f64,
    p: usize,
) -> Result<Mat, SimError> {
    if !(deflation > 0.0 && deflation < 1.0) {
        return Err(SimError::BadDeflation { deflation });
    }
    let mut degree = vec![0usize; p];
    for &(i, j) in edges {
        degree[i] += 1;
        degree[j] += 1;
    }
    let mut row_sum = vec![0.0f64; p];
    for &(i, j) in edges {
        let w = 1.0 / sqrt((degree[i] * degree[j]) as f64);
        row_sum[i] += w;
        row_sum[j] += w;
    }
    let mut k = Mat::identity(p);
    for &(i, j) in edges {
        let cap = row_sum[i].max(row_sum[j]).max(1.0);
        let w = -deflation * signs.get(i, j) / (sqrt((degree[i] * degree[j]) as f64) * cap);
        k.set(i, j, w);
        k.set(j, i, w);
    }
    Ok(k)
}

/// Draw each task's sample from N(0, K_t^-1) by factoring K_t = L L' and
/// solving L' y = z against standard normal z. Task t consumes child
/// stream t of `rng`, so tasks can be generated in any order.
pub fn sample_tasks(
    truth: &GroundTruth,
    n_per_task: &[usize],
    rng: &SeededRng,
) -> Result<TaskDataset, SimError> {
    let p = truth.params.p;
    let tasks = truth.concentrations.len();
    assert_eq!(n_per_task.len(), tasks);
    let mut mats = Vec::with_capacity(tasks);
    for (t, k) in truth.concentrations.iter().enumerate() {
        let chol =
            Cholesky::factor_strict(k).map_err(|_| SimError::NotPositiveDefinite { task: t })?;
        let mut stream = rng.split(t as u64);
        let n = n_per_task[t];
        let mut m = Mat::zeros(n, p);
        let mut z = vec![0.0; p];
        for row in 0..n {
            for zi in z.iter_mut() {
                *zi = stream.next_gaussian();
            }
            let y = chol.solve_lt(&z);
            for (col, v) in y.iter().enumerate() {
                m.set(row, col, *v);
            }
        }
        mats.push(m);
    }
    Ok(TaskDataset {
        tasks: mats,
        variable_names: (1..=p).map(|i| format!("x{i}")).collect(),
        task_names: (1..=tasks).map(|t| format!("t{t}")).collect(),
    })
}

/// Run the whole protocol: ancestor, children, signs, concentrations and
/// task samples, all from the one seed in `params`.
pub fn generate(params: &SimParams) -> Result<(GroundTruth, TaskDataset), SimError> {
    if params.tasks == 0 || params.p < 2 {
        return Err(SimError::BadParams(format!(
            "need p >= 2 and tasks >= 1, got p = {}, tasks = {}",
            params.p, params.tasks
        )));
    }
    if params.n_per_task.len() != params.tasks {
        return Err(SimError::BadParams(format!(
            "{} sample sizes for {} tasks",
            params.n_per_task.len(),
            params.tasks
        )));
    }
    let root = SeededRng::new(params.seed);
    // dedicated streams: 0 = graph structure, 1 = signs, 2.. = task samples
    let mut graph_rng = root.split(0);
    let mut sign_rng = root.split(1);
    let sample_root = root.split(2);

    let ancestor = draw_ancestor(params.p, params.k, &mut graph_rng)?;
    let mut children = Vec::with_capacity(params.tasks);
    for _ in 0..params.tasks {
        children.push(perturb_child(&ancestor, params.p, params.delta, &mut graph_rng)?);
    }
    let signs = rademacher_signs(params.p, &mut sign_rng);
    let concentrations = children
        .iter()
        .map(|c| build_concentration(c, &signs, params.deflation, params.p))
        .collect::<Result<Vec<_>, _>>()?;
    let truth = GroundTruth {
        ancestor,
        children,
        concentrations,
        signs,
        params: params.clone(),
    };
    let data = sample_tasks(&truth, &params.n_per_task, &sample_root)?;
    Ok((truth, data))
}
