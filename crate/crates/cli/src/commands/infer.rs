//! Inference over one dataset: per-node problems at a fixed penalty or
//! down a penalty grid, node-parallel, with per-level edge lists,
//! coefficients, diagnostics and pseudo-log-likelihoods written out.

use std::fmt::Write as _;
use std::path::PathBuf;

use multiggm_core::covariance::empirical_covariance;
use multiggm_core::engine::{
    collect_path, global_lambda_max, log_grid, solve_node_path, graph_pseudo_loglik,
    Symmetrization,
};
use multiggm_core::model::{center_columns, validate_dataset, Method, PenaltySpec, TaskDataset};

use crate::errors::CliError;
use crate::formats::{read_dataset, write_graph_set, write_names, write_string};
use crate::manifest::{write_manifest, Manifest, VERSION};
use crate::parallel::{resolve_workers, run_jobs};

#[derive(Clone, Debug)]
pub struct InferOpts {
    pub data: PathBuf,
    pub out: PathBuf,
    pub method: Method,
    pub alpha: f64,
    /// Fixed penalty level; when absent a log grid is used instead.
    pub lambda: Option<f64>,
    pub grid_size: usize,
    pub grid_ratio: f64,
    pub symmetrization: Symmetrization,
    pub center: bool,
    pub standardize: bool,
    pub task_weights: Option<Vec<f64>>,
    pub workers: Option<usize>,
    pub seed: u64,
}

#[derive(Debug)]
pub struct InferSummary {
    pub grid: Vec<f64>,
    pub all_converged: bool,
}

/// Divide each column by its standard deviation, per task.
fn standardize(mut data: TaskDataset) -> Result<TaskDataset, CliError> {
    for (t, m) in data.tasks.iter_mut().enumerate() {
        let (rows, cols) = (m.rows(), m.cols());
        for j in 0..cols {
            let mut ss = 0.0;
            for i in 0..rows {
                ss += m.get(i, j) * m.get(i, j);
            }
            let sd = (ss / rows as f64).sqrt();
            if sd == 0.0 {
                return Err(CliError::Data(format!(
                    "task {t} column {j} has zero variance, cannot standardize"
                )));
            }
            for i in 0..rows {
                m.set(i, j, m.get(i, j) / sd);
            }
        }
    }
    Ok(data)
}

pub fn run(opts: &InferOpts) -> Result<InferSummary, CliError> {
    let raw = read_dataset(&opts.data)?;
    let mut data = validate_dataset(raw)?;
    if opts.center {
        data = center_columns(data);
    }
    if opts.standardize {
        data = standardize(data)?;
    }

    let mut spec = PenaltySpec::with_alpha(opts.method, 1.0, opts.alpha)?;
    if let Some(w) = &opts.task_weights {
        if w.len() != data.num_tasks() {
            return Err(CliError::Usage(format!(
                "{} weights for {} tasks",
                w.len(),
                data.num_tasks()
            )));
        }
        spec = spec.with_weights(w.clone())?;
    }

    let cov = empirical_covariance(&data, spec.alpha);
    let grid = match opts.lambda {
        Some(lambda) => {
            if !(lambda >= 0.0) {
                return Err(CliError::Usage(format!("lambda must be >= 0, got {lambda}")));
            }
            vec![lambda]
        }
        None => {
            let lmax = global_lambda_max(&cov, &spec);
            log_grid(lmax, opts.grid_size, opts.grid_ratio)?
        }
    };

    let workers = resolve_workers(opts.workers);
    let p = cov.num_variables();
    let per_node = run_jobs(workers, p, |node| solve_node_path(&cov, &spec, node, &grid));
    let (path, graph_sets) = collect_path(&cov, &spec, opts.symmetrization, &grid, per_node)?;

    // outputs
    write_names(&opts.out.join("variables.tsv"), &data.variable_names)?;
    write_names(&opts.out.join("task_names.tsv"), &data.task_names)?;

    let mut lambdas = String::from("lambda_index\tlambda\n");
    for (k, l) in grid.iter().enumerate() {
        let _ = writeln!(lambdas, "{k}\t{l}");
    }
    write_string(&opts.out.join("lambdas.tsv"), &lambdas)?;

    let mut loglik = String::from("lambda_index\tlambda\ttask\tpseudo_loglik\n");
    for (k, set) in graph_sets.iter().enumerate() {
        write_graph_set(
            &opts.out.join(format!("edges_{k:04}.tsv")),
            &data.variable_names,
            &data.task_names,
            set,
        )?;
        for (t, ll) in graph_pseudo_loglik(&cov, set).iter().enumerate() {
            let _ = writeln!(loglik, "{k}\t{}\t{}\t{}", set.lambda, data.task_names[t], ll);
        }
    }
    write_string(&opts.out.join("loglik.tsv"), &loglik)?;

    // per-level coefficients: sparse, directed (target regressed on feature)
    let m = p - 1;
    for (k, _) in grid.iter().enumerate() {
        let mut out = String::from("task\ttarget\tfeature\tbeta\n");
        for node in 0..p {
            let entry = &path.node_entries[node][k];
            if entry.beta.is_empty() {
                continue;
            }
            for t in 0..data.num_tasks() {
                for f in 0..m {
                    let b = entry.beta[t * m + f];
                    if b != 0.0 {
                        let j = if f < node { f } else { f + 1 };
                        let _ = writeln!(
                            out,
                            "{}\t{}\t{}\t{}",
                            data.task_names[t],
                            data.variable_names[node],
                            data.variable_names[j],
                            b
                        );
                    }
                }
            }
        }
        write_string(&opts.out.join(format!("coefficients_{k:04}.tsv")), &out)?;
    }

    let mut diags = String::from("lambda_index\tlambda\tnode\titerations\tresidual\tconverged\terror\n");
    let mut all_converged = true;
    for (k, set) in graph_sets.iter().enumerate() {
        for nd in &set.node_diagnostics {
            all_converged &= nd.converged;
            let _ = writeln!(
                diags,
                "{k}\t{}\t{}\t{}\t{}\t{}\t{}",
                set.lambda,
                data.variable_names[nd.node],
                nd.iterations,
                nd.residual,
                nd.converged as u8,
                nd.error.as_deref().unwrap_or("-")
            );
        }
    }
    write_string(&opts.out.join("diagnostics.tsv"), &diags)?;

    write_manifest(
        &opts.out,
        &Manifest::Infer {
            version: VERSION.to_string(),
            seed: opts.seed,
            data: opts.data.display().to_string(),
            method: opts.method.name().to_string(),
            alpha: spec.alpha,
            lambda: opts.lambda,
            grid_size: opts.grid_size,
            grid_ratio: opts.grid_ratio,
            symmetrization: opts.symmetrization.name().to_string(),
            center: opts.center,
            standardize: opts.standardize,
            task_weights: opts.task_weights.clone(),
            rng_algorithm: multiggm_core::rng::SeededRng::ALGORITHM.to_string(),
        },
    )?;

    Ok(InferSummary { grid, all_converged })
}
