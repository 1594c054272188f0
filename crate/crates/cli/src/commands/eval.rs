//! Score an inference run against simulated ground truth: one
//! precision/recall row per penalty level.

use std::path::{Path, PathBuf};

use multiggm_core::engine::{InferredGraphSet, Symmetrization, TaskGraph};
use multiggm_core::eval::score;
use multiggm_core::mat::Mat;
use multiggm_core::model::Method;
use multiggm_core::sim::{EdgeSet, GroundTruth, SimParams};

use crate::errors::CliError;
use crate::formats::{
    format_pr_row, read_graphs, read_matrix, read_names, read_to_string, write_string, PR_HEADER,
};
use crate::manifest::{write_manifest, Manifest, VERSION};

#[derive(Clone, Debug)]
pub struct EvalOpts {
    pub inferred: PathBuf,
    pub truth: PathBuf,
    /// Defaults to `<inferred>/pr.tsv`.
    pub out: Option<PathBuf>,
    /// Count an edge as true only when its sign matches the truth.
    pub signed: bool,
}

/// Reconstruct enough ground truth from a truth directory for scoring.
pub fn read_truth(dir: &Path) -> Result<(GroundTruth, Vec<String>, Vec<String>), CliError> {
    let variables = read_names(&dir.join("variables.tsv"))?;
    let task_names = read_names(&dir.join("tasks.tsv"))?;
    let p = variables.len();
    let ancestor_graphs =
        read_graphs(&dir.join("ancestor.tsv"), &variables, &[String::from("ancestor")])?;
    let ancestor: EdgeSet = ancestor_graphs[0].edges.iter().map(|e| (e.i, e.j)).collect();
    let mut children = Vec::new();
    let mut concentrations = Vec::new();
    for name in &task_names {
        let graphs = read_graphs(
            &dir.join(format!("child_{name}.tsv")),
            &variables,
            std::slice::from_ref(name),
        )?;
        children.push(graphs[0].edges.iter().map(|e| (e.i, e.j)).collect());
        let k = read_matrix(&dir.join(format!("k_{name}.tsv")))?;
        if k.rows() != p || k.cols() != p {
            return Err(CliError::Data(format!(
                "k_{name}.tsv is {}x{}, expected {p}x{p}",
                k.rows(),
                k.cols()
            )));
        }
        concentrations.push(k);
    }
    let tasks = task_names.len();
    let truth = GroundTruth {
        ancestor,
        children,
        concentrations,
        signs: Mat::identity(p),
        params: SimParams {
            p,
            k: 0,
            tasks,
            delta: 0,
            n_per_task: vec![0; tasks],
            deflation: 0.9,
            seed: 0,
        },
    };
    Ok((truth, variables, task_names))
}

/// One graph set per penalty level, read back from an inference run.
pub fn read_inferred(
    dir: &Path,
    variables: &[String],
    task_names: &[String],
) -> Result<Vec<(f64, Vec<TaskGraph>)>, CliError> {
    let lambdas_path = dir.join("lambdas.tsv");
    let text = read_to_string(&lambdas_path)?;
    let mut out = Vec::new();
    for (lno, line) in text.lines().enumerate() {
        if lno == 0 {
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 2 {
            return Err(CliError::Data(format!(
                "{}:{}: expected 2 columns",
                lambdas_path.display(),
                lno + 1
            )));
        }
        let idx: usize = cols[0].trim().parse().map_err(|_| {
            CliError::Data(format!("{}:{}: bad index", lambdas_path.display(), lno + 1))
        })?;
        let lambda: f64 = cols[1].trim().parse().map_err(|_| {
            CliError::Data(format!("{}:{}: bad lambda", lambdas_path.display(), lno + 1))
        })?;
        let graphs =
            read_graphs(&dir.join(format!("edges_{idx:04}.tsv")), variables, task_names)?;
        out.push((lambda, graphs));
    }
    Ok(out)
}

pub fn run(opts: &EvalOpts) -> Result<PathBuf, CliError> {
    let (truth, variables, task_names) = read_truth(&opts.truth)?;
    let inferred_vars = read_names(&opts.inferred.join("variables.tsv"))?;
    if inferred_vars != variables {
        return Err(CliError::Data(
            "inferred run and truth disagree on variables".to_string(),
        ));
    }
    let levels = read_inferred(&opts.inferred, &variables, &task_names)?;

    let mut table = String::from(PR_HEADER);
    table.push('\n');
    for (idx, (lambda, graphs)) in levels.iter().enumerate() {
        let set = InferredGraphSet {
            lambda: *lambda,
            method: Method::Independent,
            alpha: 0.5,
            symmetrization: Symmetrization::And,
            graphs: graphs.clone(),
            node_diagnostics: Vec::new(),
        };
        let pt = score(&set, &truth, opts.signed)?;
        table.push_str(&format_pr_row(idx, &pt));
    }
    let out = opts
        .out
        .clone()
        .unwrap_or_else(|| opts.inferred.join("pr.tsv"));
    write_string(&out, &table)?;
    // the table usually lands inside the inference run's directory; only
    // write an eval manifest where it would not clobber that run's one
    if let Some(dir) = out.parent() {
        if !dir.join("manifest.json").exists() {
            write_manifest(
                dir,
                &Manifest::Eval {
                    version: VERSION.to_string(),
                    inferred: opts.inferred.display().to_string(),
                    truth: opts.truth.display().to_string(),
                    signed: opts.signed,
                },
            )?;
        }
    }
    Ok(out)
}
