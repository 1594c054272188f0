//! Standalone re-verification of an inference run: rebuild the node
//! problems from the recorded configuration and data, plug in the emitted
//! coefficients, and recompute every subgradient certificate.

use std::collections::BTreeMap;
use std::path::PathBuf;

use multiggm_core::covariance::{block_problem, empirical_covariance, quad_gradient};
use multiggm_core::model::{center_columns, validate_dataset, Method, PenaltySpec};
use multiggm_core::penalty::{
    coop_subdiff_element, group_subdiff_element, lasso_subdiff_element, GroupView,
};

use crate::commands::parse_method;
use crate::errors::CliError;
use crate::formats::{read_dataset, read_names, read_to_string};
use crate::manifest::{read_manifest, Manifest};

#[derive(Clone, Debug)]
pub struct CheckOpts {
    pub run: PathBuf,
}

pub struct CheckReport {
    /// (lambda, worst relative residual over nodes) per level, where 1.0
    /// is the acceptance bound 1e-8 (lambda + |l|_inf).
    pub levels: Vec<(f64, f64)>,
    pub all_certified: bool,
}

pub fn run(opts: &CheckOpts) -> Result<CheckReport, CliError> {
    let manifest = read_manifest(&opts.run)?;
    let Manifest::Infer {
        data,
        method,
        alpha,
        center,
        standardize,
        task_weights,
        ..
    } = manifest
    else {
        return Err(CliError::Usage("check needs an inference run directory".into()));
    };
    if standardize {
        return Err(CliError::Usage(
            "check does not support standardized runs yet; rerun without standardization".into(),
        ));
    }
    let method = parse_method(&method)?;

    let raw = read_dataset(&PathBuf::from(&data))?;
    let mut dataset = validate_dataset(raw)?;
    if center {
        dataset = center_columns(dataset);
    }
    let mut spec = PenaltySpec::with_alpha(method, 1.0, alpha)?;
    if let Some(w) = task_weights {
        if !method.is_l1() && w.iter().any(|&x| x != 1.0) {
            return Err(CliError::Usage(
                "check does not support non-unit group/coop weights".into(),
            ));
        }
        spec = spec.with_weights(w)?;
    }
    let cov = empirical_covariance(&dataset, spec.alpha);
    let weights = spec.effective_weights(&cov.task_sizes);

    let variables = read_names(&opts.run.join("variables.tsv"))?;
    let task_names = read_names(&opts.run.join("task_names.tsv"))?;
    let p = variables.len();
    let tasks = task_names.len();
    let m = p - 1;

    let lambdas_text = read_to_string(&opts.run.join("lambdas.tsv"))?;
    let mut levels = Vec::new();
    let mut all_ok = true;
    for line in lambdas_text.lines().skip(1) {
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        let idx: usize = cols[0]
            .trim()
            .parse()
            .map_err(|_| CliError::Data("bad lambdas.tsv index".into()))?;
        let lambda: f64 = cols[1]
            .trim()
            .parse()
            .map_err(|_| CliError::Data("bad lambdas.tsv value".into()))?;

        // reconstruct per-node stacked coefficient vectors
        let coef_path = opts.run.join(format!("coefficients_{idx:04}.tsv"));
        let coef_text = read_to_string(&coef_path)?;
        let mut betas: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
        for (lno, row) in coef_text.lines().enumerate().skip(1) {
            if row.trim().is_empty() {
                continue;
            }
            let cols: Vec<&str> = row.split('\t').collect();
            if cols.len() != 4 {
                return Err(CliError::Data(format!(
                    "{}:{}: expected 4 columns",
                    coef_path.display(),
                    lno + 1
                )));
            }
            let t = task_names.iter().position(|x| x == cols[0]).ok_or_else(|| {
                CliError::Data(format!("{}:{}: unknown task", coef_path.display(), lno + 1))
            })?;
            let target = variables.iter().position(|x| x == cols[1]).ok_or_else(|| {
                CliError::Data(format!("{}:{}: unknown target", coef_path.display(), lno + 1))
            })?;
            let feature = variables.iter().position(|x| x == cols[2]).ok_or_else(|| {
                CliError::Data(format!("{}:{}: unknown feature", coef_path.display(), lno + 1))
            })?;
            let beta: f64 = cols[3].trim().parse().map_err(|_| {
                CliError::Data(format!("{}:{}: bad beta", coef_path.display(), lno + 1))
            })?;
            let f = if feature < target { feature } else { feature - 1 };
            betas.entry(target).or_insert_with(|| vec![0.0; tasks * m])[t * m + f] = beta;
        }

        let mut worst = 0.0f64;
        for node in 0..p {
            let zero = vec![0.0; tasks * m];
            let beta = betas.get(&node).unwrap_or(&zero);
            let problem = block_problem(&cov, node, &spec);
            let grad = quad_gradient(&problem, beta)
                .map_err(|e| CliError::Data(e.to_string()))?;
            let view = GroupView::new(beta, m, tasks);
            let cert = match method {
                Method::Group => group_subdiff_element(view, &grad, lambda),
                Method::Coop => coop_subdiff_element(view, &grad, lambda),
                _ => lasso_subdiff_element(view, &grad, lambda, &weights),
            };
            let scale = lambda + problem.linear_inf_norm();
            let rel = cert.residual / (1e-8 * scale);
            worst = worst.max(rel);
        }
        all_ok &= worst < 1.0;
        levels.push((lambda, worst));
    }
    Ok(CheckReport { levels, all_certified: all_ok })
}
