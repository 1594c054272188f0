//! Command implementations behind the CLI, callable in-process.

pub mod check;
pub mod eval;
pub mod infer;
pub mod simulate;
pub mod sweep;

use std::path::Path;

use crate::errors::CliError;
use crate::manifest::{read_manifest, Manifest};

/// Re-run the command recorded in `dir`'s manifest, writing to `out`.
/// Outputs are byte-identical to the original run for the same binary.
pub fn rerun(dir: &Path, out: &Path) -> Result<(), CliError> {
    match read_manifest(dir)? {
        Manifest::Simulate { seed, p, k, tasks, delta, n_per_task, deflation, .. } => {
            simulate::run(&simulate::SimulateOpts {
                p,
                k,
                tasks,
                delta,
                n_per_task,
                deflation,
                seed,
                out: out.to_path_buf(),
            })
        }
        Manifest::Infer {
            seed,
            data,
            method,
            alpha,
            lambda,
            grid_size,
            grid_ratio,
            symmetrization,
            center,
            standardize,
            task_weights,
            ..
        } => {
            let opts = infer::InferOpts {
                data: data.into(),
                out: out.to_path_buf(),
                method: parse_method(&method)?,
                alpha,
                lambda,
                grid_size,
                grid_ratio,
                symmetrization: parse_symmetrization(&symmetrization)?,
                center,
                standardize,
                task_weights,
                workers: None,
                seed,
            };
            infer::run(&opts).map(|_| ())
        }
        Manifest::Eval { inferred, truth, signed, .. } => {
            eval::run(&eval::EvalOpts {
                inferred: inferred.into(),
                truth: truth.into(),
                out: Some(out.join("pr.tsv")),
                signed,
            })
            .map(|_| ())
        }
        Manifest::Sweep {
            seed,
            p,
            k,
            tasks,
            delta,
            n_per_task,
            deflation,
            methods,
            replicates,
            grid_size,
            grid_ratio,
            alpha,
            symmetrization,
            ..
        } => {
            let methods = methods
                .iter()
                .map(|m| parse_method(m))
                .collect::<Result<Vec<_>, _>>()?;
            sweep::run(&sweep::SweepOpts {
                p,
                k,
                tasks,
                delta,
                n_per_task,
                deflation,
                seed,
                methods,
                replicates,
                grid_size,
                grid_ratio,
                alpha,
                symmetrization: parse_symmetrization(&symmetrization)?,
                workers: None,
                out: out.to_path_buf(),
            })
            .map(|_| ())
        }
    }
}

pub fn parse_method(s: &str) -> Result<multiggm_core::model::Method, CliError> {
    multiggm_core::model::Method::parse(s)
        .ok_or_else(|| CliError::Usage(format!("unknown method {s:?}")))
}

pub fn parse_symmetrization(s: &str) -> Result<multiggm_core::engine::Symmetrization, CliError> {
    multiggm_core::engine::Symmetrization::parse(s)
        .ok_or_else(|| CliError::Usage(format!("unknown symmetrization rule {s:?}")))
}
