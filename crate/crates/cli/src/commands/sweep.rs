//! Benchmark sweep: replicated simulation, inference with every requested
//! method over one shared per-method grid, and precision/recall aggregated
//! at fixed penalty levels across replicates.
//!
//! The grid is shared so that averaging happens at fixed lambda: pass one
//! computes every replicate's lambda-max per method, pass two solves on a
//! log grid anchored at the largest of them (so every curve starts at an
//! empty graph). Replicates run in parallel; each is a pure function of
//! the master seed and its index.

use std::fmt::Write as _;
use std::path::PathBuf;

use multiggm_core::covariance::{empirical_covariance, CovarianceSet};
use multiggm_core::engine::{global_lambda_max, infer_path_from_cov, log_grid, Symmetrization};
use multiggm_core::eval::{aggregate_curves, auc_pr, PRPoint};
use multiggm_core::model::{center_columns, Method, PenaltySpec};
use multiggm_core::rng::SeededRng;
use multiggm_core::sim::{generate, GroundTruth, SimParams};

use crate::errors::CliError;
use crate::formats::write_string;
use crate::manifest::{write_manifest, Manifest, VERSION};
use crate::parallel::{resolve_workers, run_jobs};

#[derive(Clone, Debug)]
pub struct SweepOpts {
    pub p: usize,
    pub k: usize,
    pub tasks: usize,
    pub delta: usize,
    pub n_per_task: Vec<usize>,
    pub deflation: f64,
    pub seed: u64,
    pub methods: Vec<Method>,
    pub replicates: usize,
    pub grid_size: usize,
    pub grid_ratio: f64,
    pub alpha: f64,
    pub symmetrization: Symmetrization,
    pub workers: Option<usize>,
    pub out: PathBuf,
}

/// Per-method aggregate: mean and standard error of the per-replicate
/// areas under the precision/recall curve, plus the raw per-replicate
/// values in replicate order.
pub struct MethodSummary {
    pub method: Method,
    pub mean_auc: f64,
    pub se_auc: f64,
    pub replicate_auc: Vec<f64>,
    pub points: Vec<Vec<PRPoint>>,
}

pub struct SweepSummary {
    pub methods: Vec<MethodSummary>,
}

fn replicate_seed(master: u64, replicate: usize) -> u64 {
    SeededRng::new(master).split(replicate as u64).seed()
}

pub fn run(opts: &SweepOpts) -> Result<SweepSummary, CliError> {
    if opts.replicates == 0 {
        return Err(CliError::Usage("need at least one replicate".into()));
    }
    if opts.grid_size < 2 {
        return Err(CliError::Usage("sweep needs a grid of at least 2 points".into()));
    }
    if opts.methods.is_empty() {
        return Err(CliError::Usage("no methods requested".into()));
    }
    let workers = resolve_workers(opts.workers);

    // pass 1: simulate every replicate and record per-method lambda-max
    let prepared: Vec<Result<(GroundTruth, CovarianceSet, Vec<f64>), CliError>> =
        run_jobs(workers, opts.replicates, |r| {
            let params = SimParams {
                p: opts.p,
                k: opts.k,
                tasks: opts.tasks,
                delta: opts.delta,
                n_per_task: opts.n_per_task.clone(),
                deflation: opts.deflation,
                seed: replicate_seed(opts.seed, r),
            };
            let (truth, data) = generate(&params)?;
            let data = center_columns(data);
            let cov = empirical_covariance(&data, opts.alpha);
            let lmaxes = opts
                .methods
                .iter()
                .map(|&method| {
                    let spec = PenaltySpec::with_alpha(method, 1.0, opts.alpha)?;
                    Ok(global_lambda_max(&cov, &spec))
                })
                .collect::<Result<Vec<f64>, CliError>>()?;
            Ok((truth, cov, lmaxes))
        });
    let mut replicates = Vec::with_capacity(opts.replicates);
    for p in prepared {
        replicates.push(p?);
    }

    // shared per-method grids anchored at the largest replicate lambda-max
    let mut grids = Vec::with_capacity(opts.methods.len());
    for (mi, &method) in opts.methods.iter().enumerate() {
        let lmax = replicates.iter().map(|(_, _, l)| l[mi]).fold(0.0f64, f64::max);
        let _ = method;
        grids.push(log_grid(lmax, opts.grid_size, opts.grid_ratio)?);
    }

    // pass 2: solve every replicate on the shared grids and score
    let scored: Vec<Result<Vec<Vec<PRPoint>>, CliError>> =
        run_jobs(workers, opts.replicates, |r| {
            let (truth, cov, _) = &replicates[r];
            let mut per_method = Vec::with_capacity(opts.methods.len());
            for (mi, &method) in opts.methods.iter().enumerate() {
                let spec = PenaltySpec::with_alpha(method, 1.0, opts.alpha)?;
                let (_, graph_sets) =
                    infer_path_from_cov(cov, &spec, &grids[mi], opts.symmetrization)?;
                let mut points = Vec::with_capacity(graph_sets.len());
                for set in &graph_sets {
                    points.push(multiggm_core::eval::score(set, truth, false)?);
                }
                per_method.push(points);
            }
            Ok(per_method)
        });
    let mut scored_ok = Vec::with_capacity(opts.replicates);
    for s in scored {
        scored_ok.push(s?);
    }

    // aggregate and write
    let mut long = String::from(
        "method\tlambda_index\tlambda\treplicate\tprecision\trecall\ttp\tselected\ttotal_true\tdegenerate\n",
    );
    let mut auc_table = String::from("method\tmean_auc\tse_auc\treplicates\n");
    let mut summaries = Vec::with_capacity(opts.methods.len());
    for (mi, &method) in opts.methods.iter().enumerate() {
        let per_replicate: Vec<Vec<PRPoint>> =
            scored_ok.iter().map(|s| s[mi].clone()).collect();
        for (r, points) in per_replicate.iter().enumerate() {
            for (k, pt) in points.iter().enumerate() {
                let _ = writeln!(
                    long,
                    "{}\t{k}\t{}\t{r}\t{}\t{}\t{}\t{}\t{}\t{}",
                    method.name(),
                    pt.lambda,
                    pt.precision,
                    pt.recall,
                    pt.true_positives,
                    pt.selected,
                    pt.total_true,
                    pt.degenerate as u8
                );
            }
        }
        let curve = aggregate_curves(method.name(), &per_replicate)?;
        let mut curve_out =
            String::from("lambda_index\tlambda\tprecision\trecall\tse_precision\tse_recall\n");
        for (k, (pt, se)) in curve.points.iter().zip(&curve.standard_errors).enumerate() {
            let _ = writeln!(
                curve_out,
                "{k}\t{}\t{}\t{}\t{}\t{}",
                pt.lambda, pt.precision, pt.recall, se.0, se.1
            );
        }
        write_string(&opts.out.join(format!("curve_{}.tsv", method.name())), &curve_out)?;

        let replicate_auc = per_replicate
            .iter()
            .map(|points| auc_pr(points))
            .collect::<Result<Vec<f64>, _>>()?;
        let n = replicate_auc.len() as f64;
        let mean = replicate_auc.iter().sum::<f64>() / n;
        let se = if replicate_auc.len() > 1 {
            let var =
                replicate_auc.iter().map(|a| (a - mean) * (a - mean)).sum::<f64>() / (n - 1.0);
            (var / n).sqrt()
        } else {
            0.0
        };
        let _ = writeln!(auc_table, "{}\t{mean}\t{se}\t{}", method.name(), replicate_auc.len());
        summaries.push(MethodSummary {
            method,
            mean_auc: mean,
            se_auc: se,
            replicate_auc,
            points: per_replicate,
        });
    }
    write_string(&opts.out.join("pr_points.tsv"), &long)?;
    write_string(&opts.out.join("auc.tsv"), &auc_table)?;

    write_manifest(
        &opts.out,
        &Manifest::Sweep {
            version: VERSION.to_string(),
            seed: opts.seed,
            p: opts.p,
            k: opts.k,
            tasks: opts.tasks,
            delta: opts.delta,
            n_per_task: opts.n_per_task.clone(),
            deflation: opts.deflation,
            methods: opts.methods.iter().map(|m| m.name().to_string()).collect(),
            replicates: opts.replicates,
            grid_size: opts.grid_size,
            grid_ratio: opts.grid_ratio,
            alpha: opts.alpha,
            symmetrization: opts.symmetrization.name().to_string(),
            rng_algorithm: SeededRng::ALGORITHM.to_string(),
        },
    )?;

    Ok(SweepSummary { methods: summaries })
}
