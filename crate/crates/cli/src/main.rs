use std::path::PathBuf;
use std::process::ExitCode as ProcessExit;

use clap::{Args, Parser, Subcommand};

use multiggm::commands::{check, eval, infer, rerun, simulate, sweep};
use multiggm::commands::{parse_method, parse_symmetrization};
use multiggm::errors::{CliError, ExitCode};
use multiggm::parallel::resolve_workers;

/// Joint inference of multiple sparse Gaussian graphical models.
#[derive(Parser)]
#[command(name = "multiggm", version, about, max_term_width = 100)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a benchmark: random graphs, concentration matrices, data.
    Simulate(SimulateArgs),
    /// Infer per-task graphs from a dataset directory.
    Infer(InferArgs),
    /// Score an inference run against simulated ground truth.
    Eval(EvalArgs),
    /// Replicated benchmark comparing methods by precision/recall.
    Sweep(SweepArgs),
    /// Re-verify every coefficient of an inference run against its
    /// first-order optimality certificate.
    Check(CheckArgs),
    /// Repeat the run recorded in a manifest into a new directory.
    Rerun(RerunArgs),
}

#[derive(Args)]
struct SimulateArgs {
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    /// Number of variables.
    #[arg(short, long, default_value_t = 20)]
    p: usize,
    /// Number of edges in the ancestor graph.
    #[arg(short, long, default_value_t = 20)]
    k: usize,
    /// Number of tasks (children graphs and samples).
    #[arg(short = 'T', long, default_value_t = 4)]
    tasks: usize,
    /// Edges removed and added per child.
    #[arg(long, default_value_t = 1)]
    delta: usize,
    /// Observations per task, either one count or one per task.
    #[arg(long, value_delimiter = ',', default_value = "25")]
    n: Vec<usize>,
    /// Off-diagonal deflation factor in (0, 1).
    #[arg(long, default_value_t = 0.9)]
    deflation: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct InferArgs {
    /// Dataset directory (tasks.tsv plus one CSV per task).
    #[arg(long)]
    data: PathBuf,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    /// independent | pooled | intertwined | group | coop
    #[arg(long)]
    method: String,
    /// Blend toward the pooled covariance (intertwined only).
    #[arg(long, default_value_t = 0.5)]
    alpha: f64,
    /// Fixed penalty level; omit to run a grid.
    #[arg(long)]
    lambda: Option<f64>,
    /// Grid points from lambda-max down to ratio * lambda-max.
    #[arg(long, default_value_t = 10)]
    grid_size: usize,
    #[arg(long, default_value_t = 0.1)]
    grid_ratio: f64,
    /// Edge reconciliation rule: and | or
    #[arg(long, default_value = "and")]
    symmetrize: String,
    /// Skip per-task column centering.
    #[arg(long)]
    no_center: bool,
    /// Scale columns to unit variance after centering.
    #[arg(long)]
    standardize: bool,
    /// Per-task penalty weights, comma separated (defaults per method).
    #[arg(long, value_delimiter = ',')]
    weights: Option<Vec<f64>>,
    /// Worker threads (default: MULTIGGM_WORKERS or the machine).
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct EvalArgs {
    /// Inference run directory.
    #[arg(long)]
    inferred: PathBuf,
    /// Truth directory written by simulate (its `truth/` subdirectory).
    #[arg(long)]
    truth: PathBuf,
    /// Output table (default: <inferred>/pr.tsv).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Count an edge only when its sign matches the truth.
    #[arg(long)]
    signed: bool,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long)]
    out: PathBuf,
    #[arg(short, long, default_value_t = 20)]
    p: usize,
    #[arg(short, long, default_value_t = 20)]
    k: usize,
    #[arg(short = 'T', long, default_value_t = 4)]
    tasks: usize,
    #[arg(long, default_value_t = 1)]
    delta: usize,
    #[arg(long, value_delimiter = ',', default_value = "25")]
    n: Vec<usize>,
    #[arg(long, default_value_t = 0.9)]
    deflation: f64,
    /// Methods to compare, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "independent,pooled,intertwined,group,coop")]
    methods: Vec<String>,
    #[arg(long, default_value_t = 20)]
    replicates: usize,
    #[arg(long, default_value_t = 20)]
    grid_size: usize,
    #[arg(long, default_value_t = 0.05)]
    grid_ratio: f64,
    #[arg(long, default_value_t = 0.5)]
    alpha: f64,
    #[arg(long, default_value = "and")]
    symmetrize: String,
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct CheckArgs {
    /// Inference run directory to verify.
    #[arg(long)]
    run: PathBuf,
}

#[derive(Args)]
struct RerunArgs {
    /// Directory containing the manifest to repeat.
    #[arg(long)]
    manifest: PathBuf,
    /// Output directory for the repeated run.
    #[arg(long)]
    out: PathBuf,
}

fn expand_sizes(n: &[usize], tasks: usize) -> Result<Vec<usize>, CliError> {
    match n.len() {
        1 => Ok(vec![n[0]; tasks]),
        l if l == tasks => Ok(n.to_vec()),
        l => Err(CliError::Usage(format!("{l} sample sizes for {tasks} tasks"))),
    }
}

fn dispatch(cmd: Command) -> Result<ExitCode, CliError> {
    match cmd {
        Command::Simulate(a) => {
            simulate::run(&simulate::SimulateOpts {
                p: a.p,
                k: a.k,
                tasks: a.tasks,
                delta: a.delta,
                n_per_task: expand_sizes(&a.n, a.tasks)?,
                deflation: a.deflation,
                seed: a.seed,
                out: a.out,
            })?;
            Ok(ExitCode::Ok)
        }
        Command::Infer(a) => {
            let summary = infer::run(&infer::InferOpts {
                data: a.data,
                out: a.out,
                method: parse_method(&a.method)?,
                alpha: a.alpha,
                lambda: a.lambda,
                grid_size: a.grid_size,
                grid_ratio: a.grid_ratio,
                symmetrization: parse_symmetrization(&a.symmetrize)?,
                center: !a.no_center,
                standardize: a.standardize,
                task_weights: a.weights,
                workers: a.workers,
                seed: a.seed,
            })?;
            if summary.all_converged {
                Ok(ExitCode::Ok)
            } else {
                eprintln!("warning: some node problems did not certify; see diagnostics.tsv");
                Ok(ExitCode::Solver)
            }
        }
        Command::Eval(a) => {
            let out = eval::run(&eval::EvalOpts {
                inferred: a.inferred,
                truth: a.truth,
                out: a.out,
                signed: a.signed,
            })?;
            println!("wrote {}", out.display());
            Ok(ExitCode::Ok)
        }
        Command::Sweep(a) => {
            let methods = a
                .methods
                .iter()
                .map(|m| parse_method(m))
                .collect::<Result<Vec<_>, _>>()?;
            let summary = sweep::run(&sweep::SweepOpts {
                p: a.p,
                k: a.k,
                tasks: a.tasks,
                delta: a.delta,
                n_per_task: expand_sizes(&a.n, a.tasks)?,
                deflation: a.deflation,
                seed: a.seed,
                methods,
                replicates: a.replicates,
                grid_size: a.grid_size,
                grid_ratio: a.grid_ratio,
                alpha: a.alpha,
                symmetrization: parse_symmetrization(&a.symmetrize)?,
                workers: a.workers,
                out: a.out,
            })?;
            for m in &summary.methods {
                println!(
                    "{}\tauc {:.4} +- {:.4} over {} replicates",
                    m.method.name(),
                    m.mean_auc,
                    m.se_auc,
                    m.replicate_auc.len()
                );
            }
            Ok(ExitCode::Ok)
        }
        Command::Check(a) => {
            let report = check::run(&check::CheckOpts { run: a.run })?;
            for (lambda, worst) in &report.levels {
                println!(
                    "lambda {lambda}: worst residual {:.3e} of the certificate bound",
                    worst
                );
            }
            if report.all_certified {
                println!("all coefficients certified");
                Ok(ExitCode::Ok)
            } else {
                eprintln!("certificate violations found");
                Ok(ExitCode::Solver)
            }
        }
        Command::Rerun(a) => {
            rerun(&a.manifest, &a.out)?;
            Ok(ExitCode::Ok)
        }
    }
}

fn main() -> ProcessExit {
    // resolve early so a bad MULTIGGM_WORKERS value surfaces predictably
    let _ = resolve_workers(None);
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // clap reserves exit code 2; this pipeline uses 1 for usage
            let _ = e.print();
            return ProcessExit::from(ExitCode::Usage as u8);
        }
    };
    match dispatch(cli.command) {
        Ok(code) => ProcessExit::from(code as u8),
        Err(err) => {
            eprintln!("{err}");
            ProcessExit::from(err.exit_code() as u8)
        }
    }
}
