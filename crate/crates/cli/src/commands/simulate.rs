//! Benchmark generation: ground-truth graphs, concentration matrices and
//! task data, all written under one output directory.
//!
//! Layout:
//!
//! ```text
//! out/
//!   manifest.json
//!   tasks.tsv, data_<task>.csv      observation data
//!   truth/
//!     variables.tsv, tasks.tsv      orderings
//!     ancestor.tsv                  edge list (weight = sign)
//!     child_<task>.tsv              edge list (weight = true K_ij)
//!     k_<task>.tsv                  full concentration matrices
//! ```

use std::fmt::Write as _;
use std::path::PathBuf;

use multiggm_core::sim::{generate, GroundTruth, SimParams};

use crate::errors::CliError;
use crate::formats::{write_dataset, write_matrix, write_names, write_string, EDGE_HEADER};
use crate::manifest::{write_manifest, Manifest, VERSION};

#[derive(Clone, Debug)]
pub struct SimulateOpts {
    pub p: usize,
    pub k: usize,
    pub tasks: usize,
    pub delta: usize,
    pub n_per_task: Vec<usize>,
    pub deflation: f64,
    pub seed: u64,
    pub out: PathBuf,
}

pub fn run(opts: &SimulateOpts) -> Result<(), CliError> {
    let params = SimParams {
        p: opts.p,
        k: opts.k,
        tasks: opts.tasks,
        delta: opts.delta,
        n_per_task: opts.n_per_task.clone(),
        deflation: opts.deflation,
        seed: opts.seed,
    };
    let (truth, data) = generate(&params)?;

    write_dataset(&opts.out, &data)?;
    write_truth(&opts.out.join("truth"), &truth, &data.variable_names, &data.task_names)?;
    write_manifest(
        &opts.out,
        &Manifest::Simulate {
            version: VERSION.to_string(),
            seed: opts.seed,
            p: opts.p,
            k: opts.k,
            tasks: opts.tasks,
            delta: opts.delta,
            n_per_task: opts.n_per_task.clone(),
            deflation: opts.deflation,
        },
    )
}

pub fn write_truth(
    dir: &std::path::Path,
    truth: &GroundTruth,
    variable_names: &[String],
    task_names: &[String],
) -> Result<(), CliError> {
    write_names(&dir.join("variables.tsv"), variable_names)?;
    write_names(&dir.join("tasks.tsv"), task_names)?;

    let mut out = String::from(EDGE_HEADER);
    out.push('\n');
    for &(i, j) in &truth.ancestor {
        let s = truth.signs.get(i, j);
        let _ = writeln!(
            out,
            "ancestor\t{}\t{}\t{}\t{}",
            variable_names[i],
            variable_names[j],
            if s > 0.0 { 1 } else { -1 },
            s
        );
    }
    write_string(&dir.join("ancestor.tsv"), &out)?;

    for (t, child) in truth.children.iter().enumerate() {
        let mut out = String::from(EDGE_HEADER);
        out.push('\n');
        let k = &truth.concentrations[t];
        for &(i, j) in child {
            let w = k.get(i, j);
            let _ = writeln!(
                out,
                "{}\t{}\t{}\t{}\t{}",
                task_names[t],
                variable_names[i],
                variable_names[j],
                if w > 0.0 { 1 } else { -1 },
                w
            );
        }
        write_string(&dir.join(format!("child_{}.tsv", task_names[t])), &out)?;
        write_matrix(&dir.join(format!("k_{}.tsv", task_names[t])), k)?;
    }
    Ok(())
}
