//! On-disk formats.
//!
//! * data: one CSV per task (header row of variable names, one observation
//!   per row) plus a `tasks.tsv` manifest listing `task  file  n`;
//! * edge lists: tab-separated `task  node_i  node_j  sign  weight` with
//!   node names ordered `i < j` by the input header; ground truth uses the
//!   same shape with the true concentration entry as weight;
//! * precision/recall tables: tab-separated with a header, one row per
//!   penalty level.
//!
//! All numbers are written with Rust's shortest round-trip formatting, so
//! reading a file back reproduces the exact values and reruns are
//! byte-identical.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use multiggm_core::engine::{Edge, InferredGraphSet, TaskGraph};
use multiggm_core::eval::PRPoint;
use multiggm_core::mat::Mat;
use multiggm_core::model::TaskDataset;

use crate::errors::CliError;

pub fn read_to_string(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::io(e, path.display().to_string()))
}

pub fn write_string(path: &Path, contents: &str) -> Result<(), CliError> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| CliError::io(e, parent.display().to_string()))?;
    }
    fs::write(path, contents).map_err(|e| CliError::io(e, path.display().to_string()))
}

fn parse_f64(tok: &str, path: &Path, line: usize) -> Result<f64, CliError> {
    tok.trim().parse::<f64>().map_err(|_| {
        CliError::Data(format!("{}:{line}: not a number: {tok:?}", path.display()))
    })
}

fn parse_usize(tok: &str, path: &Path, line: usize) -> Result<usize, CliError> {
    tok.trim().parse::<usize>().map_err(|_| {
        CliError::Data(format!("{}:{line}: not a count: {tok:?}", path.display()))
    })
}

// ---------------------------------------------------------------- datasets

/// Write one CSV per task plus the `tasks.tsv` manifest into `dir`.
pub fn write_dataset(dir: &Path, data: &TaskDataset) -> Result<(), CliError> {
    let mut manifest = String::from("task\tfile\tn\n");
    for (t, m) in data.tasks.iter().enumerate() {
        let name = &data.task_names[t];
        let file = format!("data_{name}.csv");
        let mut out = String::new();
        out.push_str(&data.variable_names.join(","));
        out.push('\n');
        for r in 0..m.rows() {
            for c in 0..m.cols() {
                if c > 0 {
                    out.push(',');
                }
                let _ = write!(out, "{}", m.get(r, c));
            }
            out.push('\n');
        }
        write_string(&dir.join(&file), &out)?;
        let _ = writeln!(manifest, "{name}\t{file}\t{}", m.rows());
    }
    write_string(&dir.join("tasks.tsv"), &manifest)
}

/// Read a dataset directory written by `write_dataset` (or hand-built in
/// the same layout).
pub fn read_dataset(dir: &Path) -> Result<TaskDataset, CliError> {
    let manifest_path = dir.join("tasks.tsv");
    let manifest = read_to_string(&manifest_path)?;
    let mut task_names = Vec::new();
    let mut files = Vec::new();
    let mut sizes = Vec::new();
    for (idx, line) in manifest.lines().enumerate() {
        if idx == 0 {
            if line != "task\tfile\tn" {
                return Err(CliError::Data(format!(
                    "{}: bad header {line:?}",
                    manifest_path.display()
                )));
            }
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 3 {
            return Err(CliError::Data(format!(
                "{}:{}: expected 3 columns",
                manifest_path.display(),
                idx + 1
            )));
        }
        task_names.push(cols[0].to_string());
        files.push(cols[1].to_string());
        sizes.push(parse_usize(cols[2], &manifest_path, idx + 1)?);
    }
    if task_names.is_empty() {
        return Err(CliError::Data(format!("{}: no tasks", manifest_path.display())));
    }

    let mut variable_names: Option<Vec<String>> = None;
    let mut tasks = Vec::new();
    for (t, file) in files.iter().enumerate() {
        let path = dir.join(file);
        let text = read_to_string(&path)?;
        let mut lines = text.lines().enumerate();
        let (_, header) = lines.next().ok_or_else(|| {
            CliError::Data(format!("{}: empty file", path.display()))
        })?;
        let names: Vec<String> = header.split(',').map(|s| s.trim().to_string()).collect();
        match &variable_names {
            None => variable_names = Some(names),
            Some(expected) => {
                if *expected != names {
                    return Err(CliError::Data(format!(
                        "{}: variable names disagree with the first task",
                        path.display()
                    )));
                }
            }
        }
        let p = variable_names.as_ref().unwrap().len();
        let mut rows = Vec::new();
        for (lno, line) in lines {
            if line.trim().is_empty() {
                continue;
            }
            let mut row = Vec::with_capacity(p);
            for tok in line.split(',') {
                row.push(parse_f64(tok, &path, lno + 1)?);
            }
            if row.len() != p {
                return Err(CliError::Data(format!(
                    "{}:{}: {} values for {p} variables",
                    path.display(),
                    lno + 1,
                    row.len()
                )));
            }
            rows.push(row);
        }
        if rows.len() != sizes[t] {
            return Err(CliError::Data(format!(
                "{}: {} rows, manifest says {}",
                path.display(),
                rows.len(),
                sizes[t]
            )));
        }
        tasks.push(Mat::from_rows(&rows));
    }
    Ok(TaskDataset { tasks, variable_names: variable_names.unwrap(), task_names })
}

// -------------------------------------------------------------- edge lists

pub const EDGE_HEADER: &str = "task\tnode_i\tnode_j\tsign\tweight";

pub fn format_edges(task: &str, names: &[String], edges: &[Edge]) -> String {
    let mut out = String::new();
    for e in edges {
        let _ = writeln!(
            out,
            "{task}\t{}\t{}\t{}\t{}",
            names[e.i], names[e.j], e.sign, e.weight
        );
    }
    out
}

/// Edge list for one graph set (all tasks, one file).
pub fn write_graph_set(
    path: &Path,
    names: &[String],
    task_names: &[String],
    set: &InferredGraphSet,
) -> Result<(), CliError> {
    let mut out = String::from(EDGE_HEADER);
    out.push('\n');
    for (t, graph) in set.graphs.iter().enumerate() {
        out.push_str(&format_edges(&task_names[t], names, &graph.edges));
    }
    write_string(path, &out)
}

/// Parse an edge-list file into per-task graphs, given the variable-name
/// ordering and the task-name ordering.
pub fn read_graphs(
    path: &Path,
    names: &[String],
    task_names: &[String],
) -> Result<Vec<TaskGraph>, CliError> {
    let text = read_to_string(path)?;
    let name_idx = |n: &str, lno: usize| -> Result<usize, CliError> {
        names.iter().position(|x| x == n).ok_or_else(|| {
            CliError::Data(format!("{}:{lno}: unknown variable {n:?}", path.display()))
        })
    };
    let mut graphs = vec![TaskGraph::default(); task_names.len()];
    for (lno, line) in text.lines().enumerate() {
        if lno == 0 {
            if line != EDGE_HEADER {
                return Err(CliError::Data(format!(
                    "{}: bad header {line:?}",
                    path.display()
                )));
            }
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 5 {
            return Err(CliError::Data(format!(
                "{}:{}: expected 5 columns",
                path.display(),
                lno + 1
            )));
        }
        let task = task_names.iter().position(|t| t == cols[0]).ok_or_else(|| {
            CliError::Data(format!("{}:{}: unknown task {:?}", path.display(), lno + 1, cols[0]))
        })?;
        let i = name_idx(cols[1], lno + 1)?;
        let j = name_idx(cols[2], lno + 1)?;
        let (i, j) = if i < j { (i, j) } else { (j, i) };
        let sign = cols[3].trim().parse::<i8>().map_err(|_| {
            CliError::Data(format!("{}:{}: bad sign {:?}", path.display(), lno + 1, cols[3]))
        })?;
        let weight = parse_f64(cols[4], path, lno + 1)?;
        graphs[task].edges.push(Edge { i, j, sign, weight });
    }
    for g in &mut graphs {
        g.edges.sort_by_key(|e| (e.i, e.j));
    }
    Ok(graphs)
}

// ------------------------------------------------------------ matrix files

pub fn write_matrix(path: &Path, m: &Mat) -> Result<(), CliError> {
    let mut out = String::new();
    for i in 0..m.rows() {
        for j in 0..m.cols() {
            if j > 0 {
                out.push('\t');
            }
            let _ = write!(out, "{}", m.get(i, j));
        }
        out.push('\n');
    }
    write_string(path, &out)
}

pub fn read_matrix(path: &Path) -> Result<Mat, CliError> {
    let text = read_to_string(path)?;
    let mut rows = Vec::new();
    for (lno, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let mut row = Vec::new();
        for tok in line.split('\t') {
            row.push(parse_f64(tok, path, lno + 1)?);
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(CliError::Data(format!("{}: empty matrix", path.display())));
    }
    let cols = rows[0].len();
    if rows.iter().any(|r| r.len() != cols) {
        return Err(CliError::Data(format!("{}: ragged matrix", path.display())));
    }
    Ok(Mat::from_rows(&rows))
}

// ------------------------------------------------------------- name lists

pub fn write_names(path: &Path, names: &[String]) -> Result<(), CliError> {
    let mut out = String::new();
    for n in names {
        out.push_str(n);
        out.push('\n');
    }
    write_string(path, &out)
}

pub fn read_names(path: &Path) -> Result<Vec<String>, CliError> {
    Ok(read_to_string(path)?
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| l.to_string())
        .collect())
}

// --------------------------------------------------------------- pr tables

pub const PR_HEADER: &str = "lambda_index\tlambda\tprecision\trecall\ttp\tselected\ttotal_true\tdegenerate";

pub fn format_pr_row(idx: usize, pt: &PRPoint) -> String {
    format!(
        "{idx}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\n",
        pt.lambda,
        pt.precision,
        pt.recall,
        pt.true_positives,
        pt.selected,
        pt.total_true,
        pt.degenerate as u8
    )
}

pub fn read_pr_table(path: &Path) -> Result<Vec<PRPoint>, CliError> {
    let text = read_to_string(path)?;
    let mut points = Vec::new();
    for (lno, line) in text.lines().enumerate() {
        if lno == 0 {
            if line != PR_HEADER {
                return Err(CliError::Data(format!("{}: bad header", path.display())));
            }
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 8 {
            return Err(CliError::Data(format!(
                "{}:{}: expected 8 columns",
                path.display(),
                lno + 1
            )));
        }
        points.push(PRPoint {
            lambda: parse_f64(cols[1], path, lno + 1)?,
            precision: parse_f64(cols[2], path, lno + 1)?,
            recall: parse_f64(cols[3], path, lno + 1)?,
            true_positives: parse_usize(cols[4], path, lno + 1)?,
            selected: parse_usize(cols[5], path, lno + 1)?,
            total_true: parse_usize(cols[6], path, lno + 1)?,
            degenerate: cols[7].trim() == "1",
        });
    }
    Ok(points)
}

/// Recursively collect (relative path, bytes) of every file under `dir`,
/// sorted by path; used for byte-identical output comparisons.
pub fn snapshot_tree(dir: &Path) -> Result<Vec<(PathBuf, Vec<u8>)>, CliError> {
    fn walk(
        root: &Path,
        dir: &Path,
        out: &mut Vec<(PathBuf, Vec<u8>)>,
    ) -> Result<(), CliError> {
        let entries =
            fs::read_dir(dir).map_err(|e| CliError::io(e, dir.display().to_string()))?;
        let mut paths: Vec<PathBuf> = Vec::new();
        for entry in entries {
            let entry = entry.map_err(|e| CliError::io(e, dir.display().to_string()))?;
            paths.push(entry.path());
        }
        paths.sort();
        for path in paths {
            if path.is_dir() {
                walk(root, &path, out)?;
            } else {
                let bytes =
                    fs::read(&path).map_err(|e| CliError::io(e, path.display().to_string()))?;
                out.push((path.strip_prefix(root).unwrap().to_path_buf(), bytes));
            }
        }
        Ok(())
    }
    let mut out = Vec::new();
    walk(dir, dir, &mut out)?;
    Ok(out)
}
