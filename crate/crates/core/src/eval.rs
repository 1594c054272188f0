//! Cumulative precision/recall of inferred graph sets against simulated
//! ground truth, fixed-lambda averaging over replicates, and a trapezoidal
//! area summary.

use alloc::string::String;
use alloc::vec::Vec;
use libm::sqrt;

use crate::engine::InferredGraphSet;
use crate::sim::GroundTruth;

/// Detection counts cumulated over the T tasks at one penalty level.
/// precision = tp / selected (1 when nothing is selected, flagged),
/// recall = tp / total_true.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PRPoint {
    pub lambda: f64,
    pub precision: f64,
    pub recall: f64,
    pub true_positives: usize,
    pub selected: usize,
    pub total_true: usize,
    /// A 0/0 convention fired (empty prediction or empty truth).
    pub degenerate: bool,
}

/// Precision/recall points of one method over a descending lambda grid,
/// averaged over replicates at fixed lambda.
#[derive(Clone, Debug)]
pub struct PRCurve {
    pub method: String,
    pub points: Vec<PRPoint>,
    pub replicates: usize,
    /// Standard errors of (precision, recall) per point; zero for a single
    /// replicate.
    pub standard_errors: Vec<(f64, f64)>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum EvalError {
    TaskCountMismatch { inferred: usize, truth: usize },
    VariableCountMismatch { inferred: usize, truth: usize },
    /// Replicates disagree on the lambda grid.
    RaggedGrids,
    NoReplicates,
    TooFewPoints { points: usize },
}

impl core::fmt::Display for EvalError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            EvalError::TaskCountMismatch { inferred, truth } => {
                write!(f, "{inferred} inferred graphs vs {truth} true graphs")
            }
            EvalError::VariableCountMismatch { inferred, truth } => {
                write!(f, "inferred graphs on {inferred} variables, truth on {truth}")
            }
            EvalError::RaggedGrids => write!(f, "replicates were evaluated on different grids"),
            EvalError::NoReplicates => write!(f, "no replicates to aggregate"),
            EvalError::TooFewPoints { points } => {
                write!(f, "need at least 2 curve points, got {points}")
            }
        }
    }
}

impl core::error::Error for EvalError {}

/// Score one graph set: counts cumulate over tasks, detection ignores edge
/// orientation, and (unless `signed`) the coefficient sign.
/// With `signed`, an edge only counts as true when its sign matches the
/// sign of the true concentration entry (ambiguous signs never match).
pub fn score(
    inferred: &InferredGraphSet,
    truth: &GroundTruth,
    signed: bool,
) -> Result<PRPoint, EvalError> {
    if inferred.graphs.len() != truth.children.len() {
        return Err(EvalError::TaskCountMismatch {
            inferred: inferred.graphs.len(),
            truth: truth.children.len(),
        });
    }
    let p = truth.params.p;
    for g in &inferred.graphs {
        if let Some(e) = g.edges.iter().find(|e| e.j >= p) {
            return Err(EvalError::VariableCountMismatch { inferred: e.j + 1, truth: p });
        }
    }
    let mut tp = 0usize;
    let mut selected = 0usize;
    let mut total_true = 0usize;
    for (t, (graph, child)) in inferred.graphs.iter().zip(&truth.children).enumerate() {
        total_true += child.len();
        selected += graph.edges.len();
        for e in &graph.edges {
            let hit = child.binary_search(&(e.i, e.j)).is_ok();
            if !hit {
                continue;
            }
            if signed {
                let k = &truth.concentrations[t];
                let true_sign = if k.get(e.i, e.j) > 0.0 { 1 } else { -1 };
                if e.sign == true_sign {
                    tp += 1;
                }
            } else {
                tp += 1;
            }
        }
    }
    let mut degenerate = false;
    let precision = if selected == 0 {
        degenerate = true;
        1.0
    } else {
        tp as f64 / selected as f64
    };
    let recall = if total_true == 0 {
        degenerate = true;
        1.0
    } else {
        tp as f64 / total_true as f64
    };
    Ok(PRPoint {
        lambda: inferred.lambda,
        precision,
        recall,
        true_positives: tp,
        selected,
        total_true,
        degenerate,
    })
}

/// Mean precision and recall per grid position over replicates evaluated
/// on the identical lambda grid, with standard errors of the means.
pub fn aggregate_curves(
    method: &str,
    replicates: &[Vec<PRPoint>],
) -> Result<PRCurve, EvalError> {
    if replicates.is_empty() {
        return Err(EvalError::NoReplicates);
    }
    let len = replicates[0].len();
    for r in replicates {
        if r.len() != len {
            return Err(EvalError::RaggedGrids);
        }
        for (a, b) in r.iter().zip(&replicates[0]) {
            if a.lambda != b.lambda {
                return Err(EvalError::RaggedGrids);
            }
        }
    }
    let r = replicates.len() as f64;
    let mut points = Vec::with_capacity(len);
    let mut ses = Vec::with_capacity(len);
    for k in 0..len {
        let mut mp = 0.0;
        let mut mr = 0.0;
        let (mut tp, mut sel, mut tot) = (0usize, 0usize, 0usize);
        let mut degenerate = false;
        for rep in replicates {
            mp += rep[k].precision;
            mr += rep[k].recall;
            tp += rep[k].true_positives;
            sel += rep[k].selected;
            tot += rep[k].total_true;
            degenerate |= rep[k].degenerate;
        }
        mp /= r;
        mr /= r;
        let (mut vp, mut vr) = (0.0, 0.0);
        for rep in replicates {
            vp += (rep[k].precision - mp) * (rep[k].precision - mp);
            vr += (rep[k].recall - mr) * (rep[k].recall - mr);
        }
        let se = if replicates.len() > 1 {
            let denom = r * (r - 1.0);
            (sqrt(vp / denom), sqrt(vr / denom))
        } else {
            (0.0, 0.0)
        };
        points.push(PRPoint {
            lambda: replicates[0][k].lambda,
            precision: mp,
            recall: mr,
            true_positives: tp,
            selected: sel,
            total_true: tot,
            degenerate,
        });
        ses.push(se);
    }
    Ok(PRCurve {
        method: String::from(method),
        points,
        replicates: replicates.len(),
        standard_errors: ses,
    })
}

/// Trapezoidal area under precision over recall, clipped to [0, 1].
/// Points are sorted by recall; ties in recall contribute zero width.
pub fn auc_pr(points: &[PRPoint]) -> Result<f64, EvalError> {
    if points.len() < 2 {
        return Err(EvalError::TooFewPoints { points: points.len() });
    }
    let mut sorted: Vec<(f64, f64)> = points.iter().map(|p| (p.recall, p.precision)).collect();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut area = 0.0;
    for w in sorted.windows(2) {
        let (r0, p0) = w[0];
        let (r1, p1) = w[1];
        area += (r1 - r0) * 0.5 * (p0 + p1);
    }
    Ok(area.clamp(0.0, 1.0))
}
