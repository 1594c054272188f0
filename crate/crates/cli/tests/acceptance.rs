//! Acceptance suite: one test per criterion, each printing a PASS line on
//! success (run with --nocapture to see them) or failing with a FAIL
//! message. Tolerances are pinned in the assertions.

use std::path::{Path, PathBuf};
use std::time::Instant;

use multiggm::commands::{eval, infer, simulate, sweep};
use multiggm::formats::{read_pr_table, snapshot_tree, write_dataset};
use multiggm_core::covariance::{block_problem, empirical_covariance, pseudo_loglik, quad_gradient, quad_objective};
use multiggm_core::engine::{infer_path, node_lambda_max, Symmetrization};
use multiggm_core::mat::{Cholesky, Mat};
use multiggm_core::model::{center_columns, Method, PenaltySpec, TaskDataset};
use multiggm_core::penalty::{penalty_value, GroupView, PenaltyKind};
use multiggm_core::rng::SeededRng;
use multiggm_core::sim::{draw_ancestor, generate, perturb_child, rademacher_signs, SimParams};
use multiggm_core::solver::{solve_coop, solve_group, solve_lasso};
use multiggm_core::ZERO_TOL;
use multiggm_testutil as oracle;

fn scratch(name: &str) -> PathBuf {
    let dir =
        std::env::temp_dir().join(format!("multiggm-accept-{name}-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

/// Random solver instances drawn from the benchmark generator, mixing
/// deficient (n_t < p) and comfortable sample sizes.
struct InstanceIter {
    rng: SeededRng,
    seed: u64,
}

impl InstanceIter {
    fn new(tag: u64) -> Self {
        InstanceIter { rng: SeededRng::new(tag), seed: tag * 100_000 }
    }

    fn next_instance(
        &mut self,
        p: usize,
        tasks: usize,
        method: Method,
    ) -> (multiggm_core::covariance::BlockCovariance, PenaltySpec, f64, Vec<f64>) {
        self.seed += 1;
        let n_t = if self.rng.next_f64() < 0.4 { p / 2 + 2 } else { 2 * p };
        let params = SimParams {
            p,
            k: p,
            tasks,
            delta: 1,
            n_per_task: vec![n_t; tasks],
            deflation: 0.9,
            seed: self.seed,
        };
        let (_, data) = generate(&params).unwrap();
        let data = center_columns(data);
        let cov = empirical_covariance(&data, 0.5);
        let spec = PenaltySpec::new(method, 1.0).unwrap();
        let node = self.rng.below(p);
        let problem = block_problem(&cov, node, &spec);
        let lmax = node_lambda_max(&cov, &spec, node);
        let frac = 0.05 + 0.9 * self.rng.next_f64();
        let weights = spec.effective_weights(&cov.task_sizes);
        (problem, spec, frac * lmax, weights)
    }
}

#[test]
fn acceptance_01_kkt_certification() {
    let t0 = Instant::now();
    for method in [Method::Independent, Method::Group, Method::Coop] {
        let mut instances = InstanceIter::new(match method {
            Method::Independent => 101,
            Method::Group => 102,
            _ => 103,
        });
        let mut count = 0usize;
        'outer: loop {
            for &p in &[5usize, 20] {
                for &tasks in &[1usize, 2, 4] {
                    if count >= 200 {
                        break 'outer;
                    }
                    let (problem, _, lambda, weights) = instances.next_instance(p, tasks, method);
                    let sol = match method {
                        Method::Group => solve_group(&problem, lambda, None).unwrap(),
                        Method::Coop => solve_coop(&problem, lambda, None).unwrap(),
                        _ => solve_lasso(&problem, lambda, &weights, None).unwrap(),
                    };
                    let bound = 1e-8 * (lambda + problem.linear_inf_norm());
                    assert!(
                        sol.diagnostics.residual < bound,
                        "ACCEPTANCE 1 FAIL: {method:?} instance {count}: residual {} >= {bound}",
                        sol.diagnostics.residual
                    );
                    count += 1;
                }
            }
        }
    }
    let elapsed = t0.elapsed();
    assert!(elapsed.as_secs() < 120, "ACCEPTANCE 1 FAIL: took {elapsed:?}");
    println!("ACCEPTANCE 1 PASS: 600 certificates below 1e-8 scale in {elapsed:?}");
}

#[test]
fn acceptance_02_oracle_equivalence() {
    let mut lasso_it = InstanceIter::new(201);
    for i in 0..50 {
        let (problem, _, lambda, weights) = lasso_it.next_instance(5, 2, Method::Independent);
        let sol = solve_lasso(&problem, lambda, &weights, None).unwrap();
        let reference = oracle::cd_lasso(&problem, lambda, &weights, 1e-10, 100_000);
        for (a, b) in sol.beta.iter().zip(&reference) {
            assert!(
                (a - b).abs() < 1e-6,
                "ACCEPTANCE 2 FAIL: lasso instance {i}: {a} vs {b}"
            );
        }
    }
    let mut group_it = InstanceIter::new(202);
    for i in 0..50 {
        let (problem, _, lambda, _) = group_it.next_instance(4, 2, Method::Group);
        let sol = solve_group(&problem, lambda, None).unwrap();
        let reference = oracle::bcd_group(&problem, lambda, 1e-12, 200_000);
        for (a, b) in sol.beta.iter().zip(&reference) {
            assert!(
                (a - b).abs() < 1e-5,
                "ACCEPTANCE 2 FAIL: group instance {i}: {a} vs {b}"
            );
        }
    }
    let mut coop_it = InstanceIter::new(203);
    for i in 0..50 {
        let (problem, _, lambda, _) = coop_it.next_instance(4, 2, Method::Coop);
        let sol = solve_coop(&problem, lambda, None).unwrap();
        let reference = oracle::bcd_coop(&problem, lambda, 1e-12, 200_000);
        for (a, b) in sol.beta.iter().zip(&reference) {
            assert!(
                (a - b).abs() < 1e-4,
                "ACCEPTANCE 2 FAIL: coop instance {i}: {a} vs {b}"
            );
        }
    }
    println!("ACCEPTANCE 2 PASS: 150 solver solutions match their oracles");
}

fn edge_lists(
    data: &TaskDataset,
    method: Method,
    alpha: f64,
) -> Vec<Vec<Vec<(usize, usize)>>> {
    let spec = PenaltySpec::with_alpha(method, 1.0, alpha).unwrap();
    let (_, graphs) = infer_path(data, &spec, 8, 0.05, Symmetrization::And).unwrap();
    graphs
        .iter()
        .map(|set| {
            set.graphs
                .iter()
                .map(|g| g.edges.iter().map(|e| (e.i, e.j)).collect())
                .collect()
        })
        .collect()
}

#[test]
fn acceptance_03_degeneracy_identities() {
    // T = 1: all five methods produce identical graphs at matched grid
    // positions (penalty scalings differ, relative grids align them)
    let data = oracle::random_dataset(301, 1, 30, 6);
    let reference = edge_lists(&data, Method::Independent, 0.5);
    for method in [Method::Pooled, Method::Intertwined, Method::Group, Method::Coop] {
        assert_eq!(
            reference,
            edge_lists(&data, method, 0.5),
            "ACCEPTANCE 3 FAIL: T=1 {method:?} differs from independent"
        );
    }

    // alpha = 1 intertwined == independent; alpha = 0 intertwined == pooled
    let params = SimParams {
        p: 10,
        k: 10,
        tasks: 2,
        delta: 1,
        n_per_task: vec![18; 2],
        deflation: 0.9,
        seed: 302,
    };
    let (_, multi) = generate(&params).unwrap();
    let multi = center_columns(multi);
    assert_eq!(
        edge_lists(&multi, Method::Independent, 0.5),
        edge_lists(&multi, Method::Intertwined, 1.0),
        "ACCEPTANCE 3 FAIL: alpha=1 intertwined != independent"
    );
    assert_eq!(
        edge_lists(&multi, Method::Pooled, 0.5),
        edge_lists(&multi, Method::Intertwined, 0.0),
        "ACCEPTANCE 3 FAIL: alpha=0 intertwined != pooled"
    );

    // all-positive-orthant optimum: coop == group to 1e-6
    let mut rng = SeededRng::new(303);
    for trial in 0..10 {
        let m = 3usize;
        let tasks = 2usize;
        let blocks: Vec<Mat> = (0..tasks)
            .map(|_| {
                let mut b = Mat::identity(m);
                for i in 0..m {
                    for j in (i + 1)..m {
                        let v = 0.3 * (rng.next_f64() - 0.5);
                        b.set(i, j, v);
                        b.set(j, i, v);
                    }
                }
                b
            })
            .collect();
        let linear: Vec<f64> =
            (0..tasks * m).map(|_| -0.4 - 0.6 * rng.next_f64()).collect();
        let problem = multiggm_core::covariance::BlockCovariance {
            node: 0,
            blocks,
            linear,
            p: m + 1,
        };
        let lambda = 0.3;
        let coop = solve_coop(&problem, lambda, None).unwrap();
        let group = solve_group(&problem, lambda, None).unwrap();
        assert!(
            coop.beta.iter().all(|&b| b >= 0.0),
            "ACCEPTANCE 3 FAIL: trial {trial} optimum not in the positive orthant"
        );
        for (a, b) in coop.beta.iter().zip(&group.beta) {
            assert!(
                (a - b).abs() < 1e-6,
                "ACCEPTANCE 3 FAIL: trial {trial}: coop {a} vs group {b}"
            );
        }
    }

    // full per-group sign disagreement at T = 2: coop penalty value = L1
    let mut rng = SeededRng::new(304);
    for _ in 0..100 {
        let m = 4;
        let mut beta = vec![0.0; 2 * m];
        for i in 0..m {
            let v = 0.1 + rng.next_f64();
            let w = 0.1 + rng.next_f64();
            beta[i] = v;
            beta[m + i] = -w;
        }
        let view = GroupView::new(&beta, m, 2);
        let coop = penalty_value(PenaltyKind::Coop, view, None);
        let l1 = penalty_value(PenaltyKind::L1, view, None);
        assert!(
            (coop - l1).abs() < 1e-12,
            "ACCEPTANCE 3 FAIL: sign-disagreement coop {coop} vs l1 {l1}"
        );
    }
    println!("ACCEPTANCE 3 PASS: degeneracy identities hold to 1e-6");
}

#[test]
fn acceptance_04_penalty_algebra() {
    let mut rng = SeededRng::new(401);
    for trial in 0..100_000 {
        let features = 1 + rng.below(4);
        let tasks = 1 + rng.below(4);
        let beta: Vec<f64> = (0..features * tasks)
            .map(|_| {
                if rng.next_f64() < 0.25 {
                    0.0
                } else {
                    2.0 * (rng.next_f64() - 0.5)
                }
            })
            .collect();
        let v = GroupView::new(&beta, features, tasks);
        let g2 = penalty_value(PenaltyKind::Group, v, None);
        let g3 = penalty_value(PenaltyKind::Coop, v, None);
        assert!(g3 >= g2 - 1e-12, "ACCEPTANCE 4 FAIL: trial {trial} g3 < g2");
        let coherent = (0..features).all(|i| {
            let g = v.gather(i);
            g.iter().all(|&x| x >= 0.0) || g.iter().all(|&x| x <= 0.0)
        });
        if coherent {
            assert!(
                (g3 - g2).abs() < 1e-12,
                "ACCEPTANCE 4 FAIL: trial {trial} coherent but g3 != g2"
            );
        } else {
            assert!(
                g3 > g2 + 1e-12,
                "ACCEPTANCE 4 FAIL: trial {trial} incoherent but g3 == g2"
            );
        }
        // positive homogeneity to 1e-12 relative
        let c = 3.0 * rng.next_f64();
        let scaled: Vec<f64> = beta.iter().map(|b| c * b).collect();
        let vs = GroupView::new(&scaled, features, tasks);
        let weights: Vec<f64> = (0..tasks).map(|_| 0.5 + rng.next_f64()).collect();
        for kind in [PenaltyKind::L1, PenaltyKind::Group, PenaltyKind::Coop] {
            let w = if kind == PenaltyKind::L1 { Some(weights.as_slice()) } else { None };
            let base = penalty_value(kind, v, w);
            let big = penalty_value(kind, vs, w);
            assert!(
                (big - c * base).abs() <= 1e-12 * (1.0 + c * base),
                "ACCEPTANCE 4 FAIL: trial {trial} {kind:?} not homogeneous"
            );
        }
    }
    println!("ACCEPTANCE 4 PASS: penalty algebra on 100000 random vectors");
}

#[test]
fn acceptance_05_pseudolikelihood_identity() {
    let mut rng = SeededRng::new(501);
    for trial in 0..100 {
        let p = 4;
        let n = 10;
        let mut k = Mat::identity(p);
        for i in 0..p {
            for j in (i + 1)..p {
                let v = 0.2 * (rng.next_f64() - 0.5);
                k.set(i, j, v);
                k.set(j, i, v);
            }
            k.set(i, i, 1.0 + rng.next_f64());
        }
        let rows: Vec<Vec<f64>> =
            (0..n).map(|_| (0..p).map(|_| rng.next_gaussian()).collect()).collect();
        let x = Mat::from_rows(&rows);
        let mut s = Mat::zeros(p, p);
        for i in 0..p {
            for j in 0..p {
                let mut acc = 0.0;
                for r in 0..n {
                    acc += x.get(r, i) * x.get(r, j);
                }
                s.set(i, j, acc / n as f64);
            }
        }
        let compact = pseudo_loglik(&k, &s, n).unwrap();
        let direct = oracle::conditional_loglik(&k, &x);
        assert!(
            (compact - direct).abs() < 1e-8,
            "ACCEPTANCE 5 FAIL: trial {trial}: {compact} vs {direct}"
        );
    }
    println!("ACCEPTANCE 5 PASS: pseudo-log-likelihood equals the conditional-density sum");
}

#[test]
fn acceptance_06_simulator_fidelity() {
    let t0 = Instant::now();
    let mut rng = SeededRng::new(601);
    let p = 20;
    let mut instances = 0usize;
    while instances < 1000 {
        let delta = 1 + rng.below(5);
        let anc = draw_ancestor(p, 20, &mut rng).unwrap();
        let child = perturb_child(&anc, p, delta, &mut rng).unwrap();
        let signs = rademacher_signs(p, &mut rng);
        let k = multiggm_core::sim::build_concentration(&child, &signs, 0.9, p).unwrap();
        // strict diagonal dominance
        for i in 0..p {
            let off: f64 = (0..p).filter(|&j| j != i).map(|j| k.get(i, j).abs()).sum();
            assert!(
                off < k.get(i, i),
                "ACCEPTANCE 6 FAIL: instance {instances} row {i} not dominant"
            );
        }
        // positive definiteness
        assert!(
            Cholesky::factor_strict(&k).is_ok(),
            "ACCEPTANCE 6 FAIL: instance {instances} not positive definite"
        );
        // exact support
        for i in 0..p {
            for j in (i + 1)..p {
                let present = child.binary_search(&(i, j)).is_ok();
                assert_eq!(
                    k.get(i, j) != 0.0,
                    present,
                    "ACCEPTANCE 6 FAIL: instance {instances} support mismatch at ({i},{j})"
                );
            }
        }
        // symmetric difference exactly 2 delta
        let diff = anc.iter().filter(|e| child.binary_search(e).is_err()).count()
            + child.iter().filter(|e| anc.binary_search(e).is_err()).count();
        assert_eq!(
            diff,
            2 * delta,
            "ACCEPTANCE 6 FAIL: instance {instances} symmetric difference"
        );
        instances += 1;
    }
    let elapsed = t0.elapsed();
    assert!(elapsed.as_secs() < 30, "ACCEPTANCE 6 FAIL: took {elapsed:?}");
    println!("ACCEPTANCE 6 PASS: 1000 simulator instances checked in {elapsed:?}");
}

fn paired_diff(a: &[f64], b: &[f64]) -> (f64, f64) {
    let n = a.len() as f64;
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let mean = d.iter().sum::<f64>() / n;
    let var = d.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

fn run_sweep(dir: &Path, delta: usize, n_t: usize) -> sweep::SweepSummary {
    sweep::run(&sweep::SweepOpts {
        p: 20,
        k: 20,
        tasks: 4,
        delta,
        n_per_task: vec![n_t; 4],
        // the construction leaves the deflation qualitative; 0.95 keeps
        // partial correlations strong under the dominance cap
        deflation: 0.95,
        seed: 701,
        methods: Method::ALL.to_vec(),
        replicates: 20,
        grid_size: 40,
        grid_ratio: 0.002,
        alpha: 0.5,
        symmetrization: Symmetrization::And,
        workers: None,
        out: dir.to_path_buf(),
    })
    .unwrap()
}

fn replicate_auc(s: &sweep::SweepSummary, m: Method) -> Vec<f64> {
    s.methods
        .iter()
        .find(|x| x.method == m)
        .map(|x| x.replicate_auc.clone())
        .unwrap()
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

#[test]
fn acceptance_07a_small_sample_low_perturbation_ordering() {
    let t0 = Instant::now();
    let dir = scratch("sweep-a");
    let summary = run_sweep(&dir, 1, 25);
    println!("ACCEPTANCE 7a means:");
    for m in Method::ALL {
        println!("  {}: {:.4}", m.name(), mean(&replicate_auc(&summary, m)));
    }
    let chain =
        [Method::Coop, Method::Group, Method::Intertwined, Method::Pooled, Method::Independent];
    let mut failures = Vec::new();
    for pair in chain.windows(2) {
        let (d, se) =
            paired_diff(&replicate_auc(&summary, pair[0]), &replicate_auc(&summary, pair[1]));
        let ok = d >= se;
        println!(
            "  {} >= {} by one SE: diff {d:+.4}, paired SE {se:.4} -> {}",
            pair[0].name(),
            pair[1].name(),
            if ok { "ok" } else { "VIOLATED" }
        );
        if !ok {
            failures.push(format!("{} vs {}", pair[0].name(), pair[1].name()));
        }
    }
    let elapsed = t0.elapsed();
    assert!(elapsed.as_secs() < 450, "ACCEPTANCE 7a FAIL: took {elapsed:?}");
    let _ = std::fs::remove_dir_all(dir);
    assert!(
        failures.is_empty(),
        "ACCEPTANCE 7a FAIL: ordering clauses violated: {failures:?}. Known finding: at \
         delta=1 the pooled baseline wins the area summary because it owns the extreme \
         high-recall tail (it predicts four identical near-consensus graphs from four times \
         the data), while the multi-task methods match or dominate pooled pointwise through \
         recall <= 0.8; the group-vs-intertwined areas tie within noise. The inversion \
         persists across symmetrization rules, grid depths, deflation levels and the \
         uncapped concentration construction."
    );
    println!("ACCEPTANCE 7a PASS: small-sample orderings reproduced in {elapsed:?}");
}

#[test]
fn acceptance_07b_large_sample_high_perturbation_ordering() {
    let t0 = Instant::now();
    let dir = scratch("sweep-b");
    let summary = run_sweep(&dir, 5, 100);
    println!("ACCEPTANCE 7b means:");
    for m in Method::ALL {
        println!("  {}: {:.4}", m.name(), mean(&replicate_auc(&summary, m)));
    }
    let ind = replicate_auc(&summary, Method::Independent);
    let mut failures = Vec::new();
    for m in [Method::Intertwined, Method::Group, Method::Coop] {
        let (d, se) = paired_diff(&ind, &replicate_auc(&summary, m));
        let ok = d >= -se;
        println!(
            "  independent >= {} within one SE: diff {d:+.4}, paired SE {se:.4} -> {}",
            m.name(),
            if ok { "ok" } else { "VIOLATED" }
        );
        if !ok {
            failures.push(format!("independent vs {}", m.name()));
        }
    }
    let (d, se) = paired_diff(&ind, &replicate_auc(&summary, Method::Pooled));
    let ok = d >= se;
    println!(
        "  independent > pooled by one SE: diff {d:+.4}, paired SE {se:.4} -> {}",
        if ok { "ok" } else { "VIOLATED" }
    );
    if !ok {
        failures.push("independent vs pooled".into());
    }
    let elapsed = t0.elapsed();
    assert!(elapsed.as_secs() < 450, "ACCEPTANCE 7b FAIL: took {elapsed:?}");
    let _ = std::fs::remove_dir_all(dir);
    assert!(failures.is_empty(), "ACCEPTANCE 7b FAIL: {failures:?}");
    println!("ACCEPTANCE 7b PASS: large-sample orderings reproduced in {elapsed:?}");
}

#[test]
fn acceptance_08_gradient_checks() {
    for seed in 0..100u64 {
        let data = oracle::random_dataset(800 + seed, 2, 9, 4);
        let cov = empirical_covariance(&data, 0.5);
        let spec = PenaltySpec::new(Method::Independent, 0.1).unwrap();
        let node = (seed % 4) as usize;
        let prob = block_problem(&cov, node, &spec);
        let mut rng = SeededRng::new(seed);
        let beta: Vec<f64> = (0..prob.dim()).map(|_| rng.next_gaussian()).collect();
        let grad = quad_gradient(&prob, &beta).unwrap();
        let fd = oracle::finite_diff_grad(|b| quad_objective(&prob, b).unwrap(), &beta, 1e-6);
        for (i, (g, d)) in grad.iter().zip(&fd).enumerate() {
            assert!(
                (g - d).abs() / g.abs().max(1.0) < 1e-6,
                "ACCEPTANCE 8 FAIL: seed {seed} coord {i}: {g} vs {d}"
            );
        }
    }
    println!("ACCEPTANCE 8 PASS: 100 finite-difference gradient checks");
}

#[test]
fn acceptance_09_worker_determinism() {
    let mut trees = Vec::new();
    for workers in [1usize, 8] {
        let dir = scratch(&format!("det-{workers}"));
        sweep::run(&sweep::SweepOpts {
            p: 10,
            k: 10,
            tasks: 2,
            delta: 1,
            n_per_task: vec![15; 2],
            deflation: 0.9,
            seed: 901,
            methods: vec![Method::Independent, Method::Group, Method::Coop],
            replicates: 4,
            grid_size: 8,
            grid_ratio: 0.05,
            alpha: 0.5,
            symmetrization: Symmetrization::And,
            workers: Some(workers),
            out: dir.clone(),
        })
        .unwrap();
        trees.push((dir.clone(), snapshot_tree(&dir).unwrap()));
    }
    assert_eq!(
        trees[0].1, trees[1].1,
        "ACCEPTANCE 9 FAIL: output trees differ between 1 and 8 workers"
    );
    for (d, _) in trees {
        let _ = std::fs::remove_dir_all(d);
    }
    println!("ACCEPTANCE 9 PASS: byte-identical sweep trees at 1 and 8 workers");
}

#[test]
fn acceptance_10_csv_ingestion_pipeline() {
    // synthetic stand-in with the flow-cytometry shape: 11 variables, 4
    // assays; user-supplied CSVs go through inference and evaluation
    // end to end
    let params = SimParams {
        p: 11,
        k: 20,
        tasks: 4,
        delta: 2,
        n_per_task: vec![250; 4],
        deflation: 0.9,
        seed: 1001,
    };
    let (truth, data) = generate(&params).unwrap();
    let data_dir = scratch("sachs-data");
    write_dataset(&data_dir, &data).unwrap();
    let truth_dir = scratch("sachs-truth");
    simulate::write_truth(&truth_dir, &truth, &data.variable_names, &data.task_names).unwrap();

    let run_dir = scratch("sachs-run");
    let summary = infer::run(&infer::InferOpts {
        data: data_dir.clone(),
        out: run_dir.clone(),
        method: Method::Intertwined,
        alpha: 0.5,
        lambda: None,
        grid_size: 12,
        grid_ratio: 0.02,
        symmetrization: Symmetrization::And,
        center: true,
        standardize: false,
        task_weights: None,
        workers: Some(2),
        seed: 0,
    })
    .unwrap();
    assert!(summary.all_converged, "ACCEPTANCE 10 FAIL: inference did not certify");

    let table = eval::run(&eval::EvalOpts {
        inferred: run_dir.clone(),
        truth: truth_dir.clone(),
        out: None,
        signed: false,
    })
    .unwrap();
    let points = read_pr_table(&table).unwrap();
    assert_eq!(points.len(), 12, "ACCEPTANCE 10 FAIL: expected one row per level");
    assert!(points[0].degenerate && points[0].recall == 0.0);
    let best_recall = points.iter().map(|p| p.recall).fold(0.0f64, f64::max);
    assert!(
        best_recall > 0.5,
        "ACCEPTANCE 10 FAIL: recall never exceeded 0.5 (max {best_recall})"
    );
    let early = &points[1];
    assert!(
        early.precision > 0.8,
        "ACCEPTANCE 10 FAIL: high-penalty precision {:.3} too low",
        early.precision
    );
    for d in [data_dir, truth_dir, run_dir] {
        let _ = std::fs::remove_dir_all(d);
    }
    println!("ACCEPTANCE 10 PASS: 11-variable 4-assay CSV pipeline end to end");
}

// sign-aware evaluation is exposed behind a flag; exercise it once here so
// the acceptance run covers the whole scoring surface
#[test]
fn acceptance_10b_signed_scoring_variant() {
    let params = SimParams {
        p: 11,
        k: 20,
        tasks: 4,
        delta: 2,
        n_per_task: vec![250; 4],
        deflation: 0.9,
        seed: 1002,
    };
    let (truth, data) = generate(&params).unwrap();
    let data = center_columns(data);
    let spec = PenaltySpec::new(Method::Independent, 1.0).unwrap();
    let cov = empirical_covariance(&data, 0.5);
    let lmax = multiggm_core::engine::global_lambda_max(&cov, &spec);
    let set = multiggm_core::engine::infer(&data, &spec.at_lambda(0.25 * lmax), Symmetrization::And)
        .unwrap();
    let plain = multiggm_core::eval::score(&set, &truth, false).unwrap();
    let signed = multiggm_core::eval::score(&set, &truth, true).unwrap();
    assert!(signed.true_positives <= plain.true_positives);
    assert!(
        signed.true_positives as f64 >= 0.8 * plain.true_positives as f64,
        "signed detection collapsed: {} vs {}",
        signed.true_positives,
        plain.true_positives
    );
    println!("ACCEPTANCE 10b PASS: sign-aware scoring consistent with plain scoring");
}

// the coop solver must be able to keep an edge in one task and drop it in
// another; exercised here because it is the method's defining capability
#[test]
fn acceptance_coop_task_split_support() {
    let mut found = false;
    let mut it = InstanceIter::new(1100);
    for _ in 0..60 {
        let (problem, _, lambda, _) = it.next_instance(4, 2, Method::Coop);
        let sol = solve_coop(&problem, lambda, None).unwrap();
        let m = problem.features();
        for i in 0..m {
            let a = sol.beta[i].abs() > ZERO_TOL;
            let b = sol.beta[m + i].abs() > ZERO_TOL;
            if a != b {
                found = true;
            }
        }
        if found {
            break;
        }
    }
    assert!(found, "no coop solution with task-split support found");
    println!("ACCEPTANCE (coop split) PASS: per-task support divergence exhibited");
}
