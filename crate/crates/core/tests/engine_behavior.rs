//! End-to-end engine behavior: symmetrization rules, method degeneracies
//! across matched grid positions, path warm starts, and determinism.

use multiggm_core::covariance::empirical_covariance;
use multiggm_core::engine::{
    global_lambda_max, infer, infer_path, infer_path_from_cov, log_grid, solve_node,
    InferredGraphSet, Symmetrization,
};
use multiggm_core::mat::Mat;
use multiggm_core::model::{center_columns, Method, PenaltySpec, TaskDataset};
use multiggm_core::rng::SeededRng;
use multiggm_core::sim::{generate, SimParams};
use multiggm_testutil as oracle;

fn graphs_equal(a: &InferredGraphSet, b: &InferredGraphSet) -> bool {
    if a.graphs.len() != b.graphs.len() {
        return false;
    }
    a.graphs.iter().zip(&b.graphs).all(|(x, y)| {
        x.edges.len() == y.edges.len()
            && x.edges.iter().zip(&y.edges).all(|(e, f)| e.i == f.i && e.j == f.j)
    })
}

/// Graph sets for one method over a grid of shared relative positions.
fn method_path(
    data: &TaskDataset,
    method: Method,
    alpha: f64,
    size: usize,
    ratio: f64,
    sym: Symmetrization,
) -> Vec<InferredGraphSet> {
    let spec = PenaltySpec::with_alpha(method, 1.0, alpha).unwrap();
    let (_, graphs) = infer_path(data, &spec, size, ratio, sym).unwrap();
    graphs
}

#[test]
fn three_variable_chain_recovered_at_large_n() {
    // K tridiagonal: x1 - x2 - x3 with no direct x1 - x3 edge
    let p = 3;
    let mut k = Mat::identity(p);
    k.set(0, 1, -0.45);
    k.set(1, 0, -0.45);
    k.set(1, 2, -0.45);
    k.set(2, 1, -0.45);
    let chol = multiggm_core::mat::Cholesky::factor_strict(&k).unwrap();
    let mut rng = SeededRng::new(31);
    let n = 10_000;
    let mut rows = Vec::with_capacity(n);
    for _ in 0..n {
        let z: Vec<f64> = (0..p).map(|_| rng.next_gaussian()).collect();
        rows.push(chol.solve_lt(&z));
    }
    let data = center_columns(TaskDataset {
        tasks: vec![Mat::from_rows(&rows)],
        variable_names: vec!["x1".into(), "x2".into(), "x3".into()],
        task_names: vec!["t1".into()],
    });
    let cov = empirical_covariance(&data, 0.5);
    let spec = PenaltySpec::new(Method::Independent, 1.0).unwrap();
    let lmax = global_lambda_max(&cov, &spec);
    for sym in [Symmetrization::And, Symmetrization::Or] {
        let set = infer(&data, &spec.at_lambda(0.2 * lmax), sym).unwrap();
        let g = &set.graphs[0];
        assert!(g.contains(0, 1), "{sym:?}: missing 1-2");
        assert!(g.contains(1, 2), "{sym:?}: missing 2-3");
        assert!(!g.contains(0, 2), "{sym:?}: spurious 1-3");
    }
}

#[test]
fn empty_graph_at_lambda_max() {
    let data = oracle::random_dataset(55, 2, 30, 6);
    for method in Method::ALL {
        let spec = PenaltySpec::new(method, 1.0).unwrap();
        let cov = empirical_covariance(&data, spec.alpha);
        let lmax = global_lambda_max(&cov, &spec);
        let set = infer(&data, &spec.at_lambda(lmax), Symmetrization::Or).unwrap();
        for g in &set.graphs {
            assert!(g.is_empty(), "{method:?} not empty at lambda max");
        }
        // grid of one point = the lambda-max graph
        let (_, graphs) = infer_path(&data, &spec, 1, 0.5, Symmetrization::Or).unwrap();
        assert_eq!(graphs.len(), 1);
        assert!(graphs[0].graphs.iter().all(|g| g.is_empty()));
    }
}

#[test]
fn and_graph_subset_of_or_graph() {
    let params = SimParams {
        p: 12,
        k: 12,
        tasks: 3,
        delta: 2,
        n_per_task: vec![20; 3],
        deflation: 0.9,
        seed: 7,
    };
    let (_, data) = generate(&params).unwrap();
    let data = center_columns(data);
    for method in [Method::Independent, Method::Group, Method::Coop] {
        let spec = PenaltySpec::new(method, 1.0).unwrap();
        let and_graphs = method_path(&data, method, 0.5, 6, 0.1, Symmetrization::And);
        let or_graphs = method_path(&data, method, 0.5, 6, 0.1, Symmetrization::Or);
        let _ = spec;
        for (a, o) in and_graphs.iter().zip(&or_graphs) {
            for (ga, go) in a.graphs.iter().zip(&o.graphs) {
                for e in &ga.edges {
                    assert!(go.contains(e.i, e.j), "AND edge missing from OR");
                }
            }
        }
    }
}

#[test]
fn pooled_returns_identical_graphs_per_task() {
    let data = oracle::random_dataset(77, 3, 15, 5);
    let spec = PenaltySpec::new(Method::Pooled, 1.0).unwrap();
    let cov = empirical_covariance(&data, 0.5);
    let lmax = global_lambda_max(&cov, &spec);
    let set = infer(&data, &spec.at_lambda(0.3 * lmax), Symmetrization::And).unwrap();
    for g in &set.graphs[1..] {
        assert_eq!(g, &set.graphs[0]);
    }
}

#[test]
fn single_task_methods_agree_across_grid() {
    // with one task all five methods solve the same problem up to penalty
    // scaling, so graphs match at matched relative grid positions
    let data = oracle::random_dataset(88, 1, 25, 6);
    let reference = method_path(&data, Method::Independent, 0.5, 8, 0.05, Symmetrization::And);
    for method in [Method::Pooled, Method::Intertwined, Method::Group, Method::Coop] {
        let graphs = method_path(&data, method, 0.5, 8, 0.05, Symmetrization::And);
        for (k, (a, b)) in reference.iter().zip(&graphs).enumerate() {
            assert!(graphs_equal(a, b), "{method:?} differs at grid {k}");
        }
    }
}

#[test]
fn intertwined_alpha_endpoints() {
    let params = SimParams {
        p: 10,
        k: 10,
        tasks: 2,
        delta: 1,
        n_per_task: vec![18; 2],
        deflation: 0.9,
        seed: 13,
    };
    let (_, data) = generate(&params).unwrap();
    let data = center_columns(data);
    // alpha = 1: identical to independent at the same absolute lambda
    let ind = method_path(&data, Method::Independent, 0.5, 6, 0.1, Symmetrization::And);
    let int1 = method_path(&data, Method::Intertwined, 1.0, 6, 0.1, Symmetrization::And);
    for (a, b) in ind.iter().zip(&int1) {
        assert!(graphs_equal(a, b), "alpha = 1 differs from independent");
    }
    // alpha = 0: identical to pooled at matched grid positions
    let pool = method_path(&data, Method::Pooled, 0.5, 6, 0.1, Symmetrization::And);
    let int0 = method_path(&data, Method::Intertwined, 0.0, 6, 0.1, Symmetrization::And);
    for (a, b) in pool.iter().zip(&int0) {
        assert!(graphs_equal(a, b), "alpha = 0 differs from pooled");
    }
}

#[test]
fn warm_path_matches_cold_solves() {
    let data = oracle::random_dataset(99, 2, 20, 6);
    let spec = PenaltySpec::new(Method::Coop, 1.0).unwrap();
    let cov = empirical_covariance(&data, 0.5);
    let lmax = global_lambda_max(&cov, &spec);
    let grid = log_grid(lmax, 10, 0.05).unwrap();
    let (path, _) = infer_path_from_cov(&cov, &spec, &grid, Symmetrization::And).unwrap();
    for node in 0..6 {
        for (k, &lambda) in grid.iter().enumerate() {
            let cold = solve_node(&cov, &spec, node, lambda, None).unwrap();
            for (a, b) in path.node_entries[node][k].beta.iter().zip(&cold.beta) {
                assert!(
                    (a - b).abs() < 1e-5,
                    "node {node} grid {k}: warm {a} vs cold {b}"
                );
            }
        }
    }
}

#[test]
fn nested_support_tendency_along_path() {
    // edge counts should be non-increasing in lambda on nearly all
    // adjacent grid pairs (not guaranteed pointwise)
    let mut ok = 0usize;
    let mut total = 0usize;
    for seed in 0..5 {
        let params = SimParams {
            p: 10,
            k: 10,
            tasks: 2,
            delta: 1,
            n_per_task: vec![25; 2],
            deflation: 0.9,
            seed: 100 + seed,
        };
        let (_, data) = generate(&params).unwrap();
        let data = center_columns(data);
        let graphs = method_path(&data, Method::Independent, 0.5, 10, 0.05, Symmetrization::And);
        let counts: Vec<usize> =
            graphs.iter().map(|s| s.graphs.iter().map(|g| g.len()).sum()).collect();
        for w in counts.windows(2) {
            total += 1;
            if w[1] >= w[0] {
                ok += 1;
            }
        }
    }
    assert!(
        ok as f64 >= 0.95 * total as f64,
        "monotone fraction {ok}/{total}"
    );
}

#[test]
fn deterministic_graphs_for_same_input() {
    let params = SimParams {
        p: 8,
        k: 8,
        tasks: 2,
        delta: 1,
        n_per_task: vec![15; 2],
        deflation: 0.9,
        seed: 55,
    };
    let (_, data) = generate(&params).unwrap();
    let data = center_columns(data);
    let spec = PenaltySpec::new(Method::Group, 0.4).unwrap();
    let a = infer(&data, &spec, Symmetrization::And).unwrap();
    let b = infer(&data, &spec, Symmetrization::And).unwrap();
    for (x, y) in a.graphs.iter().zip(&b.graphs) {
        assert_eq!(x, y);
    }
}

#[test]
fn diagonal_covariance_gives_empty_graphs() {
    // independent variables at large n: noise correlations are O(1/sqrt n),
    // so a fixed moderate penalty wipes every edge
    let n = 2000usize;
    let data = oracle::random_dataset(123, 2, n, 5);
    for method in [Method::Independent, Method::Group, Method::Coop] {
        // effective per-coordinate level 0.15 regardless of the method's
        // weight convention (1/n_t for the L1 methods, 1 for group/coop)
        let lambda = if method.is_l1() { 0.15 * n as f64 } else { 0.15 };
        let spec = PenaltySpec::new(method, lambda).unwrap();
        for sym in [Symmetrization::And, Symmetrization::Or] {
            let set = infer(&data, &spec, sym).unwrap();
            let edges: usize = set.graphs.iter().map(|g| g.len()).sum();
            assert_eq!(edges, 0, "{method:?}/{sym:?} found {edges} edges in noise");
        }
    }
}

#[test]
fn aggregation_is_permutation_invariant_and_matches_two_pass() {
    use multiggm_core::eval::{aggregate_curves, PRPoint};
    let mut rng = SeededRng::new(606);
    let levels = 6;
    let replicates: Vec<Vec<PRPoint>> = (0..100)
        .map(|_| {
            (0..levels)
                .map(|k| PRPoint {
                    lambda: 1.0 / (k + 1) as f64,
                    precision: rng.next_f64(),
                    recall: rng.next_f64(),
                    true_positives: rng.below(20),
                    selected: 20 + rng.below(20),
                    total_true: 40,
                    degenerate: false,
                })
                .collect()
        })
        .collect();
    let curve = aggregate_curves("m", &replicates).unwrap();
    // permutation invariance
    let mut reversed = replicates.clone();
    reversed.reverse();
    let curve_rev = aggregate_curves("m", &reversed).unwrap();
    for (a, b) in curve.points.iter().zip(&curve_rev.points) {
        assert!((a.precision - b.precision).abs() < 1e-15);
        assert!((a.recall - b.recall).abs() < 1e-15);
    }
    // two-pass recomputation with a different summation order
    for k in 0..levels {
        let mut vals: Vec<f64> = replicates.iter().map(|r| r[k].precision).collect();
        vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mean: f64 = vals.iter().sum::<f64>() / vals.len() as f64;
        assert!((curve.points[k].precision - mean).abs() < 1e-12, "level {k}");
    }
}
