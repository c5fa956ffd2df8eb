//! Solver kernels against the brute-force and dense references.

use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use semicut::graph::{max_flow_dregular, LapTerm, WeightedTerm};
use semicut::hierarchy::{
    dasgupta_cost, expected_cost, recursive_cluster, ClusterConfig, ClusterTree, TreeBuilder,
};
use semicut::mmw::{dense_iterates, eigenvalue_regret_check, normalize_feedback, taylor_exp_apply, FeedbackMatrix};
use semicut::refcheck::{
    dense_expm, dense_psd_check, dense_terms, enumerate_trees_min_cost, exact_min_balanced_cut,
    exact_terminal_min_cut, expected_cost_double_sum, naive_dasgupta_cost,
};
use semicut::{cut_value, Graph, Partition};

fn random_graph(n: usize, p: f64, rng: &mut ChaCha8Rng) -> Graph {
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if rng.gen_bool(p) {
                edges.push((i, j));
            }
        }
    }
    Graph::new(n, edges).unwrap()
}

/// Merges random pairs of roots until one tree is left. Internal nodes get
/// weight `1 / leaves`, which never increases toward the root.
fn random_tree(n: usize, rng: &mut ChaCha8Rng) -> ClusterTree {
    let mut b = TreeBuilder::new(n);
    let mut roots: Vec<(usize, usize)> = (0..n).map(|v| (v, 1)).collect();
    while roots.len() > 1 {
        let x = roots.swap_remove(rng.gen_range(0..roots.len()));
        let y = roots.swap_remove(rng.gen_range(0..roots.len()));
        let size = x.1 + y.1;
        roots.push((b.merge(x.0, y.0, Some(1.0 / size as f64)), size));
    }
    b.finish().unwrap()
}

fn to_dmatrix(n: usize, row_major: &[f64]) -> DMatrix<f64> {
    DMatrix::from_row_slice(n, n, row_major)
}

fn operator_norm(m: &DMatrix<f64>) -> f64 {
    m.clone().symmetric_eigen().eigenvalues.amax()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn max_flow_equals_exhaustive_terminal_cut(n in 2usize..=10, p in 0.1f64..0.9, d in 1u32..=6, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = random_graph(n, p, &mut rng);
        let mut order: Vec<usize> = (0..n).collect();
        for i in (1..n).rev() {
            order.swap(i, rng.gen_range(0..=i));
        }
        let k = rng.gen_range(1..n);
        let l = rng.gen_range(1..=n - k);
        let (sources, sinks) = (&order[..k], &order[k..k + l]);
        let d = d as f64 / 2.0;
        let flow = max_flow_dregular(&g, sources, sinks, d).unwrap();
        let (exact, _) = exact_terminal_min_cut(&g, sources, sinks, d).unwrap();
        prop_assert!((flow.value - exact).abs() < 1e-9, "flow {} vs cut {}", flow.value, exact);
        prop_assert!((flow.mincut_capacity(&g) - exact).abs() < 1e-9);
    }

    #[test]
    fn edge_flow_laplacian_is_dominated(n in 2usize..=16, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = random_graph(n, 0.4, &mut rng);
        let flow = max_flow_dregular(&g, &[0], &[n - 1], n as f64).unwrap();
        let terms: Vec<WeightedTerm> = g
            .edges()
            .iter()
            .zip(&flow.edge_flows)
            .map(|(&(i, j), f)| WeightedTerm::new(LapTerm::Edge(i, j), 1.0 - f.abs()))
            .collect();
        prop_assert!(dense_psd_check(n, &terms).unwrap() >= -1e-9);
    }

    #[test]
    fn dasgupta_cost_matches_naive(n in 2usize..=40, p in 0.0f64..0.6, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = random_graph(n, p, &mut rng);
        let t = random_tree(n, &mut rng);
        let weights: Vec<f64> = (0..g.m()).map(|_| rng.gen()).collect();
        let fast = dasgupta_cost(&t, &g, Some(&weights)).unwrap();
        let slow = naive_dasgupta_cost(&t, &g, Some(&weights)).unwrap();
        prop_assert!((fast - slow).abs() <= 1e-9 * slow.max(1.0));
        let unit = dasgupta_cost(&t, &g, None).unwrap();
        prop_assert!(unit >= 2.0 * g.m() as f64);
    }

    #[test]
    fn expected_cost_matches_double_sum(n in 2usize..=120, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let t = random_tree(n, &mut rng);
        let fast = expected_cost(&t).unwrap();
        let slow = expected_cost_double_sum(&t).unwrap();
        prop_assert!((fast - slow).abs() <= 1e-9 * slow.max(1.0));
    }

    #[test]
    fn no_tree_beats_the_enumerated_minimum(n in 1usize..=7, p in 0.0f64..1.0, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = random_graph(n, p, &mut rng);
        let (best, cost) = enumerate_trees_min_cost(&g).unwrap();
        prop_assert_eq!(dasgupta_cost(&best, &g, None).unwrap(), cost);
        for _ in 0..5 {
            prop_assert!(dasgupta_cost(&random_tree(n, &mut rng), &g, None).unwrap() >= cost);
        }
    }

    #[test]
    fn exact_balanced_cut_is_a_lower_bound(n in 4usize..=12, p in 0.1f64..0.8, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = random_graph(n, p, &mut rng);
        let (part, value) = exact_min_balanced_cut(&g, 0.25).unwrap();
        prop_assert_eq!(cut_value(&g, &part).unwrap(), value);
        let side: Vec<bool> = (0..n).map(|_| rng.gen()).collect();
        let p = Partition::bipartition(&side);
        if p.min_side_fraction() >= 0.25 {
            prop_assert!(cut_value(&g, &p).unwrap() >= value);
        }
    }
}

#[test]
fn recursive_cluster_never_beats_the_optimum_on_small_graphs() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for trial in 0..12 {
        let n = rng.gen_range(2..=7);
        let g = random_graph(n, 0.5, &mut rng);
        let mut cfg = ClusterConfig::new(trial);
        cfg.size_floor = Some(2);
        let out = recursive_cluster(&g, &cfg).unwrap();
        let (_, best) = enumerate_trees_min_cost(&g).unwrap();
        assert!(dasgupta_cost(&out.tree, &g, None).unwrap() >= best);
    }
}

fn random_feedback(n: usize, rng: &mut ChaCha8Rng) -> FeedbackMatrix {
    let mut terms = vec![WeightedTerm::new(LapTerm::Identity, rng.gen_range(-1.0..1.0))];
    for _ in 0..n {
        let i = rng.gen_range(0..n);
        let j = (i + rng.gen_range(1..n)) % n;
        terms.push(WeightedTerm::new(LapTerm::Edge(i, j), rng.gen_range(-1.0..1.0)));
    }
    terms.push(WeightedTerm::new(
        LapTerm::Diagonal((0..n / 2).map(|i| (2 * i, 1.0)).collect()),
        rng.gen_range(-1.0..1.0),
    ));
    FeedbackMatrix::new(n, terms, 0.0)
}

#[test]
fn taylor_series_matches_dense_exponential() {
    let n = 24;
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for &eps in &[0.1, 0.5, 1.0] {
        let ops: Vec<_> = (0..8).map(|_| normalize_feedback(random_feedback(n, &mut rng)).unwrap()).collect();
        let mut sum = DMatrix::<f64>::zeros(n, n);
        for y in &ops {
            let dense = to_dmatrix(n, &y.densify(n));
            assert!(dense.clone().symmetric_eigen().eigenvalues.min() >= -1e-12);
            assert!(dense.clone().symmetric_eigen().eigenvalues.max() <= 1.0 + 1e-12);
            sum += dense;
        }
        let exact = dense_expm(&(sum * (eps / 2.0))).unwrap();
        let p = (10.0 / eps * (n as f64).ln()).ceil() as usize;
        let mut approx = DMatrix::<f64>::zeros(n, n);
        for k in 0..n {
            let mut e = vec![0.0; n];
            e[k] = 1.0;
            approx.set_column(k, &nalgebra::DVector::from_vec(taylor_exp_apply(&ops, eps, p, &e).unwrap()));
        }
        assert!(operator_norm(&(approx - exact)) <= 1e-6);
    }
}

#[test]
fn feedback_densification_agrees_with_reference() {
    let n = 10;
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut fb = random_feedback(n, &mut rng);
    fb.terms.push(WeightedTerm::new(LapTerm::PathTriple(1, 4, 7), 0.3));
    fb.terms.push(WeightedTerm::new(LapTerm::Complete(vec![0, 2, 5, 9]), -0.2));
    let ours = to_dmatrix(n, &fb.densify(n));
    let reference = dense_terms(n, &fb.terms).unwrap();
    assert!((ours - reference).amax() < 1e-12);
}

#[test]
fn regret_bound_holds_for_random_feedback() {
    let n = 12;
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for &eps in &[0.1, 0.3] {
        let ys: Vec<DMatrix<f64>> = (0..30)
            .map(|_| to_dmatrix(n, &normalize_feedback(random_feedback(n, &mut rng)).unwrap().densify(n)))
            .collect();
        let xs = dense_iterates(&ys, eps);
        for x in &xs {
            assert!((x.trace() - 1.0).abs() < 1e-9);
        }
        assert!(eigenvalue_regret_check(&ys, &xs, eps));
    }
}
