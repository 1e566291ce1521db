mod common;

use std::f64::consts::PI;

use common::{random_graph, random_regular_graph, random_weighted_graph, rng};
use manireg::graph::{connected_components, families, laplacian};
use manireg::spectral::{
    check_interlacing, cheeger_constant_bruteforce, complement_spectrum, eigenvalue_bounds, rayleigh_lambda2, spectrum,
    sweep_cut,
};
use proptest::prelude::*;
use rand::Rng;

fn eigenvalues(g: &manireg::graph::DataGraph) -> Vec<f64> {
    spectrum(&laplacian(g, false).unwrap()).unwrap().eigenvalues
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn bounds_hold_on_random_graphs(seed in any::<u64>(), n in 2usize..16, weighted in any::<bool>()) {
        let mut r = rng(seed);
        let p = r.random_range(0.2..0.9);
        let g = if weighted { random_weighted_graph(&mut r, n, p) } else { random_graph(&mut r, n, p) };
        let report = eigenvalue_bounds(&g).unwrap();
        for c in &report.checks {
            prop_assert!(c.holds != Some(false), "{} failed: {} vs {}", c.name, c.lhs, c.rhs);
        }
    }

    #[test]
    fn complement_lemma_matches_direct_solve(seed in any::<u64>(), n in 2usize..=12) {
        let mut r = rng(seed);
        let p = r.random_range(0.1..0.9);
        let g = random_graph(&mut r, n, p);
        let lemma = complement_spectrum(&g).unwrap();
        let direct = eigenvalues(&g.complement().unwrap());
        prop_assert!(common::max_abs_diff(&lemma, &direct) <= 1e-9);
    }

    #[test]
    fn lambda_n_equals_n_iff_complement_disconnected(seed in any::<u64>(), n in 2usize..=12) {
        let mut r = rng(seed);
        let p = r.random_range(0.3..1.0);
        let g = random_graph(&mut r, n, p);
        let lambda_n = *eigenvalues(&g).last().unwrap();
        prop_assert!(lambda_n <= n as f64 + 1e-9);
        let disconnected = connected_components(&g.complement().unwrap()) > 1;
        prop_assert_eq!((lambda_n - n as f64).abs() <= 1e-8, disconnected);
    }

    #[test]
    fn rayleigh_quotient_bounds_lambda2(seed in any::<u64>(), n in 3usize..14) {
        let mut r = rng(seed);
        let g = random_weighted_graph(&mut r, n, 0.5);
        let lap = laplacian(&g, false).unwrap();
        let trial: Vec<f64> = (0..n).map(|_| r.random_range(-1.0..1.0)).collect();
        let b = rayleigh_lambda2(&lap, &trial).unwrap();
        prop_assert!(b.holds(), "{} < {}", b.quotient, b.lambda2);
    }

    #[test]
    fn adding_an_edge_interlaces(seed in any::<u64>(), n in 3usize..14) {
        let mut r = rng(seed);
        let g = random_graph(&mut r, n, 0.4);
        let missing: Vec<(usize, usize)> =
            (0..n).flat_map(|i| ((i + 1)..n).map(move |j| (i, j))).filter(|&(i, j)| !g.has_edge(i, j)).collect();
        prop_assume!(!missing.is_empty());
        let e = missing[r.random_range(0..missing.len())];
        let rep = check_interlacing(&g, e).unwrap();
        prop_assert!(rep.interlaces(), "violations {:?}", rep.violations);
        prop_assert!(rep.after[0].abs() <= 1e-9);
        prop_assert!((rep.trace_difference() - 2.0).abs() <= 1e-12);
        let gained: f64 = rep.after.iter().sum::<f64>() - rep.before.iter().sum::<f64>();
        prop_assert!((gained - 2.0).abs() <= 1e-9);
    }

    #[test]
    fn cheeger_inequalities_on_regular_graphs(seed in any::<u64>(), half in 3usize..=10, d in 3usize..=5) {
        let n = 2 * half;
        prop_assume!(d < n);
        let mut r = rng(seed);
        let g = random_regular_graph(&mut r, n, d);
        prop_assume!(connected_components(&g) == 1);
        let (h, subset) = cheeger_constant_bruteforce(&g).unwrap();
        let l2 = eigenvalues(&g)[1];
        let l2_norm = spectrum(&laplacian(&g, true).unwrap()).unwrap().eigenvalues[1];
        let sweep = sweep_cut(&g).unwrap();
        prop_assert!(h >= l2 / 2.0 - 1e-9);
        prop_assert!(sweep.conductance >= h - 1e-12);
        prop_assert!(sweep.conductance <= d as f64 * (2.0 * l2_norm).sqrt() + 1e-9);
        prop_assert!((g.conductance(&subset).unwrap() - h).abs() <= 1e-12);
        prop_assert!(subset.len() * 2 <= n);
    }
}

#[test]
fn cycle_sine_trial_is_near_lambda2() {
    let n = 30;
    let g = families::cycle(n);
    let lap = laplacian(&g, false).unwrap();
    let trial: Vec<f64> = (0..n).map(|i| (2.0 * PI * i as f64 / n as f64).sin()).collect();
    let b = rayleigh_lambda2(&lap, &trial).unwrap();
    let exact = 2.0 - 2.0 * (2.0 * PI / n as f64).cos();
    assert!((b.lambda2 - exact).abs() <= 1e-10);
    assert!((b.quotient - exact).abs() <= 1e-10);
    assert!(rayleigh_lambda2(&lap, &vec![3.0; n]).is_err());
}

#[test]
fn cheeger_constants_of_small_graphs() {
    let (h, s) = cheeger_constant_bruteforce(&families::complete(4)).unwrap();
    assert_eq!((h, s.len()), (2.0, 2));
    let (h, _) = cheeger_constant_bruteforce(&families::path(2)).unwrap();
    assert_eq!(h, 1.0);
    let (h, s) = cheeger_constant_bruteforce(&families::path(5)).unwrap();
    assert_eq!(h, 0.5);
    assert_eq!(s.len(), 2);
}

#[test]
fn sweep_recovers_barbell_bridge() {
    let mut edges = Vec::new();
    for base in [0, 5] {
        for i in 0..5 {
            for j in (i + 1)..5 {
                edges.push((base + i, base + j, 1.0));
            }
        }
    }
    edges.push((4, 5, 1.0));
    let g = manireg::graph::DataGraph::from_edges(10, &edges).unwrap();
    let cut = sweep_cut(&g).unwrap();
    assert!((cut.conductance - 0.2).abs() <= 1e-12);
    let (h, _) = cheeger_constant_bruteforce(&g).unwrap();
    assert!((h - 0.2).abs() <= 1e-12);
    assert!(sweep_cut(&families::empty(3)).is_err());
}

#[test]
fn complete_graph_bounds_are_tight() {
    let rep = eigenvalue_bounds(&families::complete(6)).unwrap();
    assert!((rep.lambda2 - 6.0).abs() <= 1e-10);
    assert!((rep.lambda_n - 6.0).abs() <= 1e-10);
    assert!((rep.fiedler_upper - 6.0).abs() <= 1e-12);
    assert_eq!(rep.lambda_n_le_n, Some(true));
    assert!(rep.all_hold());
}

#[test]
fn complement_spectrum_rejects_weights() {
    let g = manireg::graph::DataGraph::from_edges(3, &[(0, 1, 2.0)]).unwrap();
    assert!(complement_spectrum(&g).is_err());
}
