use cat0_fubini::measures::product_mm;
use cat0_fubini::obsvar::{
    graph_gap, obsvar_lower_bound, product_split_defect, random_lipschitz_map, spectral_obsvar_check,
    tree_comparison_check, GraphMM,
};
use cat0_fubini::spaces::sample::{random_mm, space_zoo};
use cat0_fubini::spaces::Space;
use cat0_fubini::Domain;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

/// Second Laplacian eigenvalue by power iteration on `c I - L`, deflating the
/// constant vector. Independent of the dense eigensolver.
fn lambda2_power(n: usize, edges: &[(usize, usize)]) -> f64 {
    let c = 2.0 * n as f64;
    let apply = |x: &[f64]| {
        let mut y: Vec<f64> = x.iter().map(|v| c * v).collect();
        for &(u, v) in edges {
            y[u] -= x[u] - x[v];
            y[v] -= x[v] - x[u];
        }
        y
    };
    let mut x: Vec<f64> = (0..n).map(|i| ((i * 7919 + 13) % 101) as f64 - 50.0).collect();
    let mut mu = 0.0;
    for _ in 0..20_000 {
        let mean = x.iter().sum::<f64>() / n as f64;
        x.iter_mut().for_each(|v| *v -= mean);
        let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        x.iter_mut().for_each(|v| *v /= norm);
        let y = apply(&x);
        mu = x.iter().zip(&y).map(|(a, b)| a * b).sum();
        x = y;
    }
    c - mu
}

fn normalized(g: &GraphMM, lambda2: f64) -> f64 {
    lambda2 * g.vertex_count() as f64 / g.edges().len() as f64
}

#[test]
fn closed_form_gaps() {
    for n in 2..=10 {
        let g = GraphMM::complete(n).unwrap();
        assert!((graph_gap(&g).unwrap() - 2.0 * n as f64 / (n - 1) as f64).abs() < 1e-9);
    }
    for n in 3..=12 {
        let g = GraphMM::cycle(n).unwrap();
        assert!((graph_gap(&g).unwrap() - (2.0 - 2.0 * (2.0 * PI / n as f64).cos())).abs() < 1e-9);
    }
    for d in 1..=4 {
        let g = GraphMM::hypercube(d).unwrap();
        assert!((graph_gap(&g).unwrap() - 4.0 / d as f64).abs() < 1e-9);
    }
    for n in 2..=8 {
        let g = GraphMM::path(n).unwrap();
        let l2 = 2.0 - 2.0 * (PI / n as f64).cos();
        assert!((graph_gap(&g).unwrap() - l2 * n as f64 / (n - 1) as f64).abs() < 1e-9);
    }
}

#[test]
fn random_graph_gaps_match_power_iteration_and_rayleigh() {
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    for _ in 0..20 {
        let n = rng.gen_range(3..=9);
        let g = GraphMM::random_connected(n, 0.4, &mut rng).unwrap();
        let gap = graph_gap(&g).unwrap();
        let oracle = normalized(&g, lambda2_power(n, g.edges()));
        assert!((gap - oracle).abs() < 1e-6, "gap {gap} vs power {oracle}");
        for _ in 0..200 {
            let h: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            assert!(g.rayleigh_quotient(&h) >= gap - 1e-9);
        }
    }
}

#[test]
fn split_inequalities_on_lipschitz_maps() {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let targets = space_zoo(&mut rng.clone());
    for _ in 0..30 {
        let x = random_mm(rng.gen_range(1..=4), &mut rng);
        let y = random_mm(rng.gen_range(1..=4), &mut rng);
        let dom = Domain::Product(product_mm(x, y));
        for t in &targets {
            let f = random_lipschitz_map(&dom, t, &mut rng);
            for p in [1.0, 2.0, 3.0] {
                let s = product_split_defect(&f, p).unwrap();
                assert!(s.lemma >= -1e-9, "{} p={p}: {}", t.kind(), s.lemma);
                assert!(s.sharp >= -1e-9, "{}: {}", t.kind(), s.sharp);
            }
        }
    }
}

#[test]
fn spectral_bound_on_small_families() {
    let graphs = [GraphMM::complete(5).unwrap(), GraphMM::cycle(6).unwrap(), GraphMM::hypercube(3).unwrap()];
    for (i, g) in graphs.iter().enumerate() {
        for target in [Space::euclidean(1).unwrap(), Space::euclidean(2).unwrap(), Space::hyperboloid(2).unwrap()] {
            let c = spectral_obsvar_check(g, &target, 20, i as u64).unwrap();
            assert!(c.min_slack >= -1e-9, "slack {}", c.min_slack);
        }
    }
}

#[test]
fn budget_monotone_and_tree_comparison_clean() {
    let mut rng = ChaCha8Rng::seed_from_u64(43);
    let x = random_mm(4, &mut rng);
    let mut last = 0.0;
    for budget in [1, 2, 4, 8] {
        let (v, w) = obsvar_lower_bound(&x, &Space::tripod(), 2.0, budget, 5).unwrap();
        assert!(w.revalidate());
        assert!(v >= last);
        last = v;
    }
    let c = tree_comparison_check(&x, &Space::tripod(), 4, 6).unwrap();
    assert!(!c.flagged, "slack {}", c.slack);
}
