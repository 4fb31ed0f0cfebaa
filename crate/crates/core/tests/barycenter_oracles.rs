use cat0_fubini::barycenter::{barycenter, crosscheck_with_draws, distance_jensen_defect, tangent_mean_residual, variance_defect};
use cat0_fubini::spaces::sample::{random_point, space_zoo};
use cat0_fubini::spaces::{Point, Space, TreePoint};
use cat0_fubini::DiscreteMeasure;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_measure(space: &Space, rng: &mut ChaCha8Rng) -> DiscreteMeasure {
    let n = rng.gen_range(1..=8);
    let atoms = (0..n).map(|_| random_point(space, rng)).collect();
    let weights = (0..n).map(|_| rng.gen_range(0.05..1.0)).collect();
    DiscreteMeasure::normalized(space.clone(), atoms, weights).unwrap()
}

/// Minimum of the Frechet function over all tree edges at the given step.
fn tree_grid_min(space: &Space, nu: &DiscreteMeasure, step: f64) -> f64 {
    let tree = space.as_tree().unwrap();
    let mut best = f64::INFINITY;
    for v in 0..tree.vertex_count() {
        best = best.min(nu.frechet(&Point::Tree(TreePoint::Vertex(v))));
    }
    for (e, edge) in tree.edges().iter().enumerate() {
        let k = (edge.length / step).ceil() as usize;
        for i in 1..k {
            let p = Point::Tree(tree.point(e, i as f64 * edge.length / k as f64).unwrap());
            best = best.min(nu.frechet(&p));
        }
    }
    best
}

#[test]
fn exact_solvers_beat_probes() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let spaces = space_zoo(&mut rng);
    for s in &spaces {
        for _ in 0..60 {
            let nu = random_measure(s, &mut rng);
            let r = barycenter(&nu).unwrap();
            for _ in 0..100 {
                let x = random_point(s, &mut rng);
                assert!(r.frechet_value <= nu.frechet(&x) + 1e-8, "{}", s.kind());
            }
            if s.as_tree().is_some() {
                assert!(r.frechet_value <= tree_grid_min(s, &nu, 1e-3) + 1e-8);
            }
            if let Some(res) = tangent_mean_residual(&nu, &r.point) {
                assert!(res <= 1e-9, "{} residual {res}", s.kind());
            }
        }
    }
}

#[test]
fn product_barycenter_splits() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let s = Space::product(vec![Space::tripod(), Space::hyperboloid(2).unwrap(), Space::euclidean(1).unwrap()]).unwrap();
    let Space::Product(cs) = &s else { unreachable!() };
    for _ in 0..50 {
        let nu = random_measure(&s, &mut rng);
        let Point::Product(parts) = barycenter(&nu).unwrap().point else { unreachable!() };
        for (k, c) in cs.iter().enumerate() {
            let direct = barycenter(&nu.project(k).unwrap()).unwrap().point;
            assert!(c.dist(&parts[k], &direct) <= 1e-10);
        }
    }
}

#[test]
fn stochastic_crosscheck_agrees() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let spaces = [Space::tripod(), Space::hyperboloid(2).unwrap(), Space::euclidean(2).unwrap()];
    for (i, s) in spaces.iter().enumerate() {
        for j in 0..3 {
            let nu = random_measure(s, &mut rng);
            let exact = barycenter(&nu).unwrap().point;
            let est = crosscheck_with_draws(&nu, 100_000, (i * 10 + j) as u64);
            assert!(s.dist(&exact, &est) < 0.05, "{}: {}", s.kind(), s.dist(&exact, &est));
        }
    }
}

#[test]
fn tripod_example_crosscheck() {
    let s = Space::tripod();
    let leg = |e: &str| s.tree_point(e, 1.0).unwrap();
    let nu = DiscreteMeasure::new(s.clone(), vec![leg("1"), leg("2"), leg("3")], vec![0.25, 0.25, 0.5]).unwrap();
    let est = crosscheck_with_draws(&nu, 100_000, 1);
    assert!(s.dist(&est, &s.base_point()) < 0.05);
}

#[test]
fn variance_and_jensen_defects() {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    for s in space_zoo(&mut rng.clone()) {
        for _ in 0..40 {
            let nu = random_measure(&s, &mut rng);
            let z = random_point(&s, &mut rng);
            let v = variance_defect(&nu, &z).unwrap();
            assert!(v >= -1e-9);
            if let Space::Euclidean { .. } = s {
                assert!(v.abs() <= 1e-10, "euclidean variance equality off by {v}");
            }
            assert!(distance_jensen_defect(&nu, &z).unwrap() >= -1e-9);
        }
    }
}

/// Spread-out measures on which the plain Karcher step oscillates with a
/// contraction factor close to one.
#[test]
fn karcher_converges_on_spread_out_measures() {
    use cat0_fubini::barycenter::{Certificate, GRADIENT_TOL};
    use cat0_fubini::spaces::hyperboloid;

    for dim in [2usize, 3, 5] {
        for seed in 0..300u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let n = rng.gen_range(2..=12);
            let atoms: Vec<Point> = (0..n)
                .map(|_| {
                    let dir: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
                    let norm = dir.iter().map(|a| a * a).sum::<f64>().sqrt();
                    let r = rng.gen_range(0.0..10.0);
                    let mut v = vec![0.0];
                    v.extend(dir.iter().map(|a| a / norm * r));
                    Point::Hyperboloid(hyperboloid::exp(&hyperboloid::origin(dim), &v))
                })
                .collect();
            let weights = (0..n).map(|_| rng.gen_range(0.05..1.0)).collect();
            let nu = DiscreteMeasure::normalized(Space::hyperboloid(dim).unwrap(), atoms, weights).unwrap();
            let r = barycenter(&nu).unwrap_or_else(|e| panic!("dim {dim} seed {seed}: {e}"));
            let Certificate::FixedPoint { iterations, gradient_norm } = r.certificate else { unreachable!() };
            assert!(gradient_norm <= GRADIENT_TOL);
            assert!(iterations <= 200, "dim {dim} seed {seed}: {iterations} iterations");
        }
    }
}
