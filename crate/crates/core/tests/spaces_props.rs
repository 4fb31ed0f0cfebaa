use cat0_fubini::spaces::sample::{random_point, space_zoo};
use cat0_fubini::spaces::{hyperboloid, Point, Space};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn zoo(seed: u64) -> (Vec<Space>, ChaCha8Rng) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (space_zoo(&mut rng), rng)
}

#[test]
fn triangle_inequality_ten_thousand_triples_per_kind() {
    let (spaces, mut rng) = zoo(1);
    for s in &spaces {
        for _ in 0..10_000 {
            let (p, q, r) = (random_point(s, &mut rng), random_point(s, &mut rng), random_point(s, &mut rng));
            assert!(s.dist(&p, &r) <= s.dist(&p, &q) + s.dist(&q, &r) + 1e-9, "{}", s.kind());
        }
    }
}

#[test]
fn product_distance_matches_recomputation() {
    let (spaces, mut rng) = zoo(2);
    for s in spaces.iter().filter(|s| matches!(s, Space::Product(_))) {
        let Space::Product(cs) = s else { unreachable!() };
        for _ in 0..500 {
            let (p, q) = (random_point(s, &mut rng), random_point(s, &mut rng));
            let (Point::Product(ps), Point::Product(qs)) = (&p, &q) else { unreachable!() };
            let direct = cs.iter().zip(ps.iter().zip(qs)).map(|(c, (a, b))| c.dist(a, b).powi(2)).sum::<f64>().sqrt();
            assert!((s.dist(&p, &q) - direct).abs() <= 1e-12);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn geodesics_have_constant_speed(seed in any::<u64>(), s_par in 0.0f64..=1.0, t_par in 0.0f64..=1.0) {
        let (spaces, mut rng) = zoo(seed);
        for sp in &spaces {
            let (p, q) = (random_point(sp, &mut rng), random_point(sp, &mut rng));
            let d = sp.dist(&p, &q);
            let gs = sp.geodesic_point(&p, &q, s_par).unwrap();
            let gt = sp.geodesic_point(&p, &q, t_par).unwrap();
            let tol = 1e-9 * d.max(1.0);
            prop_assert!((sp.dist(&gs, &gt) - (s_par - t_par).abs() * d).abs() <= tol, "{}", sp.kind());
            prop_assert!((sp.dist(&p, &gs) - s_par * d).abs() <= 1e-10 * d.max(1.0));
            prop_assert!((sp.dist(&gs, &q) - (1.0 - s_par) * d).abs() <= 1e-10 * d.max(1.0));
            prop_assert_eq!(sp.geodesic_point(&p, &q, 0.0).unwrap(), p.clone());
            prop_assert_eq!(sp.geodesic_point(&p, &q, 1.0).unwrap(), q.clone());
        }
    }

    #[test]
    fn comparison_defects_are_nonnegative(seed in any::<u64>()) {
        let (spaces, mut rng) = zoo(seed);
        for sp in &spaces {
            let pts: Vec<Point> = (0..4).map(|_| random_point(sp, &mut rng)).collect();
            prop_assert!(sp.cat0_midpoint_defect(&pts[0], &pts[1], &pts[2]).unwrap() >= -1e-9);
            prop_assert!(sp.reshetnyak_defect(&pts[0], &pts[1], &pts[2], &pts[3]).unwrap() >= -1e-9);
            if let Space::Euclidean { .. } = sp {
                prop_assert!(sp.cat0_midpoint_defect(&pts[0], &pts[1], &pts[2]).unwrap().abs() <= 1e-10);
            }
        }
    }

    #[test]
    fn exp_inverts_log(seed in any::<u64>()) {
        let (spaces, mut rng) = zoo(seed);
        for sp in spaces.iter().filter(|s| s.has_tangent_maps()) {
            let (b, t) = (random_point(sp, &mut rng), random_point(sp, &mut rng));
            let v = sp.log_map(&b, &t).unwrap();
            prop_assert!((sp.tangent_norm(&v.coords) - sp.dist(&b, &t)).abs() <= 1e-10 * sp.dist(&b, &t).max(1.0));
            let back = sp.exp_map(&v).unwrap();
            prop_assert!(sp.dist(&back, &t) <= 1e-9);
            if let (Space::Hyperboloid { .. }, Point::Hyperboloid(x), Point::Hyperboloid(bx)) = (sp, &back, &b) {
                prop_assert!(hyperboloid::constraint_residual(x) <= 1e-10);
                prop_assert!(hyperboloid::minkowski_dot(bx, &v.coords).abs() <= 1e-10 * sp.dist(&b, &t).max(1.0));
            }
        }
    }

    #[test]
    fn hyperboloid_geodesic_keeps_constraint(seed in any::<u64>(), t in 0.0f64..=1.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let sp = Space::hyperboloid(3).unwrap();
        let (p, q) = (random_point(&sp, &mut rng), random_point(&sp, &mut rng));
        let Point::Hyperboloid(x) = sp.geodesic_point(&p, &q, t).unwrap() else { unreachable!() };
        prop_assert!(hyperboloid::constraint_residual(&x) <= 1e-10);
        prop_assert!(x[0] > 0.0);
    }
}

#[test]
fn one_dimensional_hyperboloid_log_round_trip() {
    let sp = Space::hyperboloid(1).unwrap();
    let base = sp.base_point();
    for s in [0.0, 1e-6, 0.3, 1.0, 2.5, 5.0] {
        let target = Point::Hyperboloid(vec![f64::cosh(s), f64::sinh(s)]);
        let v = sp.log_map(&base, &target).unwrap();
        assert!((sp.tangent_norm(&v.coords) - s).abs() < 1e-10);
        assert!(sp.dist(&sp.exp_map(&v).unwrap(), &target) < 1e-9);
    }
}
