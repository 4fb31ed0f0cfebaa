//! Seeded random points and random spaces, used by the property suites and
//! the Lipschitz map generators.

use rand::Rng;
use rand_distr::StandardNormal;

use super::{hyperboloid, MetricTree, Point, Space, TreePoint};
use crate::measures::MMSpace;

fn gaussian_vec<R: Rng + ?Sized>(rng: &mut R, n: usize, scale: f64) -> Vec<f64> {
    (0..n).map(|_| scale * rng.sample::<f64, _>(StandardNormal)).collect()
}

/// Random point on a tree: a vertex with probability 1/5, otherwise a
/// uniform offset on a uniformly chosen edge.
pub fn random_tree_point<R: Rng + ?Sized>(tree: &MetricTree, rng: &mut R) -> TreePoint {
    if tree.edges().is_empty() || rng.gen_bool(0.2) {
        return TreePoint::Vertex(rng.gen_range(0..tree.vertex_count()));
    }
    let e = rng.gen_range(0..tree.edges().len());
    let len = tree.edges()[e].length;
    tree.clamp_point(e, rng.gen_range(0.0..len))
}

/// Random point with unit-scale spread around the base point.
pub fn random_point<R: Rng + ?Sized>(space: &Space, rng: &mut R) -> Point {
    random_point_near(space, &space.base_point(), 1.0, rng)
}

/// Random point spread around `center` with the given scale. Tree points
/// ignore the center and are drawn from the whole tree.
pub fn random_point_near<R: Rng + ?Sized>(
    space: &Space,
    center: &Point,
    scale: f64,
    rng: &mut R,
) -> Point {
    match (space, center) {
        (Space::Euclidean { dim }, Point::Euclidean(c)) => Point::Euclidean(
            c.iter().zip(gaussian_vec(rng, *dim, scale)).map(|(a, b)| a + b).collect(),
        ),
        (Space::Tree(t), _) => Point::Tree(random_tree_point(t, rng)),
        (Space::Hyperboloid { dim }, Point::Hyperboloid(c)) => {
            let mut v = vec![0.0];
            v.extend(gaussian_vec(rng, *dim, scale));
            // spatial gaussian, projected onto the tangent space at c
            hyperboloid::project_tangent(c, &mut v);
            Point::Hyperboloid(hyperboloid::exp(c, &v))
        }
        (Space::Product(cs), Point::Product(ps)) => Point::Product(
            cs.iter().zip(ps).map(|(c, p)| random_point_near(c, p, scale, rng)).collect(),
        ),
        _ => panic!("center does not belong to the space"),
    }
}

/// Random recursive tree on `n` vertices with edge lengths in `[0.2, 2)`.
pub fn random_tree<R: Rng + ?Sized>(n: usize, rng: &mut R) -> MetricTree {
    let vertices = (0..n.max(1)).map(|i| format!("v{i}")).collect();
    let edges = (1..n.max(1))
        .map(|i| (format!("e{i}"), rng.gen_range(0..i), i, rng.gen_range(0.2..2.0)))
        .collect();
    MetricTree::new(vertices, edges).expect("random recursive tree is valid")
}

/// One space of each supported kind, plus mixed products, for property suites.
pub fn space_zoo<R: Rng + ?Sized>(rng: &mut R) -> Vec<Space> {
    let tripod = Space::tripod();
    let tree = Space::tree(random_tree(9, rng));
    let e2 = Space::Euclidean { dim: 2 };
    let h2 = Space::Hyperboloid { dim: 2 };
    vec![
        Space::Euclidean { dim: 1 },
        e2.clone(),
        Space::Euclidean { dim: 3 },
        tripod.clone(),
        tree.clone(),
        Space::Hyperboloid { dim: 1 },
        h2.clone(),
        Space::Hyperboloid { dim: 3 },
        Space::Product(vec![e2.clone(), h2.clone()]),
        Space::Product(vec![tripod, e2]),
        Space::Product(vec![tree, h2]),
    ]
}

/// Random mm-space: `n` Gaussian points in the plane with the Euclidean metric
/// and random full-support weights.
pub fn random_mm<R: Rng + ?Sized>(n: usize, rng: &mut R) -> MMSpace {
    let mut pts: Vec<Vec<f64>> = Vec::with_capacity(n);
    while pts.len() < n {
        // keep points apart so the metric stays well conditioned
        let p = gaussian_vec(rng, 2, 1.0);
        if pts.iter().all(|q| (p[0] - q[0]).hypot(p[1] - q[1]) > 1e-3) {
            pts.push(p);
        }
    }
    let mut metric = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in (i + 1)..n {
            let d = (pts[i][0] - pts[j][0]).hypot(pts[i][1] - pts[j][1]);
            metric[i][j] = d;
            metric[j][i] = d;
        }
    }
    let raw: Vec<f64> = (0..n).map(|_| rng.gen_range(0.1..1.0)).collect();
    let total: f64 = raw.iter().sum();
    let labels = (0..n).map(|i| format!("x{i}")).collect();
    MMSpace::new(labels, metric, raw.iter().map(|w| w / total).collect()).expect("planar metric")
}
