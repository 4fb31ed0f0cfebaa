//! Centers of mass of discrete measures.
//!
//! The barycenter of `nu` is the unique minimizer of the Frechet function
//! `F(x) = sum_i w_i d(x, atom_i)^2`. It is computed per space kind:
//!
//! * Euclidean: the weighted mean.
//! * Metric tree: exact descent. `F` is convex along geodesics and a single
//!   quadratic on every edge, so we alternate between checking one-sided
//!   derivatives at a vertex and minimizing the quadratic on an edge.
//! * Hyperboloid: Karcher fixed point `x <- exp_x(sum_i w_i log_x(atom_i))`.
//! * Product: componentwise, since `F` splits over the l2 product.

use rand::distributions::{Distribution, WeightedIndex};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::measures::DiscreteMeasure;
use crate::spaces::{hyperboloid, MetricTree, Point, Space, TreePoint};

pub const MAX_ITERATIONS: usize = 10_000;
pub const GRADIENT_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub enum Certificate {
    ClosedForm,
    ConvexDescent { steps: usize },
    FixedPoint { iterations: usize, gradient_norm: f64 },
    Product(Vec<Certificate>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct BarycenterResult {
    pub point: Point,
    pub frechet_value: f64,
    pub certificate: Certificate,
}

pub fn barycenter(nu: &DiscreteMeasure) -> Result<BarycenterResult> {
    let (point, certificate) = solve(nu)?;
    let frechet_value = nu.frechet(&point);
    Ok(BarycenterResult { point, frechet_value, certificate })
}

fn solve(nu: &DiscreteMeasure) -> Result<(Point, Certificate)> {
    if nu.len() == 1 {
        return Ok((nu.atoms()[0].clone(), Certificate::ClosedForm));
    }
    match nu.space() {
        Space::Euclidean { dim } => {
            let mut mean = vec![0.0; *dim];
            for (a, w) in nu.iter() {
                let Point::Euclidean(x) = a else { unreachable!() };
                for (m, xi) in mean.iter_mut().zip(x) {
                    *m += w * xi;
                }
            }
            Ok((Point::Euclidean(mean), Certificate::ClosedForm))
        }
        Space::Tree(tree) => {
            let atoms: Vec<TreePoint> = nu.atoms().iter().map(|a| *a.as_tree().unwrap()).collect();
            let (p, steps) = tree_barycenter(tree, &atoms, nu.weights());
            Ok((Point::Tree(p), Certificate::ConvexDescent { steps }))
        }
        Space::Hyperboloid { .. } => {
            let (x, iterations, gradient_norm) = karcher_mean(nu)?;
            Ok((Point::Hyperboloid(x), Certificate::FixedPoint { iterations, gradient_norm }))
        }
        Space::Product(cs) => {
            let mut parts = Vec::with_capacity(cs.len());
            let mut certs = Vec::with_capacity(cs.len());
            for k in 0..cs.len() {
                let (p, c) = solve(&nu.project(k)?)?;
                parts.push(p);
                certs.push(c);
            }
            Ok((Point::Product(parts), Certificate::Product(certs)))
        }
    }
}

enum Location {
    Vertex { v: usize, from_edge: Option<usize> },
    Edge(usize),
}

/// Exact tree barycenter by vertex/edge descent. Returns the point and the
/// number of descent steps taken.
fn tree_barycenter(tree: &MetricTree, atoms: &[TreePoint], weights: &[f64]) -> (TreePoint, usize) {
    let start = weights
        .iter()
        .enumerate()
        .fold(0, |best, (i, w)| if *w > weights[best] { i } else { best });
    let mut loc = match atoms[start] {
        TreePoint::Vertex(v) => Location::Vertex { v, from_edge: None },
        TreePoint::Edge { edge, .. } => Location::Edge(edge),
    };
    let scale: f64 = atoms
        .iter()
        .zip(weights)
        .map(|(a, w)| w * tree.distance(&atoms[start], a))
        .sum::<f64>()
        .max(1.0);
    // every step strictly lowers F, so no edge or vertex is visited twice
    let cap = 2 * (tree.vertex_count() + tree.edges().len()) + 2;
    for step in 1..=cap {
        match loc {
            Location::Vertex { v, from_edge } => {
                let here = TreePoint::Vertex(v);
                let mut best: Option<(usize, f64)> = None;
                for &e in tree.incident(v) {
                    if Some(e) == from_edge {
                        continue;
                    }
                    let slope: f64 = atoms
                        .iter()
                        .zip(weights)
                        .map(|(a, w)| {
                            let d = tree.distance(&here, a);
                            let sign = if tree.leaves_through(v, e, a) { -1.0 } else { 1.0 };
                            2.0 * w * d * sign
                        })
                        .sum();
                    if best.is_none_or(|(_, s)| slope < s) {
                        best = Some((e, slope));
                    }
                }
                match best {
                    Some((e, slope)) if slope < -1e-14 * scale => loc = Location::Edge(e),
                    _ => return (here, step),
                }
            }
            Location::Edge(e) => {
                let edge = &tree.edges()[e];
                let (mut num, mut den) = (0.0, 0.0);
                for (a, w) in atoms.iter().zip(weights) {
                    // d(x_s, a) = c + beta * s for s in [0, len]
                    let (c, beta) = match *a {
                        TreePoint::Edge { edge: ae, offset } if ae == e => (-offset, 1.0),
                        _ => {
                            let da = tree.distance(&TreePoint::Vertex(edge.a), a);
                            let db = tree.distance(&TreePoint::Vertex(edge.b), a);
                            if da <= db {
                                (da, 1.0)
                            } else {
                                (edge.length + db, -1.0)
                            }
                        }
                    };
                    num -= w * beta * c;
                    den += w;
                }
                let s = num / den;
                if s <= 0.0 {
                    loc = Location::Vertex { v: edge.a, from_edge: Some(e) };
                } else if s >= edge.length {
                    loc = Location::Vertex { v: edge.b, from_edge: Some(e) };
                } else {
                    return (TreePoint::Edge { edge: e, offset: s }, step);
                }
            }
        }
    }
    unreachable!("tree descent exceeded {cap} steps")
}

fn karcher_mean(nu: &DiscreteMeasure) -> Result<(Vec<f64>, usize, f64)> {
    let start = nu
        .weights()
        .iter()
        .enumerate()
        .fold(0, |best, (i, w)| if *w > nu.weights()[best] { i } else { best });
    let atoms: Vec<&[f64]> = nu
        .atoms()
        .iter()
        .map(|a| match a {
            Point::Hyperboloid(x) => x.as_slice(),
            _ => unreachable!(),
        })
        .collect();
    let w = nu.weights();
    let frechet = |x: &[f64]| -> f64 {
        atoms.iter().zip(w).map(|(a, wi)| wi * hyperboloid::distance(x, a).powi(2)).sum()
    };
    let mut x = atoms[start].to_vec();
    let mut g = mean_log(&atoms, w, &x);
    let mut residual = hyperboloid::tangent_norm(&g);
    let mut value = frechet(&x);
    let mut iterations = 0;
    while iterations < MAX_ITERATIONS {
        if residual <= GRADIENT_TOL {
            return Ok((x, iterations, residual));
        }
        iterations += 1;
        // The plain fixed-point step (t = 1) overshoots when the atoms are
        // spread out, and can oscillate with a residual that shrinks only
        // marginally. Halve the step while that keeps shortening the mean
        // log vector and take the best candidate. F may not grow beyond its
        // rounding noise, which keeps far-off points whose residual is lost
        // to cancellation from looking attractive.
        let ceiling = value * (1.0 + 1e-9);
        let step = |t: f64| {
            let v: Vec<f64> = g.iter().map(|gi| t * gi).collect();
            let cand = hyperboloid::exp(&x, &v);
            let g_cand = mean_log(&atoms, w, &cand);
            let r_cand = hyperboloid::tangent_norm(&g_cand);
            let f_cand = frechet(&cand);
            let r_eff = if f_cand <= ceiling { r_cand } else { f64::INFINITY };
            (cand, g_cand, r_eff, f_cand)
        };
        let mut t = 1.0;
        let mut best = step(t);
        while t > 1e-12 {
            let half = step(0.5 * t);
            if half.2 < best.2 || best.2 >= residual {
                best = half;
                t *= 0.5;
            } else {
                break;
            }
        }
        if best.2 >= residual {
            // No step size improves on x: the residual is at the floor set
            // by floating point cancellation.
            break;
        }
        (x, g, residual, value) = best;
    }
    Err(Error::NonConvergence {
        best: Box::new(Point::Hyperboloid(x)),
        iterations,
        residual,
    })
}

fn mean_log(atoms: &[&[f64]], w: &[f64], x: &[f64]) -> Vec<f64> {
    let mut g = vec![0.0; x.len()];
    for (a, wi) in atoms.iter().zip(w) {
        for (gi, li) in g.iter_mut().zip(hyperboloid::log(x, a)) {
            *gi += wi * li;
        }
    }
    g
}

/// Norm of `sum_i w_i log_x(atom_i)`; `None` on spaces without tangent maps.
pub fn tangent_mean_residual(nu: &DiscreteMeasure, x: &Point) -> Option<f64> {
    let space = nu.space();
    if !space.has_tangent_maps() {
        return None;
    }
    let mut g = vec![0.0; space.tangent_dim()?];
    for (a, w) in nu.iter() {
        let v = space.log_map(x, a).ok()?;
        for (gi, vi) in g.iter_mut().zip(v.coords) {
            *gi += w * vi;
        }
    }
    Some(space.tangent_norm(&g))
}

pub const CROSSCHECK_DRAWS: usize = 100_000;

/// Independent stochastic estimate of the barycenter: draw atoms by weight and
/// move a fraction `1/(k+1)` of the way towards the `k`-th draw.
pub fn generic_barycenter_crosscheck(nu: &DiscreteMeasure, seed: u64) -> Point {
    crosscheck_with_draws(nu, CROSSCHECK_DRAWS, seed)
}

pub fn crosscheck_with_draws(nu: &DiscreteMeasure, draws: usize, seed: u64) -> Point {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pick = WeightedIndex::new(nu.weights()).expect("positive weights");
    let space = nu.space();
    let mut s = nu.atoms()[pick.sample(&mut rng)].clone();
    for k in 1..draws {
        let a = &nu.atoms()[pick.sample(&mut rng)];
        s = space.geodesic(&s, a, 1.0 / (k + 1) as f64);
    }
    s
}

/// `sum_x w_x (d(z,x)^2 - d(c,x)^2) - d(z,c)^2`, nonnegative in CAT(0) spaces.
pub fn variance_defect(nu: &DiscreteMeasure, z: &Point) -> Result<f64> {
    nu.space().check(z)?;
    let c = barycenter(nu)?.point;
    let space = nu.space();
    let lhs: f64 = nu
        .iter()
        .map(|(x, w)| {
            let (a, b) = (space.dist(z, x), space.dist(&c, x));
            w * (a * a - b * b)
        })
        .sum();
    let d = space.dist(z, &c);
    Ok(lhs - d * d)
}

/// `sum_x w_x d(p0, x) - d(p0, c)`.
pub fn distance_jensen_defect(nu: &DiscreteMeasure, p0: &Point) -> Result<f64> {
    nu.space().check(p0)?;
    let c = barycenter(nu)?.point;
    let space = nu.space();
    let mean: f64 = nu.iter().map(|(x, w)| w * space.dist(p0, x)).sum();
    Ok(mean - space.dist(p0, &c))
}
