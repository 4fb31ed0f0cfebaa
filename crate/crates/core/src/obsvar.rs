//! Observable variation: 1-Lipschitz maps, lower-bound estimators, the
//! product splitting inequalities, and spectral bounds on finite graphs.
//!
//! The observable L^p-variation of `X` in a target `N` is the supremum of
//! `V_p(f)` over 1-Lipschitz maps `f: X -> N`. Only lower bounds are computed
//! here (every estimate is backed by a certified witness map); the upper
//! bound side comes from the graph spectral gap.

use std::collections::VecDeque;

use nalgebra::{DMatrix, SymmetricEigen};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::barycenter::barycenter;
use crate::derive_seed;
use crate::error::{Error, Result};
use crate::fubini::{variation, variation_pow};
use crate::measures::{DiscreteMeasure, Domain, MMSpace, MapTable};
use crate::spaces::sample::{random_point, random_point_near};
use crate::spaces::{Point, Space};

/// Slack allowed on a certified Lipschitz constant.
pub const LIPSCHITZ_TOL: f64 = 1e-9;

/// The tree-versus-line constant `38 + 16 sqrt(2)`.
pub fn tree_line_constant() -> f64 {
    38.0 + 16.0 * 2f64.sqrt()
}

#[derive(Debug, Clone, PartialEq)]
pub struct LipschitzWitness {
    pub map: MapTable,
    pub lipschitz_constant: f64,
    pub p: f64,
    pub variation: f64,
}

impl LipschitzWitness {
    /// Re-runs the pairwise scan and compares against the stored constant.
    pub fn revalidate(&self) -> bool {
        let (c, _) = lipschitz_constant(&self.map);
        c == self.lipschitz_constant && c <= 1.0 + LIPSCHITZ_TOL
    }
}

/// Exact Lipschitz constant by a full pairwise scan, with a worst pair.
pub fn lipschitz_constant(f: &MapTable) -> (f64, Option<(usize, usize)>) {
    let dom = f.domain();
    let target = f.target();
    let values = f.values();
    let mut worst = (0.0, None);
    for u in 0..values.len() {
        for v in (u + 1)..values.len() {
            let ratio = target.dist(&values[u], &values[v]) / dom.dist(u, v);
            if ratio > worst.0 {
                worst = (ratio, Some((u, v)));
            }
        }
    }
    worst
}

/// Certifies that `f` is 1-Lipschitz and records its `V_p`.
pub fn certify_lipschitz(f: &MapTable, p: f64) -> Result<LipschitzWitness> {
    let (c, pair) = lipschitz_constant(f);
    if c > 1.0 + LIPSCHITZ_TOL {
        let (u, v) = pair.expect("positive ratio has a pair");
        return Err(Error::NotLipschitz { u, v, ratio: c });
    }
    Ok(LipschitzWitness { map: f.clone(), lipschitz_constant: c, p, variation: variation(f, p)? })
}

/// Worst ratio between sample `u` and every other sample when `u` maps to `pu`.
fn ratio_at(dom: &Domain, target: &Space, values: &[Point], u: usize, pu: &Point) -> f64 {
    (0..values.len())
        .filter(|&v| v != u)
        .map(|v| target.dist(pu, &values[v]) / dom.dist(u, v))
        .fold(0.0, f64::max)
}

const PROJECTION_SWEEPS: usize = 8;

/// Pushes a map towards the 1-Lipschitz set.
///
/// Each sweep visits the samples in random order and pulls every violating
/// image towards the barycenter of the images it violates against. If a few
/// sweeps do not reach feasibility, the whole image is contracted towards its
/// barycenter by the remaining Lipschitz constant, which is exact in a CAT(0)
/// space because geodesics from a common point spread at most linearly.
pub fn project_lipschitz<R: Rng + ?Sized>(f: &MapTable, rng: &mut R) -> MapTable {
    let dom = f.domain();
    let target = f.target();
    let mut values = f.values().to_vec();
    let mut order: Vec<usize> = (0..values.len()).collect();
    for _ in 0..PROJECTION_SWEEPS {
        order.shuffle(rng);
        let mut clean = true;
        for &u in &order {
            let violators: Vec<usize> = (0..values.len())
                .filter(|&v| v != u && target.dist(&values[u], &values[v]) > dom.dist(u, v))
                .collect();
            if violators.is_empty() {
                continue;
            }
            clean = false;
            let ratio = ratio_at(dom, target, &values, u, &values[u]);
            let atoms = violators.iter().map(|&v| values[v].clone()).collect();
            let anchor = DiscreteMeasure::uniform(target.clone(), atoms)
                .and_then(|m| barycenter(&m))
                .map(|r| r.point)
                .unwrap_or_else(|_| values[violators[0]].clone());
            values[u] = target.geodesic(&values[u], &anchor, 1.0 - 1.0 / ratio);
        }
        if clean {
            return f.with_values(values);
        }
    }
    let g = f.with_values(values);
    let (c, _) = lipschitz_constant(&g);
    if c <= 1.0 {
        return g;
    }
    let center = barycenter(&g.pushforward()).map(|r| r.point).unwrap_or_else(|_| g.values()[0].clone());
    let t = (1.0 - 1e-12) / c;
    let values = g.values().iter().map(|v| target.geodesic(&center, v, t)).collect();
    g.with_values(values)
}

/// A random 1-Lipschitz map: unconstrained images at a random spread, then
/// projected.
pub fn random_lipschitz_map<R: Rng + ?Sized>(domain: &Domain, target: &Space, rng: &mut R) -> MapTable {
    let scale = rng.gen_range(0.25..3.0);
    let base = target.base_point();
    let values = (0..domain.len()).map(|_| random_point_near(target, &base, scale, rng)).collect();
    let f = MapTable::new(domain.clone(), target.clone(), values).expect("sampled points lie in the target");
    project_lipschitz(&f, rng)
}

/// Coordinate ascent of `V_p` inside the 1-Lipschitz set. Each move pulls one
/// image along a geodesic towards a random point as far as the Lipschitz
/// constraints allow, and is kept only if `V_p` grows.
pub fn local_ascent<R: Rng + ?Sized>(f: &MapTable, p: f64, sweeps: usize, rng: &mut R) -> MapTable {
    let dom = f.domain().clone();
    let target = f.target().clone();
    let mut values = f.values().to_vec();
    let n = values.len();
    let reach = 2.0 * (0..n).flat_map(|u| (0..n).map(move |v| (u, v))).map(|(u, v)| dom.dist(u, v)).fold(1.0, f64::max);
    let feasible = |values: &[Point], u: usize, pu: &Point| {
        (0..n).all(|v| v == u || target.dist(pu, &values[v]) <= dom.dist(u, v))
    };
    let contribution = |values: &[Point], u: usize, pu: &Point| -> f64 {
        (0..n)
            .filter(|&v| v != u)
            .map(|v| dom.prob(v) * target.dist(pu, &values[v]).powf(p))
            .sum()
    };
    let mut order: Vec<usize> = (0..n).collect();
    for _ in 0..sweeps {
        order.shuffle(rng);
        for &u in &order {
            let q = random_point_near(&target, &values[u], reach, rng);
            let mut cand = target.geodesic(&values[u], &q, 1.0);
            if !feasible(&values, u, &cand) {
                let (mut lo, mut hi) = (0.0, 1.0);
                for _ in 0..45 {
                    let mid = 0.5 * (lo + hi);
                    if feasible(&values, u, &target.geodesic(&values[u], &q, mid)) {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                cand = target.geodesic(&values[u], &q, lo);
                if !feasible(&values, u, &cand) {
                    continue;
                }
            }
            if contribution(&values, u, &cand) > contribution(&values, u, &values[u]) {
                values[u] = cand;
            }
        }
    }
    f.with_values(values)
}

pub const ASCENT_SWEEPS: usize = 50;

/// Best certified `V_p` over `budget` restarts of random map plus local ascent.
/// Restart `r` draws its randomness from `(seed, r)` only, so the bound is
/// monotone in the budget.
pub fn obsvar_lower_bound(
    x: &MMSpace,
    target: &Space,
    p: f64,
    budget: usize,
    seed: u64,
) -> Result<(f64, LipschitzWitness)> {
    if budget == 0 {
        return Err(Error::Domain("budget must be at least 1".into()));
    }
    let domain = Domain::Single(x.clone());
    let mut best: Option<LipschitzWitness> = None;
    for r in 0..budget {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, r as u64));
        let start = random_lipschitz_map(&domain, target, &mut rng);
        let f = local_ascent(&start, p, ASCENT_SWEEPS, &mut rng);
        let w = certify_lipschitz(&f, p)?;
        if best.as_ref().is_none_or(|b| w.variation > b.variation) {
            best = Some(w);
        }
    }
    let w = best.expect("budget >= 1");
    Ok((w.variation, w))
}

/// Defects of the two product splitting inequalities for one map.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProductSplit {
    /// `2^(p-1) (E_x V_p(f^x)^p + E_y V_p(f^y)^p) - V_p(f)^p`.
    pub lemma: f64,
    /// `E_x V_2(f^x)^2 + E_y V_2(f^y)^2 - V_2(f)^2`, valid in CAT(0) targets.
    pub sharp: f64,
}

pub fn product_split_defect(f: &MapTable, p: f64) -> Result<ProductSplit> {
    if !(p >= 1.0) {
        return Err(Error::Domain(format!("order {p} < 1")));
    }
    let prod = f.product()?;
    let slice_means = |q: f64| -> Result<(f64, f64)> {
        let mut ex = 0.0;
        for i in 0..prod.x.len() {
            ex += prod.x.prob()[i] * variation_pow(&f.slice_x(i)?, q);
        }
        let mut ey = 0.0;
        for j in 0..prod.y.len() {
            ey += prod.y.prob()[j] * variation_pow(&f.slice_y(j)?, q);
        }
        Ok((ex, ey))
    };
    let (ex, ey) = slice_means(p)?;
    let lemma = 2f64.powf(p - 1.0) * (ex + ey) - variation_pow(f, p);
    let (ex2, ey2) = if p == 2.0 { (ex, ey) } else { slice_means(2.0)? };
    let sharp = ex2 + ey2 - variation_pow(f, 2.0);
    Ok(ProductSplit { lemma, sharp })
}

/// Finite connected simple graph with unit edges, the shortest-path metric
/// and the uniform measure.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphMM {
    n: usize,
    edges: Vec<(usize, usize)>,
}

impl GraphMM {
    pub fn new(n: usize, edges: Vec<(usize, usize)>) -> Result<Self> {
        if n < 2 {
            return Err(Error::Invalid("graph needs at least two vertices".into()));
        }
        let mut seen = std::collections::BTreeSet::new();
        let mut normalized = Vec::with_capacity(edges.len());
        for (u, v) in edges {
            if u >= n || v >= n || u == v {
                return Err(Error::Invalid(format!("bad edge ({u}, {v})")));
            }
            let key = (u.min(v), u.max(v));
            if !seen.insert(key) {
                return Err(Error::Invalid(format!("duplicate edge ({u}, {v})")));
            }
            normalized.push(key);
        }
        let g = Self { n, edges: normalized };
        if g.hop_distances(0).iter().any(Option::is_none) {
            return Err(Error::Disconnected);
        }
        Ok(g)
    }

    pub fn complete(n: usize) -> Result<Self> {
        Self::new(n, (0..n).flat_map(|u| ((u + 1)..n).map(move |v| (u, v))).collect())
    }

    pub fn cycle(n: usize) -> Result<Self> {
        Self::new(n, (0..n).map(|u| (u, (u + 1) % n)).collect())
    }

    pub fn path(n: usize) -> Result<Self> {
        Self::new(n, (1..n).map(|u| (u - 1, u)).collect())
    }

    pub fn hypercube(dim: u32) -> Result<Self> {
        let n = 1usize << dim;
        let edges = (0..n)
            .flat_map(|u| (0..dim).map(move |b| (u, u ^ (1 << b))).filter(|(u, v)| u < v))
            .collect();
        Self::new(n, edges)
    }

    /// Random spanning tree plus independent extra edges with probability `p`.
    pub fn random_connected<R: Rng + ?Sized>(n: usize, p: f64, rng: &mut R) -> Result<Self> {
        let mut edges: Vec<(usize, usize)> = (1..n).map(|v| (rng.gen_range(0..v), v)).collect();
        for u in 0..n {
            for v in (u + 1)..n {
                if !edges.contains(&(u, v)) && rng.gen_bool(p) {
                    edges.push((u, v));
                }
            }
        }
        Self::new(n, edges)
    }

    pub fn vertex_count(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    fn hop_distances(&self, root: usize) -> Vec<Option<usize>> {
        let mut adj = vec![Vec::new(); self.n];
        for &(u, v) in &self.edges {
            adj[u].push(v);
            adj[v].push(u);
        }
        let mut dist = vec![None; self.n];
        dist[root] = Some(0);
        let mut queue = VecDeque::from([root]);
        while let Some(u) = queue.pop_front() {
            let du = dist[u].unwrap();
            for &w in &adj[u] {
                if dist[w].is_none() {
                    dist[w] = Some(du + 1);
                    queue.push_back(w);
                }
            }
        }
        dist
    }

    /// Shortest-path metric, scaled by `scale`, with the uniform measure.
    pub fn mm_scaled(&self, scale: f64) -> MMSpace {
        let labels = (0..self.n).map(|i| format!("v{i}")).collect();
        let metric = (0..self.n)
            .map(|u| {
                self.hop_distances(u)
                    .into_iter()
                    .map(|d| d.expect("connected") as f64 * scale)
                    .collect()
            })
            .collect();
        MMSpace::new(labels, metric, vec![1.0 / self.n as f64; self.n]).expect("graph metric is a metric")
    }

    pub fn mm(&self) -> MMSpace {
        self.mm_scaled(1.0)
    }

    fn laplacian(&self) -> DMatrix<f64> {
        let mut l = DMatrix::zeros(self.n, self.n);
        for &(u, v) in &self.edges {
            l[(u, u)] += 1.0;
            l[(v, v)] += 1.0;
            l[(u, v)] -= 1.0;
            l[(v, u)] -= 1.0;
        }
        l
    }

    /// Edge-averaged energy over uniform variance of `g` (mean removed).
    pub fn rayleigh_quotient(&self, g: &[f64]) -> f64 {
        let mean = g.iter().sum::<f64>() / self.n as f64;
        let var = g.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / self.n as f64;
        let energy = self.edges.iter().map(|&(u, v)| (g[u] - g[v]).powi(2)).sum::<f64>()
            / self.edges.len() as f64;
        energy / var
    }
}

/// Spectral gap of the edge-averaged Rayleigh quotient,
/// `lambda_1 = (|V| / |E|) * lambda_2(L)` for the combinatorial Laplacian `L`.
pub fn graph_gap(g: &GraphMM) -> Result<f64> {
    let l = g.laplacian();
    let eig = SymmetricEigen::new(l.clone());
    let mut order: Vec<usize> = (0..g.n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let k = order[1];
    let lambda = eig.eigenvalues[k];
    if lambda <= 1e-10 {
        return Err(Error::Disconnected);
    }
    let v = eig.eigenvectors.column(k);
    let residual = (&l * v - v * lambda).norm();
    if residual > 1e-8 {
        return Err(Error::Invalid(format!("eigen residual {residual:.3e} above 1e-8")));
    }
    Ok(lambda * g.n as f64 / g.edges.len() as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralCheck {
    pub gap: f64,
    /// `2 sqrt(n / lambda_1)` with `n` the target dimension.
    pub bound: f64,
    pub max_v2: f64,
    /// `bound - max V_2` over all trials.
    pub min_slack: f64,
    pub trials: usize,
}

pub const SPECTRAL_ASCENT_SWEEPS: usize = 5;

/// Checks `V_2(f) <= 2 sqrt(n / lambda_1)` on random 1-Lipschitz maps from the
/// graph into an `n`-dimensional Euclidean or hyperbolic target.
pub fn spectral_obsvar_check(g: &GraphMM, target: &Space, trials: usize, seed: u64) -> Result<SpectralCheck> {
    let dim = match target {
        Space::Euclidean { dim } | Space::Hyperboloid { dim } => *dim,
        _ => return Err(Error::Unsupported("spectral check needs a Euclidean or hyperboloid target")),
    };
    let gap = graph_gap(g)?;
    let bound = 2.0 * (dim as f64 / gap).sqrt();
    let domain = Domain::Single(g.mm());
    let mut max_v2 = 0.0f64;
    for t in 0..trials {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, t as u64));
        let f = random_lipschitz_map(&domain, target, &mut rng);
        let f = local_ascent(&f, 2.0, SPECTRAL_ASCENT_SWEEPS, &mut rng);
        let w = certify_lipschitz(&f, 2.0)?;
        max_v2 = max_v2.max(w.variation);
    }
    Ok(SpectralCheck { gap, bound, max_v2, min_slack: bound - max_v2, trials })
}

/// Violations of the tree/line comparison beyond this flag an estimator bug.
pub const TREE_COMPARISON_FLAG: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct TreeComparison {
    pub tree_bound: f64,
    pub line_bound: f64,
    /// `(38 + 16 sqrt 2) line^2 - tree^2`.
    pub slack: f64,
    pub flagged: bool,
}

/// Compares lower-bound estimates of the L2 observable variation in a tree
/// and in the real line. Both sides are estimates, so a negative slack means
/// a broken estimator, never a counterexample.
pub fn tree_comparison_check(x: &MMSpace, tree: &Space, budget: usize, seed: u64) -> Result<TreeComparison> {
    if tree.as_tree().is_none() {
        return Err(Error::SpaceMismatch("tree comparison needs a metric tree".into()));
    }
    let (tree_bound, _) = obsvar_lower_bound(x, tree, 2.0, budget, seed)?;
    let (line_bound, _) = obsvar_lower_bound(x, &Space::Euclidean { dim: 1 }, 2.0, budget, seed)?;
    let slack = tree_line_constant() * line_bound * line_bound - tree_bound * tree_bound;
    Ok(TreeComparison { tree_bound, line_bound, slack, flagged: slack < -TREE_COMPARISON_FLAG })
}

/// One random 1-Lipschitz map per call, for suites that need raw witnesses.
pub fn sample_lipschitz_witness<R: Rng + ?Sized>(domain: &Domain, target: &Space, p: f64, rng: &mut R) -> Result<LipschitzWitness> {
    let f = random_lipschitz_map(domain, target, rng);
    certify_lipschitz(&f, p)
}

/// Unconstrained random map, used where no Lipschitz condition is needed.
pub fn random_map<R: Rng + ?Sized>(domain: &Domain, target: &Space, rng: &mut R) -> MapTable {
    let values = (0..domain.len()).map(|_| random_point(target, rng)).collect();
    MapTable::new(domain.clone(), target.clone(), values).expect("sampled points lie in the target")
}
