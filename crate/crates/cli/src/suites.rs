//! Property suites. Each suite draws its instances from a seed derived from
//! the master seed and the suite name, and instance `i` from
//! `derive_seed(suite_seed, i)`, so any single instance can be replayed.

use std::collections::BTreeMap;
use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::fmt::Display;

use cat0_fubini::barycenter::{
    barycenter, crosscheck_with_draws, distance_jensen_defect, tangent_mean_residual, variance_defect, CROSSCHECK_DRAWS,
};
use cat0_fubini::fubini::{fubini_report, slice_contraction_with, transpose, FubiniReport};
use cat0_fubini::measures::product_mm;
use cat0_fubini::obsvar::{
    certify_lipschitz, graph_gap, lipschitz_constant, obsvar_lower_bound, product_split_defect, random_lipschitz_map,
    random_map, spectral_obsvar_check, tree_comparison_check, GraphMM, TREE_COMPARISON_FLAG,
};
use cat0_fubini::spaces::sample::{random_mm, random_point, random_point_near, random_tree, space_zoo};
use cat0_fubini::spaces::{hyperboloid, Point, Space, TreePoint};
use cat0_fubini::transport::{barycenter_contraction_defect, dual_certificate, w1};
use cat0_fubini::{derive_seed, DiscreteMeasure, Domain, MMSpace, MapTable};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::report::{fmt_point, Check, Checks, Report, SuiteReport, Value};
use crate::scenario::{Scenario, SuiteSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SuiteName {
    Spaces,
    Barycenter,
    Transport,
    Fubini,
    Product,
    Spectral,
    Maps,
}

impl SuiteName {
    pub const ALL: [SuiteName; 7] = [
        SuiteName::Spaces,
        SuiteName::Barycenter,
        SuiteName::Transport,
        SuiteName::Fubini,
        SuiteName::Product,
        SuiteName::Spectral,
        SuiteName::Maps,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            SuiteName::Spaces => "spaces",
            SuiteName::Barycenter => "barycenter",
            SuiteName::Transport => "transport",
            SuiteName::Fubini => "fubini",
            SuiteName::Product => "product",
            SuiteName::Spectral => "spectral",
            SuiteName::Maps => "maps",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.iter().copied().find(|n| n.as_str() == s)
    }

    /// Instances run when the scenario does not override the count.
    pub fn default_instances(self) -> usize {
        match self {
            SuiteName::Spaces => 10_000,
            SuiteName::Barycenter
            | SuiteName::Transport
            | SuiteName::Fubini
            | SuiteName::Product
            | SuiteName::Spectral => 1_000,
            SuiteName::Maps => 0,
        }
    }

    fn salt(self) -> u64 {
        0x5u64 << 60 | (Self::ALL.iter().position(|&n| n == self).expect("listed") as u64 + 1)
    }
}

pub fn suite_seed(master: u64, name: SuiteName) -> u64 {
    derive_seed(master, name.salt())
}

/// Seed and generator of instance `i`.
pub fn instance_rng(suite_seed: u64, i: usize) -> (u64, ChaCha8Rng) {
    let seed = derive_seed(suite_seed, i as u64);
    (seed, ChaCha8Rng::seed_from_u64(seed))
}

/// Generator for suite-level fixtures such as the space zoo.
fn fixture_rng(suite_seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(suite_seed, u64::MAX))
}

/// Runs the selected suites, in canonical order.
pub fn run(scenario: &Scenario, filter: Option<SuiteName>, master_seed: u64, source: &str) -> Report {
    let mut specs: Vec<SuiteSpec> = match filter {
        Some(name) => vec![scenario
            .suites
            .iter()
            .find(|s| s.name == name)
            .cloned()
            .unwrap_or_else(|| SuiteSpec::new(name))],
        None => scenario.suites.clone(),
    };
    specs.sort_by_key(|s| s.name);
    let suites = specs.iter().map(|spec| run_suite(scenario, spec, master_seed)).collect();
    Report { source: source.to_string(), master_seed, suites }
}

pub fn run_suite(scenario: &Scenario, spec: &SuiteSpec, master_seed: u64) -> SuiteReport {
    let seed = suite_seed(master_seed, spec.name);
    let n = spec.instances.unwrap_or_else(|| spec.name.default_instances());
    let mut ctx = Ctx::new(seed, &spec.tolerances);
    match spec.name {
        SuiteName::Spaces => spaces_suite(&mut ctx, n),
        SuiteName::Barycenter => barycenter_suite(&mut ctx, n),
        SuiteName::Transport => transport_suite(&mut ctx, n),
        SuiteName::Fubini => fubini_suite(&mut ctx, n),
        SuiteName::Product => product_suite(&mut ctx, n),
        SuiteName::Spectral => spectral_suite(&mut ctx, n, scenario),
        SuiteName::Maps => maps_suite(&mut ctx, scenario),
    }
    ctx.finish(spec.name.as_str())
}

struct Ctx {
    seed: u64,
    checks: Checks,
    values: BTreeMap<String, Value>,
    warnings: Vec<String>,
    instances: usize,
    errors: Vec<(usize, u64)>,
}

impl Ctx {
    fn new(seed: u64, overrides: &BTreeMap<String, f64>) -> Self {
        Self {
            seed,
            checks: Checks::with_overrides(overrides),
            values: BTreeMap::new(),
            warnings: Vec::new(),
            instances: 0,
            errors: Vec::new(),
        }
    }

    fn rec(&mut self, name: &str, tol: f64, i: usize, seed: u64, slack: f64) {
        self.checks.record(name, tol, i, seed, slack);
    }

    fn num(&mut self, name: impl Into<String>, x: f64) {
        self.values.insert(name.into(), Value::Num(x));
    }

    fn text(&mut self, name: impl Into<String>, s: impl Into<String>) {
        self.values.insert(name.into(), Value::Text(s.into()));
    }

    /// Runs instance `i`; a library error fails the `solver_errors` check
    /// instead of aborting the suite.
    fn instance<F>(&mut self, i: usize, body: F)
    where
        F: FnOnce(&mut Ctx, u64, &mut ChaCha8Rng) -> cat0_fubini::Result<()>,
    {
        let (seed, mut rng) = instance_rng(self.seed, i);
        self.instances += 1;
        if let Err(e) = body(self, seed, &mut rng) {
            self.error(i, seed, e);
        }
    }

    fn error(&mut self, i: usize, seed: u64, e: impl Display) {
        self.errors.push((i, seed));
        if self.warnings.len() < 20 {
            self.warnings.push(format!("instance {i} (seed {seed}): {e}"));
        }
    }

    fn finish(self, name: &str) -> SuiteReport {
        let mut checks = self.checks.into_vec();
        if self.instances > 0 {
            let mut c = Check::new("solver_errors", 0.0);
            c.instances = self.instances;
            c.min_slack = if self.errors.is_empty() { 0.0 } else { -1.0 };
            c.failures = self.errors.len();
            c.worst_instance = self.errors.first().map(|e| e.0);
            c.worst_seed = self.errors.first().map(|e| e.1);
            c.failing = self.errors.iter().take(10).copied().collect();
            checks.push(c);
        }
        SuiteReport {
            name: name.to_string(),
            seed: self.seed,
            instances: self.instances,
            checks,
            values: self.values,
            warnings: self.warnings,
        }
    }
}

fn random_measure(space: &Space, max_atoms: usize, rng: &mut ChaCha8Rng) -> cat0_fubini::Result<DiscreteMeasure> {
    let n = rng.gen_range(1..=max_atoms);
    let atoms = (0..n).map(|_| random_point(space, rng)).collect();
    let weights = (0..n).map(|_| rng.gen_range(0.05..1.0)).collect();
    DiscreteMeasure::normalized(space.clone(), atoms, weights)
}

// ---------------------------------------------------------------- spaces

fn spaces_suite(ctx: &mut Ctx, per_space: usize) {
    let zoo = space_zoo(&mut fixture_rng(ctx.seed));
    for (k, space) in zoo.iter().enumerate() {
        for t in 0..per_space {
            ctx.instance(k * per_space + t, |ctx, seed, rng| space_tuple(ctx, k * per_space + t, seed, space, rng));
        }
    }
    ctx.num("space_kinds", zoo.len() as f64);
    ctx.num("tuples_per_space", per_space as f64);
}

fn space_tuple(ctx: &mut Ctx, i: usize, seed: u64, s: &Space, rng: &mut ChaCha8Rng) -> cat0_fubini::Result<()> {
    let pts: Vec<Point> = (0..4).map(|_| random_point(s, rng)).collect();
    let (p, q, r) = (&pts[0], &pts[1], &pts[2]);
    let (a, b): (f64, f64) = (rng.gen(), rng.gen());
    let d = s.distance(p, q)?;
    let scale = d.max(1.0);

    ctx.rec("triangle", 1e-9, i, seed, s.dist(p, q) + s.dist(q, r) - s.dist(p, r));
    ctx.rec("symmetry", 1e-12, i, seed, -(d - s.dist(q, p)).abs() / scale);

    let ga = s.geodesic_point(p, q, a)?;
    let gb = s.geodesic_point(p, q, b)?;
    ctx.rec("geodesic_speed", 1e-9, i, seed, -(s.dist(&ga, &gb) - (a - b).abs() * d).abs() / scale);
    let ends = s.dist(&s.geodesic_point(p, q, 0.0)?, p) + s.dist(&s.geodesic_point(p, q, 1.0)?, q);
    ctx.rec("geodesic_endpoints", 1e-12, i, seed, -ends / scale);

    ctx.rec("cat0_midpoint", 1e-9, i, seed, s.cat0_midpoint_defect(p, q, r)?);
    ctx.rec("reshetnyak", 1e-9, i, seed, s.reshetnyak_defect(p, q, r, &pts[3])?);
    if let Space::Euclidean { .. } = s {
        ctx.rec("euclidean_midpoint_equality", 1e-9, i, seed, -s.cat0_midpoint_defect(p, q, r)?.abs() / scale);
    }

    let mut residual = 0.0f64;
    visit_hyperboloid(s, &ga, &mut |x| residual = residual.max(hyperboloid::constraint_residual(x) / (x[0] * x[0])));
    if has_hyperboloid(s) {
        ctx.rec("hyperboloid_constraint", 1e-12, i, seed, -residual);
    }

    if let (Space::Product(cs), Point::Product(ps), Point::Product(qs)) = (s, p, q) {
        let direct: f64 = cs.iter().zip(ps.iter().zip(qs)).map(|(c, (x, y))| c.dist(x, y).powi(2)).sum::<f64>().sqrt();
        ctx.rec("product_metric", 1e-12, i, seed, -(d - direct).abs() / scale);
    }

    if s.has_tangent_maps() {
        let v = s.log_map(p, q)?;
        let back = s.exp_map(&v)?;
        ctx.rec("exp_log_roundtrip", 1e-9, i, seed, -s.dist(&back, q) / scale);
        ctx.rec("log_norm", 1e-9, i, seed, -(s.tangent_norm(&v.coords) - d).abs() / scale);
    }
    Ok(())
}

fn has_hyperboloid(s: &Space) -> bool {
    match s {
        Space::Hyperboloid { .. } => true,
        Space::Product(cs) => cs.iter().any(has_hyperboloid),
        _ => false,
    }
}

fn visit_hyperboloid(s: &Space, p: &Point, f: &mut dyn FnMut(&[f64])) {
    match (s, p) {
        (Space::Hyperboloid { .. }, Point::Hyperboloid(x)) => f(x),
        (Space::Product(cs), Point::Product(ps)) => cs.iter().zip(ps).for_each(|(c, q)| visit_hyperboloid(c, q, f)),
        _ => {}
    }
}

// ------------------------------------------------------------ barycenter

pub const PROBES: usize = 100;
pub const GRID_STEP: f64 = 1e-3;
pub const CROSSCHECK_INSTANCES: usize = 20;
pub const CROSSCHECK_TOL: f64 = 0.05;

/// Minimum of the Frechet function of a tree measure over a grid with the
/// given step on every edge, vertices included.
pub fn tree_grid_min(space: &Space, nu: &DiscreteMeasure, step: f64) -> f64 {
    let tree = space.as_tree().expect("tree space");
    let mut best = (0..tree.vertex_count())
        .map(|v| nu.frechet(&Point::Tree(TreePoint::Vertex(v))))
        .fold(f64::INFINITY, f64::min);
    for (e, edge) in tree.edges().iter().enumerate() {
        let k = (edge.length / step).ceil() as usize;
        for i in 1..k {
            let offset = i as f64 * edge.length / k as f64;
            best = best.min(nu.frechet(&Point::Tree(TreePoint::Edge { edge: e, offset })));
        }
    }
    best
}

fn barycenter_suite(ctx: &mut Ctx, n: usize) {
    let zoo = space_zoo(&mut fixture_rng(ctx.seed));
    let mut max_residual = 0.0f64;
    let mut max_cross = 0.0f64;
    for i in 0..n {
        let space = &zoo[i % zoo.len()];
        ctx.instance(i, |ctx, seed, rng| {
            let nu = random_measure(space, 8, rng)?;
            let r = barycenter(&nu)?;
            let f_scale = r.frechet_value.max(1.0);

            let mut probe_slack = f64::INFINITY;
            for k in 0..PROBES {
                let x = if k % 2 == 0 {
                    random_point(space, rng)
                } else {
                    random_point_near(space, &r.point, 10f64.powi(-(k as i32 % 4)), rng)
                };
                probe_slack = probe_slack.min(nu.frechet(&x) - r.frechet_value);
            }
            ctx.rec("beats_probes", 1e-9, i, seed, probe_slack / f_scale);

            match (space, &r.point) {
                (Space::Tree(_), _) => {
                    ctx.rec("tree_grid", 1e-9, i, seed, (tree_grid_min(space, &nu, GRID_STEP) - r.frechet_value) / f_scale);
                }
                (Space::Product(cs), Point::Product(parts)) => {
                    let mut split = 0.0f64;
                    for (k, c) in cs.iter().enumerate() {
                        let nk = nu.project(k)?;
                        let direct = barycenter(&nk)?.point;
                        split = split.max(c.dist(&parts[k], &direct));
                        if c.as_tree().is_some() {
                            let fk = nk.frechet(&parts[k]);
                            ctx.rec("tree_grid", 1e-9, i, seed, (tree_grid_min(c, &nk, GRID_STEP) - fk) / fk.max(1.0));
                        }
                    }
                    ctx.rec("product_split", 1e-10, i, seed, -split);
                }
                (Space::Euclidean { dim }, Point::Euclidean(x)) => {
                    let mut mean = vec![0.0; *dim];
                    for (a, w) in nu.iter() {
                        for (m, v) in mean.iter_mut().zip(a.as_euclidean().expect("euclidean atom")) {
                            *m += w * v;
                        }
                    }
                    let err = mean.iter().zip(x).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
                    ctx.rec("euclidean_mean", 1e-12, i, seed, -err / f_scale.sqrt());
                }
                _ => {}
            }

            if let Some(res) = tangent_mean_residual(&nu, &r.point) {
                max_residual = max_residual.max(res);
                ctx.rec("tangent_residual", 1e-9, i, seed, -res);
            }

            let z = random_point(space, rng);
            let v = variance_defect(&nu, &z)?;
            ctx.rec("variance_inequality", 1e-9, i, seed, v);
            if let Space::Euclidean { .. } = space {
                ctx.rec("variance_equality_euclidean", 1e-10, i, seed, -v.abs());
            }
            ctx.rec("distance_jensen", 1e-9, i, seed, distance_jensen_defect(&nu, &z)?);

            if i < CROSSCHECK_INSTANCES {
                let est = crosscheck_with_draws(&nu, CROSSCHECK_DRAWS, seed);
                let d = space.dist(&est, &r.point);
                max_cross = max_cross.max(d);
                ctx.rec("stochastic_crosscheck", 0.0, i, seed, CROSSCHECK_TOL - d);
            }
            Ok(())
        });
    }
    ctx.num("max_tangent_residual", max_residual);
    ctx.num("max_crosscheck_distance", max_cross);
}

// ------------------------------------------------------------- transport

/// Smallest average matched cost over all permutations (Heap's algorithm).
pub fn permutation_oracle(cost: &[Vec<f64>]) -> f64 {
    let n = cost.len();
    let mut perm: Vec<usize> = (0..n).collect();
    let total = |p: &[usize]| p.iter().enumerate().map(|(i, &j)| cost[i][j]).sum::<f64>() / n as f64;
    let mut best = total(&perm);
    let mut c = vec![0; n];
    let mut i = 0;
    while i < n {
        if c[i] < i {
            if i % 2 == 0 {
                perm.swap(0, i);
            } else {
                perm.swap(c[i], i);
            }
            best = best.min(total(&perm));
            c[i] += 1;
            i = 0;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
    best
}

pub const PERMUTATION_MAX: usize = 7;

fn transport_suite(ctx: &mut Ctx, n: usize) {
    let zoo = space_zoo(&mut fixture_rng(ctx.seed));
    let mut max_gap = 0.0f64;
    for i in 0..n {
        let space = &zoo[i % zoo.len()];
        ctx.instance(i, |ctx, seed, rng| {
            let mu = random_measure(space, 12, rng)?;
            let nu = random_measure(space, 12, rng)?;
            let rho = random_measure(space, 12, rng)?;
            let t = w1(&mu, &nu)?;
            let scale = t.value.max(1.0);
            ctx.rec("coupling_marginals", 1e-10, i, seed, -t.coupling.marginal_error());
            let psi = dual_certificate(&mu, &nu, &t.coupling)?;
            let gap = t.value - psi.dual_value(&mu, &nu);
            max_gap = max_gap.max(gap.abs());
            ctx.rec("duality_gap", 1e-7, i, seed, -gap.abs());
            ctx.rec("dual_lipschitz", 1e-9, i, seed, -psi.lipschitz_excess(space));
            ctx.rec("symmetry", 1e-9, i, seed, -(w1(&nu, &mu)?.value - t.value).abs() / scale);
            let via = w1(&mu, &rho)?.value + w1(&rho, &nu)?.value;
            ctx.rec("triangle", 1e-9, i, seed, (via - t.value) / scale);
            ctx.rec("barycenter_contraction", 1e-9, i, seed, barycenter_contraction_defect(&mu, &nu)?);

            let m = 1 + i % PERMUTATION_MAX;
            let a: Vec<Point> = (0..m).map(|_| random_point(space, rng)).collect();
            let b: Vec<Point> = (0..m).map(|_| random_point(space, rng)).collect();
            let cost: Vec<Vec<f64>> = a.iter().map(|x| b.iter().map(|y| space.dist(x, y)).collect()).collect();
            let ua = DiscreteMeasure::uniform(space.clone(), a)?;
            let ub = DiscreteMeasure::uniform(space.clone(), b)?;
            let exact = w1(&ua, &ub)?.value;
            ctx.rec("permutation_oracle", 1e-12, i, seed, -(exact - permutation_oracle(&cost)).abs());
            Ok(())
        });
    }
    ctx.num("max_duality_gap", max_gap);
}

// ---------------------------------------------------------------- fubini

pub const MAX_FACTOR_SIZE: usize = 8;
pub const NONLINEARITY_RATIO: f64 = 0.1;

/// The tripod map: `X = Y = {a, b}` with unit distance and uniform weights,
/// `f(a,a) = (1,1)`, `f(a,b) = (3,1)`, `f(b,a) = (2,1)`, `f(b,b) = (3,1)`,
/// writing `(i, t)` for the point at distance `t` on leg `i`.
pub fn tripod_map() -> MapTable {
    let t = Space::tripod();
    let leg = |e: &str| t.tree_point(e, 1.0).expect("tripod leg");
    let mut labels = MMSpace::discrete(2, 1.0).expect("two points");
    labels = MMSpace::new(vec!["a".into(), "b".into()], labels.metric_rows(), labels.prob().to_vec()).expect("relabel");
    MapTable::on_product(labels.clone(), labels, t.clone(), vec![leg("1"), leg("3"), leg("2"), leg("3")])
        .expect("tripod map")
}

fn record_fubini(ctx: &mut Ctx, prefix: &str, i: usize, seed: u64, f: &MapTable, r: &FubiniReport) {
    let name = |s: &str| format!("{prefix}{s}");
    ctx.rec(&name("v1_bound"), 1e-9, i, seed, r.slack1);
    ctx.rec(&name("v2_bound"), 1e-9, i, seed, r.slack2);
    ctx.rec(&name("half_spread"), 1e-9, i, seed, r.half_spread_slack);
    ctx.rec(&name("two_thirds"), 1e-9, i, seed, r.two_thirds_slack);
    let ny = r.slices.len();
    let mut worst = f64::INFINITY;
    for j in 0..ny {
        for k in 0..ny {
            worst = worst.min(slice_contraction_with(f, j, k, &r.slices[j], &r.slices[k]));
        }
    }
    ctx.rec(&name("slice_contraction"), 1e-9, i, seed, worst);
}

fn fubini_suite(ctx: &mut Ctx, n: usize) {
    let zoo = space_zoo(&mut fixture_rng(ctx.seed));
    let mut max_ratio = (0.0f64, 0usize, 0u64);
    for i in 0..=n {
        ctx.instance(i, |ctx, seed, rng| {
            let f = if i == 0 {
                tripod_map()
            } else {
                let target = &zoo[(i - 1) % zoo.len()];
                let x = random_mm(rng.gen_range(1..=MAX_FACTOR_SIZE), rng);
                let y = random_mm(rng.gen_range(1..=MAX_FACTOR_SIZE), rng);
                random_map(&Domain::Product(product_mm(x, y)), target, rng)
            };
            let r = fubini_report(&f)?;
            record_fubini(ctx, "", i, seed, &f, &r);
            if r.v2 > 0.0 {
                let ratio = r.defect / r.v2;
                ctx.rec("ratio_bound", 1e-9, i, seed, 1.0 / 3f64.sqrt() - ratio);
                if ratio > max_ratio.0 {
                    max_ratio = (ratio, i, seed);
                }
            }
            if let Space::Euclidean { .. } = f.target() {
                ctx.rec("euclidean_exact", 1e-9, i, seed, -r.defect);
            }
            let ft = transpose(&f)?;
            let rt = fubini_report(&ft)?;
            record_fubini(ctx, "transposed_", i, seed, &ft, &rt);
            if i == 0 {
                ctx.num("tripod.defect", r.defect);
                ctx.num("tripod.V1", r.v1);
                ctx.num("tripod.V2", r.v2);
            }
            Ok(())
        });
    }
    let (ratio, i, seed) = max_ratio;
    ctx.rec("nonlinearity_exercised", 0.0, i, seed, ratio - NONLINEARITY_RATIO);
    ctx.num("max_defect_over_v2", ratio);
    ctx.num("max_defect_over_v2_instance", i as f64);
}

// --------------------------------------------------------------- product

pub const PRODUCT_FACTOR_SIZE: usize = 6;

fn product_suite(ctx: &mut Ctx, n: usize) {
    let zoo = space_zoo(&mut fixture_rng(ctx.seed));
    for i in 0..n {
        let target = &zoo[i % zoo.len()];
        ctx.instance(i, |ctx, seed, rng| {
            let x = random_mm(rng.gen_range(1..=PRODUCT_FACTOR_SIZE), rng);
            let y = random_mm(rng.gen_range(1..=PRODUCT_FACTOR_SIZE), rng);
            let f = random_lipschitz_map(&Domain::Product(product_mm(x, y)), target, rng);
            let w = certify_lipschitz(&f, 2.0)?;
            ctx.rec("lipschitz_certified", 1e-9, i, seed, 1.0 - w.lipschitz_constant);
            ctx.rec("witness_revalidates", 0.0, i, seed, if w.revalidate() { 0.0 } else { -1.0 });
            for p in [1.0, 2.0, 3.0] {
                let s = product_split_defect(&f, p)?;
                ctx.rec(&format!("lemma_p{p}"), 1e-9, i, seed, s.lemma);
                if p == 2.0 {
                    ctx.rec("sharp_p2", 1e-9, i, seed, s.sharp);
                }
            }
            Ok(())
        });
    }
    match product_split_defect(&tripod_map(), 2.0) {
        Ok(s) => {
            ctx.num("tripod.sharp_p2", s.sharp);
            ctx.num("tripod.lemma_p2", s.lemma);
        }
        Err(e) => ctx.error(usize::MAX, 0, e),
    }
}

// -------------------------------------------------------------- spectral

pub const RAYLEIGH_VECTORS: usize = 10_000;
pub const RANDOM_GRAPHS: usize = 20;
pub const SPECTRAL_DIMS: [usize; 3] = [1, 2, 3];
pub const COMPARISON_BUDGET: usize = 3;

/// The graph family, each with its closed-form gap where one is known.
pub fn spectral_family(rng: &mut ChaCha8Rng) -> Vec<(String, GraphMM, Option<f64>)> {
    let mut out = Vec::new();
    for n in 2..=10 {
        out.push((format!("K{n}"), GraphMM::complete(n).expect("K_n"), Some(2.0 * n as f64 / (n - 1) as f64)));
    }
    for n in 3..=12 {
        let closed = 2.0 - 2.0 * (2.0 * PI / n as f64).cos();
        out.push((format!("C{n}"), GraphMM::cycle(n).expect("C_n"), Some(closed)));
    }
    for d in 1..=4u32 {
        out.push((format!("Q{d}"), GraphMM::hypercube(d).expect("Q_d"), Some(4.0 / d as f64)));
    }
    for k in 0..RANDOM_GRAPHS {
        let n = rng.gen_range(4..=10);
        let p = rng.gen_range(0.25..0.6);
        out.push((format!("G{k}"), GraphMM::random_connected(n, p, rng).expect("connected sample"), None));
    }
    out
}

fn spectral_suite(ctx: &mut Ctx, maps: usize, scenario: &Scenario) {
    let mut fixtures = fixture_rng(ctx.seed);
    let mut family = spectral_family(&mut fixtures);
    for (name, g) in &scenario.graphs {
        family.push((format!("scenario.{name}"), g.clone(), None));
    }
    let per_cell = maps.div_ceil(family.len() * SPECTRAL_DIMS.len() * 2).max(1);
    let mut total_maps = 0usize;
    for (gi, (name, g, closed)) in family.iter().enumerate() {
        ctx.instance(gi, |ctx, seed, rng| {
            let gap = graph_gap(g)?;
            if let Some(c) = closed {
                ctx.rec("closed_form_gap", 1e-8, gi, seed, -(gap - c).abs());
            }
            let nv = g.vertex_count();
            let mut min_q = f64::INFINITY;
            for _ in 0..RAYLEIGH_VECTORS {
                let h: Vec<f64> = (0..nv).map(|_| rng.gen_range(-1.0..1.0)).collect();
                let mean = h.iter().sum::<f64>() / nv as f64;
                let h: Vec<f64> = h.iter().map(|v| v - mean).collect();
                if h.iter().any(|v| v.abs() > 1e-12) {
                    min_q = min_q.min(g.rayleigh_quotient(&h));
                }
            }
            ctx.rec("rayleigh_oracle", 1e-8, gi, seed, min_q - gap);
            for (k, dim) in SPECTRAL_DIMS.iter().enumerate() {
                for (t, target) in [Space::euclidean(*dim)?, Space::hyperboloid(*dim)?].iter().enumerate() {
                    let c = spectral_obsvar_check(g, target, per_cell, derive_seed(seed, (2 * k + t) as u64))?;
                    total_maps += c.trials;
                    ctx.rec("spectral_bound", 1e-9, gi, seed, c.min_slack);
                }
            }
            if matches!(name.as_str(), "K2" | "K3" | "C4") {
                ctx.num(format!("gap.{name}"), gap);
            }
            Ok(())
        });
    }
    ctx.num("spectral_maps", total_maps as f64);
    ctx.num("graphs", family.len() as f64);

    // tree versus line comparison and budget monotonicity
    let base = family.len();
    let tree = Space::tree(random_tree(5, &mut fixtures));
    let spaces: Vec<(&str, MMSpace)> = vec![
        ("two_point", MMSpace::discrete(2, 1.0).expect("two points")),
        ("C3", GraphMM::cycle(3).expect("C3").mm()),
        ("K4", GraphMM::complete(4).expect("K4").mm()),
        ("random4", random_mm(4, &mut fixtures)),
    ];
    for (k, (label, x)) in spaces.iter().enumerate() {
        for (t, target) in [Space::tripod(), tree.clone()].iter().enumerate() {
            let i = base + 2 * k + t;
            ctx.instance(i, |ctx, seed, _| {
                let c = tree_comparison_check(x, target, COMPARISON_BUDGET, seed)?;
                ctx.rec("tree_comparison", TREE_COMPARISON_FLAG, i, seed, c.slack);
                if *label == "two_point" {
                    ctx.rec("two_point_tree_equals_line", 1e-9, i, seed, -(c.tree_bound - c.line_bound).abs());
                    ctx.rec("two_point_optimum", 1e-9, i, seed, -(c.line_bound - FRAC_1_SQRT_2).abs());
                }
                Ok(())
            });
        }
    }
    let i = base + 2 * spaces.len();
    let x = random_mm(5, &mut fixtures);
    ctx.instance(i, |ctx, seed, _| {
        let mut last = 0.0;
        for budget in [1, 2, 4, 8] {
            let (v, w) = obsvar_lower_bound(&x, &Space::tripod(), 2.0, budget, seed)?;
            ctx.rec("budget_monotone", 0.0, i, seed, v - last);
            ctx.rec("witness_revalidates", 0.0, i, seed, if w.revalidate() { 0.0 } else { -1.0 });
            last = v;
        }
        Ok(())
    });
}

// ------------------------------------------------------------------ maps

fn maps_suite(ctx: &mut Ctx, scenario: &Scenario) {
    ctx.num("maps", scenario.maps.len() as f64);
    for (i, (name, f)) in scenario.maps.iter().enumerate() {
        ctx.instance(i, |ctx, seed, _| {
            let r = fubini_report(f)?;
            record_fubini(ctx, "", i, seed, f, &r);
            let t = f.target();
            let prod = f.product()?;
            ctx.text(format!("{name}.expectation"), fmt_point(t, &r.expectation));
            ctx.text(format!("{name}.repeated"), fmt_point(t, &r.repeated));
            for (j, g) in r.slices.iter().enumerate() {
                ctx.text(format!("{name}.slice.{}", prod.y.labels()[j]), fmt_point(t, g));
            }
            ctx.num(format!("{name}.defect"), r.defect);
            ctx.num(format!("{name}.V1"), r.v1);
            ctx.num(format!("{name}.V2"), r.v2);
            ctx.num(format!("{name}.V2/sqrt3"), r.v2 / 3f64.sqrt());
            let s = product_split_defect(f, 2.0)?;
            ctx.num(format!("{name}.split_lemma_p2"), s.lemma);
            ctx.num(format!("{name}.split_sharp_p2"), s.sharp);
            ctx.num(format!("{name}.lipschitz_constant"), lipschitz_constant(f).0);
            Ok(())
        });
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        for n in SuiteName::ALL {
            assert_eq!(SuiteName::parse(n.as_str()), Some(n));
        }
        assert_eq!(SuiteName::parse("nope"), None);
    }

    #[test]
    fn permutation_oracle_small() {
        let cost = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        assert_eq!(permutation_oracle(&cost), 0.0);
        let cost = vec![vec![2.0, 3.0], vec![1.0, 2.0]];
        assert_eq!(permutation_oracle(&cost), 2.0);
    }

    #[test]
    fn small_runs_pass() {
        let s = Scenario::builtin(3);
        for name in SuiteName::ALL {
            let mut spec = SuiteSpec::new(name);
            spec.instances = Some(match name {
                SuiteName::Spaces => 50,
                _ => 15,
            });
            let r = run_suite(&s, &spec, 3);
            assert!(r.passed(), "{}", Report { source: "t".into(), master_seed: 3, suites: vec![r.clone()] }.to_text());
        }
    }

    #[test]
    fn tripod_map_matches_bundled_scenario() {
        let s = Scenario::parse(include_str!("../scenarios/tripod.json")).unwrap();
        assert_eq!(s.maps["f"].values(), tripod_map().values());
    }
}
