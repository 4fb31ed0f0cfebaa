//! The subcommands. Each returns its process exit code: 0 when every asserted
//! inequality holds, 1 on a violation and 2 on bad input.

use std::io::Write;
use std::path::{Path, PathBuf};

use cat0_fubini::fubini::{expectation, fubini_report};
use cat0_fubini::measures::product_mm;
use cat0_fubini::obsvar::{random_lipschitz_map, spectral_obsvar_check, GraphMM};
use cat0_fubini::spaces::TreePoint;
use cat0_fubini::{derive_seed, Domain, Point, Space};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;
use serde_json::json;

use crate::report::{fmt_num, round12};
use crate::scenario::{graph_from_adjacency, Scenario, ScenarioError};
use crate::suites::{self, tripod_map, SuiteName};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_VIOLATION: i32 = 1;
pub const EXIT_INPUT: i32 = 2;

fn exit_for(passed: bool) -> i32 {
    if passed {
        EXIT_PASS
    } else {
        EXIT_VIOLATION
    }
}

fn write_file(path: &Path, text: &str, err: &mut dyn Write) -> bool {
    match std::fs::write(path, text) {
        Ok(()) => true,
        Err(e) => {
            let _ = writeln!(err, "error: cannot write {}: {e}", path.display());
            false
        }
    }
}

// ---------------------------------------------------------------- verify

#[derive(Debug, Clone, Default)]
pub struct VerifyOptions {
    pub path: PathBuf,
    /// Empty or absent runs every suite the scenario selects.
    pub suite: Option<String>,
    pub seed: Option<u64>,
    /// `Some(None)` prints JSON to stdout, `Some(Some(p))` writes it to `p`.
    pub json: Option<Option<PathBuf>>,
    pub csv: Option<PathBuf>,
}

pub fn verify(opts: &VerifyOptions, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let scenario = match Scenario::load(&opts.path) {
        Ok(s) => s,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return EXIT_INPUT;
        }
    };
    let filter = match opts.suite.as_deref().filter(|s| !s.is_empty()) {
        None => None,
        Some(name) => match SuiteName::parse(name) {
            Some(n) => Some(n),
            None => {
                let _ = writeln!(err, "error: unknown suite {name:?}");
                return EXIT_INPUT;
            }
        },
    };
    let seed = opts.seed.unwrap_or(scenario.seed);
    let source = opts
        .path
        .file_name()
        .map_or_else(|| opts.path.display().to_string(), |n| n.to_string_lossy().into_owned());
    let report = suites::run(&scenario, filter, seed, &source);

    match &opts.json {
        Some(None) => {
            let _ = out.write_all(report.to_json().as_bytes());
        }
        Some(Some(p)) => {
            if !write_file(p, &report.to_json(), err) {
                return EXIT_INPUT;
            }
            let _ = out.write_all(report.to_text().as_bytes());
        }
        None => {
            let _ = out.write_all(report.to_text().as_bytes());
        }
    }
    if let Some(p) = &opts.csv {
        if !write_file(p, &report.to_csv(), err) {
            return EXIT_INPUT;
        }
    }
    exit_for(report.passed())
}

// ---------------------------------------------------------------- tripod

pub const TRIPOD_TOL: f64 = 1e-12;

/// A point of the tripod as `(leg, t)`, with the origin written `(0, 0)`.
pub fn tripod_coords(space: &Space, p: &Point) -> (u32, f64) {
    let tree = space.as_tree().expect("tripod");
    let leg = |e: usize| tree.edges()[e].name.parse::<u32>().expect("numbered legs");
    match p.as_tree().expect("tree point") {
        TreePoint::Vertex(v) if tree.vertices()[*v] == "o" => (0, 0.0),
        TreePoint::Vertex(v) => {
            let e = tree.incident(*v)[0];
            (leg(e), tree.edges()[e].length)
        }
        TreePoint::Edge { edge, offset } => (leg(*edge), *offset),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TripodLine {
    pub label: &'static str,
    pub computed: String,
    pub error: f64,
    pub json: serde_json::Value,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TripodResult {
    pub lines: Vec<TripodLine>,
}

impl TripodResult {
    pub fn passed(&self) -> bool {
        self.lines.iter().all(|l| l.error <= TRIPOD_TOL)
    }

    pub fn error(&self, label: &str) -> Option<f64> {
        self.lines.iter().find(|l| l.label == label).map(|l| l.error)
    }
}

/// Recomputes the tripod example and compares every value with its
/// reference: the four barycenters and the defect, `V1` and `V2`.
pub fn tripod() -> cat0_fubini::Result<TripodResult> {
    let f = tripod_map();
    let t = f.target().clone();
    let r = fubini_report(&f)?;
    let at = |leg: u32, s: f64| if leg == 0 { t.base_point() } else { t.tree_point(&leg.to_string(), s).expect("leg") };
    let point_line = |label, p: &Point, leg, s| {
        let (l, u) = tripod_coords(&t, p);
        TripodLine {
            label,
            computed: format!("({l},{})", fmt_num(u)),
            error: t.dist(p, &at(leg, s)),
            json: json!({"leg": l, "t": round12(u)}),
        }
    };
    let num_line = |label, x: f64, expected: f64| TripodLine {
        label,
        computed: fmt_num(x),
        error: (x - expected).abs(),
        json: json!(round12(x)),
    };
    let slice_a = expectation(&f.slice_y(0)?)?;
    let slice_b = expectation(&f.slice_y(1)?)?;
    Ok(TripodResult {
        lines: vec![
            point_line("E(f)", &r.expectation, 0, 0.0),
            point_line("E(f^a)", &slice_a, 0, 0.0),
            point_line("E(f^b)", &slice_b, 3, 1.0),
            point_line("E_y(E(f^y))", &r.repeated, 3, 0.5),
            num_line("defect", r.defect, 0.5),
            num_line("V1", r.v1, 1.25),
            num_line("V2", r.v2, 2.5f64.sqrt()),
        ],
    })
}

pub fn tripod_cmd(as_json: bool, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let result = match tripod() {
        Ok(r) => r,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return EXIT_VIOLATION;
        }
    };
    if as_json {
        let mut doc = serde_json::Map::new();
        for l in &result.lines {
            doc.insert(l.label.to_string(), l.json.clone());
        }
        doc.insert("passed".into(), json!(result.passed()));
        let _ = writeln!(out, "{}", serde_json::to_string_pretty(&doc).expect("serializes"));
    } else {
        for l in &result.lines {
            let _ = writeln!(out, "{} = {}", l.label, l.computed);
        }
        let _ = writeln!(out, "status: {}", if result.passed() { "PASS" } else { "FAIL" });
    }
    if !result.passed() {
        for l in result.lines.iter().filter(|l| l.error > TRIPOD_TOL) {
            let _ = writeln!(err, "error: {} is off by {}", l.label, fmt_num(l.error));
        }
    }
    exit_for(result.passed())
}

// --------------------------------------------------------- concentration

#[derive(Debug, Clone, PartialEq)]
pub struct ConcentrationRow {
    pub n: u32,
    pub target: &'static str,
    pub samples: usize,
    pub trials: usize,
    pub max_defect: f64,
    pub mean_defect: f64,
    pub max_v1: f64,
    pub max_v2: f64,
    /// Smallest `V1 - defect`.
    pub min_v1_slack: f64,
    /// Smallest `V2 / sqrt(3) - defect`.
    pub min_v2_slack: f64,
}

pub const CONCENTRATION_TOL: f64 = 1e-9;

impl ConcentrationRow {
    pub fn passed(&self) -> bool {
        self.min_v1_slack >= -CONCENTRATION_TOL && self.min_v2_slack >= -CONCENTRATION_TOL
    }
}

fn concentration_targets() -> [(&'static str, Space); 2] {
    [("tripod", Space::tripod()), ("euclidean2", Space::Euclidean { dim: 2 })]
}

/// Fubini defects of random 1-Lipschitz maps `Q_n x Q_n -> N`, where `Q_n`
/// is the hypercube with the Hamming metric divided by `n`.
pub fn concentration(n_min: u32, n_max: u32, trials: usize, seed: u64) -> Result<Vec<ConcentrationRow>, String> {
    if !(1 <= n_min && n_min <= n_max && n_max <= 4) {
        return Err(format!("need 1 <= n-min <= n-max <= 4, got {n_min}..{n_max}"));
    }
    if trials == 0 {
        return Err("trials must be at least 1".into());
    }
    let mut rows = Vec::new();
    for n in n_min..=n_max {
        let q = GraphMM::hypercube(n).map_err(|e| e.to_string())?.mm_scaled(1.0 / n as f64);
        let domain = Domain::Product(product_mm(q.clone(), q));
        for (k, (name, target)) in concentration_targets().iter().enumerate() {
            let row_seed = derive_seed(seed, u64::from(n) * 16 + k as u64);
            let mut defects = Vec::with_capacity(trials);
            let (mut max_v1, mut max_v2) = (0.0f64, 0.0f64);
            let (mut s1, mut s2) = (f64::INFINITY, f64::INFINITY);
            for t in 0..trials {
                let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(row_seed, t as u64));
                let f = random_lipschitz_map(&domain, target, &mut rng);
                let r = fubini_report(&f).map_err(|e| format!("n={n} {name} trial {t}: {e}"))?;
                defects.push(r.defect);
                max_v1 = max_v1.max(r.v1);
                max_v2 = max_v2.max(r.v2);
                s1 = s1.min(r.slack1);
                s2 = s2.min(r.slack2);
            }
            rows.push(ConcentrationRow {
                n,
                target: name,
                samples: domain.len(),
                trials,
                max_defect: defects.iter().copied().fold(0.0, f64::max),
                mean_defect: defects.iter().sum::<f64>() / trials as f64,
                max_v1,
                max_v2,
                min_v1_slack: s1,
                min_v2_slack: s2,
            });
        }
    }
    Ok(rows)
}

/// Targets whose mean defect at the largest `n` exceeds the one at the smallest.
pub fn concentration_warnings(rows: &[ConcentrationRow]) -> Vec<String> {
    let mut out = Vec::new();
    for (name, _) in concentration_targets() {
        let mine: Vec<&ConcentrationRow> = rows.iter().filter(|r| r.target == name).collect();
        if let (Some(first), Some(last)) = (mine.first(), mine.last()) {
            if last.n > first.n && last.mean_defect > first.mean_defect {
                out.push(format!(
                    "{name}: mean defect at n={} ({}) exceeds n={} ({})",
                    last.n,
                    fmt_num(last.mean_defect),
                    first.n,
                    fmt_num(first.mean_defect)
                ));
            }
        }
    }
    out
}

pub fn concentration_csv(rows: &[ConcentrationRow]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "n", "target", "samples", "trials", "max_defect", "mean_defect", "max_v1", "max_v2", "min_v1_slack",
        "min_v2_slack", "status",
    ])
    .expect("in-memory write");
    for r in rows {
        w.write_record([
            r.n.to_string(),
            r.target.to_string(),
            r.samples.to_string(),
            r.trials.to_string(),
            fmt_num(r.max_defect),
            fmt_num(r.mean_defect),
            fmt_num(r.max_v1),
            fmt_num(r.max_v2),
            fmt_num(r.min_v1_slack),
            fmt_num(r.min_v2_slack),
            if r.passed() { "PASS" } else { "FAIL" }.to_string(),
        ])
        .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("flush")).expect("utf-8")
}

#[derive(Debug, Clone)]
pub struct ConcentrationOptions {
    pub n_min: u32,
    pub n_max: u32,
    pub trials: usize,
    pub seed: u64,
    pub csv: Option<PathBuf>,
}

pub fn concentration_cmd(opts: &ConcentrationOptions, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let rows = match concentration(opts.n_min, opts.n_max, opts.trials, opts.seed) {
        Ok(r) => r,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return EXIT_INPUT;
        }
    };
    let text = concentration_csv(&rows);
    match &opts.csv {
        Some(p) => {
            if !write_file(p, &text, err) {
                return EXIT_INPUT;
            }
        }
        None => {
            let _ = out.write_all(text.as_bytes());
        }
    }
    for w in concentration_warnings(&rows) {
        let _ = writeln!(err, "warning: {w}");
    }
    exit_for(rows.iter().all(ConcentrationRow::passed))
}

// -------------------------------------------------------------- spectral

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct GraphFile {
    adjacency: Vec<Vec<usize>>,
}

pub fn load_graph(path: &Path) -> Result<GraphMM, ScenarioError> {
    let text = std::fs::read_to_string(path).map_err(|e| ScenarioError {
        path: "$".into(),
        message: format!("cannot read {}: {e}", path.display()),
    })?;
    let de = &mut serde_json::Deserializer::from_str(&text);
    let g: GraphFile = serde_path_to_error::deserialize(de).map_err(|e| ScenarioError {
        path: format!("$.{}", e.path()),
        message: e.into_inner().to_string(),
    })?;
    graph_from_adjacency(&g.adjacency, "$.adjacency")
}

#[derive(Debug, Clone)]
pub struct SpectralOptions {
    pub graph: PathBuf,
    pub dim: usize,
    pub trials: usize,
    pub seed: u64,
}

pub fn spectral_cmd(opts: &SpectralOptions, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let g = match load_graph(&opts.graph) {
        Ok(g) => g,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return EXIT_INPUT;
        }
    };
    if opts.dim == 0 || opts.trials == 0 {
        let _ = writeln!(err, "error: --dim and --trials must be at least 1");
        return EXIT_INPUT;
    }
    let targets = [Space::Euclidean { dim: opts.dim }, Space::Hyperboloid { dim: opts.dim }];
    let _ = writeln!(out, "graph: {} vertices, {} edges", g.vertex_count(), g.edges().len());
    let mut passed = true;
    for (k, target) in targets.iter().enumerate() {
        match spectral_obsvar_check(&g, target, opts.trials, derive_seed(opts.seed, k as u64)) {
            Ok(c) => {
                if k == 0 {
                    let _ = writeln!(out, "gap: {}", fmt_num(c.gap));
                }
                let ok = c.min_slack >= -1e-9;
                passed &= ok;
                let _ = writeln!(
                    out,
                    "target {}({}): bound={} max_V2={} min_slack={} trials={} {}",
                    target.kind(),
                    opts.dim,
                    fmt_num(c.bound),
                    fmt_num(c.max_v2),
                    fmt_num(c.min_slack),
                    c.trials,
                    if ok { "PASS" } else { "FAIL" }
                );
            }
            Err(e) => {
                let _ = writeln!(err, "error: {e}");
                return EXIT_VIOLATION;
            }
        }
    }
    let _ = writeln!(out, "result: {}", if passed { "PASS" } else { "FAIL" });
    exit_for(passed)
}
