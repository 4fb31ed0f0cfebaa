//! Suite reports and their text, JSON and CSV renderings.
//!
//! Every number is printed with 12 significant digits so that reports diff
//! cleanly between runs. Nothing time- or host-dependent goes into a report.

use std::collections::BTreeMap;

use cat0_fubini::{Point, Space};
use serde_json::{json, Map, Value as Json};

/// Failing instances kept per check; the count is always exact.
const MAX_LISTED_FAILURES: usize = 10;

/// Formats `x` with 12 significant digits, dropping trailing zeros.
pub fn fmt_num(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{x:.11e}");
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..12).contains(&exp) {
        let decimals = (11 - exp).max(0) as usize;
        trim_zeros(format!("{x:.decimals$}"))
    } else {
        format!("{}e{exp}", trim_zeros(mantissa.to_string()))
    }
}

fn trim_zeros(s: String) -> String {
    if !s.contains('.') {
        return s;
    }
    let t = s.trim_end_matches('0').trim_end_matches('.');
    if t == "-0" {
        "0".into()
    } else {
        t.to_string()
    }
}

/// `x` rounded to the printed precision, for JSON output.
pub fn round12(x: f64) -> f64 {
    fmt_num(x).parse().unwrap_or(x)
}

/// Human-readable point: Euclidean and hyperboloid coordinates in
/// parentheses, tree points as `("edge", offset)` or a vertex name, product
/// points as `[p1; p2; ...]`.
pub fn fmt_point(space: &Space, p: &Point) -> String {
    match (space, p) {
        (_, Point::Euclidean(x)) | (_, Point::Hyperboloid(x)) => {
            format!("({})", x.iter().map(|v| fmt_num(*v)).collect::<Vec<_>>().join(", "))
        }
        (Space::Tree(t), Point::Tree(tp)) => match tp {
            cat0_fubini::spaces::TreePoint::Vertex(v) => format!("{:?}", t.vertices()[*v]),
            cat0_fubini::spaces::TreePoint::Edge { edge, offset } => {
                format!("({:?}, {})", t.edges()[*edge].name, fmt_num(*offset))
            }
        },
        (Space::Product(cs), Point::Product(ps)) => {
            format!("[{}]", cs.iter().zip(ps).map(|(c, q)| fmt_point(c, q)).collect::<Vec<_>>().join("; "))
        }
        _ => format!("{p:?}"),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Num(f64),
    Text(String),
}

impl Value {
    fn render(&self) -> String {
        match self {
            Value::Num(x) => fmt_num(*x),
            Value::Text(s) => s.clone(),
        }
    }

    fn to_json(&self) -> Json {
        match self {
            Value::Num(x) => num_json(*x),
            Value::Text(s) => Json::String(s.clone()),
        }
    }
}

fn num_json(x: f64) -> Json {
    serde_json::Number::from_f64(round12(x)).map_or(Json::Null, Json::Number)
}

/// One asserted inequality, aggregated over a suite's instances. Every
/// instance contributes a slack; the check passes when the smallest slack is
/// at least `-tolerance`.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub tolerance: f64,
    pub instances: usize,
    pub min_slack: f64,
    pub worst_instance: Option<usize>,
    pub worst_seed: Option<u64>,
    pub failures: usize,
    /// Up to ten failing `(instance, seed)` pairs for replay.
    pub failing: Vec<(usize, u64)>,
}

impl Check {
    pub fn new(name: &str, tolerance: f64) -> Self {
        Self {
            name: name.to_string(),
            tolerance,
            instances: 0,
            min_slack: f64::INFINITY,
            worst_instance: None,
            worst_seed: None,
            failures: 0,
            failing: Vec::new(),
        }
    }

    /// Records one instance. A NaN slack counts as a failure.
    pub fn record(&mut self, instance: usize, seed: u64, slack: f64) {
        let slack = if slack.is_nan() { f64::NEG_INFINITY } else { slack };
        self.instances += 1;
        if slack < self.min_slack || self.worst_instance.is_none() {
            self.min_slack = slack;
            self.worst_instance = Some(instance);
            self.worst_seed = Some(seed);
        }
        if slack < -self.tolerance {
            self.failures += 1;
            if self.failing.len() < MAX_LISTED_FAILURES {
                self.failing.push((instance, seed));
            }
        }
    }

    pub fn passed(&self) -> bool {
        self.failures == 0
    }
}

/// Checks keyed by name, in first-use order, with scenario tolerance overrides.
#[derive(Debug, Clone, Default)]
pub struct Checks {
    order: Vec<String>,
    map: BTreeMap<String, Check>,
    overrides: BTreeMap<String, f64>,
}

impl Checks {
    pub fn with_overrides(overrides: &BTreeMap<String, f64>) -> Self {
        Self { overrides: overrides.clone(), ..Self::default() }
    }

    pub fn record(&mut self, name: &str, default_tol: f64, instance: usize, seed: u64, slack: f64) {
        if !self.map.contains_key(name) {
            let tol = self.overrides.get(name).copied().unwrap_or(default_tol);
            self.order.push(name.to_string());
            self.map.insert(name.to_string(), Check::new(name, tol));
        }
        self.map.get_mut(name).expect("inserted above").record(instance, seed, slack);
    }

    pub fn into_vec(mut self) -> Vec<Check> {
        self.order.iter().map(|n| self.map.remove(n).expect("ordered name")).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteReport {
    pub name: String,
    pub seed: u64,
    pub instances: usize,
    pub checks: Vec<Check>,
    pub values: BTreeMap<String, Value>,
    pub warnings: Vec<String>,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(Check::passed)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn num(&self, name: &str) -> Option<f64> {
        match self.values.get(name)? {
            Value::Num(x) => Some(*x),
            Value::Text(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub source: String,
    pub master_seed: u64,
    pub suites: Vec<SuiteReport>,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.suites.iter().all(SuiteReport::passed)
    }

    pub fn suite(&self, name: &str) -> Option<&SuiteReport> {
        self.suites.iter().find(|s| s.name == name)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("scenario: {}\nmaster_seed: {}\n", self.source, self.master_seed));
        for s in &self.suites {
            out.push_str(&format!(
                "\nsuite {} (seed {}, {} instances): {}\n",
                s.name,
                s.seed,
                s.instances,
                status(s.passed())
            ));
            for c in &s.checks {
                out.push_str(&format!(
                    "  check {}: min_slack={} tolerance={} instances={} worst_instance={} worst_seed={} {}\n",
                    c.name,
                    fmt_num(c.min_slack),
                    fmt_num(c.tolerance),
                    c.instances,
                    opt(c.worst_instance),
                    opt(c.worst_seed),
                    status(c.passed())
                ));
                for (i, seed) in &c.failing {
                    out.push_str(&format!("    failing instance {i} (seed {seed})\n"));
                }
            }
            for (k, v) in &s.values {
                out.push_str(&format!("  value {k}={}\n", v.render()));
            }
            for w in &s.warnings {
                out.push_str(&format!("  warning: {w}\n"));
            }
        }
        out.push_str(&format!("\nresult: {}\n", status(self.passed())));
        out
    }

    pub fn to_json(&self) -> String {
        let suites: Vec<Json> = self
            .suites
            .iter()
            .map(|s| {
                let checks: Vec<Json> = s
                    .checks
                    .iter()
                    .map(|c| {
                        json!({
                            "name": c.name,
                            "tolerance": num_json(c.tolerance),
                            "instances": c.instances,
                            "min_slack": num_json(c.min_slack),
                            "worst_instance": c.worst_instance,
                            "worst_seed": c.worst_seed,
                            "failures": c.failures,
                            "failing": c.failing.iter().map(|(i, seed)| json!({"instance": i, "seed": seed})).collect::<Vec<_>>(),
                            "passed": c.passed(),
                        })
                    })
                    .collect();
                let values: Map<String, Json> = s.values.iter().map(|(k, v)| (k.clone(), v.to_json())).collect();
                json!({
                    "name": s.name,
                    "seed": s.seed,
                    "instances": s.instances,
                    "passed": s.passed(),
                    "checks": checks,
                    "values": values,
                    "warnings": s.warnings,
                })
            })
            .collect();
        let doc = json!({
            "scenario": self.source,
            "master_seed": self.master_seed,
            "passed": self.passed(),
            "suites": suites,
        });
        let mut text = serde_json::to_string_pretty(&doc).expect("report serializes");
        text.push('\n');
        text
    }

    /// One row per check and per value. Value rows leave the check columns empty.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record([
            "suite", "kind", "name", "value", "tolerance", "instances", "worst_instance", "worst_seed", "status",
        ])
        .expect("in-memory write");
        for s in &self.suites {
            for c in &s.checks {
                w.write_record([
                    s.name.clone(),
                    "check".into(),
                    c.name.clone(),
                    fmt_num(c.min_slack),
                    fmt_num(c.tolerance),
                    c.instances.to_string(),
                    opt(c.worst_instance),
                    opt(c.worst_seed),
                    status(c.passed()).into(),
                ])
                .expect("in-memory write");
            }
            for (k, v) in &s.values {
                w.write_record([
                    s.name.clone(),
                    "value".into(),
                    k.clone(),
                    v.render(),
                    String::new(),
                    String::new(),
                    String::new(),
                    String::new(),
                    String::new(),
                ])
                .expect("in-memory write");
            }
        }
        String::from_utf8(w.into_inner().expect("flush")).expect("utf-8")
    }
}

fn status(ok: bool) -> &'static str {
    if ok {
        "PASS"
    } else {
        "FAIL"
    }
}

fn opt<T: ToString>(x: Option<T>) -> String {
    x.map_or_else(|| "-".into(), |v| v.to_string())
}
