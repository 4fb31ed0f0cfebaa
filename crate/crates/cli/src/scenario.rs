//! Scenario files: named spaces, mm-spaces and maps plus the suites to run.
//!
//! Loading happens in two passes. The JSON is first deserialized into plain
//! descriptor structs, then every descriptor is resolved into library types.
//! Both passes report failures with the JSON path of the offending value.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use cat0_fubini::obsvar::GraphMM;
use cat0_fubini::spaces::{hyperboloid, MetricTree};
use cat0_fubini::{MMSpace, MapTable, Point, Space};
use serde::Deserialize;
use serde_json::Value;

use crate::suites::SuiteName;

pub const SCENARIO_VERSION: u32 = 1;

/// An input problem, always tied to the JSON path where it was found.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioError {
    pub path: String,
    pub message: String,
}

impl ScenarioError {
    fn new(path: impl Into<String>, message: impl Into<String>) -> Self {
        Self { path: path.into(), message: message.into() }
    }
}

impl fmt::Display for ScenarioError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

impl std::error::Error for ScenarioError {}

type Res<T> = std::result::Result<T, ScenarioError>;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    version: u32,
    #[serde(default)]
    spaces: BTreeMap<String, SpaceDesc>,
    #[serde(default)]
    mm_spaces: BTreeMap<String, MMDesc>,
    #[serde(default)]
    maps: BTreeMap<String, MapDesc>,
    #[serde(default)]
    suites: Vec<SuiteDesc>,
    #[serde(default)]
    seed: u64,
}

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
enum SpaceDesc {
    Euclidean { dim: usize },
    Tree { vertices: Vec<String>, edges: Vec<EdgeDesc> },
    Hyperboloid { dim: usize },
    Product { components: Vec<SpaceRef> },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct EdgeDesc {
    id: String,
    from: String,
    to: String,
    length: f64,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum SpaceRef {
    Name(String),
    Inline(Box<SpaceDesc>),
}

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
enum MMDesc {
    Metric {
        #[serde(default)]
        labels: Option<Vec<String>>,
        metric: Vec<Vec<f64>>,
        #[serde(default)]
        prob: Option<Vec<f64>>,
    },
    Discrete {
        n: usize,
        #[serde(default = "one")]
        d: f64,
    },
    Line {
        coords: Vec<f64>,
        #[serde(default)]
        prob: Option<Vec<f64>>,
    },
    Graph {
        adjacency: Vec<Vec<usize>>,
        #[serde(default = "one")]
        scale: f64,
    },
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct MapDesc {
    x: String,
    y: String,
    target: String,
    /// `values[i][j] = f(x_i, y_j)`.
    values: Vec<Vec<Value>>,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum SuiteDesc {
    Name(String),
    Config(SuiteConfigDesc),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SuiteConfigDesc {
    name: String,
    #[serde(default)]
    instances: Option<usize>,
    #[serde(default)]
    tolerances: BTreeMap<String, f64>,
}

/// A suite selected by the scenario, with optional overrides.
#[derive(Debug, Clone, PartialEq)]
pub struct SuiteSpec {
    pub name: SuiteName,
    pub instances: Option<usize>,
    pub tolerances: BTreeMap<String, f64>,
}

impl SuiteSpec {
    pub fn new(name: SuiteName) -> Self {
        Self { name, instances: None, tolerances: BTreeMap::new() }
    }
}

/// A fully resolved scenario.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub seed: u64,
    pub spaces: BTreeMap<String, Space>,
    pub mm_spaces: BTreeMap<String, MMSpace>,
    /// Graph-backed mm-spaces, also present in `mm_spaces`.
    pub graphs: BTreeMap<String, GraphMM>,
    pub maps: BTreeMap<String, MapTable>,
    pub suites: Vec<SuiteSpec>,
}

impl Scenario {
    /// A scenario with no named objects that runs every suite.
    pub fn builtin(seed: u64) -> Self {
        Self {
            seed,
            spaces: BTreeMap::new(),
            mm_spaces: BTreeMap::new(),
            graphs: BTreeMap::new(),
            maps: BTreeMap::new(),
            suites: SuiteName::ALL.iter().map(|&n| SuiteSpec::new(n)).collect(),
        }
    }

    pub fn load(path: &Path) -> Res<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ScenarioError::new("$", format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Res<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let file: ScenarioFile = serde_path_to_error::deserialize(de).map_err(|e| {
            let inner = e.path().to_string();
            let path = if inner == "." { "$".to_string() } else { format!("$.{inner}") };
            ScenarioError::new(path, e.into_inner().to_string())
        })?;
        resolve(file)
    }
}

fn resolve(file: ScenarioFile) -> Res<Scenario> {
    if file.version != SCENARIO_VERSION {
        return Err(ScenarioError::new(
            "$.version",
            format!("unsupported version {} (expected {SCENARIO_VERSION})", file.version),
        ));
    }

    let mut spaces = BTreeMap::new();
    for name in file.spaces.keys() {
        let mut stack = Vec::new();
        let s = resolve_named_space(&file.spaces, name, &mut stack)?;
        spaces.insert(name.clone(), s);
    }

    let mut mm_spaces = BTreeMap::new();
    let mut graphs = BTreeMap::new();
    for (name, desc) in &file.mm_spaces {
        let path = format!("$.mm_spaces.{name}");
        let (mm, graph) = resolve_mm(desc, &path)?;
        mm_spaces.insert(name.clone(), mm);
        if let Some(g) = graph {
            graphs.insert(name.clone(), g);
        }
    }

    let mut maps = BTreeMap::new();
    for (name, desc) in &file.maps {
        let path = format!("$.maps.{name}");
        maps.insert(name.clone(), resolve_map(desc, &path, &spaces, &mm_spaces)?);
    }

    let mut suites = Vec::new();
    for (k, desc) in file.suites.iter().enumerate() {
        let path = format!("$.suites[{k}]");
        let spec = match desc {
            SuiteDesc::Name(n) => SuiteSpec::new(parse_suite(n, &path)?),
            SuiteDesc::Config(c) => {
                let name = parse_suite(&c.name, &format!("{path}.name"))?;
                for (check, tol) in &c.tolerances {
                    if !(tol.is_finite() && *tol >= 0.0) {
                        return Err(ScenarioError::new(
                            format!("{path}.tolerances.{check}"),
                            format!("tolerance {tol} must be finite and non-negative"),
                        ));
                    }
                }
                if c.instances == Some(0) {
                    return Err(ScenarioError::new(format!("{path}.instances"), "instances must be at least 1"));
                }
                SuiteSpec { name, instances: c.instances, tolerances: c.tolerances.clone() }
            }
        };
        if suites.iter().any(|s: &SuiteSpec| s.name == spec.name) {
            return Err(ScenarioError::new(path, format!("suite {:?} listed twice", spec.name.as_str())));
        }
        suites.push(spec);
    }
    if suites.is_empty() {
        suites = SuiteName::ALL.iter().map(|&n| SuiteSpec::new(n)).collect();
    }

    Ok(Scenario { seed: file.seed, spaces, mm_spaces, graphs, maps, suites })
}

fn parse_suite(name: &str, path: &str) -> Res<SuiteName> {
    SuiteName::parse(name).ok_or_else(|| {
        let known: Vec<&str> = SuiteName::ALL.iter().map(|s| s.as_str()).collect();
        ScenarioError::new(path, format!("unknown suite {name:?} (known: {})", known.join(", ")))
    })
}

fn resolve_named_space(all: &BTreeMap<String, SpaceDesc>, name: &str, stack: &mut Vec<String>) -> Res<Space> {
    let path = format!("$.spaces.{name}");
    if stack.iter().any(|s| s == name) {
        return Err(ScenarioError::new(path, format!("cyclic space reference through {}", stack.join(" -> "))));
    }
    let desc = all.get(name).expect("caller checked the name");
    stack.push(name.to_string());
    let s = resolve_space(all, desc, &path, stack);
    stack.pop();
    s
}

fn resolve_space(all: &BTreeMap<String, SpaceDesc>, desc: &SpaceDesc, path: &str, stack: &mut Vec<String>) -> Res<Space> {
    let lib = |e: cat0_fubini::Error| ScenarioError::new(path, e.to_string());
    match desc {
        SpaceDesc::Euclidean { dim } => Space::euclidean(*dim).map_err(lib),
        SpaceDesc::Hyperboloid { dim } => Space::hyperboloid(*dim).map_err(lib),
        SpaceDesc::Tree { vertices, edges } => {
            let index = |v: &str, p: String| {
                vertices
                    .iter()
                    .position(|x| x == v)
                    .ok_or_else(|| ScenarioError::new(p, format!("unknown vertex {v:?}")))
            };
            for (k, v) in vertices.iter().enumerate() {
                if vertices[..k].contains(v) {
                    return Err(ScenarioError::new(format!("{path}.vertices[{k}]"), format!("duplicate vertex {v:?}")));
                }
            }
            let mut list = Vec::with_capacity(edges.len());
            for (k, e) in edges.iter().enumerate() {
                let a = index(&e.from, format!("{path}.edges[{k}].from"))?;
                let b = index(&e.to, format!("{path}.edges[{k}].to"))?;
                list.push((e.id.clone(), a, b, e.length));
            }
            let tree = MetricTree::new(vertices.clone(), list).map_err(lib)?;
            if !tree_is_connected(&tree) {
                return Err(ScenarioError::new(format!("{path}.edges"), "edges do not form a tree (graph has a cycle)"));
            }
            Ok(Space::tree(tree))
        }
        SpaceDesc::Product { components } => {
            let mut parts = Vec::with_capacity(components.len());
            for (k, c) in components.iter().enumerate() {
                let cpath = format!("{path}.components[{k}]");
                let s = match c {
                    SpaceRef::Name(n) => {
                        if !all.contains_key(n) {
                            return Err(ScenarioError::new(cpath, format!("unknown space {n:?}")));
                        }
                        resolve_named_space(all, n, stack)?
                    }
                    SpaceRef::Inline(d) => resolve_space(all, d, &cpath, stack)?,
                };
                parts.push(s);
            }
            Space::product(parts).map_err(lib)
        }
    }
}

/// `n - 1` edges plus connectivity is the tree test; the library checks the count.
fn tree_is_connected(tree: &MetricTree) -> bool {
    (0..tree.vertex_count()).all(|v| tree.vertex_distance(0, v).is_finite())
}

fn resolve_mm(desc: &MMDesc, path: &str) -> Res<(MMSpace, Option<GraphMM>)> {
    let lib = |e: cat0_fubini::Error| ScenarioError::new(path, e.to_string());
    match desc {
        MMDesc::Metric { labels, metric, prob } => {
            let n = metric.len();
            let labels = match labels {
                Some(l) if l.len() != n => {
                    return Err(ScenarioError::new(format!("{path}.labels"), format!("{} labels for {n} points", l.len())))
                }
                Some(l) => l.clone(),
                None => (0..n).map(|i| format!("p{i}")).collect(),
            };
            let prob = prob.clone().unwrap_or_else(|| vec![1.0 / n as f64; n]);
            Ok((MMSpace::new(labels, metric.clone(), prob).map_err(lib)?, None))
        }
        MMDesc::Discrete { n, d } => Ok((MMSpace::discrete(*n, *d).map_err(lib)?, None)),
        MMDesc::Line { coords, prob } => {
            let prob = prob.clone().unwrap_or_else(|| vec![1.0 / coords.len() as f64; coords.len()]);
            Ok((MMSpace::line(coords, prob).map_err(lib)?, None))
        }
        MMDesc::Graph { adjacency, scale } => {
            let g = graph_from_adjacency(adjacency, &format!("{path}.adjacency"))?;
            if !(scale.is_finite() && *scale > 0.0) {
                return Err(ScenarioError::new(format!("{path}.scale"), format!("scale {scale} must be positive")));
            }
            Ok((g.mm_scaled(*scale), Some(g)))
        }
    }
}

/// Builds a graph from an adjacency list. Listing an edge from either end or
/// from both is accepted.
pub fn graph_from_adjacency(adjacency: &[Vec<usize>], path: &str) -> Res<GraphMM> {
    let n = adjacency.len();
    let mut edges = Vec::new();
    for (u, nbrs) in adjacency.iter().enumerate() {
        for (k, &v) in nbrs.iter().enumerate() {
            let p = format!("{path}[{u}][{k}]");
            if v >= n {
                return Err(ScenarioError::new(p, format!("neighbor {v} out of range for {n} vertices")));
            }
            if v == u {
                return Err(ScenarioError::new(p, "self loop"));
            }
            let e = (u.min(v), u.max(v));
            if !edges.contains(&e) {
                edges.push(e);
            }
        }
    }
    edges.sort_unstable();
    GraphMM::new(n, edges).map_err(|e| ScenarioError::new(path, e.to_string()))
}

fn resolve_map(
    desc: &MapDesc,
    path: &str,
    spaces: &BTreeMap<String, Space>,
    mm_spaces: &BTreeMap<String, MMSpace>,
) -> Res<MapTable> {
    let mm = |name: &str, field: &str| {
        mm_spaces
            .get(name)
            .cloned()
            .ok_or_else(|| ScenarioError::new(format!("{path}.{field}"), format!("unknown mm-space {name:?}")))
    };
    let x = mm(&desc.x, "x")?;
    let y = mm(&desc.y, "y")?;
    let target = spaces
        .get(&desc.target)
        .cloned()
        .ok_or_else(|| ScenarioError::new(format!("{path}.target"), format!("unknown space {:?}", desc.target)))?;
    if desc.values.len() != x.len() {
        return Err(ScenarioError::new(
            format!("{path}.values"),
            format!("expected {} rows (one per point of {}), got {}", x.len(), desc.x, desc.values.len()),
        ));
    }
    let mut values = Vec::with_capacity(x.len() * y.len());
    for (i, row) in desc.values.iter().enumerate() {
        if row.len() != y.len() {
            return Err(ScenarioError::new(
                format!("{path}.values[{i}]"),
                format!("expected {} entries (one per point of {}), got {}", y.len(), desc.y, row.len()),
            ));
        }
        for (j, v) in row.iter().enumerate() {
            values.push(parse_point(&target, v, &format!("{path}.values[{i}][{j}]"))?);
        }
    }
    MapTable::on_product(x, y, target, values).map_err(|e| ScenarioError::new(path, e.to_string()))
}

fn numbers(v: &Value, path: &str) -> Res<Vec<f64>> {
    let arr = v.as_array().ok_or_else(|| ScenarioError::new(path, "expected an array of numbers"))?;
    arr.iter()
        .enumerate()
        .map(|(k, x)| {
            x.as_f64()
                .filter(|f| f.is_finite())
                .ok_or_else(|| ScenarioError::new(format!("{path}[{k}]"), "expected a finite number"))
        })
        .collect()
}

/// Parses a point of `space`.
///
/// * Euclidean: `[x1, ..., xd]`.
/// * Hyperboloid: spatial coordinates `[x1, ..., xd]`, lifted to the sheet,
///   or full ambient coordinates `[x0, x1, ..., xd]` on the sheet.
/// * Tree: `["edge_id", offset]` with the offset measured from the edge's
///   `from` vertex, or a vertex name.
/// * Product: an array with one point per component.
pub fn parse_point(space: &Space, v: &Value, path: &str) -> Res<Point> {
    match space {
        Space::Euclidean { dim } => {
            let x = numbers(v, path)?;
            if x.len() != *dim {
                return Err(ScenarioError::new(path, format!("expected {dim} coordinates, got {}", x.len())));
            }
            Ok(Point::Euclidean(x))
        }
        Space::Hyperboloid { dim } => {
            let x = numbers(v, path)?;
            if x.len() == *dim {
                Ok(Point::Hyperboloid(hyperboloid::lift(&x)))
            } else if x.len() == dim + 1 {
                if x[0] <= 0.0 || hyperboloid::constraint_residual(&x) > 1e-9 * x[0] * x[0] {
                    return Err(ScenarioError::new(path, "ambient coordinates are not on the upper sheet"));
                }
                Ok(Point::Hyperboloid(x))
            } else {
                Err(ScenarioError::new(
                    path,
                    format!("expected {dim} spatial or {} ambient coordinates, got {}", dim + 1, x.len()),
                ))
            }
        }
        Space::Tree(tree) => match v {
            Value::String(name) => tree
                .vertex_index(name)
                .map(|i| Point::Tree(cat0_fubini::spaces::TreePoint::Vertex(i)))
                .ok_or_else(|| ScenarioError::new(path, format!("unknown vertex {name:?}"))),
            Value::Array(parts) if parts.len() == 2 => {
                let edge = parts[0]
                    .as_str()
                    .ok_or_else(|| ScenarioError::new(format!("{path}[0]"), "expected an edge id string"))?;
                let offset = parts[1]
                    .as_f64()
                    .ok_or_else(|| ScenarioError::new(format!("{path}[1]"), "expected a numeric offset"))?;
                space.tree_point(edge, offset).map_err(|e| ScenarioError::new(path, e.to_string()))
            }
            _ => Err(ScenarioError::new(path, "expected [\"edge_id\", offset] or a vertex name")),
        },
        Space::Product(cs) => {
            let arr = v
                .as_array()
                .filter(|a| a.len() == cs.len())
                .ok_or_else(|| ScenarioError::new(path, format!("expected an array of {} component points", cs.len())))?;
            let parts = cs
                .iter()
                .zip(arr)
                .enumerate()
                .map(|(k, (c, p))| parse_point(c, p, &format!("{path}[{k}]")))
                .collect::<Res<Vec<_>>>()?;
            Ok(Point::Product(parts))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const TRIPOD: &str = include_str!("../scenarios/tripod.json");

    #[test]
    fn bundled_tripod_resolves() {
        let s = Scenario::parse(TRIPOD).unwrap();
        assert_eq!(s.maps.len(), 1);
        assert_eq!(s.maps["f"].len(), 4);
        assert_eq!(s.spaces["tripod"], Space::tripod());
    }

    #[test]
    fn errors_carry_json_paths() {
        let bad_metric = r#"{"version":1,"mm_spaces":{"A":{"kind":"metric","metric":[[0,1,5],[1,0,1],[5,1,0]]}}}"#;
        let e = Scenario::parse(bad_metric).unwrap_err();
        assert_eq!(e.path, "$.mm_spaces.A");
        assert!(e.message.contains("triangle"), "{e}");

        let bad_type = r#"{"version":1,"spaces":{"E":{"kind":"euclidean","dim":"two"}}}"#;
        let e = Scenario::parse(bad_type).unwrap_err();
        assert!(e.path.starts_with("$.spaces.E"), "{e}");

        let bad_ref = r#"{"version":1,"mm_spaces":{"A":{"kind":"discrete","n":2}},
            "spaces":{"E":{"kind":"euclidean","dim":1}},
            "maps":{"f":{"x":"A","y":"B","target":"E","values":[[[0],[1]],[[2],[3]]]}}}"#;
        assert_eq!(Scenario::parse(bad_ref).unwrap_err().path, "$.maps.f.y");

        let bad_point = r#"{"version":1,"mm_spaces":{"A":{"kind":"discrete","n":2}},
            "spaces":{"E":{"kind":"euclidean","dim":1}},
            "maps":{"f":{"x":"A","y":"A","target":"E","values":[[[0],[1]],[[2],[3,4]]]}}}"#;
        assert_eq!(Scenario::parse(bad_point).unwrap_err().path, "$.maps.f.values[1][1]");
    }

    #[test]
    fn cycles_and_versions_are_rejected() {
        let cyclic = r#"{"version":1,"spaces":{"P":{"kind":"product","components":["Q","Q"]},
            "Q":{"kind":"product","components":["P","P"]}}}"#;
        assert!(Scenario::parse(cyclic).unwrap_err().message.contains("cyclic"));
        assert_eq!(Scenario::parse(r#"{"version":2}"#).unwrap_err().path, "$.version");
    }

    #[test]
    fn empty_suite_list_selects_everything() {
        let s = Scenario::parse(r#"{"version":1}"#).unwrap();
        assert_eq!(s.suites.len(), SuiteName::ALL.len());
    }

    #[test]
    fn graphs_accept_one_sided_adjacency() {
        let s = Scenario::parse(r#"{"version":1,"mm_spaces":{"G":{"kind":"graph","adjacency":[[1,2],[],[1]]}}}"#).unwrap();
        assert_eq!(s.graphs["G"].edges(), &[(0, 1), (0, 2), (1, 2)]);
        assert_eq!(s.mm_spaces["G"].len(), 3);
    }

    #[test]
    fn hyperboloid_points_lift_or_check() {
        let h = Space::hyperboloid(2).unwrap();
        let p = parse_point(&h, &serde_json::json!([0.0, 0.0]), "$").unwrap();
        assert_eq!(p, h.base_point());
        assert!(parse_point(&h, &serde_json::json!([2.0, 0.0, 0.0]), "$").is_err());
    }
}
