//! Finite metric trees with positive real edge lengths.
//!
//! A point is either a vertex or an interior point of an edge, given by its
//! offset from the edge's first endpoint. Points sitting exactly on a vertex
//! are always stored as [`TreePoint::Vertex`], so structural equality is
//! point equality.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct TreeEdge {
    pub name: String,
    pub a: usize,
    pub b: usize,
    pub length: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TreePoint {
    Vertex(usize),
    /// Interior point, `0 < offset < length`, measured from `edges[edge].a`.
    Edge { edge: usize, offset: f64 },
}

const NO_EDGE: usize = usize::MAX;

#[derive(Debug, Clone)]
pub struct MetricTree {
    vertices: Vec<String>,
    edges: Vec<TreeEdge>,
    incident: Vec<Vec<usize>>,
    // row-major V x V tables
    dist: Vec<f64>,
    next_edge: Vec<usize>,
}

impl PartialEq for MetricTree {
    fn eq(&self, other: &Self) -> bool {
        self.vertices == other.vertices && self.edges == other.edges
    }
}

impl MetricTree {
    /// Builds a tree from named vertices and `(name, a, b, length)` edges.
    pub fn new(vertices: Vec<String>, edges: Vec<(String, usize, usize, f64)>) -> Result<Self> {
        let n = vertices.len();
        if n == 0 {
            return Err(Error::Invalid("tree needs at least one vertex".into()));
        }
        if edges.len() + 1 != n {
            return Err(Error::Invalid(format!(
                "tree with {n} vertices must have {} edges, got {}",
                n - 1,
                edges.len()
            )));
        }
        let mut incident = vec![Vec::new(); n];
        let mut tree_edges = Vec::with_capacity(edges.len());
        for (i, (name, a, b, length)) in edges.into_iter().enumerate() {
            if a >= n || b >= n {
                return Err(Error::Invalid(format!("edge {name:?} references a missing vertex")));
            }
            if a == b {
                return Err(Error::Invalid(format!("edge {name:?} is a self loop")));
            }
            if !(length.is_finite() && length > 0.0) {
                return Err(Error::Invalid(format!("edge {name:?} has non-positive length {length}")));
            }
            if tree_edges.iter().any(|e: &TreeEdge| e.name == name) {
                return Err(Error::Invalid(format!("duplicate edge id {name:?}")));
            }
            incident[a].push(i);
            incident[b].push(i);
            tree_edges.push(TreeEdge { name, a, b, length });
        }

        let mut dist = vec![f64::INFINITY; n * n];
        let mut next_edge = vec![NO_EDGE; n * n];
        for root in 0..n {
            dist[root * n + root] = 0.0;
            // first edge on the way from root, carried along the traversal
            let mut stack: Vec<(usize, usize)> = vec![(root, NO_EDGE)];
            while let Some((v, first)) = stack.pop() {
                for &e in &incident[v] {
                    let edge = &tree_edges[e];
                    let w = if edge.a == v { edge.b } else { edge.a };
                    if dist[root * n + w].is_finite() {
                        continue;
                    }
                    dist[root * n + w] = dist[root * n + v] + edge.length;
                    let f = if v == root { e } else { first };
                    next_edge[root * n + w] = f;
                    stack.push((w, f));
                }
            }
        }
        if dist.iter().any(|d| !d.is_finite()) {
            return Err(Error::Invalid("tree graph is disconnected".into()));
        }
        Ok(Self { vertices, edges: tree_edges, incident, dist, next_edge })
    }

    /// Star with one leg per entry of `lengths`, glued at vertex `o`.
    /// Leg `i` (1-based) is edge `"i"` running from the center outwards.
    pub fn star(lengths: &[f64]) -> Result<Self> {
        let mut vertices = vec!["o".to_string()];
        let mut edges = Vec::new();
        for (i, &len) in lengths.iter().enumerate() {
            vertices.push(format!("v{}", i + 1));
            edges.push(((i + 1).to_string(), 0, i + 1, len));
        }
        Self::new(vertices, edges)
    }

    /// The tripod: three unit legs glued at the origin.
    pub fn tripod() -> Self {
        Self::star(&[1.0, 1.0, 1.0]).expect("tripod is a valid tree")
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn vertices(&self) -> &[String] {
        &self.vertices
    }

    pub fn edges(&self) -> &[TreeEdge] {
        &self.edges
    }

    pub fn incident(&self, v: usize) -> &[usize] {
        &self.incident[v]
    }

    pub fn vertex_index(&self, name: &str) -> Option<usize> {
        self.vertices.iter().position(|v| v == name)
    }

    pub fn edge_index(&self, name: &str) -> Option<usize> {
        self.edges.iter().position(|e| e.name == name)
    }

    pub fn vertex_distance(&self, u: usize, v: usize) -> f64 {
        self.dist[u * self.vertices.len() + v]
    }

    /// Canonical point at `offset` along `edge`; offsets at or beyond the
    /// ends collapse to the endpoint vertex.
    pub fn point(&self, edge: usize, offset: f64) -> Result<TreePoint> {
        let e = self
            .edges
            .get(edge)
            .ok_or_else(|| Error::Invalid(format!("edge index {edge} out of range")))?;
        if !offset.is_finite() || offset < -1e-12 || offset > e.length + 1e-12 {
            return Err(Error::Domain(format!(
                "offset {offset} outside edge {:?} of length {}",
                e.name, e.length
            )));
        }
        Ok(self.clamp_point(edge, offset))
    }

    pub(crate) fn clamp_point(&self, edge: usize, offset: f64) -> TreePoint {
        let e = &self.edges[edge];
        if offset <= 0.0 {
            TreePoint::Vertex(e.a)
        } else if offset >= e.length {
            TreePoint::Vertex(e.b)
        } else {
            TreePoint::Edge { edge, offset }
        }
    }

    pub fn contains(&self, p: &TreePoint) -> bool {
        match *p {
            TreePoint::Vertex(v) => v < self.vertices.len(),
            TreePoint::Edge { edge, offset } => self
                .edges
                .get(edge)
                .is_some_and(|e| offset > 0.0 && offset < e.length),
        }
    }

    /// Ways to leave `p` towards the vertex skeleton: `(vertex, distance)`.
    fn anchors(&self, p: &TreePoint) -> ([(usize, f64); 2], usize) {
        match *p {
            TreePoint::Vertex(v) => ([(v, 0.0), (v, 0.0)], 1),
            TreePoint::Edge { edge, offset } => {
                let e = &self.edges[edge];
                ([(e.a, offset), (e.b, e.length - offset)], 2)
            }
        }
    }

    /// Best anchor pair `(u, du, w, dw)` realising the geodesic between two
    /// points that do not share an edge interior.
    fn route(&self, p: &TreePoint, q: &TreePoint) -> (usize, f64, usize, f64) {
        let (pa, np) = self.anchors(p);
        let (qa, nq) = self.anchors(q);
        let mut best = (0, 0.0, 0, 0.0);
        let mut best_len = f64::INFINITY;
        for &(u, du) in &pa[..np] {
            for &(w, dw) in &qa[..nq] {
                let len = du + self.vertex_distance(u, w) + dw;
                if len < best_len {
                    best_len = len;
                    best = (u, du, w, dw);
                }
            }
        }
        best
    }

    pub fn distance(&self, p: &TreePoint, q: &TreePoint) -> f64 {
        if let (
            TreePoint::Edge { edge: e1, offset: s },
            TreePoint::Edge { edge: e2, offset: t },
        ) = (p, q)
        {
            if e1 == e2 {
                return (s - t).abs();
            }
        }
        let (u, du, w, dw) = self.route(p, q);
        du + self.vertex_distance(u, w) + dw
    }

    /// Point at distance `along` from vertex `v` on the incident edge `edge`.
    fn along_edge_from(&self, edge: usize, v: usize, along: f64) -> TreePoint {
        let e = &self.edges[edge];
        let offset = if e.a == v { along } else { e.length - along };
        self.clamp_point(edge, offset.clamp(0.0, e.length))
    }

    /// Constant-speed geodesic, `t` in `[0, 1]`.
    pub fn geodesic(&self, p: &TreePoint, q: &TreePoint, t: f64) -> TreePoint {
        if t <= 0.0 {
            return *p;
        }
        if t >= 1.0 {
            return *q;
        }
        if let (
            TreePoint::Edge { edge: e1, offset: s },
            TreePoint::Edge { edge: e2, offset: r },
        ) = (p, q)
        {
            if e1 == e2 {
                return self.clamp_point(*e1, s + t * (r - s));
            }
        }
        let (u, du, w, dw) = self.route(p, q);
        let total = du + self.vertex_distance(u, w) + dw;
        let mut tau = t * total;

        if tau <= du {
            // still on p's own edge, heading for u
            return match *p {
                TreePoint::Vertex(_) => *p,
                TreePoint::Edge { edge, .. } => self.along_edge_from(edge, u, du - tau),
            };
        }
        tau -= du;
        let n = self.vertices.len();
        let mut cur = u;
        while cur != w {
            let e = self.next_edge[cur * n + w];
            let edge = &self.edges[e];
            if tau <= edge.length {
                return self.along_edge_from(e, cur, tau);
            }
            tau -= edge.length;
            cur = if edge.a == cur { edge.b } else { edge.a };
        }
        match *q {
            TreePoint::Vertex(_) => *q,
            TreePoint::Edge { edge, .. } => self.along_edge_from(edge, w, tau.min(dw)),
        }
    }

    /// Whether the geodesic from vertex `v` to `p` starts along `edge`.
    pub fn leaves_through(&self, v: usize, edge: usize, p: &TreePoint) -> bool {
        let n = self.vertices.len();
        match *p {
            TreePoint::Vertex(w) => w != v && self.next_edge[v * n + w] == edge,
            TreePoint::Edge { edge: e, .. } => {
                if e == edge {
                    return true;
                }
                let ed = &self.edges[e];
                let near = if self.vertex_distance(v, ed.a) < self.vertex_distance(v, ed.b) {
                    ed.a
                } else {
                    ed.b
                };
                near != v && self.next_edge[v * n + near] == edge
            }
        }
    }
}
