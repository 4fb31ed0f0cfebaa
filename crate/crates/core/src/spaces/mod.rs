//! Concrete CAT(0) target spaces.
//!
//! Four kinds are supported: Euclidean space, finite metric trees, the
//! hyperboloid model of hyperbolic space, and finite l2 products of these.
//! Every operation here is a pure function of immutable values.

pub mod hyperboloid;
pub mod sample;
pub mod tree;

use std::sync::Arc;

use crate::error::{Error, Result};

pub use tree::{MetricTree, TreeEdge, TreePoint};

#[derive(Debug, Clone, PartialEq)]
pub enum Space {
    Euclidean { dim: usize },
    Tree(Arc<MetricTree>),
    /// Hyperbolic space of dimension `dim`, stored in R^{dim+1}.
    Hyperboloid { dim: usize },
    /// l2 product of at least two components.
    Product(Vec<Space>),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Point {
    Euclidean(Vec<f64>),
    Tree(TreePoint),
    Hyperboloid(Vec<f64>),
    Product(Vec<Point>),
}

/// Tangent vector at `base`, in ambient coordinates. For products the
/// component coordinates are concatenated in order.
#[derive(Debug, Clone, PartialEq)]
pub struct TangentVector {
    pub base: Point,
    pub coords: Vec<f64>,
}

impl Space {
    pub fn euclidean(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Invalid("euclidean dimension must be >= 1".into()));
        }
        Ok(Space::Euclidean { dim })
    }

    pub fn hyperboloid(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Invalid("hyperboloid dimension must be >= 1".into()));
        }
        Ok(Space::Hyperboloid { dim })
    }

    pub fn tree(tree: MetricTree) -> Self {
        Space::Tree(Arc::new(tree))
    }

    pub fn tripod() -> Self {
        Space::tree(MetricTree::tripod())
    }

    pub fn product(components: Vec<Space>) -> Result<Self> {
        if components.len() < 2 {
            return Err(Error::Invalid("product needs at least two components".into()));
        }
        Ok(Space::Product(components))
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Space::Euclidean { .. } => "euclidean",
            Space::Tree(_) => "tree",
            Space::Hyperboloid { .. } => "hyperboloid",
            Space::Product(_) => "product",
        }
    }

    /// Whether exp/log maps exist (Euclidean, hyperboloid and their products).
    pub fn has_tangent_maps(&self) -> bool {
        match self {
            Space::Euclidean { .. } | Space::Hyperboloid { .. } => true,
            Space::Tree(_) => false,
            Space::Product(cs) => cs.iter().all(Space::has_tangent_maps),
        }
    }

    pub fn as_tree(&self) -> Option<&MetricTree> {
        match self {
            Space::Tree(t) => Some(t),
            _ => None,
        }
    }

    /// A fixed reference point: the origin, vertex 0, or the tuple of those.
    pub fn base_point(&self) -> Point {
        match self {
            Space::Euclidean { dim } => Point::Euclidean(vec![0.0; *dim]),
            Space::Tree(_) => Point::Tree(TreePoint::Vertex(0)),
            Space::Hyperboloid { dim } => Point::Hyperboloid(hyperboloid::origin(*dim)),
            Space::Product(cs) => Point::Product(cs.iter().map(Space::base_point).collect()),
        }
    }

    pub fn contains(&self, p: &Point) -> bool {
        match (self, p) {
            (Space::Euclidean { dim }, Point::Euclidean(x)) => {
                x.len() == *dim && x.iter().all(|v| v.is_finite())
            }
            (Space::Tree(t), Point::Tree(tp)) => t.contains(tp),
            (Space::Hyperboloid { dim }, Point::Hyperboloid(x)) => {
                x.len() == dim + 1
                    && x.iter().all(|v| v.is_finite())
                    && x[0] > 0.0
                    && hyperboloid::constraint_residual(x) <= 1e-9 * x[0] * x[0]
            }
            (Space::Product(cs), Point::Product(ps)) => {
                cs.len() == ps.len() && cs.iter().zip(ps).all(|(c, p)| c.contains(p))
            }
            _ => false,
        }
    }

    pub fn check(&self, p: &Point) -> Result<()> {
        if self.contains(p) {
            Ok(())
        } else {
            Err(Error::SpaceMismatch(format!("{p:?} is not a point of a {} space", self.kind())))
        }
    }

    /// Checked distance.
    pub fn distance(&self, p: &Point, q: &Point) -> Result<f64> {
        self.check(p)?;
        self.check(q)?;
        Ok(self.dist(p, q))
    }

    /// Distance between points already known to belong to the space.
    ///
    /// Panics if the point tags do not match the space.
    pub fn dist(&self, p: &Point, q: &Point) -> f64 {
        match (self, p, q) {
            (Space::Euclidean { .. }, Point::Euclidean(x), Point::Euclidean(y)) => {
                x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
            }
            (Space::Tree(t), Point::Tree(a), Point::Tree(b)) => t.distance(a, b),
            (Space::Hyperboloid { .. }, Point::Hyperboloid(x), Point::Hyperboloid(y)) => {
                hyperboloid::distance(x, y)
            }
            (Space::Product(cs), Point::Product(xs), Point::Product(ys)) => cs
                .iter()
                .zip(xs.iter().zip(ys))
                .map(|(c, (x, y))| {
                    let d = c.dist(x, y);
                    d * d
                })
                .sum::<f64>()
                .sqrt(),
            _ => panic!("point tags do not match {} space", self.kind()),
        }
    }

    /// Constant-speed geodesic from `p` to `q` evaluated at `t` in `[0, 1]`.
    pub fn geodesic_point(&self, p: &Point, q: &Point, t: f64) -> Result<Point> {
        if !(0.0..=1.0).contains(&t) {
            return Err(Error::Domain(format!("geodesic parameter {t} not in [0, 1]")));
        }
        self.check(p)?;
        self.check(q)?;
        Ok(self.geodesic(p, q, t))
    }

    /// Unchecked geodesic; `t` is clamped to `[0, 1]`.
    pub fn geodesic(&self, p: &Point, q: &Point, t: f64) -> Point {
        let t = t.clamp(0.0, 1.0);
        match (self, p, q) {
            (Space::Euclidean { .. }, Point::Euclidean(x), Point::Euclidean(y)) => {
                if t == 1.0 {
                    return q.clone();
                }
                Point::Euclidean(x.iter().zip(y).map(|(a, b)| a + t * (b - a)).collect())
            }
            (Space::Tree(tr), Point::Tree(a), Point::Tree(b)) => Point::Tree(tr.geodesic(a, b, t)),
            (Space::Hyperboloid { .. }, Point::Hyperboloid(x), Point::Hyperboloid(y)) => {
                Point::Hyperboloid(hyperboloid::geodesic(x, y, t))
            }
            (Space::Product(cs), Point::Product(xs), Point::Product(ys)) => Point::Product(
                cs.iter().zip(xs.iter().zip(ys)).map(|(c, (x, y))| c.geodesic(x, y, t)).collect(),
            ),
            _ => panic!("point tags do not match {} space", self.kind()),
        }
    }

    pub fn midpoint(&self, p: &Point, q: &Point) -> Point {
        self.geodesic(p, q, 0.5)
    }

    /// Length of the tangent coordinate vector for this space.
    pub fn tangent_dim(&self) -> Option<usize> {
        match self {
            Space::Euclidean { dim } => Some(*dim),
            Space::Hyperboloid { dim } => Some(dim + 1),
            Space::Tree(_) => None,
            Space::Product(cs) => cs.iter().map(Space::tangent_dim).sum(),
        }
    }

    pub fn log_map(&self, base: &Point, target: &Point) -> Result<TangentVector> {
        if !self.has_tangent_maps() {
            return Err(Error::Unsupported("log map on a metric tree"));
        }
        self.check(base)?;
        self.check(target)?;
        let mut coords = Vec::with_capacity(self.tangent_dim().unwrap_or(0));
        self.log_into(base, target, &mut coords);
        Ok(TangentVector { base: base.clone(), coords })
    }

    fn log_into(&self, base: &Point, target: &Point, out: &mut Vec<f64>) {
        match (self, base, target) {
            (Space::Euclidean { .. }, Point::Euclidean(x), Point::Euclidean(y)) => {
                out.extend(y.iter().zip(x).map(|(b, a)| b - a));
            }
            (Space::Hyperboloid { .. }, Point::Hyperboloid(x), Point::Hyperboloid(y)) => {
                out.extend(hyperboloid::log(x, y));
            }
            (Space::Product(cs), Point::Product(xs), Point::Product(ys)) => {
                for (c, (x, y)) in cs.iter().zip(xs.iter().zip(ys)) {
                    c.log_into(x, y, out);
                }
            }
            _ => unreachable!("checked by log_map"),
        }
    }

    pub fn exp_map(&self, v: &TangentVector) -> Result<Point> {
        if !self.has_tangent_maps() {
            return Err(Error::Unsupported("exp map on a metric tree"));
        }
        self.check(&v.base)?;
        if Some(v.coords.len()) != self.tangent_dim() {
            return Err(Error::SpaceMismatch(format!(
                "tangent vector has {} coordinates, expected {:?}",
                v.coords.len(),
                self.tangent_dim()
            )));
        }
        Ok(self.exp_from(&v.base, &v.coords))
    }

    fn exp_from(&self, base: &Point, coords: &[f64]) -> Point {
        match (self, base) {
            (Space::Euclidean { .. }, Point::Euclidean(x)) => {
                Point::Euclidean(x.iter().zip(coords).map(|(a, v)| a + v).collect())
            }
            (Space::Hyperboloid { .. }, Point::Hyperboloid(x)) => {
                Point::Hyperboloid(hyperboloid::exp(x, coords))
            }
            (Space::Product(cs), Point::Product(xs)) => {
                let mut offset = 0;
                let mut parts = Vec::with_capacity(cs.len());
                for (c, x) in cs.iter().zip(xs) {
                    let k = c.tangent_dim().expect("checked by exp_map");
                    parts.push(c.exp_from(x, &coords[offset..offset + k]));
                    offset += k;
                }
                Point::Product(parts)
            }
            _ => unreachable!("checked by exp_map"),
        }
    }

    /// Riemannian norm of a tangent coordinate vector.
    pub fn tangent_norm(&self, coords: &[f64]) -> f64 {
        self.tangent_norm_sq(coords).sqrt()
    }

    fn tangent_norm_sq(&self, coords: &[f64]) -> f64 {
        match self {
            Space::Euclidean { .. } => coords.iter().map(|v| v * v).sum(),
            Space::Hyperboloid { .. } => hyperboloid::minkowski_dot(coords, coords).max(0.0),
            Space::Product(cs) => {
                let mut offset = 0;
                let mut total = 0.0;
                for c in cs {
                    let k = c.tangent_dim().unwrap_or(0);
                    total += c.tangent_norm_sq(&coords[offset..offset + k]);
                    offset += k;
                }
                total
            }
            Space::Tree(_) => f64::NAN,
        }
    }

    /// Positive part of the CAT(0) midpoint inequality:
    /// `d(x,y)^2/2 + d(x,z)^2/2 - d(y,z)^2/4 - d(x,m)^2` with `m` the midpoint of `y` and `z`.
    pub fn cat0_midpoint_defect(&self, x: &Point, y: &Point, z: &Point) -> Result<f64> {
        for p in [x, y, z] {
            self.check(p)?;
        }
        let m = self.midpoint(y, z);
        let sq = |a: &Point, b: &Point| {
            let d = self.dist(a, b);
            d * d
        };
        Ok(0.5 * sq(x, y) + 0.5 * sq(x, z) - 0.25 * sq(y, z) - sq(x, &m))
    }

    /// Sum of the four cyclic side squares minus the two diagonal squares.
    pub fn reshetnyak_defect(&self, x1: &Point, x2: &Point, x3: &Point, x4: &Point) -> Result<f64> {
        for p in [x1, x2, x3, x4] {
            self.check(p)?;
        }
        let sq = |a: &Point, b: &Point| {
            let d = self.dist(a, b);
            d * d
        };
        let sides = sq(x1, x2) + sq(x2, x3) + sq(x3, x4) + sq(x4, x1);
        let diagonals = sq(x1, x3) + sq(x2, x4);
        Ok(sides - diagonals)
    }

    /// Canonical tree point helper, `edge` given by its id.
    pub fn tree_point(&self, edge: &str, offset: f64) -> Result<Point> {
        let t = self
            .as_tree()
            .ok_or_else(|| Error::SpaceMismatch("tree point requested on a non-tree space".into()))?;
        let e = t
            .edge_index(edge)
            .ok_or_else(|| Error::Invalid(format!("unknown edge id {edge:?}")))?;
        Ok(Point::Tree(t.point(e, offset)?))
    }
}

impl Point {
    pub fn as_euclidean(&self) -> Option<&[f64]> {
        match self {
            Point::Euclidean(x) => Some(x),
            _ => None,
        }
    }

    pub fn as_tree(&self) -> Option<&TreePoint> {
        match self {
            Point::Tree(p) => Some(p),
            _ => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tp(s: &Space, e: &str, r: f64) -> Point {
        s.tree_point(e, r).unwrap()
    }

    #[test]
    fn euclidean_distance_and_geodesic() {
        let s = Space::euclidean(2).unwrap();
        let p = Point::Euclidean(vec![0.0, 0.0]);
        let q = Point::Euclidean(vec![3.0, 4.0]);
        assert_eq!(s.distance(&p, &q).unwrap(), 5.0);
        let r = Point::Euclidean(vec![2.0, 0.0]);
        assert_eq!(s.geodesic_point(&p, &r, 0.25).unwrap(), Point::Euclidean(vec![0.5, 0.0]));
        assert_eq!(s.geodesic_point(&p, &q, 0.0).unwrap(), p);
        assert_eq!(s.geodesic_point(&p, &q, 1.0).unwrap(), q);
    }

    #[test]
    fn geodesic_rejects_bad_parameter() {
        let s = Space::euclidean(1).unwrap();
        let p = Point::Euclidean(vec![0.0]);
        assert!(matches!(s.geodesic_point(&p, &p, 1.5), Err(Error::Domain(_))));
        assert!(matches!(s.geodesic_point(&p, &p, -0.1), Err(Error::Domain(_))));
    }

    #[test]
    fn mismatched_tags_are_rejected() {
        let s = Space::euclidean(2).unwrap();
        let t = Space::tripod();
        let p = Point::Euclidean(vec![0.0, 0.0]);
        let q = t.base_point();
        assert!(matches!(s.distance(&p, &q), Err(Error::SpaceMismatch(_))));
        assert!(matches!(t.distance(&q, &p), Err(Error::SpaceMismatch(_))));
        let wrong_dim = Point::Euclidean(vec![0.0]);
        assert!(s.distance(&p, &wrong_dim).is_err());
    }

    #[test]
    fn tripod_geodesic_to_leg_midpoint() {
        let s = Space::tripod();
        let o = s.base_point();
        let q = tp(&s, "3", 1.0);
        assert_eq!(s.geodesic_point(&o, &q, 0.5).unwrap(), tp(&s, "3", 0.5));
        assert_eq!(s.distance(&o, &tp(&s, "3", 0.5)).unwrap(), 0.5);
    }

    #[test]
    fn tripod_midpoint_defect() {
        let s = Space::tripod();
        let (x, y, z) = (tp(&s, "1", 1.0), tp(&s, "2", 1.0), tp(&s, "3", 1.0));
        // midpoint of y, z is the origin; 2 + 2 - 1 - 1
        assert!((s.cat0_midpoint_defect(&x, &y, &z).unwrap() - 2.0).abs() < 1e-15);
        assert_eq!(s.cat0_midpoint_defect(&x, &y, &y).unwrap(), 0.0);
    }

    #[test]
    fn tripod_reshetnyak_defect() {
        let s = Space::tripod();
        let (a, b, c) = (tp(&s, "1", 1.0), tp(&s, "2", 1.0), tp(&s, "3", 1.0));
        let o = s.base_point();
        assert!((s.reshetnyak_defect(&a, &b, &c, &o).unwrap() - 5.0).abs() < 1e-15);
        assert_eq!(s.reshetnyak_defect(&a, &a, &a, &a).unwrap(), 0.0);
    }

    #[test]
    fn unit_square_is_reshetnyak_tight() {
        let s = Space::euclidean(2).unwrap();
        let pts: Vec<Point> = [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]]
            .iter()
            .map(|c| Point::Euclidean(c.to_vec()))
            .collect();
        let d = s.reshetnyak_defect(&pts[0], &pts[1], &pts[2], &pts[3]).unwrap();
        assert!(d.abs() < 1e-12);
        assert!(s.cat0_midpoint_defect(&pts[0], &pts[1], &pts[2]).unwrap().abs() < 1e-12);
    }

    #[test]
    fn tangent_maps_unsupported_on_trees() {
        let s = Space::tripod();
        let o = s.base_point();
        assert!(matches!(s.log_map(&o, &o), Err(Error::Unsupported(_))));
        let v = TangentVector { base: o, coords: vec![] };
        assert!(matches!(s.exp_map(&v), Err(Error::Unsupported(_))));
    }

    #[test]
    fn log_at_base_is_zero_and_flat_log_is_difference() {
        let s = Space::euclidean(3).unwrap();
        let b = Point::Euclidean(vec![1.0, 2.0, 3.0]);
        let t = Point::Euclidean(vec![0.0, 2.5, -1.0]);
        assert_eq!(s.log_map(&b, &b).unwrap().coords, vec![0.0; 3]);
        assert_eq!(s.log_map(&b, &t).unwrap().coords, vec![-1.0, 0.5, -4.0]);
        let h = Space::hyperboloid(2).unwrap();
        let x = Point::Hyperboloid(hyperboloid::lift(&[0.2, 0.9]));
        assert!(h.tangent_norm(&h.log_map(&x, &x).unwrap().coords) == 0.0);
    }

    #[test]
    fn product_distance_is_l2_of_components() {
        let s = Space::product(vec![Space::euclidean(1).unwrap(), Space::tripod()]).unwrap();
        let t = Space::tripod();
        let p = Point::Product(vec![Point::Euclidean(vec![0.0]), tp(&t, "1", 1.0)]);
        let q = Point::Product(vec![Point::Euclidean(vec![3.0]), tp(&t, "2", 1.0)]);
        assert!((s.distance(&p, &q).unwrap() - 13f64.sqrt()).abs() < 1e-15);
        assert!(!s.has_tangent_maps());
        assert!(Space::product(vec![Space::tripod()]).is_err());
    }
}
