//! Finite probability measures, finite mm-spaces and map tables.

use crate::error::{Error, Result};
use crate::spaces::{Point, Space};

/// Atoms closer than this are merged into one.
pub const MERGE_TOL: f64 = 1e-12;
const MASS_TOL: f64 = 1e-12;

/// Finitely supported probability measure on a [`Space`].
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteMeasure {
    space: Space,
    atoms: Vec<Point>,
    weights: Vec<f64>,
}

impl DiscreteMeasure {
    /// Validates weights (positive, summing to one) and merges coincident atoms.
    pub fn new(space: Space, atoms: Vec<Point>, weights: Vec<f64>) -> Result<Self> {
        if atoms.is_empty() || atoms.len() != weights.len() {
            return Err(Error::Invalid(format!(
                "measure needs matching non-empty atoms/weights, got {} and {}",
                atoms.len(),
                weights.len()
            )));
        }
        if let Some(w) = weights.iter().find(|w| !(w.is_finite() && **w > 0.0)) {
            return Err(Error::Invalid(format!("non-positive weight {w}")));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > MASS_TOL {
            return Err(Error::Invalid(format!("weights sum to {total}, not 1")));
        }
        for a in &atoms {
            space.check(a)?;
        }
        let mut merged_atoms: Vec<Point> = Vec::with_capacity(atoms.len());
        let mut merged_weights: Vec<f64> = Vec::with_capacity(atoms.len());
        for (a, w) in atoms.into_iter().zip(weights) {
            match merged_atoms.iter().position(|b| space.dist(&a, b) < MERGE_TOL) {
                Some(k) => merged_weights[k] += w,
                None => {
                    merged_atoms.push(a);
                    merged_weights.push(w);
                }
            }
        }
        Ok(Self { space, atoms: merged_atoms, weights: merged_weights })
    }

    /// Like [`DiscreteMeasure::new`] but rescales positive weights to unit mass.
    pub fn normalized(space: Space, atoms: Vec<Point>, weights: Vec<f64>) -> Result<Self> {
        let total: f64 = weights.iter().sum();
        if !(total.is_finite() && total > 0.0) {
            return Err(Error::Invalid(format!("total weight {total} is not positive")));
        }
        Self::new(space, atoms, weights.into_iter().map(|w| w / total).collect())
    }

    pub fn uniform(space: Space, atoms: Vec<Point>) -> Result<Self> {
        let n = atoms.len();
        Self::new(space, atoms, vec![1.0 / n as f64; n])
    }

    pub fn dirac(space: Space, atom: Point) -> Result<Self> {
        Self::new(space, vec![atom], vec![1.0])
    }

    pub fn space(&self) -> &Space {
        &self.space
    }

    pub fn atoms(&self) -> &[Point] {
        &self.atoms
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Point, f64)> {
        self.atoms.iter().zip(self.weights.iter().copied())
    }

    /// `sum_i w_i d(base, atom_i)^p`.
    pub fn moment(&self, p: f64, base: &Point) -> Result<f64> {
        if !(p >= 1.0) {
            return Err(Error::Domain(format!("moment order {p} < 1")));
        }
        self.space.check(base)?;
        Ok(self.iter().map(|(a, w)| w * self.space.dist(base, a).powf(p)).sum())
    }

    /// Frechet function `F(x) = sum_i w_i d(x, atom_i)^2`.
    pub fn frechet(&self, x: &Point) -> f64 {
        self.iter()
            .map(|(a, w)| {
                let d = self.space.dist(x, a);
                w * d * d
            })
            .sum()
    }

    /// Image of the measure under the `k`-th coordinate projection of a product space.
    pub fn project(&self, k: usize) -> Result<DiscreteMeasure> {
        let Space::Product(cs) = &self.space else {
            return Err(Error::SpaceMismatch("projection of a non-product measure".into()));
        };
        let comp = cs
            .get(k)
            .ok_or_else(|| Error::Domain(format!("no product component {k}")))?
            .clone();
        let atoms = self
            .atoms
            .iter()
            .map(|a| match a {
                Point::Product(ps) => ps[k].clone(),
                _ => unreachable!("validated product atom"),
            })
            .collect();
        DiscreteMeasure::new(comp, atoms, self.weights.clone())
    }
}

/// Finite metric measure space with full-support probability.
#[derive(Debug, Clone, PartialEq)]
pub struct MMSpace {
    labels: Vec<String>,
    metric: Vec<f64>,
    prob: Vec<f64>,
}

impl MMSpace {
    /// Validates the metric axioms (every ordered triple) and the probability vector.
    pub fn new(labels: Vec<String>, metric: Vec<Vec<f64>>, prob: Vec<f64>) -> Result<Self> {
        let n = labels.len();
        if n == 0 {
            return Err(Error::Invalid("mm-space needs at least one point".into()));
        }
        if metric.len() != n || metric.iter().any(|r| r.len() != n) || prob.len() != n {
            return Err(Error::Invalid(format!("mm-space of size {n} has mis-shaped metric or prob")));
        }
        for i in 0..n {
            if metric[i][i] != 0.0 {
                return Err(Error::Invalid(format!("metric diagonal at {i} is not zero")));
            }
            for j in 0..n {
                let d = metric[i][j];
                if !d.is_finite() || d < 0.0 {
                    return Err(Error::Invalid(format!("metric entry ({i},{j}) = {d} is invalid")));
                }
                if d != metric[j][i] {
                    return Err(Error::Invalid(format!("metric is not symmetric at ({i},{j})")));
                }
                if i != j && d == 0.0 {
                    return Err(Error::Invalid(format!("distinct points {i} and {j} at distance 0")));
                }
            }
        }
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    if metric[i][k] > metric[i][j] + metric[j][k] + 1e-12 {
                        return Err(Error::Invalid(format!(
                            "triangle inequality fails for ({i},{j},{k}): {} > {} + {}",
                            metric[i][k], metric[i][j], metric[j][k]
                        )));
                    }
                }
            }
        }
        if let Some(p) = prob.iter().find(|p| !(p.is_finite() && **p > 0.0)) {
            return Err(Error::Invalid(format!("probability {p} is not positive (full support required)")));
        }
        let total: f64 = prob.iter().sum();
        if (total - 1.0).abs() > MASS_TOL {
            return Err(Error::Invalid(format!("probabilities sum to {total}, not 1")));
        }
        Ok(Self { labels, metric: metric.concat(), prob })
    }

    /// Uniform measure on `n` points at mutual distance `d`.
    pub fn discrete(n: usize, d: f64) -> Result<Self> {
        let labels = (0..n).map(|i| format!("p{i}")).collect();
        let metric = (0..n)
            .map(|i| (0..n).map(|j| if i == j { 0.0 } else { d }).collect())
            .collect();
        Self::new(labels, metric, vec![1.0 / n as f64; n])
    }

    /// Points on the real line with the given probabilities.
    pub fn line(coords: &[f64], prob: Vec<f64>) -> Result<Self> {
        let labels = (0..coords.len()).map(|i| format!("p{i}")).collect();
        let metric = coords
            .iter()
            .map(|a| coords.iter().map(|b| (a - b).abs()).collect())
            .collect();
        Self::new(labels, metric, prob)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn prob(&self) -> &[f64] {
        &self.prob
    }

    pub fn dist(&self, i: usize, j: usize) -> f64 {
        self.metric[i * self.labels.len() + j]
    }

    pub fn diameter(&self) -> f64 {
        self.metric.iter().copied().fold(0.0, f64::max)
    }

    pub fn metric_rows(&self) -> Vec<Vec<f64>> {
        self.metric.chunks(self.len()).map(<[f64]>::to_vec).collect()
    }
}

/// `X x Y` with the l2 product metric and the product measure. Sample
/// `(i, j)` has flat index `i * |Y| + j`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProductMMSpace {
    pub x: MMSpace,
    pub y: MMSpace,
}

pub fn product_mm(x: MMSpace, y: MMSpace) -> ProductMMSpace {
    ProductMMSpace { x, y }
}

impl ProductMMSpace {
    pub fn len(&self) -> usize {
        self.x.len() * self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        i * self.y.len() + j
    }

    pub fn split(&self, k: usize) -> (usize, usize) {
        (k / self.y.len(), k % self.y.len())
    }

    pub fn prob(&self, k: usize) -> f64 {
        let (i, j) = self.split(k);
        self.x.prob()[i] * self.y.prob()[j]
    }

    pub fn dist(&self, k: usize, l: usize) -> f64 {
        let (i, j) = self.split(k);
        let (a, b) = self.split(l);
        self.x.dist(i, a).hypot(self.y.dist(j, b))
    }

    /// Materializes the product as a plain [`MMSpace`].
    pub fn to_mm(&self) -> MMSpace {
        let n = self.len();
        let labels = (0..n)
            .map(|k| {
                let (i, j) = self.split(k);
                format!("({},{})", self.x.labels()[i], self.y.labels()[j])
            })
            .collect();
        let metric = (0..n).flat_map(|k| (0..n).map(move |l| (k, l))).map(|(k, l)| self.dist(k, l)).collect();
        let prob = (0..n).map(|k| self.prob(k)).collect();
        MMSpace { labels, metric, prob }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Domain {
    Single(MMSpace),
    Product(ProductMMSpace),
}

impl Domain {
    pub fn len(&self) -> usize {
        match self {
            Domain::Single(m) => m.len(),
            Domain::Product(p) => p.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn prob(&self, k: usize) -> f64 {
        match self {
            Domain::Single(m) => m.prob()[k],
            Domain::Product(p) => p.prob(k),
        }
    }

    pub fn dist(&self, k: usize, l: usize) -> f64 {
        match self {
            Domain::Single(m) => m.dist(k, l),
            Domain::Product(p) => p.dist(k, l),
        }
    }

    pub fn as_product(&self) -> Option<&ProductMMSpace> {
        match self {
            Domain::Product(p) => Some(p),
            Domain::Single(_) => None,
        }
    }
}

/// A total map from the samples of a finite domain into a target space.
#[derive(Debug, Clone, PartialEq)]
pub struct MapTable {
    domain: Domain,
    target: Space,
    values: Vec<Point>,
}

impl MapTable {
    pub fn new(domain: Domain, target: Space, values: Vec<Point>) -> Result<Self> {
        if values.len() != domain.len() {
            return Err(Error::Invalid(format!(
                "map has {} values for {} domain samples",
                values.len(),
                domain.len()
            )));
        }
        for v in &values {
            target.check(v)?;
        }
        Ok(Self { domain, target, values })
    }

    pub fn on_product(x: MMSpace, y: MMSpace, target: Space, values: Vec<Point>) -> Result<Self> {
        Self::new(Domain::Product(product_mm(x, y)), target, values)
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn target(&self) -> &Space {
        &self.target
    }

    pub fn values(&self) -> &[Point] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub(crate) fn with_values(&self, values: Vec<Point>) -> Self {
        Self { domain: self.domain.clone(), target: self.target.clone(), values }
    }

    pub fn product(&self) -> Result<&ProductMMSpace> {
        self.domain
            .as_product()
            .ok_or_else(|| Error::Invalid("map is not defined on a product mm-space".into()))
    }

    /// Value at `(x_i, y_j)` of a map on a product.
    pub fn at(&self, i: usize, j: usize) -> &Point {
        let p = self.domain.as_product().expect("map on a product");
        &self.values[p.index(i, j)]
    }

    /// `f^y = f(., y_j)` as a map on `X`.
    pub fn slice_y(&self, j: usize) -> Result<MapTable> {
        let p = self.product()?;
        let values = (0..p.x.len()).map(|i| self.at(i, j).clone()).collect();
        MapTable::new(Domain::Single(p.x.clone()), self.target.clone(), values)
    }

    /// `f^x = f(x_i, .)` as a map on `Y`.
    pub fn slice_x(&self, i: usize) -> Result<MapTable> {
        let p = self.product()?;
        let values = (0..p.y.len()).map(|j| self.at(i, j).clone()).collect();
        MapTable::new(Domain::Single(p.y.clone()), self.target.clone(), values)
    }

    /// Pushforward of the domain probability along the map.
    pub fn pushforward(&self) -> DiscreteMeasure {
        let weights = (0..self.len()).map(|k| self.domain.prob(k)).collect();
        DiscreteMeasure::new(self.target.clone(), self.values.clone(), weights)
            .expect("domain probability pushes forward to a probability measure")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn example_one() -> MapTable {
        let t = Space::tripod();
        let ab = MMSpace::discrete(2, 1.0).unwrap();
        let leg = |e: &str| t.tree_point(e, 1.0).unwrap();
        // index i*2 + j for (x_i, y_j): (a,a), (a,b), (b,a), (b,b)
        MapTable::on_product(ab.clone(), ab, t.clone(), vec![leg("1"), leg("3"), leg("2"), leg("3")]).unwrap()
    }

    #[test]
    fn product_of_uniform_pairs() {
        let ab = MMSpace::discrete(2, 1.0).unwrap();
        let p = product_mm(ab.clone(), ab);
        assert_eq!(p.len(), 4);
        assert!((0..4).all(|k| p.prob(k) == 0.25));
        assert_eq!(p.dist(p.index(0, 0), p.index(1, 1)), 2f64.sqrt());
    }

    #[test]
    fn product_weights_multiply() {
        let x = MMSpace::line(&[0.0, 1.0], vec![1.0 / 3.0, 2.0 / 3.0]).unwrap();
        let y = MMSpace::line(&[0.0, 1.0], vec![0.5, 0.5]).unwrap();
        let p = product_mm(x, y);
        let w: Vec<f64> = (0..4).map(|k| p.prob(k)).collect();
        let expected = [1.0 / 6.0, 1.0 / 6.0, 1.0 / 3.0, 1.0 / 3.0];
        assert!(w.iter().zip(expected).all(|(a, b)| (a - b).abs() < 1e-15));
        assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn singleton_factor_is_isometric() {
        let one = MMSpace::discrete(1, 1.0).unwrap();
        let y = MMSpace::line(&[0.0, 0.5, 2.0], vec![0.2, 0.3, 0.5]).unwrap();
        let p = product_mm(one, y.clone());
        for k in 0..3 {
            assert_eq!(p.prob(k), y.prob()[k]);
            for l in 0..3 {
                assert_eq!(p.dist(k, l), y.dist(k, l));
            }
        }
    }

    #[test]
    fn example_one_pushforward() {
        let f = example_one();
        let mu = f.pushforward();
        assert_eq!(mu.len(), 3);
        let t = f.target().clone();
        let weight_of = |e: &str| {
            let p = t.tree_point(e, 1.0).unwrap();
            mu.iter().find(|(a, _)| **a == p).unwrap().1
        };
        assert_eq!(weight_of("1"), 0.25);
        assert_eq!(weight_of("2"), 0.25);
        assert_eq!(weight_of("3"), 0.5);
        assert!((mu.moment(1.0, &t.base_point()).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn constant_and_injective_pushforwards() {
        let s = Space::euclidean(1).unwrap();
        let x = MMSpace::line(&[0.0, 1.0, 3.0], vec![0.5, 0.25, 0.25]).unwrap();
        let c = Point::Euclidean(vec![7.0]);
        let f = MapTable::new(Domain::Single(x.clone()), s.clone(), vec![c.clone(); 3]).unwrap();
        let mu = f.pushforward();
        assert_eq!(mu.atoms(), std::slice::from_ref(&c));
        assert_eq!(mu.weights(), &[1.0]);
        let vals: Vec<Point> = [1.0, 2.0, 3.0].iter().map(|v| Point::Euclidean(vec![*v])).collect();
        let g = MapTable::new(Domain::Single(x.clone()), s.clone(), vals).unwrap();
        assert_eq!(g.pushforward().weights(), x.prob());
        let base = Point::Euclidean(vec![1.0]);
        assert_eq!(mu.moment(1.0, &c).unwrap(), 0.0);
        let two = DiscreteMeasure::uniform(s, vec![Point::Euclidean(vec![0.0]), Point::Euclidean(vec![2.0])]).unwrap();
        assert_eq!(two.moment(2.0, &base).unwrap(), 1.0);
    }

    #[test]
    fn corrupted_metric_is_rejected() {
        let labels = vec!["a".into(), "b".into(), "c".into()];
        let bad = vec![vec![0.0, 1.0, 3.0], vec![1.0, 0.0, 1.0], vec![3.0, 1.0, 0.0]];
        assert!(MMSpace::new(labels.clone(), bad, vec![1.0 / 3.0; 3]).is_err());
        let asym = vec![vec![0.0, 1.0, 1.0], vec![1.5, 0.0, 1.0], vec![1.0, 1.0, 0.0]];
        assert!(MMSpace::new(labels.clone(), asym, vec![1.0 / 3.0; 3]).is_err());
        let ok = vec![vec![0.0, 1.0, 1.0], vec![1.0, 0.0, 1.0], vec![1.0, 1.0, 0.0]];
        assert!(MMSpace::new(labels.clone(), ok.clone(), vec![0.5, 0.5, 0.0]).is_err());
        assert!(MMSpace::new(labels, ok, vec![0.5, 0.25, 0.25]).is_ok());
    }

    #[test]
    fn measures_merge_duplicates_and_reject_bad_weights() {
        let s = Space::tripod();
        let o = s.base_point();
        let o2 = s.tree_point("2", 0.0).unwrap();
        let mu = DiscreteMeasure::new(s.clone(), vec![o.clone(), o2], vec![0.5, 0.5]).unwrap();
        assert_eq!(mu.len(), 1);
        assert!(DiscreteMeasure::new(s.clone(), vec![o.clone()], vec![0.9]).is_err());
        assert!(DiscreteMeasure::new(s.clone(), vec![o.clone(), o], vec![1.0, 0.0]).is_err());
    }

    #[test]
    fn slices_of_example_one() {
        let f = example_one();
        let fa = f.slice_y(0).unwrap();
        let t = f.target().clone();
        assert_eq!(fa.values(), &[t.tree_point("1", 1.0).unwrap(), t.tree_point("2", 1.0).unwrap()]);
        let fxb = f.slice_x(1).unwrap();
        assert_eq!(fxb.values(), &[t.tree_point("2", 1.0).unwrap(), t.tree_point("3", 1.0).unwrap()]);
    }
}
