//! Exact Wasserstein-1 distance between discrete measures.
//!
//! The transportation problem is solved as a min-cost flow with integer
//! supplies: weights are scaled by a power of two (exactly, when every weight
//! is dyadic with denominator at most 2^40, otherwise by 2^40 with rounding)
//! and shipped along successive shortest paths. The optimal plan comes with a
//! Kantorovich potential recovered from the plan alone, so the primal value
//! can be certified independently of the solver.

use crate::barycenter::barycenter;
use crate::error::{Error, Result};
use crate::measures::{DiscreteMeasure, MERGE_TOL};
use crate::spaces::{Point, Space};

const SCALE_BITS: i32 = 40;
const RELAX_TOL: f64 = 1e-12;

/// Transport plan between `mu` (rows) and `nu` (columns).
#[derive(Debug, Clone, PartialEq)]
pub struct Coupling {
    pub mu: DiscreteMeasure,
    pub nu: DiscreteMeasure,
    pub plan: Vec<Vec<f64>>,
}

impl Coupling {
    /// Largest deviation of the row and column sums from the marginals.
    pub fn marginal_error(&self) -> f64 {
        let rows = self
            .plan
            .iter()
            .zip(self.mu.weights())
            .map(|(r, w)| (r.iter().sum::<f64>() - w).abs());
        let cols = self.nu.weights().iter().enumerate().map(|(j, w)| {
            (self.plan.iter().map(|r| r[j]).sum::<f64>() - w).abs()
        });
        rows.chain(cols).fold(0.0, f64::max)
    }

    pub fn cost(&self) -> f64 {
        let space = self.mu.space();
        let mut total = 0.0;
        for (i, a) in self.mu.atoms().iter().enumerate() {
            for (j, b) in self.nu.atoms().iter().enumerate() {
                if self.plan[i][j] > 0.0 {
                    total += self.plan[i][j] * space.dist(a, b);
                }
            }
        }
        total
    }
}

/// Potential on the joint support of two measures.
#[derive(Debug, Clone, PartialEq)]
pub struct DualPotential {
    pub points: Vec<Point>,
    pub values: Vec<f64>,
}

impl DualPotential {
    fn at(&self, space: &Space, p: &Point) -> f64 {
        let k = self
            .points
            .iter()
            .position(|q| space.dist(p, q) < MERGE_TOL)
            .expect("point in the joint support");
        self.values[k]
    }

    /// `sum psi dmu - sum psi dnu`.
    pub fn dual_value(&self, mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> f64 {
        let space = mu.space();
        let a: f64 = mu.iter().map(|(p, w)| w * self.at(space, p)).sum();
        let b: f64 = nu.iter().map(|(p, w)| w * self.at(space, p)).sum();
        a - b
    }

    /// Largest `|psi(u) - psi(v)| - d(u, v)` over support pairs.
    pub fn lipschitz_excess(&self, space: &Space) -> f64 {
        let mut worst = f64::NEG_INFINITY;
        for (i, p) in self.points.iter().enumerate() {
            for (j, q) in self.points.iter().enumerate().skip(i) {
                let gap = (self.values[i] - self.values[j]).abs() - space.dist(p, q);
                worst = worst.max(gap);
            }
        }
        worst
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Transport {
    pub value: f64,
    pub coupling: Coupling,
    /// Bound on the change of the optimal value caused by rounding the
    /// weights to the integer grid (zero for dyadic weights).
    pub rounding_bound: f64,
}

fn check_same_space(mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> Result<()> {
    if mu.space() != nu.space() {
        return Err(Error::SpaceMismatch(format!(
            "measures live on different spaces ({} vs {})",
            mu.space().kind(),
            nu.space().kind()
        )));
    }
    Ok(())
}

fn same_measure(mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> bool {
    let space = mu.space();
    mu.len() == nu.len()
        && mu.iter().all(|(a, w)| {
            nu.iter().any(|(b, v)| space.dist(a, b) < MERGE_TOL && (w - v).abs() <= 1e-15)
        })
}

const MAX_DENOMINATOR: u32 = 5040;

/// Scales both weight vectors onto a common integer grid with equal totals.
fn integer_supplies(mu: &[f64], nu: &[f64]) -> (Vec<i64>, Vec<i64>, f64, f64) {
    let dyadic_bits = (0..=SCALE_BITS).find(|&k| {
        let s = 2f64.powi(k);
        mu.iter().chain(nu).all(|w| (w * s).fract() == 0.0)
    });
    // weights such as 1/3 or 1/7 are exact on the grid of their common
    // denominator, which keeps equal-weight problems free of rounding
    let rational = || {
        (1..=MAX_DENOMINATOR).find(|&q| {
            let q = q as f64;
            let on_grid = |ws: &[f64]| {
                ws.iter().all(|w| ((w * q).round() - w * q).abs() <= 1e-9)
                    && ws.iter().map(|w| (w * q).round()).sum::<f64>() == q
            };
            on_grid(mu) && on_grid(nu)
        })
    };
    let scale = match dyadic_bits {
        Some(k) => 2f64.powi(k),
        None => rational().map_or(2f64.powi(SCALE_BITS), |q| q as f64),
    };
    let round = |ws: &[f64]| ws.iter().map(|w| ((w * scale).round() as i64).max(1)).collect::<Vec<_>>();
    let (mut a, mut b) = (round(mu), round(nu));
    let (sa, sb): (i64, i64) = (a.iter().sum(), b.iter().sum());
    // balance on the largest entry of the lighter side
    let (side, diff) = if sa < sb { (&mut a, sb - sa) } else { (&mut b, sa - sb) };
    if diff > 0 {
        let k = (0..side.len()).max_by_key(|&k| side[k]).unwrap();
        side[k] += diff;
    }
    let err: f64 = a
        .iter()
        .zip(mu)
        .chain(b.iter().zip(nu))
        .map(|(q, w)| (*q as f64 / scale - w).abs())
        .sum();
    (a, b, scale, err)
}

/// Exact W1 distance with an optimal coupling.
pub fn w1(mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> Result<Transport> {
    check_same_space(mu, nu)?;
    let space = mu.space();
    let (n, m) = (mu.len(), nu.len());

    if same_measure(mu, nu) {
        let mut plan = vec![vec![0.0; m]; n];
        for (i, a) in mu.atoms().iter().enumerate() {
            let j = nu.atoms().iter().position(|b| space.dist(a, b) < MERGE_TOL).unwrap();
            plan[i][j] = mu.weights()[i];
        }
        let coupling = Coupling { mu: mu.clone(), nu: nu.clone(), plan };
        return Ok(Transport { value: 0.0, coupling, rounding_bound: 0.0 });
    }

    let cost: Vec<Vec<f64>> = mu
        .atoms()
        .iter()
        .map(|a| nu.atoms().iter().map(|b| space.dist(a, b)).collect())
        .collect();
    let (mut supply, mut demand, scale, rounding) = integer_supplies(mu.weights(), nu.weights());
    let flow = successive_shortest_paths(&cost, &mut supply, &mut demand);

    let plan: Vec<Vec<f64>> = flow
        .iter()
        .map(|r| r.iter().map(|&f| f as f64 / scale).collect())
        .collect();
    let coupling = Coupling { mu: mu.clone(), nu: nu.clone(), plan };
    let value = coupling.cost();
    let max_cost = cost.iter().flatten().copied().fold(0.0, f64::max);
    Ok(Transport { value, coupling, rounding_bound: rounding * max_cost })
}

/// Min-cost transportation by successive shortest paths. Node `i < n` is a
/// row, node `n + j` a column. Returns the integer flow matrix.
fn successive_shortest_paths(cost: &[Vec<f64>], supply: &mut [i64], demand: &mut [i64]) -> Vec<Vec<i64>> {
    let (n, m) = (supply.len(), demand.len());
    let mut flow = vec![vec![0i64; m]; n];
    let nodes = n + m;
    loop {
        if supply.iter().all(|&s| s == 0) {
            return flow;
        }
        // multi-source Bellman-Ford over the residual graph
        let mut dist = vec![f64::INFINITY; nodes];
        let mut pred = vec![usize::MAX; nodes];
        for i in 0..n {
            if supply[i] > 0 {
                dist[i] = 0.0;
            }
        }
        for _ in 0..nodes {
            let mut changed = false;
            for i in 0..n {
                if dist[i].is_finite() {
                    for j in 0..m {
                        let cand = dist[i] + cost[i][j];
                        if cand < dist[n + j] - RELAX_TOL {
                            dist[n + j] = cand;
                            pred[n + j] = i;
                            changed = true;
                        }
                    }
                }
            }
            for j in 0..m {
                if dist[n + j].is_finite() {
                    for i in 0..n {
                        if flow[i][j] > 0 {
                            let cand = dist[n + j] - cost[i][j];
                            if cand < dist[i] - RELAX_TOL {
                                dist[i] = cand;
                                pred[i] = n + j;
                                changed = true;
                            }
                        }
                    }
                }
            }
            if !changed {
                break;
            }
        }
        let sink = (0..m)
            .filter(|&j| demand[j] > 0 && dist[n + j].is_finite())
            .min_by(|&a, &b| dist[n + a].total_cmp(&dist[n + b]))
            .expect("balanced supplies always leave a reachable demand");

        // walk back to a source, collecting the bottleneck
        let mut bottleneck = demand[sink];
        let mut v = n + sink;
        let source = loop {
            let u = pred[v];
            if u == usize::MAX {
                break v;
            }
            if v < n {
                // row reached by a backward arc from column u
                bottleneck = bottleneck.min(flow[v][u - n]);
            }
            v = u;
        };
        bottleneck = bottleneck.min(supply[source]);

        let mut v = n + sink;
        while v != source {
            let u = pred[v];
            if v >= n {
                flow[u][v - n] += bottleneck;
            } else {
                flow[v][u - n] -= bottleneck;
            }
            v = u;
        }
        supply[source] -= bottleneck;
        demand[sink] -= bottleneck;
    }
}

/// Kantorovich potential certifying the optimality of `coupling`.
///
/// Potentials are shortest-path distances in the residual graph of the plan,
/// which exist exactly when the plan has no negative cycle. They are then
/// replaced by their c-transform `psi(z) = min_j d(z, y_j) + psi(y_j)`, which
/// is 1-Lipschitz on the whole space.
pub fn dual_certificate(
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    coupling: &Coupling,
) -> Result<DualPotential> {
    check_same_space(mu, nu)?;
    let space = mu.space();
    let (n, m) = (mu.len(), nu.len());
    if coupling.plan.len() != n || coupling.plan.iter().any(|r| r.len() != m) {
        return Err(Error::Invalid("plan shape does not match the measures".into()));
    }
    let cost: Vec<Vec<f64>> = mu
        .atoms()
        .iter()
        .map(|a| nu.atoms().iter().map(|b| space.dist(a, b)).collect())
        .collect();
    let nodes = n + m;
    let mut pot = vec![0.0; nodes];
    let mut settled = false;
    for _ in 0..=nodes {
        let mut changed = false;
        for i in 0..n {
            for j in 0..m {
                if pot[i] + cost[i][j] < pot[n + j] - RELAX_TOL {
                    pot[n + j] = pot[i] + cost[i][j];
                    changed = true;
                }
                if coupling.plan[i][j] > 0.0 && pot[n + j] - cost[i][j] < pot[i] - RELAX_TOL {
                    pot[i] = pot[n + j] - cost[i][j];
                    changed = true;
                }
            }
        }
        if !changed {
            settled = true;
            break;
        }
    }
    if !settled {
        return Err(Error::CertificateNotFound("plan admits a negative cycle".into()));
    }

    let col_psi: Vec<f64> = (0..m).map(|j| -pot[n + j]).collect();
    let mut points: Vec<Point> = Vec::with_capacity(n + m);
    for p in mu.atoms().iter().chain(nu.atoms()) {
        if !points.iter().any(|q| space.dist(p, q) < MERGE_TOL) {
            points.push(p.clone());
        }
    }
    let values = points
        .iter()
        .map(|z| {
            nu.atoms()
                .iter()
                .zip(&col_psi)
                .map(|(y, v)| space.dist(z, y) + v)
                .fold(f64::INFINITY, f64::min)
        })
        .collect();
    Ok(DualPotential { points, values })
}

/// `W1(mu, nu) - d(c(mu), c(nu))`.
pub fn barycenter_contraction_defect(mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> Result<f64> {
    check_same_space(mu, nu)?;
    let w = w1(mu, nu)?.value;
    let (a, b) = (barycenter(mu)?.point, barycenter(nu)?.point);
    Ok(w - mu.space().dist(&a, &b))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(xs: &[f64]) -> DiscreteMeasure {
        let s = Space::euclidean(1).unwrap();
        DiscreteMeasure::uniform(s, xs.iter().map(|x| Point::Euclidean(vec![*x])).collect()).unwrap()
    }

    #[test]
    fn diracs_and_identical_measures() {
        let s = Space::euclidean(2).unwrap();
        let x = Point::Euclidean(vec![0.0, 0.0]);
        let y = Point::Euclidean(vec![3.0, 4.0]);
        let dx = DiscreteMeasure::dirac(s.clone(), x.clone()).unwrap();
        let dy = DiscreteMeasure::dirac(s.clone(), y.clone()).unwrap();
        let t = w1(&dx, &dy).unwrap();
        assert_eq!(t.value, 5.0);
        assert_eq!(t.coupling.plan, vec![vec![1.0]]);
        let psi = dual_certificate(&dx, &dy, &t.coupling).unwrap();
        assert_eq!(psi.dual_value(&dx, &dy), 5.0);

        let mu = line(&[0.0, 1.0, 5.0]);
        let same = w1(&mu, &mu).unwrap();
        assert_eq!(same.value, 0.0);
        let psi = dual_certificate(&mu, &mu, &same.coupling).unwrap();
        assert!(psi.values.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn shifted_pair_on_the_line() {
        let mu = line(&[0.0, 1.0]);
        let nu = line(&[2.0, 3.0]);
        let t = w1(&mu, &nu).unwrap();
        assert_eq!(t.value, 2.0);
        assert_eq!(t.rounding_bound, 0.0);
        let psi = dual_certificate(&mu, &nu, &t.coupling).unwrap();
        assert!((psi.dual_value(&mu, &nu) - 2.0).abs() < 1e-12);
        assert!(psi.lipschitz_excess(mu.space()) <= 1e-12);
        // psi is -u up to a constant
        let slope = psi.values[1] - psi.values[0];
        assert!((slope + 1.0).abs() < 1e-12);
    }

    #[test]
    fn non_dyadic_weights_round_within_tolerance() {
        let s = Space::euclidean(1).unwrap();
        let pts = |xs: &[f64]| xs.iter().map(|x| Point::Euclidean(vec![*x])).collect::<Vec<_>>();
        let mu = DiscreteMeasure::new(s.clone(), pts(&[0.0, 1.0, 2.0]), vec![1.0 / 3.0; 3]).unwrap();
        let nu = DiscreteMeasure::new(s, pts(&[0.5, 4.0]), vec![0.7, 0.3]).unwrap();
        let t = w1(&mu, &nu).unwrap();
        assert!(t.coupling.marginal_error() < 1e-10);
        // on the line W1 is the integral of |F_mu - F_nu|
        let cdf_gap = [(0.0, 0.5, 1.0 / 3.0), (0.5, 1.0, 1.0 / 3.0 - 0.7), (1.0, 2.0, 2.0 / 3.0 - 0.7), (2.0, 4.0, 1.0 - 0.7)];
        let oracle: f64 = cdf_gap.iter().map(|(a, b, g): &(f64, f64, f64)| (b - a) * g.abs()).sum();
        assert!((t.value - oracle).abs() < 1e-10);
        assert!(t.rounding_bound < 1e-10);
    }

    #[test]
    fn mismatched_spaces_error() {
        let mu = line(&[0.0]);
        let nu = DiscreteMeasure::dirac(Space::tripod(), Space::tripod().base_point()).unwrap();
        assert!(matches!(w1(&mu, &nu), Err(Error::SpaceMismatch(_))));
    }

    #[test]
    fn suboptimal_plan_has_no_certificate() {
        let mu = line(&[0.0, 1.0]);
        let nu = line(&[0.0, 1.0 + 1e-3]);
        let crossed = Coupling { mu: mu.clone(), nu: nu.clone(), plan: vec![vec![0.0, 0.5], vec![0.5, 0.0]] };
        assert!(matches!(dual_certificate(&mu, &nu, &crossed), Err(Error::CertificateNotFound(_))));
    }

    #[test]
    fn tripod_contraction_defect() {
        let s = Space::tripod();
        let leg = |e: &str| s.tree_point(e, 1.0).unwrap();
        let mu = DiscreteMeasure::uniform(s.clone(), vec![leg("1"), leg("2")]).unwrap();
        let nu = DiscreteMeasure::dirac(s.clone(), leg("3")).unwrap();
        assert!((w1(&mu, &nu).unwrap().value - 2.0).abs() < 1e-15);
        assert!((barycenter_contraction_defect(&mu, &nu).unwrap() - 1.0).abs() < 1e-15);
    }
}
