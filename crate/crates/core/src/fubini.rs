//! Expectations, repeated integrals and variation bounds for maps on
//! product mm-spaces.
//!
//! For `f: X x Y -> N` the expectation `E(f)` is the barycenter of the
//! pushforward of `mu_X x mu_Y`. The slice expectation `g_f(y)` is the
//! barycenter of `f(., y)` under `mu_X`, and the repeated integral is the
//! barycenter of `g_f` under `mu_Y`. In a CAT(0) target the distance between
//! `E(f)` and the repeated integral is bounded by `V_1(f)` and by
//! `V_2(f) / sqrt(3)`.

use crate::barycenter::barycenter;
use crate::error::{Error, Result};
use crate::measures::{DiscreteMeasure, MapTable};
use crate::spaces::Point;

/// `(sum_{u,v} w_u w_v d(f(u), f(v))^p)^(1/p)` over ordered pairs of samples.
pub fn variation(f: &MapTable, p: f64) -> Result<f64> {
    if !(p >= 1.0) {
        return Err(Error::Domain(format!("variation order {p} < 1")));
    }
    Ok(variation_pow(f, p).powf(1.0 / p))
}

/// `V_p(f)^p`.
pub fn variation_pow(f: &MapTable, p: f64) -> f64 {
    let target = f.target();
    let values = f.values();
    let dom = f.domain();
    let mut total = 0.0;
    for u in 0..values.len() {
        let wu = dom.prob(u);
        for v in (u + 1)..values.len() {
            let d = target.dist(&values[u], &values[v]);
            if d > 0.0 {
                total += 2.0 * wu * dom.prob(v) * d.powf(p);
            }
        }
    }
    total
}

pub fn expectation(f: &MapTable) -> Result<Point> {
    Ok(barycenter(&f.pushforward())?.point)
}

/// `g_f(y) = E(f(., y))` for every `y` in `Y`.
pub fn slice_expectations(f: &MapTable) -> Result<Vec<Point>> {
    let prod = f.product()?;
    (0..prod.y.len()).map(|j| expectation(&f.slice_y(j)?)).collect()
}

/// Barycenter of the slice expectations under `mu_Y`.
pub fn repeated_integral(f: &MapTable) -> Result<Point> {
    let g = slice_expectations(f)?;
    repeated_from_slices(f, g)
}

fn repeated_from_slices(f: &MapTable, g: Vec<Point>) -> Result<Point> {
    let prod = f.product()?;
    let nu = DiscreteMeasure::new(f.target().clone(), g, prod.y.prob().to_vec())?;
    Ok(barycenter(&nu)?.point)
}

#[derive(Debug, Clone, PartialEq)]
pub struct FubiniReport {
    pub expectation: Point,
    pub repeated: Point,
    /// `d(E(f), E_y(E(f^y)))`.
    pub defect: f64,
    pub v1: f64,
    pub v2: f64,
    /// `V_1 - defect`.
    pub slack1: f64,
    /// `V_2 / sqrt(3) - defect`.
    pub slack2: f64,
    pub slices: Vec<Point>,
    /// `1/2 * int d(f, repeated)^2 - defect^2`.
    pub half_spread_slack: f64,
    /// `2/3 * V_2^2 - int d(f, repeated)^2`.
    pub two_thirds_slack: f64,
}

pub fn fubini_report(f: &MapTable) -> Result<FubiniReport> {
    let target = f.target();
    let expectation = expectation(f)?;
    let slices = slice_expectations(f)?;
    let repeated = repeated_from_slices(f, slices.clone())?;
    let defect = target.dist(&expectation, &repeated);
    let v1 = variation(f, 1.0)?;
    let v2_sq = variation_pow(f, 2.0);
    let v2 = v2_sq.sqrt();

    let spread: f64 = f
        .values()
        .iter()
        .enumerate()
        .map(|(k, v)| {
            let d = target.dist(v, &repeated);
            f.domain().prob(k) * d * d
        })
        .sum();

    Ok(FubiniReport {
        slack1: v1 - defect,
        slack2: v2 / 3f64.sqrt() - defect,
        half_spread_slack: 0.5 * spread - defect * defect,
        two_thirds_slack: 2.0 / 3.0 * v2_sq - spread,
        expectation,
        repeated,
        defect,
        v1,
        v2,
        slices,
    })
}

/// `int_X d(f(x,y), f(x,y')) dmu_X - d(g_f(y), g_f(y'))`.
pub fn slice_contraction_defect(f: &MapTable, y: usize, y2: usize) -> Result<f64> {
    let prod = f.product()?;
    if y >= prod.y.len() || y2 >= prod.y.len() {
        return Err(Error::Domain(format!("slice index out of range for |Y| = {}", prod.y.len())));
    }
    let g = expectation(&f.slice_y(y)?)?;
    let g2 = expectation(&f.slice_y(y2)?)?;
    Ok(slice_contraction_with(f, y, y2, &g, &g2))
}

/// Same as [`slice_contraction_defect`] with the slice expectations supplied.
pub fn slice_contraction_with(f: &MapTable, y: usize, y2: usize, g: &Point, g2: &Point) -> f64 {
    let prod = f.domain().as_product().expect("map on a product");
    let target = f.target();
    let mean: f64 = (0..prod.x.len())
        .map(|i| prod.x.prob()[i] * target.dist(f.at(i, y), f.at(i, y2)))
        .sum();
    mean - target.dist(g, g2)
}

/// The map with the roles of `X` and `Y` exchanged.
pub fn transpose(f: &MapTable) -> Result<MapTable> {
    let prod = f.product()?;
    let mut values = Vec::with_capacity(f.len());
    for j in 0..prod.y.len() {
        for i in 0..prod.x.len() {
            values.push(f.at(i, j).clone());
        }
    }
    MapTable::on_product(prod.y.clone(), prod.x.clone(), f.target().clone(), values)
}
