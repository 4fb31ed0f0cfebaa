//! Hyperboloid model of hyperbolic space with curvature -1.
//!
//! Points are vectors `x` in R^{d+1} with `<x,x>_M = -1` and `x0 > 0`, where
//! `<x,y>_M = -x0*y0 + sum_{i>=1} xi*yi`. Tangent vectors at `x` are stored in
//! the same ambient coordinates and satisfy `<x,v>_M = 0`.

pub fn minkowski_dot(x: &[f64], y: &[f64]) -> f64 {
    debug_assert_eq!(x.len(), y.len());
    let spatial: f64 = x[1..].iter().zip(&y[1..]).map(|(a, b)| a * b).sum();
    spatial - x[0] * y[0]
}

/// Puts `x` back on the upper sheet by recomputing the time coordinate.
pub fn renormalize(x: &mut [f64]) {
    let spatial: f64 = x[1..].iter().map(|v| v * v).sum();
    x[0] = (1.0 + spatial).sqrt();
}

pub fn origin(dim: usize) -> Vec<f64> {
    let mut x = vec![0.0; dim + 1];
    x[0] = 1.0;
    x
}

/// Lifts spatial coordinates onto the hyperboloid.
pub fn lift(spatial: &[f64]) -> Vec<f64> {
    let mut x = Vec::with_capacity(spatial.len() + 1);
    x.push(0.0);
    x.extend_from_slice(spatial);
    renormalize(&mut x);
    x
}

pub fn constraint_residual(x: &[f64]) -> f64 {
    (minkowski_dot(x, x) + 1.0).abs()
}

/// Geodesic distance.
///
/// Uses `d = 2 asinh(|x - y|_M / 2)`, which equals `arccosh(-<x,y>_M)` but
/// keeps full relative precision for nearby points. The squared Minkowski
/// norm of the chord is `2(-<x,y>_M - 1)` and is clamped at zero, which is
/// the same guard as clamping `-<x,y>_M` to `[1, inf)`.
pub fn distance(x: &[f64], y: &[f64]) -> f64 {
    let mut spatial = 0.0;
    for i in 1..x.len() {
        let d = x[i] - y[i];
        spatial += d * d;
    }
    let d0 = x[0] - y[0];
    let chord2 = (spatial - d0 * d0).max(0.0);
    2.0 * (chord2.sqrt() / 2.0).asinh()
}

/// Removes the component of `v` normal to the sheet at `x`.
pub fn project_tangent(x: &[f64], v: &mut [f64]) {
    let c = minkowski_dot(x, v);
    for (vi, xi) in v.iter_mut().zip(x) {
        *vi += c * xi;
    }
}

pub fn tangent_norm(v: &[f64]) -> f64 {
    minkowski_dot(v, v).max(0.0).sqrt()
}

pub fn exp(x: &[f64], v: &[f64]) -> Vec<f64> {
    let mut v = v.to_vec();
    project_tangent(x, &mut v);
    let n = tangent_norm(&v);
    if n == 0.0 {
        return x.to_vec();
    }
    let (c, s) = (n.cosh(), n.sinh() / n);
    let mut y: Vec<f64> = x.iter().zip(&v).map(|(xi, vi)| c * xi + s * vi).collect();
    renormalize(&mut y);
    y
}

pub fn log(x: &[f64], y: &[f64]) -> Vec<f64> {
    let d = distance(x, y);
    if d == 0.0 {
        return vec![0.0; x.len()];
    }
    let a = (-minkowski_dot(x, y)).max(1.0);
    let mut u: Vec<f64> = y.iter().zip(x).map(|(yi, xi)| yi - a * xi).collect();
    project_tangent(x, &mut u);
    let n = tangent_norm(&u);
    if n == 0.0 {
        return vec![0.0; x.len()];
    }
    let scale = d / n;
    u.iter_mut().for_each(|ui| *ui *= scale);
    u
}

pub fn geodesic(x: &[f64], y: &[f64], t: f64) -> Vec<f64> {
    if t <= 0.0 {
        return x.to_vec();
    }
    if t >= 1.0 {
        return y.to_vec();
    }
    let mut v = log(x, y);
    v.iter_mut().for_each(|vi| *vi *= t);
    exp(x, &v)
}
