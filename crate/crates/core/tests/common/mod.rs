#![allow(dead_code)]

use fair_irt::irt::ResponseMatrix;

/// `|a - b| / max(|a|, |b|, floor)`.
pub fn rel_err(a: f64, b: f64, floor: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(floor)
}

pub fn central_diff(f: impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
    (f(x + h) - f(x - h)) / (2.0 * h)
}

/// Sample correlation written out from the covariance definition.
pub fn correlation(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let cov: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum::<f64>() / (n - 1.0);
    let sx = (x.iter().map(|a| (a - mx).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
    let sy = (y.iter().map(|b| (b - my).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
    cov / (sx * sy)
}

pub fn labelled(n: usize, m: usize, values: Vec<f64>) -> ResponseMatrix {
    ResponseMatrix::new(
        (0..n).map(|i| format!("m{i}")).collect(),
        (0..m).map(|j| format!("i{j}")).collect(),
        values,
    )
    .unwrap()
}

/// Integral over `(0, 1)` after `x = (1 - cos(pi s)) / 2`, which removes
/// endpoint singularities of order `x^(-1/2)`. Midpoint rule with `n` panels.
pub fn integrate_unit(f: impl Fn(f64) -> f64, n: usize) -> f64 {
    let pi = std::f64::consts::PI;
    let h = 1.0 / n as f64;
    (0..n)
        .map(|k| {
            let s = (k as f64 + 0.5) * h;
            let x = (1.0 - (pi * s).cos()) / 2.0;
            f(x) * pi / 2.0 * (pi * s).sin()
        })
        .sum::<f64>()
        * h
}
