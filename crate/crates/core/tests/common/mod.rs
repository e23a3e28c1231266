#![allow(dead_code)]

pub mod series;

use ndarray::Array2;
use tatfast::geometry::GeometryConfig;

pub fn rel_l2(a: &Array2<f64>, b: &Array2<f64>) -> f64 {
    let d: f64 = a.iter().zip(b.iter()).map(|(x, y)| (x - y) * (x - y)).sum();
    let n: f64 = b.iter().map(|y| y * y).sum();
    (d / n).sqrt()
}

pub fn rel_linf(a: &Array2<f64>, b: &Array2<f64>) -> f64 {
    let d = a.iter().zip(b.iter()).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
    d / b.iter().fold(0.0f64, |m, y| m.max(y.abs()))
}

pub fn max_abs(a: &Array2<f64>) -> f64 {
    a.iter().fold(0.0f64, |m, v| m.max(v.abs()))
}

/// 65² image, 64 angles, 65 time samples on [0, 4].
pub fn small_cfg() -> GeometryConfig {
    GeometryConfig {
        n_image: 65,
        n_theta: 64,
        n_time: 65,
        ..GeometryConfig::default()
    }
}
