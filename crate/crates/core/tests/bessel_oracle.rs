//! Bessel rows against an exact-rational ascending series in wide fixed point.

mod common;

use common::series::{plan_lambda_max, series_j};
use tatfast::special::{bessel_j_row, bessel_jprime_from_table};

#[test]
fn series_oracle_sanity() {
    assert!((series_j(1.0, 0) - 0.765_197_686_557_966_6).abs() < 1e-15);
    assert!((series_j(10.0, 5) - -0.234_061_528_186_793_6).abs() < 1e-15);
}

#[test]
fn rows_match_series_up_to_plan_lambda_max() {
    let lmax = plan_lambda_max();
    assert!(lmax > 300.0, "{lmax}");
    let mut lambdas = vec![1e-6, 0.01, 0.3, 0.999, 1.0, 1.001, 2.404825557695773, 7.5, 25.0, 64.0, 128.5, 200.0, 256.0];
    lambdas.extend((1..=8).map(|i| lmax * i as f64 / 8.0));
    let mut worst = (0.0f64, 0.0, 0);
    for &x in &lambdas {
        let row = bessel_j_row(x, 256).unwrap();
        for (k, &v) in row.iter().enumerate() {
            let e = (v - series_j(x, k)).abs();
            if e > worst.0 {
                worst = (e, x, k);
            }
        }
    }
    assert!(worst.0 <= 1e-10, "max error {:e} at λ = {}, k = {}", worst.0, worst.1, worst.2);
}

#[test]
fn first_zero_of_j0() {
    let x = 2.404825557695773;
    assert!(series_j(x, 0).abs() < 1e-10);
    assert!(bessel_j_row(x, 0).unwrap()[0].abs() < 1e-10);
}

#[test]
fn j1_at_one() {
    assert!((bessel_j_row(1.0, 1).unwrap()[1] - series_j(1.0, 1)).abs() < 1e-12);
}

#[test]
fn derivative_matches_finite_difference() {
    let row = bessel_j_row(1.0, 5).unwrap();
    let table = ndarray::Array2::from_shape_vec((6, 1), row).unwrap();
    let jp = bessel_jprime_from_table(&table).unwrap();
    let h = 1e-5;
    let fd = (series_j(1.0 + h, 2) - series_j(1.0 - h, 2)) / (2.0 * h);
    assert!((jp[[2, 0]] - fd).abs() < 1e-8, "{} vs {fd}", jp[[2, 0]]);
}
