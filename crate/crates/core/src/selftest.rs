//! Built-in consistency checks run by the `selftest` command.

use std::f64::consts::PI;
use std::time::Instant;

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::geometry::{embed, restrict, ExtendedBox, GeometryConfig, ImageGrid};
use crate::io::Tatb;
use crate::operators::{degrade, degrade_adjoint, DegradationSpec, Eta, ForwardPlan, InversePlan, OperatorOptions};
use crate::oracle::{dense_dot_test, slow_forward};
use crate::phantom::paper_phantom;
use crate::recon::{div, grad, metrics};
use crate::special::bessel_j_row;
use crate::spectral::{angular_fft, angular_ifft};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
    pub passed: bool,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelftestReport {
    pub small: bool,
    pub n_image: usize,
    pub threads: usize,
    pub checks: Vec<Check>,
    pub passed: bool,
}

/// `J_k(x) = (1/π)∫₀^π cos(kτ − x sin τ) dτ` by the trapezoid rule, which is
/// spectrally accurate for this periodic integrand.
pub fn bessel_by_quadrature(k: usize, x: f64) -> f64 {
    let n = 2 * (x.abs() as usize + k + 64);
    let h = PI / n as f64;
    let mut acc = 0.5 * (1.0 + (k as f64 * PI).cos());
    for m in 1..n {
        let t = m as f64 * h;
        acc += (k as f64 * t - x * t.sin()).cos();
    }
    acc / n as f64
}

struct Runner {
    checks: Vec<Check>,
}

impl Runner {
    fn run(&mut self, name: &str, tolerance: f64, f: impl FnOnce() -> Result<f64>) {
        let s = Instant::now();
        let (value, passed) = match f() {
            Ok(v) => (v, v <= tolerance),
            Err(e) => {
                log::error!("{name}: {e}");
                (f64::NAN, false)
            }
        };
        self.checks.push(Check {
            name: name.into(),
            value,
            tolerance,
            passed,
            seconds: s.elapsed().as_secs_f64(),
        });
    }
}

fn rel_l2(a: &Array2<f64>, b: &Array2<f64>) -> f64 {
    let d: f64 = a.iter().zip(b.iter()).map(|(x, y)| (x - y) * (x - y)).sum();
    let n: f64 = b.iter().map(|y| y * y).sum();
    (d / n).sqrt()
}

/// Runs every check; `small` uses a 65² geometry so the whole suite takes seconds.
pub fn run_selftest(small: bool) -> SelftestReport {
    let cfg = if small { GeometryConfig::scaled(65) } else { GeometryConfig::default() };
    let opts = OperatorOptions::default();
    let mut r = Runner { checks: Vec::new() };
    let mut rng = ChaCha8Rng::seed_from_u64(7);

    r.run("bessel_vs_quadrature", 1e-10, || {
        let mut worst = 0.0f64;
        for x in [0.0, 0.3, 1.0, 7.5, 40.0, 150.0, 400.0] {
            let row = bessel_j_row(x, 256)?;
            for k in (0..=256).step_by(8) {
                worst = worst.max((row[k] - bessel_by_quadrature(k, x)).abs());
            }
        }
        Ok(worst)
    });

    let fwd = ForwardPlan::<f64>::new(&cfg, opts);
    let inv = InversePlan::<f64>::new(&cfg, opts);
    let truth = paper_phantom::<f64>(cfg.n_image, cfg.half_width);
    let tol_oracle = if small { 0.05 } else { 0.01 };
    let slow = slow_forward(&paper_phantom::<f64>(2 * cfg.n_image - 1, cfg.half_width), &cfg);
    r.run("forward_vs_slow_oracle_rel_l2", tol_oracle, || {
        let g = fwd.as_ref().map_err(clone_err)?.apply(&truth)?;
        Ok(rel_l2(&g.values, &slow.as_ref().map_err(clone_err)?.values))
    });
    let tol_inv = if small { 0.05 } else { 0.005 };
    r.run("inverse_round_trip_rel_l2", tol_inv, || {
        let g = slow.as_ref().map_err(clone_err)?;
        let rec = inv.as_ref().map_err(clone_err)?.apply(g)?;
        let mut t = truth.clone();
        t.mask_disk(cfg.support_radius);
        Ok(metrics(&rec, &t)?.rel_l2)
    });
    let trials = if small { 4 } else { 20 };
    let dot = dense_dot_test(&cfg, trials, 11);
    r.run("adjoint_dot_test", 1e-2, || Ok(dot.as_ref().map_err(clone_err)?.coarse));
    r.run("adjoint_dot_test_refinement_ratio", 1.0 - 1e-9, || Ok(dot.as_ref().map_err(clone_err)?.ratio));

    r.run("angular_fft_round_trip", 1e-13, || {
        let a: Array2<f64> = Array2::from_shape_fn((9, 360), |_| rng.gen_range(-1.0..1.0));
        let back = angular_ifft(&angular_fft(a.view())?);
        Ok(a.iter().zip(back.iter()).map(|(x, y)| (x - y.re).abs().max(y.im.abs())).fold(0.0, f64::max))
    });
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    r.run("degrade_dot_test", 1e-11, || {
        let n_pad = DegradationSpec::padded_len(cfg.n_time);
        let spec = DegradationSpec {
            gamma: 0.3,
            eta: Eta::Samples {
                re: (0..n_pad).map(|_| rng.gen_range(-1.0..1.0)).collect(),
                im: (0..n_pad).map(|_| rng.gen_range(-1.0..1.0)).collect(),
            },
        };
        let mut a = cfg.blank_sinogram::<f64>();
        let mut b = cfg.blank_sinogram::<f64>();
        a.values.mapv_inplace(|_| rng.gen_range(-1.0..1.0));
        b.values.mapv_inplace(|_| rng.gen_range(-1.0..1.0));
        let ba = degrade(&a, &spec)?;
        let bb = degrade_adjoint(&b, &spec)?;
        let lhs: f64 = (&ba.values * &b.values).sum();
        let rhs: f64 = (&a.values * &bb.values).sum();
        let scale = ba.values.mapv(|v| v * v).sum().sqrt() * b.values.mapv(|v| v * v).sum().sqrt();
        Ok((lhs - rhs).abs() / scale)
    });
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    r.run("grad_div_adjoint", 1e-12, || {
        let n = cfg.n_image;
        let f = Array2::from_shape_fn((n, n), |_| rng.gen_range(-1.0..1.0));
        let qx = Array2::from_shape_fn((n, n), |_| rng.gen_range(-1.0..1.0));
        let qy = Array2::from_shape_fn((n, n), |_| rng.gen_range(-1.0..1.0));
        let (gx, gy) = grad(&f);
        let lhs: f64 = (&gx * &qx).sum() + (&gy * &qy).sum();
        let rhs: f64 = (&f * &div(&qx, &qy)).sum();
        let scale = (gx.mapv(|v| v * v).sum() + gy.mapv(|v| v * v).sum()).sqrt()
            * (qx.mapv(|v| v * v).sum() + qy.mapv(|v| v * v).sum()).sqrt();
        Ok((lhs + rhs).abs() / scale)
    });
    r.run("embed_restrict_identity", 0.0, || {
        let ext = ExtendedBox::new(2.3, cfg.spacing());
        let back = restrict(&embed(&truth, &ext)?, &ext, &truth)?;
        Ok(if back == truth { 0.0 } else { 1.0 })
    });
    r.run("file_round_trip", 0.0, || {
        let t = Tatb::from_image(&truth, serde_json::Value::Null)?;
        let back: ImageGrid<f64> = Tatb::from_bytes(&t.to_bytes()?)?.to_image()?;
        let same = back.values.iter().zip(truth.values.iter()).all(|(a, b)| a.to_bits() == b.to_bits());
        Ok(if same { 0.0 } else { 1.0 })
    });

    let passed = r.checks.iter().all(|c| c.passed);
    SelftestReport {
        small,
        n_image: cfg.n_image,
        threads: rayon::current_num_threads(),
        checks: r.checks,
        passed,
    }
}

fn clone_err(e: &crate::error::Error) -> crate::error::Error {
    crate::error::Error::InvalidArgument(e.to_string())
}
