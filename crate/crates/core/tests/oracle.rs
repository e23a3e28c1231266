mod common;

use common::{max_abs, rel_l2, small_cfg};
use tatfast::geometry::GeometryConfig;
use tatfast::operators::{AdjointPlan, ForwardPlan, OperatorOptions};
use tatfast::oracle::{dense_dot_test, dot_discrepancy, fd_free_energy, fd_time_reversal, slow_forward, RandomBumps};
use tatfast::phantom::{paper_phantom, random_ellipses, smoothed_disk, EllipseRanges};
use tatfast::{Data, Image};

#[test]
fn slow_forward_of_zero_is_zero() {
    let cfg = small_cfg();
    let g = slow_forward(&cfg.blank_image::<f64>(), &cfg).unwrap();
    assert!(g.values.iter().all(|&v| v == 0.0));
}

#[test]
fn slow_forward_of_radial_image_is_angle_independent() {
    let cfg = GeometryConfig::scaled(129);
    // a Gaussian keeps detector interpolation error far below the tolerance
    let mut f = Image::from_fn(cfg.n_image, cfg.half_width, |x, y| (-(x * x + y * y) / (2.0 * 0.15f64.powi(2))).exp());
    f.mask_disk(cfg.support_radius);
    let g = slow_forward(&f, &cfg).unwrap();
    let scale = max_abs(&g.values);
    let mut worst = 0.0f64;
    for row in g.values.rows() {
        let mean = row.sum() / row.len() as f64;
        worst = worst.max(row.iter().fold(0.0f64, |m, v| m.max((v - mean).abs())));
    }
    assert!(worst <= 1e-4 * scale, "row deviation {:e}", worst / scale);
}

#[test]
fn time_reversal_of_zero_is_zero() {
    let cfg = GeometryConfig::scaled(65);
    let f = fd_time_reversal(&cfg.blank_sinogram::<f64>(), &cfg).unwrap();
    assert!(f.values.iter().all(|&v| v == 0.0));
}

#[test]
fn time_reversal_rejects_unstable_steps() {
    // 9 time samples on [0, 4] give dt/2 = 0.25, far beyond h/√2
    let cfg = GeometryConfig { n_time: 9, ..small_cfg() };
    assert!(fd_time_reversal(&cfg.blank_sinogram::<f64>(), &cfg).is_err());
}

#[test]
fn free_evolution_conserves_energy() {
    let cfg = GeometryConfig::scaled(129);
    let f = smoothed_disk([0.1, -0.2], 0.3, 0.15, 1.0, &cfg.blank_image::<f64>(), cfg.support_radius).unwrap();
    let e = fd_free_energy(&f, cfg.dt() / 2.0, 300).unwrap();
    for w in e.windows(101).step_by(100) {
        let drift = (w[100] - w[0]).abs() / w[0];
        assert!(drift <= 0.01, "energy drift {drift:e} over 100 steps");
    }
}

#[test]
fn dot_test_on_small_grid() {
    let r = dense_dot_test(&small_cfg(), 20, 0).unwrap();
    assert_eq!(r.trials, 20);
    assert!(r.coarse <= 2e-2, "{r:?}");
    assert!(r.ratio < 1.0, "{r:?}");
}

#[test]
fn dot_test_pairings_vanish_on_zero_inputs() {
    let cfg = small_cfg();
    let o = OperatorOptions::default();
    let fwd = ForwardPlan::<f64>::new(&cfg, o).unwrap();
    let adj = AdjointPlan::<f64>::new(&cfg, o).unwrap();
    let f: Image = random_ellipses(3, &EllipseRanges::default(), cfg.n_image, cfg.half_width);
    let g: Data = RandomBumps::new(3, cfg.t_max, 12).sample(&cfg);
    let zf = cfg.blank_image::<f64>();
    let zg = cfg.blank_sinogram::<f64>();
    assert_eq!(fwd.apply(&zf).unwrap().dot(&g), 0.0);
    assert_eq!(zf.dot(&adj.apply(&g).unwrap()), 0.0);
    assert_eq!(fwd.apply(&f).unwrap().dot(&zg), 0.0);
    assert_eq!(f.dot(&adj.apply(&zg).unwrap()), 0.0);
    assert_eq!(dot_discrepancy(&fwd, &adj, &zf, &g).unwrap(), 0.0);
}

#[test]
fn fast_and_slow_forward_converge_together() {
    let mut errs = Vec::new();
    for n in [65, 129, 257] {
        let cfg = GeometryConfig::scaled(n);
        let fast = ForwardPlan::<f64>::new(&cfg, OperatorOptions::default())
            .unwrap()
            .apply(&paper_phantom(n, cfg.half_width))
            .unwrap();
        let slow = slow_forward(&paper_phantom::<f64>(2 * n - 1, cfg.half_width), &cfg).unwrap();
        errs.push(rel_l2(&fast.values, &slow.values));
    }
    assert!(errs[0] > errs[1] && errs[1] > errs[2], "{errs:?}");
    assert!(errs[2] <= 1e-2, "{errs:?}");
}
