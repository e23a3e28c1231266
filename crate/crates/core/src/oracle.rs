//! Slow reference implementations: a per-time-step spectral propagator, a
//! finite-difference time reversal, and a randomized adjoint dot test.
//!
//! Nothing here goes through the harmonic-domain code of [`crate::operators`].

use std::f64::consts::{PI, TAU};

use ndarray::Array2;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{arc_mask, next_fft_size, GeometryConfig, ImageGrid, Sinogram};
use crate::operators::{AdjointPlan, ForwardPlan, OperatorOptions};
use crate::phantom::{random_ellipses_spec, EllipseRanges, PhantomSpec};
use crate::scalar::Real;

/// Half-width of the periodic box used by [`slow_forward`]: wavefronts leaving the
/// unit disk return after `2(L − 1) = T + 0.5`.
pub fn slow_box_half_width(t_max: f64) -> f64 {
    0.5 * t_max + 1.25
}

/// `g = 𝒜f` by `p(t) = 𝓕⁻¹(f̂ cos(|ξ|t))` at every time sample, then bicubic
/// interpolation at the detectors. `f` may be sampled more finely than `cfg.n_image`.
pub fn slow_forward<T: Real>(f: &ImageGrid<T>, cfg: &GeometryConfig) -> Result<Sinogram<T>> {
    cfg.validate()?;
    f.ensure_finite()?;
    let nf = f.n();
    if nf % 2 == 0 {
        return Err(Error::Misaligned("oracle image needs an odd sample count".into()));
    }
    let h = f.spacing();
    let n = next_fft_size((2.0 * slow_box_half_width(cfg.t_max) / h - 1e-9).ceil() as usize);
    let half = (nf - 1) / 2;
    let idx = |p: isize| p.rem_euclid(n as isize) as usize;

    // f̂ up to the constant h²/2π, which cancels against the inverse
    let mut planner = FftPlanner::<f64>::new();
    let fwd = planner.plan_fft_forward(n);
    let inv = planner.plan_fft_inverse(n);
    let mut spec = vec![Complex64::default(); n * n];
    for i in 0..nf {
        let row = &mut spec[idx(i as isize - half as isize) * n..][..n];
        for j in 0..nf {
            row[idx(j as isize - half as isize)] = Complex64::new(f.values[[i, j]].to_f64_lossless(), 0.0);
        }
    }
    spec.par_chunks_mut(n).for_each(|row| fwd.process(row));
    transpose_in_place(&mut spec, n);
    spec.par_chunks_mut(n).for_each(|col| fwd.process(col));
    transpose_in_place(&mut spec, n);
    let norm = 1.0 / (n * n) as f64;
    spec.iter_mut().for_each(|v| *v *= norm);

    // |ξ| per node and the rotor e^{i|ξ|dt}
    let dxi = TAU / (n as f64 * h);
    let dt = cfg.dt();
    let freq = |b: usize| (if b < n / 2 { b as f64 } else { b as f64 - n as f64 }) * dxi;
    let rotor: Vec<Complex64> = (0..n * n)
        .map(|p| Complex64::from_polar(1.0, freq(p / n).hypot(freq(p % n)) * dt))
        .collect();

    // image-grid window around the detector circle
    let reach = ((1.0 + 2.0 * h) / h).ceil() as isize;
    let cols: Vec<usize> = (-reach..=reach).map(idx).collect();
    let detectors: Vec<(f64, f64)> = (0..cfg.n_theta).map(|l| (cfg.theta(l).cos(), cfg.theta(l).sin())).collect();

    let n_t = cfg.n_time;
    let mut out = Array2::<T>::zeros((n_t, cfg.n_theta));
    let mut phase = vec![Complex64::new(1.0, 0.0); n * n];
    let mut m = 0;
    let mut buf = vec![Complex64::default(); n * n];
    while m < n_t {
        let pair = m + 1 < n_t;
        // buf = f̂ cos(|ξ| t_m) + i f̂ cos(|ξ| t_{m+1})
        buf.par_chunks_mut(n)
            .zip(phase.par_chunks_mut(n))
            .zip(spec.par_chunks(n))
            .zip(rotor.par_chunks(n))
            .for_each(|(((b, ph), s), r)| {
                for q in 0..n {
                    let c0 = ph[q].re;
                    ph[q] *= r[q];
                    let c1 = if pair { ph[q].re } else { 0.0 };
                    if pair {
                        ph[q] *= r[q];
                    }
                    b[q] = s[q] * Complex64::new(c0, 0.0) + s[q] * Complex64::new(0.0, c1);
                }
            });
        // rows along x₁, then only the columns near the detector circle
        buf.par_chunks_mut(n).for_each(|row| inv.process(row));
        let window: Vec<Vec<Complex64>> = cols
            .par_iter()
            .map(|&c| {
                let mut col: Vec<Complex64> = (0..n).map(|r| buf[r * n + c]).collect();
                inv.process(&mut col);
                col
            })
            .collect();
        // field lookup at signed node (i along y, j along x)
        let at = |i: isize, j: isize| -> Complex64 { window[(j + reach) as usize][idx(i)] };
        for (l, &(x, y)) in detectors.iter().enumerate() {
            let v = bicubic(&at, x / h, y / h);
            out[[m, l]] = T::lit(v.re);
            if pair {
                out[[m + 1, l]] = T::lit(v.im);
            }
        }
        m += 2;
    }
    let mut g = Sinogram {
        values: out,
        dt,
        arc_mask: arc_mask(cfg),
    };
    g.restrict_to_arc();
    Ok(g)
}

fn transpose_in_place(a: &mut [Complex64], n: usize) {
    for i in 0..n {
        for j in i + 1..n {
            a.swap(i * n + j, j * n + i);
        }
    }
}

/// Tensor four-point Lagrange interpolation at fractional node coordinates (u along x, v along y).
fn bicubic(at: &impl Fn(isize, isize) -> Complex64, u: f64, v: f64) -> Complex64 {
    let ju = u.floor() as isize;
    let iv = v.floor() as isize;
    let wu = lagrange4(u - ju as f64);
    let wv = lagrange4(v - iv as f64);
    let mut acc = Complex64::default();
    for (a, wa) in wv.iter().enumerate() {
        let mut row = Complex64::default();
        for (b, wb) in wu.iter().enumerate() {
            row += at(iv - 1 + a as isize, ju - 1 + b as isize) * *wb;
        }
        acc += row * *wa;
    }
    acc
}

/// Weights of nodes −1, 0, 1, 2 at offset `s ∈ [0, 1)`.
fn lagrange4(s: f64) -> [f64; 4] {
    [
        -s * (s - 1.0) * (s - 2.0) / 6.0,
        (s + 1.0) * (s - 1.0) * (s - 2.0) / 2.0,
        -(s + 1.0) * s * (s - 2.0) / 2.0,
        (s + 1.0) * s * (s - 1.0) / 6.0,
    ]
}

/// Explicit leapfrog for `p_tt = Δp` on the image grid with Dirichlet values on the
/// nodes just outside the detector circle.
struct Leapfrog {
    n: usize,
    h: f64,
    dt: f64,
    /// Nodes with r < 1.
    interior: Vec<bool>,
    /// Boundary nodes (r ≥ 1 with an interior neighbor) and their angles.
    boundary: Vec<(usize, f64)>,
}

impl Leapfrog {
    fn new(n: usize, half_width: f64, dt: f64) -> Result<Self> {
        let h = 2.0 * half_width / (n - 1) as f64;
        if dt > h / 2f64.sqrt() {
            return Err(Error::InvalidArgument(format!(
                "finite-difference step {dt} violates the CFL bound h/√2 = {}",
                h / 2f64.sqrt()
            )));
        }
        let coord = |k: usize| -half_width + k as f64 * h;
        let interior: Vec<bool> = (0..n * n)
            .map(|p| coord(p % n).hypot(coord(p / n)) < 1.0)
            .collect();
        let mut boundary = Vec::new();
        for i in 1..n - 1 {
            for j in 1..n - 1 {
                let p = i * n + j;
                if !interior[p] && (interior[p - 1] || interior[p + 1] || interior[p - n] || interior[p + n]) {
                    boundary.push((p, coord(i).atan2(coord(j)).rem_euclid(TAU)));
                }
            }
        }
        Ok(Self {
            n,
            h,
            dt,
            interior,
            boundary,
        })
    }

    /// `next = 2 cur − prev + (dt/h)² Δ₅ cur` on interior nodes.
    fn step(&self, prev: &[f64], cur: &[f64], next: &mut [f64]) {
        let n = self.n;
        let c2 = (self.dt / self.h).powi(2);
        next.par_chunks_mut(n).enumerate().for_each(|(i, row)| {
            for (j, o) in row.iter_mut().enumerate() {
                let p = i * n + j;
                *o = if self.interior[p] {
                    let lap = cur[p - 1] + cur[p + 1] + cur[p - n] + cur[p + n] - 4.0 * cur[p];
                    2.0 * cur[p] - prev[p] + c2 * lap
                } else {
                    0.0
                };
            }
        });
    }

    /// Conserved leapfrog energy between levels `a` (older) and `b`.
    fn energy(&self, a: &[f64], b: &[f64]) -> f64 {
        let n = self.n;
        let mut kin = 0.0;
        let mut pot = 0.0;
        for p in 0..n * n {
            if self.interior[p] {
                kin += ((b[p] - a[p]) / self.dt).powi(2);
            }
        }
        // Σ over edges of (δa)(δb)/h², edges touching at least one interior node
        for i in 0..n {
            for j in 0..n {
                let p = i * n + j;
                for q in [p + 1, p + n] {
                    if (q == p + 1 && j + 1 == n) || q >= n * n {
                        continue;
                    }
                    if self.interior[p] || self.interior[q] {
                        pot += (a[q] - a[p]) * (b[q] - b[p]);
                    }
                }
            }
        }
        (kin + pot / (self.h * self.h)) * self.h * self.h
    }
}

/// Linear interpolation of g in θ (periodic) and t.
fn sample_boundary<T: Real>(g: &Sinogram<T>, t: f64, theta: f64) -> f64 {
    let n_t = g.n_time();
    let n_th = g.n_theta();
    let s = (t / g.dt).clamp(0.0, (n_t - 1) as f64);
    let m0 = (s.floor() as usize).min(n_t - 2);
    let a = s - m0 as f64;
    let p = theta / TAU * n_th as f64;
    let l0 = (p.floor() as usize) % n_th;
    let l1 = (l0 + 1) % n_th;
    let b = p - p.floor();
    let v = |m: usize, l: usize| g.values[[m, l]].to_f64_lossless();
    let lo = v(m0, l0) * (1.0 - b) + v(m0, l1) * b;
    let hi = v(m0 + 1, l0) * (1.0 - b) + v(m0 + 1, l1) * b;
    lo * (1.0 - a) + hi * a
}

/// Time-reversal reconstruction: solves the wave equation backward from `t = T`
/// with zero Cauchy data and Dirichlet values g on the detector circle, using the
/// step `dt/2`, and returns the field at `t = 0` restricted to the support disk.
pub fn fd_time_reversal<T: Real>(g: &Sinogram<T>, cfg: &GeometryConfig) -> Result<ImageGrid<T>> {
    cfg.validate()?;
    if g.values.dim() != (cfg.n_time, cfg.n_theta) {
        return Err(crate::error::shape_err((cfg.n_time, cfg.n_theta), g.values.dim()));
    }
    g.ensure_finite()?;
    if !cfg.arc.is_full() {
        log::warn!("time reversal assumes full-circle data");
    }
    let substeps = 2;
    let dt = cfg.dt() / substeps as f64;
    let solver = Leapfrog::new(cfg.n_image, cfg.half_width, dt)?;
    let n = cfg.n_image;
    let steps = (cfg.n_time - 1) * substeps;
    let mut prev = vec![0.0; n * n];
    let mut cur = vec![0.0; n * n];
    let mut next = vec![0.0; n * n];
    let t_at = |k: usize| cfg.t_max - k as f64 * dt;
    for &(p, th) in &solver.boundary {
        prev[p] = sample_boundary(g, t_at(0), th);
        cur[p] = prev[p];
    }
    // cur is level t_at(1) only for the boundary; interior starts at rest
    for &(p, th) in &solver.boundary {
        cur[p] = sample_boundary(g, t_at(1), th);
    }
    for k in 1..steps {
        solver.step(&prev, &cur, &mut next);
        for &(p, th) in &solver.boundary {
            next[p] = sample_boundary(g, t_at(k + 1), th);
        }
        std::mem::swap(&mut prev, &mut cur);
        std::mem::swap(&mut cur, &mut next);
    }
    let mut out = ImageGrid {
        values: Array2::from_shape_fn((n, n), |(i, j)| T::lit(cur[i * n + j])),
        half_width: cfg.half_width,
    };
    out.mask_disk(cfg.support_radius);
    Ok(out)
}

/// Leapfrog energies during free evolution (zero boundary values) from `initial`
/// at rest, one value per step.
pub fn fd_free_energy(initial: &ImageGrid<f64>, dt: f64, steps: usize) -> Result<Vec<f64>> {
    let n = initial.n();
    let solver = Leapfrog::new(n, initial.half_width, dt)?;
    let mut prev: Vec<f64> = initial.values.iter().copied().collect();
    for (p, v) in prev.iter_mut().enumerate() {
        if !solver.interior[p] {
            *v = 0.0;
        }
    }
    let mut cur = prev.clone();
    let mut next = vec![0.0; n * n];
    let mut out = Vec::with_capacity(steps);
    for _ in 0..steps {
        solver.step(&prev, &cur, &mut next);
        out.push(solver.energy(&cur, &next));
        std::mem::swap(&mut prev, &mut cur);
        std::mem::swap(&mut cur, &mut next);
    }
    Ok(out)
}

/// Outcome of [`dense_dot_test`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DotTestReport {
    pub trials: usize,
    /// Largest `|⟨𝒜f, g⟩ − ⟨f, 𝒜*g⟩| / (‖𝒜f‖‖g‖)` on the given configuration.
    pub coarse: f64,
    /// The same with every sampling density doubled: image, angle, time and the
    /// radial frequency grid of the plans.
    pub fine: f64,
    pub ratio: f64,
}

/// Doubles the image, angle and time resolution.
pub fn refine(cfg: &GeometryConfig) -> GeometryConfig {
    GeometryConfig {
        n_image: 2 * cfg.n_image - 1,
        n_theta: 2 * cfg.n_theta,
        n_time: 2 * cfg.n_time - 1,
        ..cfg.clone()
    }
}

/// A smooth random sinogram: a sum of Gaussian bumps, periodic in θ.
#[derive(Debug, Clone, PartialEq)]
pub struct RandomBumps {
    bumps: Vec<[f64; 5]>,
}

impl RandomBumps {
    pub fn new(seed: u64, t_max: f64, count: usize) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let bumps = (0..count)
            .map(|_| {
                [
                    rng.gen_range(0.0..t_max),
                    rng.gen_range(0.0..TAU),
                    rng.gen_range(0.08..0.3),
                    rng.gen_range(0.1..0.4),
                    rng.gen_range(-1.0..1.0),
                ]
            })
            .collect();
        Self { bumps }
    }

    pub fn value(&self, t: f64, theta: f64) -> f64 {
        self.bumps
            .iter()
            .map(|&[t0, th0, wt, wth, a]| {
                let d = (theta - th0 + PI).rem_euclid(TAU) - PI;
                a * (-0.5 * ((t - t0) / wt).powi(2) - 0.5 * (d / wth).powi(2)).exp()
            })
            .sum()
    }

    pub fn sample<T: Real>(&self, cfg: &GeometryConfig) -> Sinogram<T> {
        let mut g = cfg.blank_sinogram::<T>();
        let dt = cfg.dt();
        for m in 0..cfg.n_time {
            for l in 0..cfg.n_theta {
                g.values[[m, l]] = T::lit(self.value(m as f64 * dt, cfg.theta(l)));
            }
        }
        g.restrict_to_arc();
        g
    }
}

/// Relative dot-test discrepancy for one pair.
pub fn dot_discrepancy<T: Real>(
    fwd: &ForwardPlan<T>,
    adj: &AdjointPlan<T>,
    f: &ImageGrid<T>,
    g: &Sinogram<T>,
) -> Result<f64> {
    let af = fwd.apply(f)?;
    let atg = adj.apply(g)?;
    let lhs = af.dot(g);
    let rhs = f.dot(&atg);
    let scale = af.dot(&af).sqrt() * g.dot(g).sqrt();
    Ok(if scale > 0.0 { (lhs - rhs).abs() / scale } else { (lhs - rhs).abs() })
}

fn worst_discrepancy(cfg: &GeometryConfig, specs: &[(PhantomSpec, RandomBumps)], options: OperatorOptions) -> Result<f64> {
    let fwd = ForwardPlan::<f64>::new(cfg, options)?;
    let adj = AdjointPlan::<f64>::new(cfg, options)?;
    let mut worst = 0.0f64;
    for (f, g) in specs {
        let f = f.render::<f64>(cfg.n_image, cfg.half_width);
        let g = g.sample::<f64>(cfg);
        worst = worst.max(dot_discrepancy(&fwd, &adj, &f, &g)?);
    }
    Ok(worst)
}

/// Seeded random smooth `(f, g)` pairs, evaluated on `cfg` and on its refinement.
///
/// The refinement also doubles `radial_oversampling`: the mismatch is dominated by
/// the spacing of the adjoint's λ grid, which the image, angle and time axes do not
/// control.
pub fn dense_dot_test(cfg: &GeometryConfig, trials: usize, seed: u64) -> Result<DotTestReport> {
    let specs: Vec<(PhantomSpec, RandomBumps)> = (0..trials as u64)
        .map(|k| {
            let s = seed.wrapping_mul(1_000_003).wrapping_add(k);
            (
                random_ellipses_spec(s, &EllipseRanges::default()),
                RandomBumps::new(s ^ 0x5eed, cfg.t_max, 12),
            )
        })
        .collect();
    let options = OperatorOptions::default();
    let coarse = worst_discrepancy(cfg, &specs, options)?;
    let refined = OperatorOptions {
        radial_oversampling: 2 * options.radial_oversampling,
        ..options
    };
    let fine = worst_discrepancy(&refine(cfg), &specs, refined)?;
    Ok(DotTestReport {
        trials,
        coarse,
        fine,
        ratio: if coarse > 0.0 { fine / coarse } else { 0.0 },
    })
}
