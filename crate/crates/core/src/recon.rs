//! Variational reconstruction on top of the fast operators: projected-gradient
//! NNLS, TV-regularized PDHG, the TV proximal map, noise injection and metrics.

use std::sync::OnceLock;
use std::time::Instant;

use ndarray::{Array2, Zip};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{shape_err, Error, Result};
use crate::geometry::{GeometryConfig, ImageGrid, Sinogram};
use crate::operators::{operator_norm, AdjointPlan, ForwardPlan, OperatorOptions};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Nnls,
    Tv,
}

/// Region the iterates are projected onto, on top of the support disk.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Roi {
    Disk { radius: f64 },
    /// Points with second coordinate `>= min_y`.
    HalfPlane { min_y: f64 },
}

impl Roi {
    pub fn contains(&self, x: f64, y: f64) -> bool {
        match *self {
            Roi::Disk { radius } => x * x + y * y <= radius * radius * (1.0 + 1e-12),
            Roi::HalfPlane { min_y } => y >= min_y,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ReconConfig {
    pub method: Method,
    /// TV weight α (tv only).
    pub alpha: f64,
    /// Primal step λ; `None` picks `0.9/‖𝒜‖²` for nnls and `0.9/‖𝒜‖` for tv.
    pub step_primal: Option<f64>,
    /// Dual step σ (tv only); `None` picks `0.9/‖𝒜‖`.
    pub step_dual: Option<f64>,
    /// Extrapolation μ (tv only).
    pub relaxation: f64,
    pub max_iters: usize,
    /// Stop once `‖f^{k+1} − f^k‖ < stop_rel·‖f¹‖`.
    pub stop_rel: f64,
    pub roi: Option<Roi>,
    pub inner_prox_iters: usize,
    /// Power-iteration steps and seed for ‖𝒜‖.
    pub norm_iters: usize,
    pub norm_seed: u64,
}

impl Default for ReconConfig {
    fn default() -> Self {
        Self {
            method: Method::Nnls,
            alpha: 0.0,
            step_primal: None,
            step_dual: None,
            relaxation: 1.0,
            max_iters: 200,
            stop_rel: 0.003,
            roi: None,
            inner_prox_iters: 20,
            norm_iters: 20,
            norm_seed: 0,
        }
    }
}

impl ReconConfig {
    pub fn nnls() -> Self {
        Self::default()
    }

    pub fn tv(alpha: f64) -> Self {
        Self {
            method: Method::Tv,
            alpha,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        if !(self.stop_rel > 0.0 && self.stop_rel < 1.0) {
            return bad(format!("stop_rel must lie in (0, 1), got {}", self.stop_rel));
        }
        if self.max_iters == 0 {
            return bad("max_iters must be >= 1".into());
        }
        for (name, v) in [("step_primal", self.step_primal), ("step_dual", self.step_dual)] {
            if let Some(v) = v {
                if !(v > 0.0 && v.is_finite()) {
                    return bad(format!("{name} must be positive, got {v}"));
                }
            }
        }
        if self.method == Method::Tv {
            if !(self.alpha > 0.0 && self.alpha.is_finite()) {
                return bad(format!("alpha must be positive, got {}", self.alpha));
            }
            if !(0.0..=1.0).contains(&self.relaxation) {
                return bad(format!("relaxation must lie in [0, 1], got {}", self.relaxation));
            }
            if self.inner_prox_iters == 0 {
                return bad("inner_prox_iters must be >= 1".into());
            }
        }
        Ok(())
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let c: Self = serde_json::from_str(s)?;
        c.validate()?;
        Ok(c)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub objective: f64,
    pub update_norm: f64,
    pub seconds: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct IterationTrace {
    pub records: Vec<IterationRecord>,
    pub iterations: usize,
    /// False when `max_iters` was reached before the stopping rule fired.
    pub converged: bool,
    pub step_primal: f64,
    pub step_dual: Option<f64>,
    pub operator_norm: f64,
    pub metrics: Option<Metrics>,
}

impl IterationTrace {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("iteration,objective,update_norm,seconds\n");
        for r in &self.records {
            s.push_str(&format!("{},{:e},{:e},{:.6}\n", r.iteration, r.objective, r.update_norm, r.seconds));
        }
        s
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub rel_l2: f64,
    pub rel_linf: f64,
}

/// Relative L² and L∞ errors of `f_hat` against `f_true`.
pub fn metrics<T: Real>(f_hat: &ImageGrid<T>, f_true: &ImageGrid<T>) -> Result<Metrics> {
    if f_hat.values.dim() != f_true.values.dim() {
        return Err(shape_err(f_true.values.dim(), f_hat.values.dim()));
    }
    let (mut d2, mut t2, mut dinf, mut tinf) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for (a, b) in f_hat.values.iter().zip(f_true.values.iter()) {
        let (a, b) = (a.to_f64_lossless(), b.to_f64_lossless());
        d2 += (a - b) * (a - b);
        t2 += b * b;
        dinf = dinf.max((a - b).abs());
        tinf = tinf.max(b.abs());
    }
    if t2 == 0.0 {
        return Err(Error::InvalidArgument("ground truth is identically zero".into()));
    }
    Ok(Metrics {
        rel_l2: (d2 / t2).sqrt(),
        rel_linf: dinf / tinf,
    })
}

/// `g + χ` with i.i.d. normal χ on the active detectors, rescaled so that
/// `‖χ‖ = level·‖g‖` in the sinogram norm.
pub fn add_noise<T: Real>(g: &Sinogram<T>, level: f64, seed: u64) -> Result<Sinogram<T>> {
    if !(level >= 0.0 && level.is_finite()) {
        return Err(Error::InvalidArgument(format!("noise level must be >= 0, got {level}")));
    }
    g.ensure_finite()?;
    if level == 0.0 {
        return Ok(g.clone());
    }
    let norm = g.dot(g).sqrt();
    if norm == 0.0 {
        return Err(Error::InvalidArgument("cannot scale noise to a zero signal".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut chi = Sinogram::<f64>::zeros(g.n_time(), g.dt, g.arc_mask.clone());
    for m in 0..g.n_time() {
        for l in 0..g.n_theta() {
            if g.arc_mask[l] {
                chi.values[[m, l]] = StandardNormal.sample(&mut rng);
            }
        }
    }
    let s = level * norm / chi.dot(&chi).sqrt();
    let mut out = g.clone();
    Zip::from(&mut out.values)
        .and(&chi.values)
        .for_each(|o, c| *o = T::lit(o.to_f64_lossless() + s * c));
    Ok(out)
}

/// Forward differences with Neumann boundary (the last difference along each axis is zero).
/// Returns `(∂₁f, ∂₂f)` on unit spacing, `∂₁` along columns (x), `∂₂` along rows (y).
pub fn grad<T: Real>(f: &Array2<T>) -> (Array2<T>, Array2<T>) {
    let (r, c) = f.dim();
    let gx = Array2::from_shape_fn((r, c), |(i, j)| if j + 1 < c { f[[i, j + 1]] - f[[i, j]] } else { T::zero() });
    let gy = Array2::from_shape_fn((r, c), |(i, j)| if i + 1 < r { f[[i + 1, j]] - f[[i, j]] } else { T::zero() });
    (gx, gy)
}

/// Negative adjoint of [`grad`]: `⟨∇f, q⟩ + ⟨f, div q⟩ = 0`.
pub fn div<T: Real>(qx: &Array2<T>, qy: &Array2<T>) -> Array2<T> {
    let (r, c) = qx.dim();
    Array2::from_shape_fn((r, c), |(i, j)| {
        let ax = if j + 1 < c { qx[[i, j]] } else { T::zero() };
        let bx = if j > 0 { qx[[i, j - 1]] } else { T::zero() };
        let ay = if i + 1 < r { qy[[i, j]] } else { T::zero() };
        let by = if i > 0 { qy[[i - 1, j]] } else { T::zero() };
        ax - bx + ay - by
    })
}

/// `Σ |∇f|` on unit spacing (isotropic).
pub fn tv_unit<T: Real>(f: &Array2<T>) -> f64 {
    let (gx, gy) = grad(f);
    gx.iter()
        .zip(gy.iter())
        .map(|(a, b)| a.to_f64_lossless().hypot(b.to_f64_lossless()))
        .sum()
}

/// `∫|∇f|` for an image on its grid, i.e. `h·Σ|∇f|` with unit differences.
pub fn tv_value<T: Real>(f: &ImageGrid<T>) -> f64 {
    f.spacing() * tv_unit(&f.values)
}

/// Dual variable of the TV prox, reusable as a warm start.
#[derive(Debug, Clone, PartialEq)]
pub struct TvDual<T> {
    pub px: Array2<T>,
    pub py: Array2<T>,
}

impl<T: Real> TvDual<T> {
    pub fn zeros(dim: (usize, usize)) -> Self {
        Self {
            px: Array2::zeros(dim),
            py: Array2::zeros(dim),
        }
    }
}

/// `argmin_u Σ|∇u| + ‖u − f‖²/(2τ)` on unit spacing by projected gradient on the
/// dual ball `{|p| ≤ 1}`, `u = f − τ div p`.
pub fn tv_prox<T: Real>(f: &Array2<T>, tau: f64, inner_iters: usize) -> Array2<T> {
    let mut dual = TvDual::zeros(f.dim());
    tv_prox_with_dual(f, tau, inner_iters, &mut dual)
}

/// [`tv_prox`] starting from (and updating) the given dual variable.
pub fn tv_prox_with_dual<T: Real>(f: &Array2<T>, tau: f64, inner_iters: usize, dual: &mut TvDual<T>) -> Array2<T> {
    if tau <= 0.0 {
        return f.clone();
    }
    let tau_t = T::lit(tau);
    let step = T::lit(0.248);
    let inv_tau = T::lit(1.0 / tau);
    for _ in 0..inner_iters {
        // descent on ½‖div p − f/τ‖², whose gradient is −∇(div p − f/τ)
        let mut w = div(&dual.px, &dual.py);
        Zip::from(&mut w).and(f).for_each(|w, &f| *w -= f * inv_tau);
        let (gx, gy) = grad(&w);
        Zip::from(&mut dual.px)
            .and(&mut dual.py)
            .and(&gx)
            .and(&gy)
            .for_each(|px, py, &a, &b| {
                let nx = *px + step * a;
                let ny = *py + step * b;
                let r = (nx * nx + ny * ny).sqrt().max(T::one());
                *px = nx / r;
                *py = ny / r;
            });
    }
    let mut u = div(&dual.px, &dual.py);
    Zip::from(&mut u).and(f).for_each(|u, &f| *u = f - tau_t * *u);
    u
}

/// Fast plans plus a lazily computed operator norm.
pub struct ReconPlans<T: Real> {
    pub fwd: ForwardPlan<T>,
    pub adj: AdjointPlan<T>,
    norm: OnceLock<f64>,
}

impl<T: Real> ReconPlans<T> {
    pub fn new(cfg: &GeometryConfig, options: OperatorOptions) -> Result<Self> {
        Ok(Self {
            fwd: ForwardPlan::new(cfg, options)?,
            adj: AdjointPlan::new(cfg, options)?,
            norm: OnceLock::new(),
        })
    }

    pub fn cfg(&self) -> &GeometryConfig {
        &self.fwd.cfg
    }

    /// ‖𝒜‖, computed once.
    pub fn norm(&self, iters: usize, seed: u64) -> Result<f64> {
        if let Some(n) = self.norm.get() {
            return Ok(*n);
        }
        let n = operator_norm(&self.fwd, &self.adj, iters, seed)?;
        Ok(*self.norm.get_or_init(|| n))
    }

    /// Presets the norm, e.g. from a cached value.
    pub fn with_norm(self, n: f64) -> Self {
        let _ = self.norm.set(n);
        self
    }
}

fn projection_mask(cfg: &GeometryConfig, roi: Option<Roi>) -> Array2<bool> {
    let grid = cfg.blank_image::<f64>();
    let r2 = cfg.support_radius * cfg.support_radius * (1.0 + 1e-12);
    Array2::from_shape_fn((cfg.n_image, cfg.n_image), |(i, j)| {
        let (x, y) = (grid.coord(j), grid.coord(i));
        x * x + y * y <= r2 && roi.map_or(true, |r| r.contains(x, y))
    })
}

fn check_data<T: Real>(cfg: &GeometryConfig, g: &Sinogram<T>) -> Result<()> {
    if g.values.dim() != (cfg.n_time, cfg.n_theta) {
        return Err(shape_err((cfg.n_time, cfg.n_theta), g.values.dim()));
    }
    g.ensure_finite()
}

fn sub<T: Real>(a: &Sinogram<T>, b: &Sinogram<T>) -> Sinogram<T> {
    let mut out = a.clone();
    Zip::from(&mut out.values).and(&b.values).for_each(|o, &b| *o -= b);
    out
}

fn diff_norm<T: Real>(a: &ImageGrid<T>, b: &ImageGrid<T>) -> f64 {
    let h = a.spacing();
    a.values
        .iter()
        .zip(b.values.iter())
        .map(|(x, y)| (x.to_f64_lossless() - y.to_f64_lossless()).powi(2))
        .sum::<f64>()
        .sqrt()
        * h
}

/// Stopping rule relative to the first non-zero iterate.
struct StopRule {
    rel: f64,
    reference: Option<f64>,
}

impl StopRule {
    fn done<T: Real>(&mut self, next: &ImageGrid<T>, update: f64) -> bool {
        match self.reference {
            None => {
                let n = next.dot(next).sqrt();
                if n > 0.0 {
                    self.reference = Some(n);
                    false
                } else {
                    // still at zero: a zero update means zero is stationary
                    update == 0.0
                }
            }
            Some(r) => update < self.rel * r,
        }
    }
}

/// Projected gradient descent for `min_{f ≥ 0, supp f ⊆ roi} ½‖𝒜f − g‖²` from `f⁰ = 0`.
pub fn nnls<T: Real>(
    g: &Sinogram<T>,
    rc: &ReconConfig,
    plans: &ReconPlans<T>,
    truth: Option<&ImageGrid<T>>,
) -> Result<(ImageGrid<T>, IterationTrace)> {
    rc.validate()?;
    let cfg = plans.cfg();
    check_data(cfg, g)?;
    let norm = plans.norm(rc.norm_iters, rc.norm_seed)?;
    let step = rc.step_primal.unwrap_or(0.9 / (norm * norm));
    let mask = projection_mask(cfg, rc.roi);
    let start = Instant::now();
    let mut f = cfg.blank_image::<T>();
    let mut trace = IterationTrace {
        step_primal: step,
        operator_norm: norm,
        ..Default::default()
    };
    let mut stop = StopRule { rel: rc.stop_rel, reference: None };
    let lam = T::lit(step);
    for k in 0..rc.max_iters {
        let r = sub(&plans.fwd.apply(&f)?, g);
        let objective = 0.5 * r.dot(&r);
        let grad = plans.adj.apply(&r)?;
        let mut next = f.clone();
        Zip::from(&mut next.values)
            .and(&grad.values)
            .and(&mask)
            .for_each(|v, &d, &inside| *v = if inside { (*v - lam * d).max(T::zero()) } else { T::zero() });
        let update = diff_norm(&next, &f);
        trace.records.push(IterationRecord {
            iteration: k + 1,
            objective,
            update_norm: update,
            seconds: start.elapsed().as_secs_f64(),
        });
        f = next;
        if stop.done(&f, update) {
            trace.converged = true;
            break;
        }
    }
    finish(&mut trace, &f, truth)?;
    Ok((f, trace))
}

/// PDHG for `min_f ½‖𝒜f − g‖² + α∫|∇f|` from `f⁰ = q⁰ = 0`:
///
/// ```text
/// q ← (q + σ(𝒜f̃ − g))/(1 + σ)
/// f⁺ = prox_{αλ TV}(f − λ𝒜*q)
/// f̃ = f⁺ + μ(f⁺ − f)
/// ```
///
/// No positivity constraint; iterates are restricted to the support disk and roi.
pub fn tv_pdhg<T: Real>(
    g: &Sinogram<T>,
    rc: &ReconConfig,
    plans: &ReconPlans<T>,
    truth: Option<&ImageGrid<T>>,
) -> Result<(ImageGrid<T>, IterationTrace)> {
    let mut rc = rc.clone();
    rc.method = Method::Tv;
    rc.validate()?;
    let cfg = plans.cfg();
    check_data(cfg, g)?;
    let norm = plans.norm(rc.norm_iters, rc.norm_seed)?;
    let lam = rc.step_primal.unwrap_or(0.9 / norm);
    let sigma = rc.step_dual.unwrap_or(0.9 / norm);
    if sigma * lam * norm * norm >= 1.0 {
        return Err(Error::InvalidArgument(format!(
            "PDHG steps violate σλ‖𝒜‖² < 1 (σ = {sigma}, λ = {lam}, ‖𝒜‖ = {norm})"
        )));
    }
    let mask = projection_mask(cfg, rc.roi);
    let h = cfg.spacing();
    // αλ∫|∇u| + ‖u − v‖²_{h²}/2 ⇔ unit-spacing prox with τ = αλ/h
    let tau = rc.alpha * lam / h;
    let start = Instant::now();
    let mut f = cfg.blank_image::<T>();
    let mut f_bar = f.clone();
    let mut q = cfg.blank_sinogram::<T>();
    let mut dual = TvDual::zeros(f.values.dim());
    let mut trace = IterationTrace {
        step_primal: lam,
        step_dual: Some(sigma),
        operator_norm: norm,
        ..Default::default()
    };
    let mut stop = StopRule { rel: rc.stop_rel, reference: None };
    let (s, inv) = (T::lit(sigma), T::lit(1.0 / (1.0 + sigma)));
    let lam_t = T::lit(lam);
    let mu = T::lit(rc.relaxation);
    for k in 0..rc.max_iters {
        let r = sub(&plans.fwd.apply(&f_bar)?, g);
        // objective evaluated at the extrapolated point, where 𝒜 is applied anyway
        let objective = 0.5 * r.dot(&r) + rc.alpha * tv_value(&f_bar);
        Zip::from(&mut q.values).and(&r.values).for_each(|q, &r| *q = (*q + s * r) * inv);
        let back = plans.adj.apply(&q)?;
        let mut v = f.values.clone();
        Zip::from(&mut v).and(&back.values).for_each(|v, &b| *v -= lam_t * b);
        let mut u = tv_prox_with_dual(&v, tau, rc.inner_prox_iters, &mut dual);
        Zip::from(&mut u).and(&mask).for_each(|u, &inside| {
            if !inside {
                *u = T::zero();
            }
        });
        let next = ImageGrid {
            values: u,
            half_width: cfg.half_width,
        };
        let update = diff_norm(&next, &f);
        trace.records.push(IterationRecord {
            iteration: k + 1,
            objective,
            update_norm: update,
            seconds: start.elapsed().as_secs_f64(),
        });
        f_bar = next.clone();
        Zip::from(&mut f_bar.values)
            .and(&f.values)
            .for_each(|b, &old| *b = *b + mu * (*b - old));
        f = next;
        if stop.done(&f, update) {
            trace.converged = true;
            break;
        }
    }
    finish(&mut trace, &f, truth)?;
    Ok((f, trace))
}

/// Dispatches on `rc.method`.
pub fn reconstruct<T: Real>(
    g: &Sinogram<T>,
    rc: &ReconConfig,
    plans: &ReconPlans<T>,
    truth: Option<&ImageGrid<T>>,
) -> Result<(ImageGrid<T>, IterationTrace)> {
    match rc.method {
        Method::Nnls => nnls(g, rc, plans, truth),
        Method::Tv => tv_pdhg(g, rc, plans, truth),
    }
}

fn finish<T: Real>(trace: &mut IterationTrace, f: &ImageGrid<T>, truth: Option<&ImageGrid<T>>) -> Result<()> {
    trace.iterations = trace.records.len();
    if !trace.converged {
        log::warn!("stopping rule not met after {} iterations", trace.iterations);
    }
    if let Some(t) = truth {
        trace.metrics = Some(metrics(f, t)?);
    }
    if trace.records.iter().any(|r| !r.update_norm.is_finite()) {
        return Err(Error::NonFinite("iterate update"));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array2;
    use rand::Rng;

    fn random(dim: (usize, usize), seed: u64) -> Array2<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Array2::from_shape_fn(dim, |_| rng.gen_range(-1.0..1.0))
    }

    #[test]
    fn grad_div_adjoint() {
        for (seed, dim) in [(1, (16, 16)), (2, (7, 11)), (3, (64, 64))] {
            let f = random(dim, seed);
            let qx = random(dim, seed + 10);
            let qy = random(dim, seed + 20);
            let (gx, gy) = grad(&f);
            let lhs: f64 = (&gx * &qx).sum() + (&gy * &qy).sum();
            let rhs: f64 = (&f * &div(&qx, &qy)).sum();
            let scale = (gx.mapv(|v| v * v).sum() + gy.mapv(|v| v * v).sum()).sqrt()
                * (qx.mapv(|v| v * v).sum() + qy.mapv(|v| v * v).sum()).sqrt();
            assert!((lhs + rhs).abs() <= 1e-12 * scale, "{}", (lhs + rhs).abs() / scale);
        }
    }

    #[test]
    fn grad_of_constant_and_linear() {
        let c = Array2::from_elem((9, 9), 3.5);
        let (gx, gy) = grad(&c);
        assert!(gx.iter().chain(gy.iter()).all(|v| *v == 0.0));
        let lin = Array2::from_shape_fn((9, 9), |(_, j)| 0.25 * j as f64);
        let (gx, gy) = grad(&lin);
        for i in 0..9 {
            for j in 0..9 {
                assert_eq!(gx[[i, j]], if j < 8 { 0.25 } else { 0.0 });
                assert_eq!(gy[[i, j]], 0.0);
            }
        }
    }

    #[test]
    fn prox_trivial_cases() {
        let f = random((12, 12), 4);
        assert_eq!(tv_prox(&f, 0.0, 20), f);
        let c = Array2::from_elem((12, 12), 0.7);
        let p = tv_prox(&c, 3.0, 20);
        assert!(p.iter().all(|v| (*v - 0.7f64).abs() < 1e-15));
    }

    #[test]
    fn prox_is_nonexpansive() {
        for seed in 0..10 {
            let a = random((20, 20), seed);
            let b = random((20, 20), seed + 100);
            let pa = tv_prox(&a, 0.4, 30);
            let pb = tv_prox(&b, 0.4, 30);
            let d_in = (&a - &b).mapv(|v| v * v).sum().sqrt();
            let d_out = (&pa - &pb).mapv(|v| v * v).sum().sqrt();
            assert!(d_out <= d_in * (1.0 + 1e-12), "{d_out} > {d_in}");
        }
    }

    fn step_image(n: usize) -> Array2<f64> {
        Array2::from_shape_fn((n, n), |(_, j)| if j < n / 2 { 0.0 } else { 1.0 })
    }

    /// Optimality of `u` for `Σ|∇u| + ‖u − f‖²/(2τ)`: no single-node or whole-column
    /// perturbation of size ±ε lowers the objective.
    fn is_minimizer(u: &Array2<f64>, f: &Array2<f64>, tau: f64, eps: f64) -> bool {
        let obj = |v: &Array2<f64>| tv_unit(v) + (v - f).mapv(|d| d * d).sum() / (2.0 * tau);
        let base = obj(u);
        let (r, c) = u.dim();
        let mut moves: Vec<Array2<f64>> = Vec::new();
        for i in 0..r {
            for j in 0..c {
                let mut d = Array2::zeros((r, c));
                d[[i, j]] = 1.0;
                moves.push(d);
            }
        }
        for j in 0..c {
            let mut d = Array2::zeros((r, c));
            d.column_mut(j).fill(1.0);
            moves.push(d);
        }
        moves.iter().all(|d| {
            [eps, -eps].iter().all(|&s| {
                let v = u + &(d * s);
                obj(&v) >= base - 1e-9
            })
        })
    }

    #[test]
    fn prox_of_step_shrinks_by_perimeter_over_area() {
        let n = 16;
        let f = step_image(n);
        for tau in [0.5, 1.5, 3.0] {
            let u = tv_prox(&f, tau, 4000);
            // interface of length n between two n × n/2 regions
            let shift = tau * n as f64 / (n * n / 2) as f64;
            for i in 0..n {
                for j in 0..n {
                    let want = if j < n / 2 { shift } else { 1.0 - shift };
                    assert!((u[[i, j]] - want).abs() < 1e-6, "τ={tau} ({i},{j}) {} vs {want}", u[[i, j]]);
                }
            }
            assert!(is_minimizer(&u, &f, tau, 1e-4), "τ={tau}");
        }
        // past the merge point both halves meet at the mean
        let u = tv_prox(&f, 5.0, 4000);
        assert!(u.iter().all(|v| (v - 0.5).abs() < 1e-6));
    }

    #[test]
    fn metrics_examples() {
        let f = ImageGrid::<f64>::from_fn(33, 1.0, |x, y| (-(x * x + y * y) * 4.0).exp());
        let m = metrics(&f, &f).unwrap();
        assert_eq!((m.rel_l2, m.rel_linf), (0.0, 0.0));
        let mut two = f.clone();
        two.values.mapv_inplace(|v| 2.0 * v);
        let m = metrics(&two, &f).unwrap();
        assert!((m.rel_l2 - 1.0).abs() < 1e-15 && (m.rel_linf - 1.0).abs() < 1e-15);
        let mut bump = f.clone();
        bump.values[[3, 5]] += 0.1;
        let m = metrics(&bump, &f).unwrap();
        let norm = f.values.mapv(|v| v * v).sum().sqrt();
        assert!((m.rel_linf - 0.1).abs() < 1e-15);
        assert!((m.rel_l2 - 0.1 / norm).abs() < 1e-15);
        assert!(metrics(&f, &ImageGrid::zeros(33, 1.0)).is_err());
        assert!(metrics(&f, &ImageGrid::zeros(31, 1.0)).is_err());
    }

    fn small_cfg() -> GeometryConfig {
        GeometryConfig {
            n_theta: 16,
            n_time: 33,
            ..GeometryConfig::default()
        }
    }

    #[test]
    fn noise_level_and_determinism() {
        let cfg = small_cfg().with_arc(crate::geometry::Arc::top(180.0));
        let mut g = cfg.blank_sinogram::<f64>();
        g.values.indexed_iter_mut().for_each(|((m, l), v)| *v = (m as f64 * 0.3 + l as f64).sin());
        g.restrict_to_arc();
        assert_eq!(add_noise(&g, 0.0, 1).unwrap(), g);
        let a = add_noise(&g, 0.3, 9).unwrap();
        assert_eq!(a, add_noise(&g, 0.3, 9).unwrap());
        assert_ne!(a, add_noise(&g, 0.3, 10).unwrap());
        let d = sub(&a, &g);
        assert!((d.dot(&d).sqrt() / g.dot(&g).sqrt() - 0.3).abs() < 1e-12);
        assert!(!a.has_data_outside_arc());
        assert!(add_noise(&cfg.blank_sinogram::<f64>(), 0.1, 1).is_err());
        assert!(add_noise(&g, -0.1, 1).is_err());
    }

    #[test]
    fn config_validation_and_json() {
        assert!(ReconConfig::nnls().validate().is_ok());
        assert!(ReconConfig::tv(0.0).validate().is_err());
        assert!(ReconConfig { stop_rel: 1.0, ..ReconConfig::nnls() }.validate().is_err());
        let rc = ReconConfig {
            roi: Some(Roi::HalfPlane { min_y: 0.0 }),
            ..ReconConfig::tv(1e-3)
        };
        let s = serde_json::to_string(&rc).unwrap();
        assert_eq!(ReconConfig::from_json(&s).unwrap(), rc);
        let partial = ReconConfig::from_json(r#"{"method":"tv","alpha":0.01}"#).unwrap();
        assert_eq!(partial.stop_rel, 0.003);
        assert_eq!(partial.inner_prox_iters, 20);
    }

    #[test]
    fn zero_data_gives_zero() {
        let cfg = GeometryConfig::scaled(33);
        let plans = ReconPlans::<f64>::new(&cfg, OperatorOptions::default()).unwrap();
        let g = cfg.blank_sinogram::<f64>();
        let (f, t) = nnls(&g, &ReconConfig::nnls(), &plans, None).unwrap();
        assert!(f.values.iter().all(|v| *v == 0.0));
        assert_eq!(t.iterations, 1);
        assert!(t.converged);
        let (f, t) = tv_pdhg(&g, &ReconConfig::tv(0.1), &plans, None).unwrap();
        assert!(f.values.iter().all(|v| *v == 0.0));
        assert_eq!(t.iterations, 1);
    }
}
