use std::sync::Arc;

use ndarray::Array2;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};

use super::{check_image, residue_check, OperatorOptions};
use crate::error::Result;
use crate::geometry::{arc_mask, time_intervals, ExtendedBox, ForwardExtent, GeometryConfig, ImageGrid, Sinogram};
use crate::scalar::{i_pow, Complex, Real};
use crate::scratch::BufferPool;
use crate::special::{bessel_j_row, BesselTable};
use crate::spectral::cosine::{CosineTransform, DualGrid};
use crate::spectral::fft2::{HalfSpectrum, HalfSpectrumPlan};
use crate::spectral::polar::{bilinear_at, PolarGrid};
use crate::spectral::quadrature::GradedQuadrature;

/// Precomputed state for [`forward`].
pub struct ForwardPlan<T: Real> {
    pub cfg: GeometryConfig,
    pub options: OperatorOptions,
    pub extent: ForwardExtent,
    pub ext: ExtendedBox,
    pub dual: DualGrid,
    pub polar: PolarGrid,
    /// Highest harmonic order K = n_theta/2.
    pub kmax: usize,
    pub graded: GradedQuadrature,
    spectrum: HalfSpectrumPlan<T>,
    cosine: CosineTransform<T>,
    /// `Δλ·λ_j·J_k(λ_j)` for `k = 0..=K` (row k).
    kernel: Array2<T>,
    /// `w_i·λ_i·J_k(λ_i)·cos(λ_i t_m)` for k = 0 and 1, shape (n_time, n_graded).
    graded_kernel: [Array2<T>; 2],
    polar_fft: Arc<dyn Fft<T>>,
    synth_fft: Arc<dyn Fft<T>>,
    arc: Vec<bool>,
    pool: BufferPool<Complex<T>>,
}

impl<T: Real> std::fmt::Debug for ForwardPlan<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ForwardPlan")
            .field("extent", &self.extent)
            .field("ext", &self.ext)
            .field("dual", &self.dual)
            .field("polar", &self.polar)
            .field("kmax", &self.kmax)
            .field("n_graded", &self.graded.len())
            .finish()
    }
}

pub fn make_forward_plan<T: Real>(cfg: &GeometryConfig) -> Result<ForwardPlan<T>> {
    ForwardPlan::new(cfg, OperatorOptions::default())
}

impl<T: Real> ForwardPlan<T> {
    pub fn new(cfg: &GeometryConfig, options: OperatorOptions) -> Result<Self> {
        cfg.validate()?;
        options.validate()?;
        let extent = ForwardExtent::new(cfg);
        let h = cfg.spacing();
        let ext = ExtendedBox::new(extent.half_width, h);
        let dt = cfg.dt();
        let dual = DualGrid::new(time_intervals(extent.t_new * options.radial_oversampling as f64, dt), dt)?;
        let n_phi = options.angular_oversampling * cfg.n_theta;
        let polar = PolarGrid::new(dual.len(), dual.dlambda, n_phi)?;
        let kmax = cfg.n_theta / 2;

        let lambdas = dual.lambdas();
        let table = BesselTable::new(&lambdas, kmax, false)?;
        let kernel = Array2::from_shape_fn((kmax + 1, dual.len()), |(k, j)| {
            T::lit(dual.dlambda * lambdas[j] * table.j[[k, j]])
        });

        let graded = GradedQuadrature::new(dual.lambda_max(), options.graded_factor * dual.len());
        let rows: Vec<Vec<f64>> = graded
            .nodes
            .iter()
            .map(|&l| bessel_j_row(l, 1))
            .collect::<Result<_>>()?;
        let graded_kernel = [0usize, 1].map(|k| {
            Array2::from_shape_fn((cfg.n_time, graded.len()), |(m, i)| {
                let l = graded.nodes[i];
                T::lit(graded.weights[i] * l * rows[i][k] * (l * m as f64 * dt).cos())
            })
        });

        let mut planner = FftPlanner::new();
        Ok(Self {
            cfg: cfg.clone(),
            options,
            extent,
            ext,
            dual,
            polar,
            kmax,
            spectrum: HalfSpectrumPlan::new(ext, &mut planner),
            cosine: CosineTransform::new(dual.intervals, &mut planner),
            kernel,
            graded_kernel,
            polar_fft: planner.plan_fft_forward(n_phi),
            synth_fft: planner.plan_fft_inverse(cfg.n_theta),
            arc: arc_mask(cfg),
            graded,
            pool: BufferPool::new(),
        })
    }

    /// f̂ on one polar circle of radius `lam`, using `f̂(−ξ) = conj f̂(ξ)` for the lower half.
    fn polar_circle(&self, spec: &HalfSpectrum<T>, lam: f64, out: &mut [Complex<T>]) {
        let n_phi = self.polar.n_phi;
        let half = n_phi / 2;
        for l in 0..half {
            let (s, c) = self.polar.phi(l).sin_cos();
            let v = bilinear_at(spec, lam * c, lam * s).unwrap_or_default();
            out[l] = v;
            out[l + half] = v.conj();
        }
    }

    /// Fourier coefficients `f̂_k(λ_j)`, `k = 0..=K`, stored row-major by λ.
    fn harmonics_on_uniform_grid(&self, spec: &HalfSpectrum<T>) -> Vec<Complex<T>> {
        let k1 = self.kmax + 1;
        let n_phi = self.polar.n_phi;
        let q1 = self.options.angular_oversampling == 1;
        let scale = T::one() / T::of_usize(n_phi);
        let mut out = self.pool.take(self.dual.len() * k1);
        out.par_chunks_mut(k1).enumerate().for_each(|(j, row)| {
            let mut line = vec![Complex::default(); n_phi];
            self.polar_circle(spec, self.polar.lambda(j), &mut line);
            self.polar_fft.process(&mut line);
            for (k, slot) in row.iter_mut().enumerate() {
                *slot = line[k] * scale;
            }
            if q1 {
                // bin K holds both ±K; each gets half
                row[self.kmax] = row[self.kmax] * T::lit(0.5);
            }
        });
        out
    }

    /// `g_0(t_m)` and `g_1(t_m)` from the graded rule.
    fn low_harmonics(&self, spec: &HalfSpectrum<T>) -> [Vec<Complex<T>>; 2] {
        let n_phi = self.polar.n_phi;
        let rot: Vec<Complex<T>> = (0..n_phi)
            .map(|l| {
                let (s, c) = self.polar.phi(l).sin_cos();
                Complex::new(T::lit(c), T::lit(-s))
            })
            .collect();
        let scale = T::one() / T::of_usize(n_phi);
        let coeffs: Vec<(Complex<T>, Complex<T>)> = self
            .graded
            .nodes
            .par_iter()
            .map(|&lam| {
                let mut line = vec![Complex::default(); n_phi];
                self.polar_circle(spec, lam, &mut line);
                let mut c0 = Complex::default();
                let mut c1 = Complex::default();
                for (v, r) in line.iter().zip(&rot) {
                    c0 += *v;
                    c1 += *v * *r;
                }
                (c0 * scale, c1 * scale)
            })
            .collect();
        let apply = |k: usize| -> Vec<Complex<T>> {
            let a = &self.graded_kernel[k];
            (0..self.cfg.n_time)
                .into_par_iter()
                .map(|m| {
                    let mut acc = Complex::<T>::default();
                    for (w, c) in a.row(m).iter().zip(&coeffs) {
                        acc += (if k == 0 { c.0 } else { c.1 }) * *w;
                    }
                    acc * i_pow::<T>(k)
                })
                .collect()
        };
        [apply(0), apply(1)]
    }

    /// Applies 𝒜.
    pub fn apply(&self, f: &ImageGrid<T>) -> Result<Sinogram<T>> {
        check_image(&self.cfg, f)?;
        let n_t = self.cfg.n_time;
        let n_theta = self.cfg.n_theta;
        let kmax = self.kmax;
        let k1 = kmax + 1;

        let spec = self.spectrum.compute(f);
        let fk = self.harmonics_on_uniform_grid(&spec);

        // g_k(t_m) for k = 0..=K, harmonic-major
        let mut gk = vec![Complex::<T>::default(); k1 * n_t];
        gk.par_chunks_mut(n_t).enumerate().skip(2).for_each(|(k, out)| {
            let len = self.dual.len();
            let kern = self.kernel.row(k);
            let input: Vec<Complex<T>> = (0..len).map(|j| fk[j * k1 + k] * kern[j]).collect();
            let mut y = vec![Complex::default(); len];
            self.cosine.apply(&input, &mut y).expect("plan-sized buffers");
            let phase = i_pow::<T>(k);
            for (o, v) in out.iter_mut().zip(&y) {
                *o = *v * phase;
            }
        });
        let [g0, g1] = self.low_harmonics(&spec);
        self.pool.give(fk);
        self.spectrum.recycle(spec);
        gk[..n_t].copy_from_slice(&g0);
        gk[n_t..2 * n_t].copy_from_slice(&g1);

        // Σ_k g_k e^{ikθ_l} per time sample
        let mut values = Array2::<T>::zeros((n_t, n_theta));
        let stats: Vec<(f64, f64)> = values
            .as_slice_mut()
            .expect("standard layout")
            .par_chunks_mut(n_theta)
            .enumerate()
            .map(|(m, row)| {
                let mut line = vec![Complex::<T>::default(); n_theta];
                line[0] = Complex::new(gk[m].re, T::zero());
                for k in 1..kmax {
                    let v = gk[k * n_t + m];
                    line[k] = v;
                    line[n_theta - k] = v.conj();
                }
                let nyq = gk[kmax * n_t + m];
                line[kmax] = Complex::new(nyq.re + nyq.re, T::zero());
                self.synth_fft.process(&mut line);
                let (mut re, mut im) = (0.0f64, 0.0f64);
                for (o, v) in row.iter_mut().zip(&line) {
                    *o = v.re;
                    re = re.max(v.re.to_f64_lossless().abs());
                    im = im.max(v.im.to_f64_lossless().abs());
                }
                (re, im)
            })
            .collect();
        let (re, im) = stats.iter().fold((0.0f64, 0.0f64), |a, b| (a.0.max(b.0), a.1.max(b.1)));
        residue_check("forward", if re > 0.0 { im / re } else { im })?;

        let mut g = Sinogram {
            values,
            dt: self.cfg.dt(),
            arc_mask: self.arc.clone(),
        };
        g.restrict_to_arc();
        Ok(g)
    }
}

/// `g = 𝒜f`.
pub fn forward<T: Real>(f: &ImageGrid<T>, plan: &ForwardPlan<T>) -> Result<Sinogram<T>> {
    plan.apply(f)
}
