use std::sync::Arc;

use ndarray::Array2;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};

use super::{check_sinogram, residue_check, OperatorOptions};
use crate::error::Result;
use crate::geometry::{time_intervals, AdjointExtent, ExtendedBox, GeometryConfig, ImageGrid, Sinogram};
use crate::scalar::{neg_i_pow, Complex, Real};
use crate::scratch::BufferPool;
use crate::special::BesselTable;
use crate::spectral::cosine::{CosineTransform, DualGrid, SineTransform};
use crate::spectral::fft2::ImageInverse;
use crate::spectral::polar::{polar_at, PolarGrid};

#[derive(Clone)]
enum TimeTransform<T: Real> {
    Cos(CosineTransform<T>),
    Sin(SineTransform<T>),
}

/// Shared machinery of the adjoint and the inverse: harmonic analysis of g, a time
/// transform against cos(λt) or sin(λt), Bessel weighting, angular synthesis on the
/// polar grid, polar→Cartesian resampling and a 2-D inverse FFT onto the image grid.
struct Backprojector<T: Real> {
    cfg: GeometryConfig,
    options: OperatorOptions,
    extent: AdjointExtent,
    ext: ExtendedBox,
    dual: DualGrid,
    polar: PolarGrid,
    kmax: usize,
    transform: TimeTransform<T>,
    /// `c·dt·B_k(λ_j)` with B = J or J′ and c the harmonic-independent constant.
    weight: Array2<T>,
    analysis: Arc<dyn Fft<T>>,
    synthesis: Arc<dyn Fft<T>>,
    image: ImageInverse<T>,
    pool: BufferPool<Complex<T>>,
}

impl<T: Real> Backprojector<T> {
    fn new(cfg: &GeometryConfig, options: OperatorOptions, derivative: bool) -> Result<Self> {
        cfg.validate()?;
        options.validate()?;
        let extent = AdjointExtent::new(cfg);
        let ext = ExtendedBox::new(extent.half_width, cfg.spacing());
        let dt = cfg.dt();
        let dual = DualGrid::new(time_intervals(extent.t_large * options.radial_oversampling as f64, dt), dt)?;
        let n_phi = options.angular_oversampling * cfg.n_theta;
        let polar = PolarGrid::new(dual.len(), dual.dlambda, n_phi)?;
        let kmax = cfg.n_theta / 2;
        let table = BesselTable::new(&dual.lambdas(), kmax, derivative)?;
        let (src, c) = match &table.jprime {
            Some(jp) => (jp, -2.0),
            None => (&table.j, 1.0),
        };
        let weight = src.mapv(|v| T::lit(c * dt * v));
        let mut planner = FftPlanner::new();
        let transform = if derivative {
            TimeTransform::Sin(SineTransform::new(dual.intervals, &mut planner))
        } else {
            TimeTransform::Cos(CosineTransform::new(dual.intervals, &mut planner))
        };
        Ok(Self {
            cfg: cfg.clone(),
            options,
            extent,
            ext,
            dual,
            polar,
            kmax,
            transform,
            weight,
            analysis: planner.plan_fft_forward(cfg.n_theta),
            synthesis: planner.plan_fft_inverse(n_phi),
            image: ImageInverse::new(ext, &mut planner),
            pool: BufferPool::new(),
        })
    }

    /// `g_k(t_m)·w_m` for k = 0..=K, harmonic-major, zero-extended to M+1 samples.
    fn harmonics(&self, g: &Sinogram<T>) -> Vec<Complex<T>> {
        let n_t = self.cfg.n_time;
        let n_theta = self.cfg.n_theta;
        let k1 = self.kmax + 1;
        let len = self.dual.len();
        let scale = T::one() / T::of_usize(n_theta);
        let mut by_time = vec![Complex::<T>::default(); n_t * k1];
        by_time.par_chunks_mut(k1).enumerate().for_each(|(m, out)| {
            let mut line: Vec<Complex<T>> = g.values.row(m).iter().map(|&v| Complex::new(v, T::zero())).collect();
            self.analysis.process(&mut line);
            // DCT-I supplies the ½ at t = 0; the ½ at t = T is applied here
            let w = if m + 1 == n_t { T::lit(0.5) } else { T::one() } * scale;
            for (k, o) in out.iter_mut().enumerate() {
                *o = line[k] * w;
            }
            // the Nyquist bin is shared by ±K
            out[self.kmax] = out[self.kmax] * T::lit(0.5);
        });
        let mut out = self.pool.take(k1 * len);
        out.par_chunks_mut(len).enumerate().for_each(|(k, row)| {
            for m in 0..n_t {
                row[m] = by_time[m * k1 + k];
            }
        });
        out
    }

    /// Polar samples `p̂(λ_j, φ_l)`, row-major by λ.
    fn polar_values(&self, g: &Sinogram<T>) -> Array2<Complex<T>> {
        let len = self.dual.len();
        let k1 = self.kmax + 1;
        let gk = self.harmonics(g);

        // transform in time and weight: ĉ_k(λ_j), harmonic-major
        let mut ck = self.pool.take(k1 * len);
        ck.par_chunks_mut(len).enumerate().for_each(|(k, out)| {
            let input = &gk[k * len..(k + 1) * len];
            match &self.transform {
                TimeTransform::Cos(c) => c.apply(input, out),
                TimeTransform::Sin(s) => s.apply(input, out),
            }
            .expect("plan-sized buffers");
            let phase = neg_i_pow::<T>(k);
            let w = self.weight.row(k);
            for (o, wj) in out.iter_mut().zip(w.iter()) {
                *o = *o * phase * *wj;
            }
        });

        // Σ_k ĉ_k e^{ikφ} with ĉ_{−k} = (−1)^k conj ĉ_k
        let n_phi = self.polar.n_phi;
        let kmax = self.kmax;
        self.pool.give(gk);
        let mut values = self.pool.take(len * n_phi);
        values
            .par_chunks_mut(n_phi)
            .enumerate()
            .for_each(|(j, row)| {
                let mut line = vec![Complex::<T>::default(); n_phi];
                for k in 0..=kmax {
                    let v = ck[k * len + j];
                    let mirrored = if k % 2 == 0 { v.conj() } else { -v.conj() };
                    if k == 0 {
                        line[0] = v;
                    } else {
                        line[k] += v;
                        line[n_phi - k] += mirrored;
                    }
                }
                self.synthesis.process(&mut line);
                for (o, v) in row.iter_mut().zip(&line) {
                    *o = *v;
                }
            });
        self.pool.give(ck);
        Array2::from_shape_vec((len, n_phi), values).expect("buffer sized to the polar grid")
    }

    /// Real field on the image grid and its imaginary residue ratio.
    fn field(&self, g: &Sinogram<T>) -> Result<(Array2<T>, f64)> {
        let g = check_sinogram(&self.cfg, g)?;
        let polar = self.polar_values(&g);
        let n = self.ext.n;
        let dxi = self.ext.dxi();
        let half = (n / 2) as isize;
        let mut spectrum = self.pool.take(n * n);
        // upper half plane m₀ ∈ [0, N/2) by interpolation, the rest by symmetry
        spectrum[..(n / 2) * n].par_chunks_mut(n).enumerate().for_each(|(r, row)| {
            let m0 = r as isize;
            for (c, o) in row.iter_mut().enumerate() {
                let m1 = crate::spectral::signed(c, n);
                if m1 == -half || (m0 == 0 && m1 < 0) {
                    continue;
                }
                if let Some(v) = polar_at(&polar, &self.polar, m1 as f64 * dxi, m0 as f64 * dxi) {
                    *o = v;
                }
            }
        });
        for r in 0..n / 2 {
            for c in 0..n {
                let m1 = crate::spectral::signed(c, n);
                if m1 == -half || (r == 0 && m1 <= 0) {
                    continue;
                }
                let v = spectrum[r * n + c];
                let rr = (n - r) % n;
                let cc = (n - c) % n;
                spectrum[rr * n + cc] = v.conj();
            }
        }
        let (raw, _) = polar.into_raw_vec_and_offset();
        self.pool.give(raw);
        let field = self.image.apply(&mut spectrum, self.cfg.n_image);
        self.pool.give(spectrum);
        Ok(field)
    }
}

/// Precomputed state for [`adjoint`].
pub struct AdjointPlan<T: Real>(Backprojector<T>);

/// Precomputed state for [`inverse`].
pub struct InversePlan<T: Real> {
    inner: Backprojector<T>,
    /// Image nodes of the annulus `support_radius <= |x| <= 1`.
    annulus: Vec<(usize, usize)>,
}

macro_rules! plan_accessors {
    ($t:ident, $($p:tt)+) => {
        impl<T: Real> $t<T> {
            pub fn cfg(&self) -> &GeometryConfig { &self.$($p)+.cfg }
            pub fn options(&self) -> &OperatorOptions { &self.$($p)+.options }
            pub fn extent(&self) -> &AdjointExtent { &self.$($p)+.extent }
            pub fn ext(&self) -> &ExtendedBox { &self.$($p)+.ext }
            pub fn dual(&self) -> &DualGrid { &self.$($p)+.dual }
            pub fn polar(&self) -> &PolarGrid { &self.$($p)+.polar }
            pub fn kmax(&self) -> usize { self.$($p)+.kmax }
        }

        impl<T: Real> std::fmt::Debug for $t<T> {
            fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
                f.debug_struct(stringify!($t))
                    .field("extent", self.extent())
                    .field("ext", self.ext())
                    .field("dual", self.dual())
                    .field("polar", self.polar())
                    .finish()
            }
        }
    };
}
plan_accessors!(AdjointPlan, 0);
plan_accessors!(InversePlan, inner);

pub fn make_adjoint_plan<T: Real>(cfg: &GeometryConfig) -> Result<AdjointPlan<T>> {
    AdjointPlan::new(cfg, OperatorOptions::default())
}

pub fn make_inverse_plan<T: Real>(cfg: &GeometryConfig) -> Result<InversePlan<T>> {
    InversePlan::new(cfg, OperatorOptions::default())
}

impl<T: Real> AdjointPlan<T> {
    pub fn new(cfg: &GeometryConfig, options: OperatorOptions) -> Result<Self> {
        Ok(Self(Backprojector::new(cfg, options, false)?))
    }

    /// Applies 𝒜*.
    pub fn apply(&self, g: &Sinogram<T>) -> Result<ImageGrid<T>> {
        let (values, ratio) = self.0.field(g)?;
        residue_check("adjoint", ratio)?;
        let mut u = ImageGrid {
            values,
            half_width: self.0.cfg.half_width,
        };
        u.mask_disk(self.0.cfg.support_radius);
        Ok(u)
    }
}

impl<T: Real> InversePlan<T> {
    pub fn new(cfg: &GeometryConfig, options: OperatorOptions) -> Result<Self> {
        let inner = Backprojector::new(cfg, options, true)?;
        let grid = cfg.blank_image::<T>();
        let r0 = cfg.support_radius;
        let eps = 1e-12;
        let mut annulus = Vec::new();
        for i in 0..cfg.n_image {
            let y = grid.coord(i);
            for j in 0..cfg.n_image {
                let x = grid.coord(j);
                let r2 = x * x + y * y;
                if r2 >= r0 * r0 * (1.0 - eps) && r2 <= 1.0 + eps {
                    annulus.push((i, j));
                }
            }
        }
        Ok(Self { inner, annulus })
    }

    /// Number of grid nodes used to fix the constant C.
    pub fn annulus_size(&self) -> usize {
        self.annulus.len()
    }

    /// Applies 𝒜⁻¹, returning the image and the constant C that was added.
    pub fn apply_with_constant(&self, g: &Sinogram<T>) -> Result<(ImageGrid<T>, f64)> {
        let (mut values, ratio) = self.inner.field(g)?;
        residue_check("inverse", ratio)?;
        let sum: f64 = self.annulus.iter().map(|&(i, j)| values[[i, j]].to_f64_lossless()).sum();
        let c = if self.annulus.is_empty() { 0.0 } else { -sum / self.annulus.len() as f64 };
        let ct = T::lit(c);
        values.mapv_inplace(|v| v + ct);
        let mut f = ImageGrid {
            values,
            half_width: self.inner.cfg.half_width,
        };
        f.mask_disk(self.inner.cfg.support_radius);
        Ok((f, c))
    }

    pub fn apply(&self, g: &Sinogram<T>) -> Result<ImageGrid<T>> {
        self.apply_with_constant(g).map(|(f, _)| f)
    }
}

/// `u = 𝒜*g`.
pub fn adjoint<T: Real>(g: &Sinogram<T>, plan: &AdjointPlan<T>) -> Result<ImageGrid<T>> {
    plan.apply(g)
}

/// `f ≈ 𝒜⁻¹g`.
pub fn inverse<T: Real>(g: &Sinogram<T>, plan: &InversePlan<T>) -> Result<ImageGrid<T>> {
    plan.apply(g)
}
