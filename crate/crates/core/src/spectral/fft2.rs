use std::sync::Arc;

use ndarray::Array2;
use rustfft::{Fft, FftPlanner};

use crate::error::{shape_err, Error, Result};
use crate::geometry::{ExtendedBox, ImageGrid};
use crate::scalar::{Complex, Real};
use crate::scratch::BufferPool;

/// Samples of f̂ on the Cartesian frequency grid ξ = Δξ·(m₁, m₀), `m ∈ [−N/2, N/2)`,
/// returned in FFT order (`[[bin(m₀), bin(m₁)]]`, rows along ξ₂).
///
/// `image` is in the centered layout produced by [`crate::geometry::embed`].
pub fn fft2_continuous<T: Real>(image: &Array2<T>, ext: &ExtendedBox) -> Result<Array2<Complex<T>>> {
    let n = ext.n;
    if image.dim() != (n, n) {
        return Err(shape_err((n, n), image.dim()));
    }
    if image.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("fft2 input"));
    }
    let c = ext.center();
    // move the origin node to index 0
    let mut buf = Array2::from_shape_fn((n, n), |(i, j)| {
        Complex::new(image[[(i + c) % n, (j + c) % n]], T::zero())
    });
    let fft = FftPlanner::new().plan_fft_forward(n);
    fft2_in_place(&mut buf, &fft);
    let scale = T::lit(ext.spacing * ext.spacing / std::f64::consts::TAU);
    buf.mapv_inplace(|v| v * scale);
    Ok(buf)
}

/// Inverse of [`fft2_continuous`]: `(Δξ²/2π) Σ f̂(ξ) e^{iξ·x}`, returned in the centered layout.
pub fn ifft2_continuous<T: Real>(spectrum: &Array2<Complex<T>>, ext: &ExtendedBox) -> Result<Array2<Complex<T>>> {
    let n = ext.n;
    if spectrum.dim() != (n, n) {
        return Err(shape_err((n, n), spectrum.dim()));
    }
    let mut buf = spectrum.clone();
    let fft = FftPlanner::new().plan_fft_inverse(n);
    fft2_in_place(&mut buf, &fft);
    let dxi = ext.dxi();
    let scale = T::lit(dxi * dxi / std::f64::consts::TAU);
    let c = ext.center();
    Ok(Array2::from_shape_fn((n, n), |(i, j)| {
        buf[[(i + c) % n, (j + c) % n]] * scale
    }))
}

fn fft2_in_place<T: Real>(buf: &mut Array2<Complex<T>>, fft: &Arc<dyn Fft<T>>) {
    let n = buf.nrows();
    let mut scratch = vec![Complex::default(); fft.get_inplace_scratch_len()];
    for mut row in buf.rows_mut() {
        fft.process_with_scratch(row.as_slice_mut().expect("row-major"), &mut scratch);
    }
    let mut col = vec![Complex::default(); n];
    for j in 0..n {
        for i in 0..n {
            col[i] = buf[[i, j]];
        }
        fft.process_with_scratch(&mut col, &mut scratch);
        for i in 0..n {
            buf[[i, j]] = col[i];
        }
    }
}

/// Continuous-transform samples of a real image supported on a small centered
/// grid, zero-padded to `N×N`. Only the half plane `m₁ ∈ [0, N/2]` is stored;
/// the rest follows from `f̂(−ξ) = conj f̂(ξ)`.
///
/// Storage is column-major: `data[m₁ · N + bin(m₀)]`.
#[derive(Debug, Clone)]
pub struct HalfSpectrum<T> {
    pub n: usize,
    pub dxi: f64,
    data: Vec<Complex<T>>,
}

/// FFT plans for [`HalfSpectrum::compute`].
#[derive(Clone)]
pub struct HalfSpectrumPlan<T: Real> {
    ext: ExtendedBox,
    fwd: Arc<dyn Fft<T>>,
    pool: BufferPool<Complex<T>>,
}

impl<T: Real> std::fmt::Debug for HalfSpectrumPlan<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("HalfSpectrumPlan").field("ext", &self.ext).finish()
    }
}

impl<T: Real> HalfSpectrumPlan<T> {
    pub fn new(ext: ExtendedBox, planner: &mut FftPlanner<T>) -> Self {
        Self {
            ext,
            fwd: planner.plan_fft_forward(ext.n),
            pool: BufferPool::new(),
        }
    }

    pub fn ext(&self) -> &ExtendedBox {
        &self.ext
    }

    /// Hands a spectrum's storage back for reuse by later [`Self::compute`] calls.
    pub fn recycle(&self, spectrum: HalfSpectrum<T>) {
        self.pool.give(spectrum.data);
    }

    /// Transforms an image grid that embeds centered in the extended box.
    pub fn compute(&self, image: &ImageGrid<T>) -> HalfSpectrum<T> {
        let n = self.ext.n;
        let ni = image.n();
        let half = (ni - 1) / 2;
        let cols = n / 2 + 1;
        let mut scratch = vec![Complex::default(); self.fwd.get_inplace_scratch_len()];

        // transform the nonzero rows along x₁; keep bins 0..=N/2
        let mut rows = self.pool.take(ni * cols);
        let mut line = vec![Complex::<T>::default(); n];
        for i in 0..ni {
            line.fill(Complex::default());
            for j in 0..ni {
                let p = j as isize - half as isize;
                line[super::bin(p, n)] = Complex::new(image.values[[i, j]], T::zero());
            }
            self.fwd.process_with_scratch(&mut line, &mut scratch);
            rows[i * cols..(i + 1) * cols].copy_from_slice(&line[..cols]);
        }

        // then along x₂, one column per retained ξ₁ bin
        let scale = T::lit(self.ext.spacing * self.ext.spacing / std::f64::consts::TAU);
        let mut data = self.pool.take(cols * n);
        for (m1, out) in data.chunks_mut(n).enumerate() {
            for i in 0..ni {
                let p = i as isize - half as isize;
                out[super::bin(p, n)] = rows[i * cols + m1];
            }
            self.fwd.process_with_scratch(out, &mut scratch);
            for v in out.iter_mut() {
                *v = *v * scale;
            }
        }
        self.pool.give(rows);
        HalfSpectrum {
            n,
            dxi: self.ext.dxi(),
            data,
        }
    }
}

impl<T: Real> HalfSpectrum<T> {
    /// Value at signed frequency indices (m₀ along ξ₂, m₁ along ξ₁), wrapping periodically.
    #[inline]
    pub fn get(&self, m0: isize, m1: isize) -> Complex<T> {
        let n = self.n as isize;
        let a = m1.rem_euclid(n);
        let b = m0.rem_euclid(n);
        if a <= n / 2 {
            self.data[(a * n + b) as usize]
        } else {
            let a = n - a;
            let b = (n - b) % n;
            self.data[(a * n + b) as usize].conj()
        }
    }

    /// Expands to the full plane in FFT order.
    pub fn to_full(&self) -> Array2<Complex<T>> {
        let n = self.n;
        Array2::from_shape_fn((n, n), |(i, j)| {
            self.get(super::signed(i, n), super::signed(j, n))
        })
    }
}

/// Inverse 2-D transform of a full Cartesian spectrum (FFT order), evaluated only
/// on the `n_out × n_out` image grid centered at the origin. Returns the real part
/// and the ratio `max|Im| / max|Re|`.
pub(crate) struct ImageInverse<T: Real> {
    ext: ExtendedBox,
    inv: Arc<dyn Fft<T>>,
}

impl<T: Real> ImageInverse<T> {
    pub fn new(ext: ExtendedBox, planner: &mut FftPlanner<T>) -> Self {
        Self {
            ext,
            inv: planner.plan_fft_inverse(ext.n),
        }
    }

    /// `spectrum` is row-major `[bin(m₀)][bin(m₁)]` and is overwritten.
    pub fn apply(&self, spectrum: &mut [Complex<T>], n_out: usize) -> (Array2<T>, f64) {
        let n = self.ext.n;
        debug_assert_eq!(spectrum.len(), n * n);
        let mut scratch = vec![Complex::default(); self.inv.get_inplace_scratch_len()];
        for row in spectrum.chunks_mut(n) {
            self.inv.process_with_scratch(row, &mut scratch);
        }
        let half = (n_out - 1) / 2;
        let dxi = self.ext.dxi();
        let scale = T::lit(dxi * dxi / std::f64::consts::TAU);
        let mut out = Array2::zeros((n_out, n_out));
        let mut col = vec![Complex::<T>::default(); n];
        let (mut max_re, mut max_im) = (0.0f64, 0.0f64);
        for j in 0..n_out {
            let c = super::bin(j as isize - half as isize, n);
            for (r, v) in col.iter_mut().enumerate() {
                *v = spectrum[r * n + c];
            }
            self.inv.process_with_scratch(&mut col, &mut scratch);
            for i in 0..n_out {
                let v = col[super::bin(i as isize - half as isize, n)] * scale;
                max_re = max_re.max(v.re.to_f64_lossless().abs());
                max_im = max_im.max(v.im.to_f64_lossless().abs());
                out[[i, j]] = v.re;
            }
        }
        let ratio = if max_re > 0.0 { max_im / max_re } else { max_im };
        (out, ratio)
    }
}
