use ndarray::{Array2, ArrayView2};
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::scalar::{Complex, Real};

/// Fourier coefficients in an angle, one row per harmonic bin (FFT order:
/// `k = 0, 1, …, n/2−1, −n/2, …, −1`), one column per sample along the other axis
/// (time or λ).
#[derive(Debug, Clone, PartialEq)]
pub struct HarmonicStack<T> {
    pub coeffs: Array2<Complex<T>>,
}

impl<T: Real> HarmonicStack<T> {
    pub fn zeros(n_harmonics: usize, len: usize) -> Self {
        Self {
            coeffs: Array2::zeros((n_harmonics, len)),
        }
    }

    pub fn n_harmonics(&self) -> usize {
        self.coeffs.nrows()
    }

    pub fn len(&self) -> usize {
        self.coeffs.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Coefficient row of signed harmonic `k`.
    pub fn harmonic(&self, k: isize) -> ndarray::ArrayView1<'_, Complex<T>> {
        self.coeffs.row(super::bin(k, self.n_harmonics()))
    }

    /// Largest `|c_k(s) − conj c_{−k}(s)|`, zero for stacks of real signals.
    pub fn symmetry_defect(&self) -> f64 {
        let n = self.n_harmonics();
        let mut worst = 0.0f64;
        for b in 0..n {
            let mb = (n - b) % n;
            for (a, c) in self.coeffs.row(b).iter().zip(self.coeffs.row(mb).iter()) {
                worst = worst.max((*a - c.conj()).norm().to_f64_lossless());
            }
        }
        worst
    }
}

/// `c_k = (1/n) Σ_l g(θ_l) e^{−ikθ_l}` for every row of `samples` (rows × angles).
pub fn angular_fft<T: Real>(samples: ArrayView2<'_, T>) -> Result<HarmonicStack<T>> {
    let complex = samples.mapv(|v| Complex::new(v, T::zero()));
    angular_fft_complex(complex.view())
}

pub(crate) fn angular_fft_complex<T: Real>(samples: ArrayView2<'_, Complex<T>>) -> Result<HarmonicStack<T>> {
    let (rows, n) = samples.dim();
    if n == 0 || n % 2 != 0 {
        return Err(Error::InvalidArgument(format!("angle count must be even and positive, got {n}")));
    }
    let fft = FftPlanner::new().plan_fft_forward(n);
    let scale = T::one() / T::of_usize(n);
    let mut out = Array2::zeros((n, rows));
    let mut line = vec![Complex::default(); n];
    for r in 0..rows {
        for (l, v) in line.iter_mut().enumerate() {
            *v = samples[[r, l]];
        }
        fft.process(&mut line);
        for (k, v) in line.iter().enumerate() {
            out[[k, r]] = *v * scale;
        }
    }
    Ok(HarmonicStack { coeffs: out })
}

/// Sums `Σ_k c_k e^{ikθ_l}` back to samples (rows × angles).
pub fn angular_ifft<T: Real>(stack: &HarmonicStack<T>) -> Array2<Complex<T>> {
    let n = stack.n_harmonics();
    let rows = stack.len();
    let fft = FftPlanner::new().plan_fft_inverse(n);
    let mut out = Array2::zeros((rows, n));
    let mut line = vec![Complex::default(); n];
    for r in 0..rows {
        for (k, v) in line.iter_mut().enumerate() {
            *v = stack.coeffs[[k, r]];
        }
        fft.process(&mut line);
        for (l, v) in line.iter().enumerate() {
            out[[r, l]] = *v;
        }
    }
    out
}
