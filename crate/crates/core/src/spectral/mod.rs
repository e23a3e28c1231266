//! Discrete transforms used by the fast operators.
//!
//! * [`fft2`]: 2-D FFT approximating the continuous transform
//!   `f̂(ξ) = (1/2π)∫ f(x) e^{−iξ·x} dx` and its inverse.
//! * [`polar`]: bilinear Cartesian ↔ polar resampling of spectra.
//! * [`angular`]: Fourier series in the angle, `g_k = (1/n)Σ_l g(θ_l) e^{−ikθ_l}`.
//! * [`cosine`]: type-I cosine and sine transforms pairing the λ and t grids.
//! * [`quadrature`]: graded quadrature for the lowest circular harmonics.

pub mod angular;
pub mod cosine;
pub mod fft2;
pub mod polar;
pub mod quadrature;

pub use angular::{angular_fft, angular_ifft, HarmonicStack};
pub use cosine::{CosineTransform, DualGrid, SineTransform};
pub use fft2::{fft2_continuous, ifft2_continuous, HalfSpectrum};
pub use polar::{resample_cart_to_polar, resample_polar_to_cart, PolarGrid, PolarSpectrum};
pub use quadrature::GradedQuadrature;

/// Maps a signed harmonic/frequency index onto its FFT bin.
#[inline]
pub(crate) fn bin(k: isize, n: usize) -> usize {
    k.rem_euclid(n as isize) as usize
}

/// Signed frequency of an FFT bin, in `[-n/2, n/2)`.
#[inline]
pub(crate) fn signed(b: usize, n: usize) -> isize {
    if b < n / 2 {
        b as isize
    } else {
        b as isize - n as isize
    }
}
