//! Scalar abstraction shared by every numerical routine in the crate.
//!
//! All operators, grids and reconstructions are generic over [`Real`], which is
//! implemented for `f32` and `f64`. Precomputed tables (Bessel values, quadrature
//! weights) are always evaluated in `f64` and narrowed afterwards.

use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;

use num_traits::{Float, FloatConst, NumAssign};
use rustfft::FftNum;

/// Floating point type usable by the operators: `f32` or `f64`.
pub trait Real:
    Float
    + FloatConst
    + FftNum
    + NumAssign
    + Sum
    + Debug
    + Display
    + LowerExp
    + Default
    + Send
    + Sync
    + 'static
{
    /// Short dtype tag used in file headers.
    const DTYPE: &'static str;

    /// Converts an `f64` constant into `Self` (rounding for `f32`).
    fn lit(x: f64) -> Self;

    /// Widens to `f64`.
    fn to_f64_lossless(self) -> f64;

    /// Converts a count/index into `Self`.
    #[inline]
    fn of_usize(n: usize) -> Self {
        Self::lit(n as f64)
    }
}

impl Real for f32 {
    const DTYPE: &'static str = "f32";

    #[inline]
    fn lit(x: f64) -> Self {
        x as f32
    }

    #[inline]
    fn to_f64_lossless(self) -> f64 {
        self as f64
    }
}

impl Real for f64 {
    const DTYPE: &'static str = "f64";

    #[inline]
    fn lit(x: f64) -> Self {
        x
    }

    #[inline]
    fn to_f64_lossless(self) -> f64 {
        self
    }
}

/// Complex number over a [`Real`] scalar.
pub type Complex<T> = num_complex::Complex<T>;

/// `i^n` for a non-negative integer power.
#[inline]
pub fn i_pow<T: Real>(n: usize) -> Complex<T> {
    match n % 4 {
        0 => Complex::new(T::one(), T::zero()),
        1 => Complex::new(T::zero(), T::one()),
        2 => Complex::new(-T::one(), T::zero()),
        _ => Complex::new(T::zero(), -T::one()),
    }
}

/// `(-i)^n` for a non-negative integer power.
#[inline]
pub fn neg_i_pow<T: Real>(n: usize) -> Complex<T> {
    i_pow::<T>(n).conj()
}
