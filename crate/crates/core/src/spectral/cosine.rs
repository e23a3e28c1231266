use std::f64::consts::PI;
use std::sync::Arc;

use rustfft::{Fft, FftPlanner};

use crate::error::{shape_err, Error, Result};
use crate::scalar::{Complex, Real};

/// Paired grids `t_m = m·dt` and `λ_j = j·Δλ`, `m, j = 0..=M`, with `Δλ·dt = π/M`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DualGrid {
    pub intervals: usize,
    pub dt: f64,
    pub dlambda: f64,
}

impl DualGrid {
    pub fn new(intervals: usize, dt: f64) -> Result<Self> {
        Self::from_parts(intervals, dt, PI / (intervals as f64 * dt))
    }

    /// Validates an externally supplied pairing.
    pub fn from_parts(intervals: usize, dt: f64, dlambda: f64) -> Result<Self> {
        if intervals < 2 || !(dt > 0.0) || !(dlambda > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "dual grid needs M >= 2 and positive steps (M={intervals}, dt={dt}, dλ={dlambda})"
            )));
        }
        let want = PI / intervals as f64;
        if ((dlambda * dt - want) / want).abs() > 1e-12 {
            return Err(Error::InvalidArgument(format!(
                "dλ·dt = {} but π/M = {want}",
                dlambda * dt
            )));
        }
        Ok(Self { intervals, dt, dlambda })
    }

    pub fn len(&self) -> usize {
        self.intervals + 1
    }

    pub fn lambda(&self, j: usize) -> f64 {
        j as f64 * self.dlambda
    }

    pub fn lambda_max(&self) -> f64 {
        self.intervals as f64 * self.dlambda
    }

    pub fn lambdas(&self) -> Vec<f64> {
        (0..self.len()).map(|j| self.lambda(j)).collect()
    }
}

/// Type-I cosine transform `y_m = Σ_{j=0}^{M} w_j x_j cos(πjm/M)` with `w_0 = w_M = ½`.
///
/// Evaluated through one complex FFT of length 2M on the even extension.
#[derive(Clone)]
pub struct CosineTransform<T: Real> {
    m: usize,
    fft: Arc<dyn Fft<T>>,
}

/// Type-I sine transform `y_m = Σ_{j=1}^{M-1} x_j sin(πjm/M)`; entries 0 and M are ignored
/// on input and zero on output.
#[derive(Clone)]
pub struct SineTransform<T: Real> {
    m: usize,
    fft: Arc<dyn Fft<T>>,
}

impl<T: Real> std::fmt::Debug for CosineTransform<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "CosineTransform(M={})", self.m)
    }
}

impl<T: Real> std::fmt::Debug for SineTransform<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "SineTransform(M={})", self.m)
    }
}

impl<T: Real> CosineTransform<T> {
    pub fn new(intervals: usize, planner: &mut FftPlanner<T>) -> Self {
        Self {
            m: intervals,
            fft: planner.plan_fft_forward(2 * intervals),
        }
    }

    pub fn len(&self) -> usize {
        self.m + 1
    }

    /// Transforms `input` (length M+1) into `out` (length M+1).
    pub fn apply(&self, input: &[Complex<T>], out: &mut [Complex<T>]) -> Result<()> {
        let m = self.m;
        check_len(input, out, m + 1)?;
        let mut buf = vec![Complex::default(); 2 * m];
        buf[..=m].copy_from_slice(input);
        for j in 1..m {
            buf[2 * m - j] = input[j];
        }
        self.fft.process(&mut buf);
        let half = T::lit(0.5);
        for (o, z) in out.iter_mut().zip(&buf[..=m]) {
            *o = *z * half;
        }
        Ok(())
    }
}

impl<T: Real> SineTransform<T> {
    pub fn new(intervals: usize, planner: &mut FftPlanner<T>) -> Self {
        Self {
            m: intervals,
            fft: planner.plan_fft_forward(2 * intervals),
        }
    }

    pub fn len(&self) -> usize {
        self.m + 1
    }

    pub fn apply(&self, input: &[Complex<T>], out: &mut [Complex<T>]) -> Result<()> {
        let m = self.m;
        check_len(input, out, m + 1)?;
        let mut buf = vec![Complex::default(); 2 * m];
        for j in 1..m {
            buf[j] = input[j];
            buf[2 * m - j] = -input[j];
        }
        self.fft.process(&mut buf);
        // Z_m = −2i Σ x_j sin(πjm/M)
        let half = T::lit(0.5);
        for (o, z) in out.iter_mut().zip(&buf[..=m]) {
            *o = Complex::new(-z.im, z.re) * half;
        }
        out[0] = Complex::default();
        out[m] = Complex::default();
        Ok(())
    }
}

fn check_len<T>(input: &[T], out: &[T], n: usize) -> Result<()> {
    if input.len() != n {
        return Err(shape_err(n, input.len()));
    }
    if out.len() != n {
        return Err(shape_err(n, out.len()));
    }
    Ok(())
}
