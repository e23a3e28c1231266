use std::f64::consts::TAU;

use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{next_fft_size, Sinogram};
use crate::scalar::{Complex, Real};

/// Frequency response η of the temporal filter 𝒟.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Eta {
    Identity,
    /// `exp(−σ²ω²/2)`.
    Gaussian { sigma: f64 },
    /// Explicit samples on the FFT frequency grid of the padded time axis
    /// (length [`DegradationSpec::padded_len`], FFT order).
    Samples { re: Vec<f64>, im: Vec<f64> },
}

/// `ℬg = 𝒟(e^{−γt} g)`, applied independently to each detector trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DegradationSpec {
    pub gamma: f64,
    pub eta: Eta,
}

impl Default for DegradationSpec {
    fn default() -> Self {
        Self {
            gamma: 0.0,
            eta: Eta::Identity,
        }
    }
}

impl DegradationSpec {
    /// Zero-padded FFT length used for `n_time` samples.
    pub fn padded_len(n_time: usize) -> usize {
        next_fft_size(2 * n_time)
    }

    /// Angular frequency of FFT bin `p` for the padded axis.
    pub fn frequency(p: usize, n_pad: usize, dt: f64) -> f64 {
        TAU * crate::spectral::signed(p, n_pad) as f64 / (n_pad as f64 * dt)
    }

    fn response(&self, n_pad: usize, dt: f64) -> Result<Vec<Complex<f64>>> {
        if !self.gamma.is_finite() || self.gamma < 0.0 {
            return Err(Error::InvalidArgument(format!("gamma must be finite and >= 0, got {}", self.gamma)));
        }
        let eta = match &self.eta {
            Eta::Identity => vec![Complex::new(1.0, 0.0); n_pad],
            Eta::Gaussian { sigma } => (0..n_pad)
                .map(|p| {
                    let w = Self::frequency(p, n_pad, dt);
                    Complex::new((-0.5 * sigma * sigma * w * w).exp(), 0.0)
                })
                .collect(),
            Eta::Samples { re, im } => {
                if re.len() != n_pad || im.len() != n_pad {
                    return Err(Error::InvalidArgument(format!(
                        "η needs {n_pad} samples on the padded frequency grid, got {} real / {} imaginary",
                        re.len(),
                        im.len()
                    )));
                }
                re.iter().zip(im).map(|(&a, &b)| Complex::new(a, b)).collect()
            }
        };
        if eta.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(Error::NonFinite("η"));
        }
        Ok(eta)
    }

    fn run<T: Real>(&self, g: &Sinogram<T>, adjoint: bool) -> Result<Sinogram<T>> {
        g.ensure_finite()?;
        let n_t = g.n_time();
        let n_pad = Self::padded_len(n_t);
        let mut eta = self.response(n_pad, g.dt)?;
        if adjoint {
            eta.iter_mut().for_each(|v| *v = v.conj());
        }
        let eta: Vec<Complex<T>> = eta
            .iter()
            .map(|v| Complex::new(T::lit(v.re / n_pad as f64), T::lit(v.im / n_pad as f64)))
            .collect();
        let damp: Vec<T> = (0..n_t).map(|m| T::lit((-self.gamma * m as f64 * g.dt).exp())).collect();
        let mut planner = FftPlanner::new();
        let fwd = planner.plan_fft_forward(n_pad);
        let inv = planner.plan_fft_inverse(n_pad);
        let mut out = g.clone();
        let mut buf = vec![Complex::<T>::default(); n_pad];
        for l in 0..g.n_theta() {
            if !g.arc_mask[l] {
                continue;
            }
            buf.fill(Complex::default());
            for m in 0..n_t {
                let v = g.values[[m, l]];
                buf[m] = Complex::new(if adjoint { v } else { v * damp[m] }, T::zero());
            }
            fwd.process(&mut buf);
            for (b, e) in buf.iter_mut().zip(&eta) {
                *b = *b * *e;
            }
            inv.process(&mut buf);
            for m in 0..n_t {
                let v = buf[m].re;
                out.values[[m, l]] = if adjoint { v * damp[m] } else { v };
            }
        }
        Ok(out)
    }
}

/// `ℬg`: damping by `e^{−γt}`, then the filter η on the zero-padded time axis.
pub fn degrade<T: Real>(g: &Sinogram<T>, spec: &DegradationSpec) -> Result<Sinogram<T>> {
    spec.run(g, false)
}

/// `ℬ*w` with respect to the plain Euclidean sum over samples: filter by `conj η`, then damp.
pub fn degrade_adjoint<T: Real>(w: &Sinogram<T>, spec: &DegradationSpec) -> Result<Sinogram<T>> {
    spec.run(w, true)
}
