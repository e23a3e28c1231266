use std::f64::consts::TAU;

use ndarray::Array2;

use super::fft2::HalfSpectrum;
use crate::error::{shape_err, Error, Result};
use crate::scalar::{Complex, Real};

/// Polar nodes `ξ = λ_j (cos φ_l, sin φ_l)`, `λ_j = j·Δλ` (`j < n_lambda`), `φ_l = 2πl/n_phi`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolarGrid {
    pub n_lambda: usize,
    pub dlambda: f64,
    pub n_phi: usize,
}

impl PolarGrid {
    pub fn new(n_lambda: usize, dlambda: f64, n_phi: usize) -> Result<Self> {
        if n_lambda < 2 || n_phi < 2 || n_phi % 2 != 0 || !(dlambda > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "polar grid needs n_lambda >= 2, even n_phi and dλ > 0 (got {n_lambda}, {n_phi}, {dlambda})"
            )));
        }
        Ok(Self { n_lambda, dlambda, n_phi })
    }

    pub fn lambda(&self, j: usize) -> f64 {
        j as f64 * self.dlambda
    }

    pub fn lambda_max(&self) -> f64 {
        self.lambda(self.n_lambda - 1)
    }

    pub fn phi(&self, l: usize) -> f64 {
        TAU * l as f64 / self.n_phi as f64
    }
}

/// Spectrum samples on a [`PolarGrid`], `values[[j, l]]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PolarSpectrum<T> {
    pub grid: PolarGrid,
    pub values: Array2<Complex<T>>,
}

/// What to do with polar nodes that fall outside the Cartesian grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outside {
    Error,
    Zero,
}

/// Read access to a Cartesian spectrum by signed indices (`m₀` along ξ₂, `m₁` along ξ₁).
pub trait CartesianSpectrum<T> {
    fn n(&self) -> usize;
    fn dxi(&self) -> f64;
    fn at(&self, m0: isize, m1: isize) -> Complex<T>;
}

/// A full spectrum in FFT order together with its spacing.
#[derive(Debug, Clone, Copy)]
pub struct FullSpectrum<'a, T> {
    pub values: &'a Array2<Complex<T>>,
    pub dxi: f64,
}

impl<T: Real> CartesianSpectrum<T> for FullSpectrum<'_, T> {
    fn n(&self) -> usize {
        self.values.nrows()
    }

    fn dxi(&self) -> f64 {
        self.dxi
    }

    #[inline]
    fn at(&self, m0: isize, m1: isize) -> Complex<T> {
        let n = self.n();
        self.values[[super::bin(m0, n), super::bin(m1, n)]]
    }
}

impl<T: Real> CartesianSpectrum<T> for HalfSpectrum<T> {
    fn n(&self) -> usize {
        self.n
    }

    fn dxi(&self) -> f64 {
        self.dxi
    }

    #[inline]
    fn at(&self, m0: isize, m1: isize) -> Complex<T> {
        self.get(m0, m1)
    }
}

/// Bilinear value at `ξ`, or `None` outside the interpolation hull.
#[inline]
pub(crate) fn bilinear_at<T: Real, S: CartesianSpectrum<T>>(src: &S, xi1: f64, xi2: f64) -> Option<Complex<T>> {
    let n = src.n() as f64;
    let lim = n / 2.0 - 1.0;
    let u = xi1 / src.dxi();
    let v = xi2 / src.dxi();
    if u < -n / 2.0 || v < -n / 2.0 || u > lim || v > lim {
        return None;
    }
    let i1 = (u.floor() as isize).min(lim as isize - 1);
    let i0 = (v.floor() as isize).min(lim as isize - 1);
    let a = T::lit(u - i1 as f64);
    let b = T::lit(v - i0 as f64);
    let one = T::one();
    let c00 = src.at(i0, i1);
    let c01 = src.at(i0, i1 + 1);
    let c10 = src.at(i0 + 1, i1);
    let c11 = src.at(i0 + 1, i1 + 1);
    Some((c00 * (one - a) + c01 * a) * (one - b) + (c10 * (one - a) + c11 * a) * b)
}

/// Bilinear resampling of a Cartesian spectrum onto a polar grid.
pub fn resample_cart_to_polar<T: Real, S: CartesianSpectrum<T>>(
    src: &S,
    grid: PolarGrid,
    outside: Outside,
) -> Result<PolarSpectrum<T>> {
    let mut values = Array2::zeros((grid.n_lambda, grid.n_phi));
    let trig: Vec<(f64, f64)> = (0..grid.n_phi).map(|l| grid.phi(l).sin_cos()).collect();
    for j in 0..grid.n_lambda {
        let lam = grid.lambda(j);
        for (l, &(s, c)) in trig.iter().enumerate() {
            match bilinear_at(src, lam * c, lam * s) {
                Some(v) => values[[j, l]] = v,
                None if outside == Outside::Zero => {}
                None => {
                    return Err(Error::InvalidArgument(format!(
                        "polar node λ={lam:.4}, φ={:.4} lies outside the Cartesian grid",
                        grid.phi(l)
                    )))
                }
            }
        }
    }
    Ok(PolarSpectrum { grid, values })
}

/// Bilinear value of a polar spectrum at `ξ`; periodic in φ, `None` beyond λ_max.
#[inline]
pub(crate) fn polar_at<T: Real>(values: &Array2<Complex<T>>, grid: &PolarGrid, xi1: f64, xi2: f64) -> Option<Complex<T>> {
    let lam = (xi1 * xi1 + xi2 * xi2).sqrt();
    let r = lam / grid.dlambda;
    let top = (grid.n_lambda - 1) as f64;
    if r > top * (1.0 + 1e-12) {
        return None;
    }
    let j0 = (r.floor() as usize).min(grid.n_lambda - 2);
    let a = T::lit((r - j0 as f64).min(1.0));
    let mut phi = xi2.atan2(xi1);
    if phi < 0.0 {
        phi += TAU;
    }
    let p = phi * grid.n_phi as f64 / TAU;
    let l0 = (p.floor() as usize) % grid.n_phi;
    let l1 = (l0 + 1) % grid.n_phi;
    let b = T::lit(p - p.floor());
    let one = T::one();
    let lo = values[[j0, l0]] * (one - b) + values[[j0, l1]] * b;
    let hi = values[[j0 + 1, l0]] * (one - b) + values[[j0 + 1, l1]] * b;
    Some(lo * (one - a) + hi * a)
}

/// Bilinear resampling (in λ and φ) of a polar spectrum onto the `n × n` Cartesian grid
/// with spacing `dxi`, FFT order. Nodes with `|ξ| > λ_max` and the Nyquist row/column get 0.
pub fn resample_polar_to_cart<T: Real>(polar: &PolarSpectrum<T>, n: usize, dxi: f64) -> Result<Array2<Complex<T>>> {
    let g = polar.grid;
    if polar.values.dim() != (g.n_lambda, g.n_phi) {
        return Err(shape_err((g.n_lambda, g.n_phi), polar.values.dim()));
    }
    let mut out = Array2::zeros((n, n));
    let half = (n / 2) as isize;
    for r in 0..n {
        let m0 = super::signed(r, n);
        if m0 == -half {
            continue;
        }
        for c in 0..n {
            let m1 = super::signed(c, n);
            if m1 == -half {
                continue;
            }
            if let Some(v) = polar_at(&polar.values, &g, m1 as f64 * dxi, m0 as f64 * dxi) {
                out[[r, c]] = v;
            }
        }
    }
    Ok(out)
}
