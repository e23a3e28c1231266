//! Bessel functions of the first kind, J_k(λ), for integer orders and
//! non-negative real arguments, plus the derivative table J′_k.

use ndarray::Array2;

use crate::error::{Error, Result};

/// Below this argument the ascending series is used instead of Miller's recurrence.
const SERIES_CUTOFF: f64 = 1.0;

/// Values are rescaled during the downward sweep once they exceed this magnitude.
const RESCALE_AT: f64 = 1e250;

/// Returns `J_0(λ), …, J_kmax(λ)`.
///
/// Uses Miller's downward recurrence normalized by `J_0 + 2 Σ J_2m = 1`, and the
/// ascending power series when `λ < 1`.
pub fn bessel_j_row(lambda: f64, kmax: usize) -> Result<Vec<f64>> {
    if !lambda.is_finite() {
        return Err(Error::InvalidArgument(format!("Bessel argument must be finite, got {lambda}")));
    }
    if lambda < 0.0 {
        return Err(Error::InvalidArgument(format!("Bessel argument must be >= 0, got {lambda}")));
    }
    let mut out = vec![0.0; kmax + 1];
    if lambda == 0.0 {
        out[0] = 1.0;
        return Ok(out);
    }
    if lambda < SERIES_CUTOFF {
        series_row(lambda, &mut out);
    } else {
        miller_row(lambda, &mut out);
    }
    Ok(out)
}

fn series_row(x: f64, out: &mut [f64]) {
    let half = 0.5 * x;
    let q = -half * half;
    // leading term (x/2)^k / k!
    let mut lead = 1.0;
    for (k, slot) in out.iter_mut().enumerate() {
        if k > 0 {
            lead *= half / k as f64;
        }
        if lead == 0.0 {
            break;
        }
        let mut term = lead;
        let mut sum = lead;
        let mut m = 0usize;
        loop {
            m += 1;
            term *= q / (m as f64 * (m + k) as f64);
            sum += term;
            if term.abs() <= 1e-17 * sum.abs() {
                break;
            }
        }
        *slot = sum;
    }
}

fn miller_row(x: f64, out: &mut [f64]) {
    let kmax = out.len() - 1;
    let mut start = kmax + 20.max((1.5 * x).ceil() as usize);
    start += start % 2;
    let two_over_x = 2.0 / x;

    let mut above = 0.0; // j_{k+1}
    let mut cur = 1e-30; // j_k, starting at k = start
    let mut norm = 0.0; // j_0 + 2 Σ j_2m accumulated on the way down
    for k in (0..=start).rev() {
        if k <= kmax {
            out[k] = cur;
        }
        if k % 2 == 0 {
            norm += if k == 0 { cur } else { 2.0 * cur };
        }
        if k == 0 {
            break;
        }
        let below = k as f64 * two_over_x * cur - above;
        above = cur;
        cur = below;
        if cur.abs() > RESCALE_AT {
            let s = 1.0 / RESCALE_AT;
            cur *= s;
            above *= s;
            norm *= s;
            for v in out.iter_mut().skip(k.saturating_sub(1)) {
                *v *= s;
            }
        }
    }
    let inv = 1.0 / norm;
    for v in out.iter_mut() {
        *v *= inv;
    }
}

/// J′_m from a table holding orders `0..=K+1` (rows), returning orders `0..=K`.
///
/// `J′_0 = −J_1` and `J′_m = (J_{m−1} − J_{m+1})/2`.
pub fn bessel_jprime_from_table(j: &Array2<f64>) -> Result<Array2<f64>> {
    let rows = j.nrows();
    if rows < 2 {
        return Err(Error::InvalidArgument(
            "derivative table needs at least one order beyond the largest requested".into(),
        ));
    }
    let kmax = rows - 2;
    let cols = j.ncols();
    let mut out = Array2::zeros((kmax + 1, cols));
    for c in 0..cols {
        out[[0, c]] = -j[[1, c]];
        for m in 1..=kmax {
            out[[m, c]] = 0.5 * (j[[m - 1, c]] - j[[m + 1, c]]);
        }
    }
    Ok(out)
}

/// J_k(λ_j) (and optionally J′_k(λ_j)) for `k = 0..=kmax` over a radial grid.
#[derive(Debug, Clone)]
pub struct BesselTable {
    /// `j[[k, idx]] = J_k(lambdas[idx])`.
    pub j: Array2<f64>,
    pub jprime: Option<Array2<f64>>,
    pub kmax: usize,
    pub lambdas: Vec<f64>,
}

impl BesselTable {
    pub fn new(lambdas: &[f64], kmax: usize, with_derivative: bool) -> Result<Self> {
        let orders = kmax + 1 + usize::from(with_derivative);
        let mut full = Array2::zeros((orders, lambdas.len()));
        for (c, &lam) in lambdas.iter().enumerate() {
            let row = bessel_j_row(lam, orders - 1)?;
            for (k, v) in row.into_iter().enumerate() {
                full[[k, c]] = v;
            }
        }
        let jprime = if with_derivative {
            Some(bessel_jprime_from_table(&full)?)
        } else {
            None
        };
        let j = full.slice(ndarray::s![..=kmax, ..]).to_owned();
        Ok(Self {
            j,
            jprime,
            kmax,
            lambdas: lambdas.to_vec(),
        })
    }

    /// Stable key identifying the radial grid and order range, for on-disk caching.
    pub fn cache_key(&self) -> String {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for v in &self.lambdas {
            for b in v.to_bits().to_le_bytes() {
                h ^= b as u64;
                h = h.wrapping_mul(0x0100_0000_01b3);
            }
        }
        format!("k{}-d{}-{:016x}", self.kmax, u8::from(self.jprime.is_some()), h)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Plain f64 ascending series, valid for small arguments.
    fn series(k: usize, x: f64) -> f64 {
        let mut term = (0.5 * x).powi(k as i32) / (1..=k).map(|i| i as f64).product::<f64>();
        let mut sum = term;
        for m in 1..200 {
            term *= -(0.25 * x * x) / (m as f64 * (m + k) as f64);
            sum += term;
        }
        sum
    }

    #[test]
    fn values_at_zero() {
        assert_eq!(bessel_j_row(0.0, 4).unwrap(), vec![1.0, 0.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn rejects_bad_arguments() {
        assert!(bessel_j_row(-1.0, 3).is_err());
        assert!(bessel_j_row(f64::NAN, 3).is_err());
        assert!(bessel_j_row(f64::INFINITY, 3).is_err());
    }

    #[test]
    fn first_zero_of_j0() {
        let row = bessel_j_row(2.404825557695773, 0).unwrap();
        assert!(row[0].abs() < 1e-10, "{}", row[0]);
    }

    #[test]
    fn j1_at_one_matches_series() {
        let row = bessel_j_row(1.0, 3).unwrap();
        assert!((row[1] - series(1, 1.0)).abs() < 1e-12);
        // 0.4400505857449335 (A&S table 9.1)
        assert!((row[1] - 0.440_050_585_744_933_5).abs() < 1e-14);
    }

    #[test]
    fn both_branches_agree_near_cutoff() {
        let below = bessel_j_row(0.999_999, 10).unwrap();
        let above = bessel_j_row(1.000_001, 10).unwrap();
        for k in 0..=10 {
            assert!((below[k] - above[k]).abs() < 1e-5);
            assert!((above[k] - series(k, 1.000_001)).abs() < 1e-13);
        }
    }

    #[test]
    fn normalization_identity() {
        for &x in &[0.3, 1.0, 7.5, 42.0, 150.0, 402.0] {
            let row = bessel_j_row(x, 700).unwrap();
            let s: f64 = row[0] + 2.0 * row.iter().skip(2).step_by(2).sum::<f64>();
            assert!((s - 1.0).abs() < 1e-10, "x={x}: {s}");
            assert!(row.iter().all(|v| v.abs() <= 1.0));
        }
    }

    #[test]
    fn upward_recurrence_in_stable_regime() {
        for &x in &[5.0, 33.3, 120.0, 400.0] {
            let row = bessel_j_row(x, 300).unwrap();
            for k in 1..(x as usize).min(299) {
                let up = 2.0 * k as f64 / x * row[k] - row[k - 1];
                assert!((up - row[k + 1]).abs() < 1e-8, "x={x} k={k}");
            }
        }
    }

    #[test]
    fn tail_decay() {
        for &x in &[2.0, 20.0, 200.0] {
            let row = bessel_j_row(x, 500).unwrap();
            for k in 0..row.len() - 2 {
                if row[k].abs() <= 1e-14 {
                    assert!(row[k + 2].abs() <= 1e-12);
                }
            }
        }
    }

    #[test]
    fn derivative_identities() {
        let lam = [0.0, 1.0, 3.7];
        let t = BesselTable::new(&lam, 5, true).unwrap();
        let jp = t.jprime.as_ref().unwrap();
        assert_eq!(jp[[0, 0]], 0.0);
        assert!((jp[[1, 0]] - 0.5).abs() < 1e-16);
        for c in 0..lam.len() {
            assert_eq!(jp[[0, c]] + t.j[[1, c]], 0.0);
        }
        // centered difference of the series at λ = 1, order 2
        let d = 1e-5;
        let fd = (series(2, 1.0 + d) - series(2, 1.0 - d)) / (2.0 * d);
        assert!((jp[[2, 1]] - fd).abs() < 1e-8);
    }

    #[test]
    fn derivative_needs_extra_order() {
        let one_row = Array2::<f64>::zeros((1, 4));
        assert!(bessel_jprime_from_table(&one_row).is_err());
    }

    #[test]
    fn cache_key_depends_on_grid() {
        let a = BesselTable::new(&[0.0, 1.0], 3, false).unwrap();
        let b = BesselTable::new(&[0.0, 1.5], 3, false).unwrap();
        assert_ne!(a.cache_key(), b.cache_key());
    }
}
