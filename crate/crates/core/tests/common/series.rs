//! Ascending-series Bessel values in wide fixed point, exact in the argument.

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};
use tatfast::geometry::GeometryConfig;
use tatfast::operators::{AdjointPlan, ForwardPlan, OperatorOptions};

/// Fractional bits of the fixed-point format.
const P: u32 = 320;

/// `x/2` as an exact fixed-point integer (the f64 is a dyadic rational).
fn half_fixed(x: f64) -> BigInt {
    assert!(x > 0.0 && x.is_finite());
    let bits = x.to_bits();
    let exp = ((bits >> 52) & 0x7ff) as i64;
    let frac = bits & ((1u64 << 52) - 1);
    let (mant, e) = if exp == 0 { (frac, -1074) } else { (frac | (1u64 << 52), exp - 1075) };
    let shift = e - 1 + P as i64;
    let m = BigInt::from(mant);
    if shift >= 0 {
        m << shift as usize
    } else {
        m >> (-shift) as usize
    }
}

fn mul(a: &BigInt, b: &BigInt) -> BigInt {
    (a * b) >> P as usize
}

fn to_f64(v: &BigInt) -> f64 {
    (v >> (P as usize - 64)).to_f64().unwrap() / 2f64.powi(64)
}

/// `J_k(x) = Σ_m (−1)^m (x/2)^{2m+k} / (m!(m+k)!)`, summed until the terms vanish
/// at the working precision.
pub fn series_j(x: f64, k: usize) -> f64 {
    if x == 0.0 {
        return if k == 0 { 1.0 } else { 0.0 };
    }
    let half = half_fixed(x);
    let q = mul(&half, &half);
    let mut lead: BigInt = BigInt::one() << P as usize;
    for j in 1..=k {
        lead = mul(&lead, &half) / j;
    }
    let mut term = lead.clone();
    let mut sum = lead;
    let mut m = 0u64;
    loop {
        m += 1;
        term = -mul(&term, &q) / (m * (m + k as u64));
        sum += &term;
        if term.is_zero() || (m as f64 > x && term.abs().bits() < 8) {
            break;
        }
    }
    to_f64(&sum)
}

/// Largest radial frequency touched by the default plans.
pub fn plan_lambda_max() -> f64 {
    let cfg = GeometryConfig::default();
    let o = OperatorOptions::default();
    let f = ForwardPlan::<f64>::new(&cfg, o).unwrap().polar.lambda_max();
    let a = AdjointPlan::<f64>::new(&cfg, o).unwrap().polar().lambda_max();
    f.max(a)
}
