use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{AdjointPlan, ForwardPlan};
use crate::error::{Error, Result};
use crate::geometry::ImageGrid;
use crate::scalar::Real;

/// ‖𝒜‖ estimated by power iteration on 𝒜*𝒜 from a seeded random start, using the
/// image and sinogram inner products of the discretization.
pub fn operator_norm<T: Real>(fwd: &ForwardPlan<T>, adj: &AdjointPlan<T>, iters: usize, seed: u64) -> Result<f64> {
    if iters < 10 {
        return Err(Error::InvalidArgument(format!("power iteration needs at least 10 steps, got {iters}")));
    }
    let cfg = &fwd.cfg;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = cfg.blank_image::<T>();
    x.values.mapv_inplace(|_| T::lit(StandardNormal.sample(&mut rng)));
    x.mask_disk(cfg.support_radius);
    normalize(&mut x)?;
    let mut rayleigh = 0.0;
    for _ in 0..iters {
        let y = adj.apply(&fwd.apply(&x)?)?;
        rayleigh = x.dot(&y);
        x = y;
        normalize(&mut x)?;
    }
    Ok(rayleigh.max(0.0).sqrt())
}

fn normalize<T: Real>(x: &mut ImageGrid<T>) -> Result<()> {
    let n = x.dot(x).sqrt();
    if !(n > 0.0) || !n.is_finite() {
        return Err(Error::InvalidArgument("power iteration collapsed to zero".into()));
    }
    let s = T::lit(1.0 / n);
    x.values.mapv_inplace(|v| v * s);
    Ok(())
}
