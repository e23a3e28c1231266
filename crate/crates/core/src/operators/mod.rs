//! Fast operators: the forward map 𝒜, its adjoint 𝒜*, the approximate inverse 𝒜⁻¹,
//! the measurement degradation ℬ, and a power-iteration norm estimate.
//!
//! All three wave operators work in the circular-harmonic domain:
//!
//! ```text
//! g_k(t)  = i^{|k|} ∫ λ f̂_k(λ) J_{|k|}(λ) cos(λt) dλ
//! û_k(λ)  = (−i)^{|k|} J_{|k|}(λ) ∫ g_k(t) cos(λt) dt
//! v̂_k(λ)  = −2 (−i)^{|k|} J′_{|k|}(λ) ∫ g_k(t) sin(λt) dt
//! ```
//!
//! with `f̂ = (1/2π)∫ f e^{−iξ·x} dx` and `g_k = (1/2π)∫ g e^{−ikθ} dθ`.
//!
//! Parallel sections only map over independent rows, harmonics or time samples and
//! never reduce across threads, so results do not depend on the thread count.

mod backproject;
mod degrade;
mod forward;
mod norm;

pub use backproject::{adjoint, inverse, make_adjoint_plan, make_inverse_plan, AdjointPlan, InversePlan};
pub use degrade::{degrade, degrade_adjoint, DegradationSpec, Eta};
pub use forward::{forward, make_forward_plan, ForwardPlan};
pub use norm::operator_norm;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{GeometryConfig, ImageGrid, Sinogram};
use crate::scalar::Real;

/// Largest tolerated `max|Im| / max|Re|` after the final inverse transform.
pub const IMAG_RESIDUE_LIMIT: f64 = 1e-6;

/// Discretization knobs shared by the plans.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OperatorOptions {
    /// Polar angles per detector angle (the polar grid has `q·n_theta` angles).
    pub angular_oversampling: usize,
    /// Graded quadrature nodes per uniform λ node, for harmonics k = −1, 0, 1.
    pub graded_factor: usize,
    /// Multiplies the zero-extended time horizon (T_new, T_large) of every plan,
    /// which refines the radial grid Δλ = π/horizon by the same factor.
    pub radial_oversampling: usize,
}

impl Default for OperatorOptions {
    fn default() -> Self {
        Self {
            angular_oversampling: 2,
            graded_factor: 3,
            radial_oversampling: 1,
        }
    }
}

impl OperatorOptions {
    fn validate(&self) -> Result<()> {
        if self.angular_oversampling == 0 || self.graded_factor == 0 || self.radial_oversampling == 0 {
            return Err(Error::InvalidArgument(
                "angular_oversampling, graded_factor and radial_oversampling must be >= 1".into(),
            ));
        }
        Ok(())
    }
}

pub(crate) fn check_image<T: Real>(cfg: &GeometryConfig, f: &ImageGrid<T>) -> Result<()> {
    if f.values.dim() != (cfg.n_image, cfg.n_image) {
        return Err(crate::error::shape_err((cfg.n_image, cfg.n_image), f.values.dim()));
    }
    if (f.half_width - cfg.half_width).abs() > 1e-12 {
        return Err(Error::Misaligned(format!(
            "image half-width {} differs from plan half-width {}",
            f.half_width, cfg.half_width
        )));
    }
    f.ensure_finite()?;
    let outside = f.max_outside(cfg.support_radius);
    if outside > 1e-12 {
        log::warn!("image has values up to {outside:.3e} outside the support disk");
    }
    Ok(())
}

/// Validates a sinogram against the plan and returns a copy zeroed outside the arc.
pub(crate) fn check_sinogram<T: Real>(cfg: &GeometryConfig, g: &Sinogram<T>) -> Result<Sinogram<T>> {
    if g.values.dim() != (cfg.n_time, cfg.n_theta) {
        return Err(crate::error::shape_err((cfg.n_time, cfg.n_theta), g.values.dim()));
    }
    if ((g.dt - cfg.dt()) / cfg.dt()).abs() > 1e-9 {
        return Err(Error::Misaligned(format!("sinogram dt {} differs from plan dt {}", g.dt, cfg.dt())));
    }
    g.ensure_finite()?;
    let mask = crate::geometry::arc_mask(cfg);
    let mut out = Sinogram {
        values: g.values.clone(),
        dt: g.dt,
        arc_mask: mask,
    };
    if out.has_data_outside_arc() {
        log::warn!("sinogram has nonzero samples outside the detector arc; they are ignored");
    }
    out.restrict_to_arc();
    Ok(out)
}

pub(crate) fn residue_check(stage: &'static str, ratio: f64) -> Result<()> {
    if ratio > IMAG_RESIDUE_LIMIT {
        return Err(Error::ImaginaryResidue { stage, ratio });
    }
    Ok(())
}
