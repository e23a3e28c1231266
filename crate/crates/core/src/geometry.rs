//! Grids, acquisition geometry and the domain-extension rules the operator
//! plans are built from.
//!
//! Units are normalized: the detector circle has radius 1 and the speed of
//! sound is 1, so time and length share a scale.

use std::f64::consts::{PI, TAU};

use ndarray::{s, Array2};
use serde::{Deserialize, Serialize};

use crate::error::{shape_err, Error, Result};
use crate::scalar::Real;

/// Angular tolerance used when deciding whether a detector lies on an arc endpoint.
const ARC_EPS: f64 = 1e-9;

/// Active detector arc Γ on the circle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ArcRepr", into = "ArcRepr")]
pub enum Arc {
    /// Every detector on the circle is active.
    Full,
    /// Closed counter-clockwise interval `[start, end]`, angles in radians.
    Interval { start: f64, end: f64 },
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum ArcRepr {
    Flag(String),
    Interval([f64; 2]),
}

impl TryFrom<ArcRepr> for Arc {
    type Error = String;

    fn try_from(r: ArcRepr) -> std::result::Result<Self, String> {
        match r {
            ArcRepr::Flag(s) if s == "full" => Ok(Arc::Full),
            ArcRepr::Flag(s) => Err(format!("unknown arc flag {s:?}, expected \"full\" or [start, end]")),
            ArcRepr::Interval([start, end]) => Ok(Arc::Interval { start, end }),
        }
    }
}

impl From<Arc> for ArcRepr {
    fn from(a: Arc) -> Self {
        match a {
            Arc::Full => ArcRepr::Flag("full".into()),
            Arc::Interval { start, end } => ArcRepr::Interval([start, end]),
        }
    }
}

impl Arc {
    /// Arc from endpoints given in degrees.
    pub fn degrees(start: f64, end: f64) -> Self {
        Arc::Interval {
            start: start.to_radians(),
            end: end.to_radians(),
        }
    }

    /// Arc of the given angular span centered on the top of the circle (θ = 90°).
    pub fn top(span_deg: f64) -> Self {
        Arc::degrees(90.0 - span_deg / 2.0, 90.0 + span_deg / 2.0)
    }

    /// Angular length in radians.
    pub fn length(&self) -> f64 {
        match *self {
            Arc::Full => TAU,
            Arc::Interval { start, end } => {
                let len = (end - start).rem_euclid(TAU);
                if len < ARC_EPS && (end - start).abs() > ARC_EPS {
                    TAU
                } else {
                    len
                }
            }
        }
    }

    pub fn is_full(&self) -> bool {
        matches!(self, Arc::Full) || (self.length() - TAU).abs() < ARC_EPS
    }

    /// Whether the angle `theta` lies on the closed arc.
    pub fn contains(&self, theta: f64) -> bool {
        match *self {
            Arc::Full => true,
            Arc::Interval { start, .. } => {
                let len = self.length();
                let off = (theta - start).rem_euclid(TAU);
                off <= len + ARC_EPS || off >= TAU - ARC_EPS
            }
        }
    }
}

/// Acquisition and discretization parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GeometryConfig {
    /// Samples per image axis (odd, so the origin is a node).
    pub n_image: usize,
    /// Image square is `[-half_width, half_width]²`.
    pub half_width: f64,
    /// Radius of the disk Ω₀ containing the support of f.
    pub support_radius: f64,
    /// Radius of the detector circle S.
    pub detector_radius: f64,
    pub sound_speed: f64,
    /// Number of equispaced detector angles θ_l = 2πl/n_theta.
    pub n_theta: usize,
    /// Number of time samples on `[0, T]`, both endpoints included.
    pub n_time: usize,
    /// Measurement horizon.
    #[serde(rename = "T")]
    pub t_max: f64,
    pub arc: Arc,
}

impl Default for GeometryConfig {
    fn default() -> Self {
        Self {
            n_image: 257,
            half_width: 1.0,
            support_radius: 0.98,
            detector_radius: 1.0,
            sound_speed: 1.0,
            n_theta: 360,
            n_time: 513,
            t_max: 4.0,
            arc: Arc::Full,
        }
    }
}

impl GeometryConfig {
    /// The default configuration at a different image resolution; the
    /// angular and temporal sampling are scaled with the image so that the
    /// sampling density stays balanced.
    pub fn scaled(n_image: usize) -> Self {
        let base = Self::default();
        let ratio = (n_image - 1) as f64 / (base.n_image - 1) as f64;
        let mut n_theta = (base.n_theta as f64 * ratio).round() as usize;
        n_theta += n_theta % 2;
        Self {
            n_image,
            n_theta,
            n_time: ((base.n_time - 1) as f64 * ratio).round() as usize + 1,
            ..base
        }
    }

    pub fn with_arc(mut self, arc: Arc) -> Self {
        self.arc = arc;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidGeometry(m));
        if self.n_image < 3 || self.n_image % 2 == 0 {
            return bad(format!("n_image must be odd and >= 3, got {}", self.n_image));
        }
        if !(self.half_width.is_finite() && self.half_width > 0.0) {
            return bad(format!("half_width must be positive, got {}", self.half_width));
        }
        if !(self.t_max.is_finite() && self.t_max > 0.0) {
            return bad(format!("T must be positive, got {}", self.t_max));
        }
        if !(self.support_radius > 0.0 && self.support_radius < self.detector_radius) {
            return bad(format!(
                "support_radius {} must lie in (0, detector_radius = {})",
                self.support_radius, self.detector_radius
            ));
        }
        if (self.detector_radius - 1.0).abs() > 1e-12 || (self.sound_speed - 1.0).abs() > 1e-12 {
            return bad("operators are normalized to unit detector radius and unit sound speed".into());
        }
        if self.half_width < self.detector_radius {
            return bad(format!(
                "image square half width {} must cover the detector circle",
                self.half_width
            ));
        }
        if self.n_theta < 4 || self.n_theta % 2 != 0 {
            return bad(format!("n_theta must be even and >= 4, got {}", self.n_theta));
        }
        if self.n_time < 2 {
            return bad(format!("n_time must be >= 2, got {}", self.n_time));
        }
        let len = self.arc.length();
        if !(len > 0.0 && len <= TAU + ARC_EPS) {
            return bad(format!("arc length {len} outside (0, 2π]"));
        }
        Ok(())
    }

    /// Image grid spacing h.
    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width / (self.n_image - 1) as f64
    }

    /// Time step of the data grid.
    pub fn dt(&self) -> f64 {
        self.t_max / (self.n_time - 1) as f64
    }

    pub fn theta(&self, l: usize) -> f64 {
        TAU * l as f64 / self.n_theta as f64
    }

    pub fn blank_image<T: Real>(&self) -> ImageGrid<T> {
        ImageGrid::zeros(self.n_image, self.half_width)
    }

    pub fn blank_sinogram<T: Real>(&self) -> Sinogram<T> {
        Sinogram::zeros(self.n_time, self.dt(), arc_mask(self))
    }
}

/// Detector activity per angle: true exactly for θ_l on the closed arc.
pub fn arc_mask(cfg: &GeometryConfig) -> Vec<bool> {
    (0..cfg.n_theta).map(|l| cfg.arc.contains(cfg.theta(l))).collect()
}

/// Real samples on an origin-centered Cartesian grid over `[-half_width, half_width]²`.
///
/// `values[[i, j]]` is the sample at `x = (x_j, x_i)`: rows run along the second
/// coordinate, columns along the first.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageGrid<T> {
    pub values: Array2<T>,
    pub half_width: f64,
}

impl<T: Real> ImageGrid<T> {
    pub fn zeros(n: usize, half_width: f64) -> Self {
        Self {
            values: Array2::zeros((n, n)),
            half_width,
        }
    }

    pub fn from_values(values: Array2<T>, half_width: f64) -> Result<Self> {
        let (a, b) = values.dim();
        if a != b || a < 2 {
            return Err(shape_err("square n×n with n >= 2", (a, b)));
        }
        Ok(Self { values, half_width })
    }

    /// Samples `f` at every grid node.
    pub fn from_fn(n: usize, half_width: f64, f: impl Fn(f64, f64) -> f64) -> Self {
        let h = 2.0 * half_width / (n - 1) as f64;
        let values = Array2::from_shape_fn((n, n), |(i, j)| {
            T::lit(f(-half_width + j as f64 * h, -half_width + i as f64 * h))
        });
        Self { values, half_width }
    }

    pub fn n(&self) -> usize {
        self.values.nrows()
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width / (self.n() - 1) as f64
    }

    /// Coordinate of node index `j` along either axis.
    pub fn coord(&self, j: usize) -> f64 {
        -self.half_width + j as f64 * self.spacing()
    }

    pub fn ensure_finite(&self) -> Result<()> {
        if self.values.iter().all(|v| v.is_finite()) {
            Ok(())
        } else {
            Err(Error::NonFinite("image"))
        }
    }

    /// Sets every node with `|x| > radius` to zero.
    pub fn mask_disk(&mut self, radius: f64) {
        let n = self.n();
        for i in 0..n {
            let y = self.coord(i);
            for j in 0..n {
                let x = self.coord(j);
                if x * x + y * y > radius * radius * (1.0 + 1e-12) {
                    self.values[[i, j]] = T::zero();
                }
            }
        }
    }

    /// Largest magnitude among nodes outside the disk of the given radius.
    pub fn max_outside(&self, radius: f64) -> f64 {
        let n = self.n();
        let mut m = 0.0f64;
        for i in 0..n {
            let y = self.coord(i);
            for j in 0..n {
                let x = self.coord(j);
                if x * x + y * y > radius * radius * (1.0 + 1e-12) {
                    m = m.max(self.values[[i, j]].to_f64_lossless().abs());
                }
            }
        }
        m
    }

    /// `Σ u v h²`, the discrete L² inner product on the image square.
    pub fn dot(&self, other: &Self) -> f64 {
        let h = self.spacing();
        self.values
            .iter()
            .zip(other.values.iter())
            .map(|(a, b)| a.to_f64_lossless() * b.to_f64_lossless())
            .sum::<f64>()
            * h
            * h
    }

    pub fn cast<U: Real>(&self) -> ImageGrid<U> {
        ImageGrid {
            values: self.values.mapv(|v| U::lit(v.to_f64_lossless())),
            half_width: self.half_width,
        }
    }
}

/// Pressure traces g(t_m, θ_l), `values[[m, l]]`, on the detector circle.
#[derive(Debug, Clone, PartialEq)]
pub struct Sinogram<T> {
    pub values: Array2<T>,
    pub dt: f64,
    pub arc_mask: Vec<bool>,
}

impl<T: Real> Sinogram<T> {
    pub fn zeros(n_time: usize, dt: f64, arc_mask: Vec<bool>) -> Self {
        Self {
            values: Array2::zeros((n_time, arc_mask.len())),
            dt,
            arc_mask,
        }
    }

    pub fn n_time(&self) -> usize {
        self.values.nrows()
    }

    pub fn n_theta(&self) -> usize {
        self.values.ncols()
    }

    pub fn t_max(&self) -> f64 {
        self.dt * (self.n_time() - 1) as f64
    }

    pub fn ensure_finite(&self) -> Result<()> {
        if self.values.iter().all(|v| v.is_finite()) {
            Ok(())
        } else {
            Err(Error::NonFinite("sinogram"))
        }
    }

    /// Zeroes every column outside the active arc.
    pub fn restrict_to_arc(&mut self) {
        for (l, active) in self.arc_mask.iter().enumerate() {
            if !active {
                self.values.column_mut(l).fill(T::zero());
            }
        }
    }

    /// Whether any sample outside the arc is nonzero.
    pub fn has_data_outside_arc(&self) -> bool {
        self.arc_mask
            .iter()
            .enumerate()
            .any(|(l, &a)| !a && self.values.column(l).iter().any(|v| *v != T::zero()))
    }

    /// Trapezoid weight of time sample `m` (½ at both ends).
    pub fn time_weight(&self, m: usize) -> f64 {
        if m == 0 || m + 1 == self.n_time() {
            0.5
        } else {
            1.0
        }
    }

    /// `∫₀ᵀ∫_Γ h k dθ dt` by the trapezoid rule in t and the rectangle rule in θ.
    pub fn dot(&self, other: &Self) -> f64 {
        let dtheta = TAU / self.n_theta() as f64;
        let mut acc = 0.0;
        for m in 0..self.n_time() {
            let w = self.time_weight(m);
            let mut row = 0.0;
            for l in 0..self.n_theta() {
                if self.arc_mask[l] {
                    row += self.values[[m, l]].to_f64_lossless() * other.values[[m, l]].to_f64_lossless();
                }
            }
            acc += w * row;
        }
        acc * self.dt * dtheta
    }

    pub fn cast<U: Real>(&self) -> Sinogram<U> {
        Sinogram {
            values: self.values.mapv(|v| U::lit(v.to_f64_lossless())),
            dt: self.dt,
            arc_mask: self.arc_mask.clone(),
        }
    }
}

/// The extended square 𝔖 = [−L, L]² sampled with the image spacing.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExtendedBox {
    /// Requested half-width L.
    pub half_width: f64,
    /// Samples per axis; always even and 7-smooth.
    pub n: usize,
    pub spacing: f64,
}

impl ExtendedBox {
    /// Smallest even, 7-smooth sample count with `n·h >= 2L`.
    pub fn new(half_width: f64, spacing: f64) -> Self {
        let min = (2.0 * half_width / spacing - 1e-9).ceil() as usize;
        Self {
            half_width,
            n: next_fft_size(min.max(2)),
            spacing,
        }
    }

    /// Frequency spacing Δξ = 2π/(N h) of the matching Cartesian spectrum.
    pub fn dxi(&self) -> f64 {
        TAU / (self.n as f64 * self.spacing)
    }

    /// Index of the origin node in the centered layout.
    pub fn center(&self) -> usize {
        self.n / 2
    }

    /// Time until a wavefront leaving the unit disk returns through the periodic box.
    pub fn t_reflect(&self) -> f64 {
        2.0 * (self.n as f64 * self.spacing / 2.0 - 1.0)
    }
}

/// Smallest even integer `>= n` whose prime factors are all in {2, 3, 5, 7}.
pub fn next_fft_size(n: usize) -> usize {
    let mut m = n.max(2);
    loop {
        if m % 2 == 0 {
            let mut r = m;
            for p in [2, 3, 5, 7] {
                while r % p == 0 {
                    r /= p;
                }
            }
            if r == 1 {
                return m;
            }
        }
        m += 1;
    }
}

/// Zero-pads an image into the centered layout of `ext`; origin lands on `ext.center()`.
pub fn embed<T: Real>(image: &ImageGrid<T>, ext: &ExtendedBox) -> Result<Array2<T>> {
    let off = embed_offset(image, ext)?;
    let n = image.n();
    let mut out = Array2::zeros((ext.n, ext.n));
    out.slice_mut(s![off..off + n, off..off + n]).assign(&image.values);
    Ok(out)
}

/// Crops a centered extended-grid array back onto the image grid of `target`.
pub fn restrict<T: Real>(extended: &Array2<T>, ext: &ExtendedBox, target: &ImageGrid<T>) -> Result<ImageGrid<T>> {
    if extended.dim() != (ext.n, ext.n) {
        return Err(shape_err((ext.n, ext.n), extended.dim()));
    }
    let off = embed_offset(target, ext)?;
    let n = target.n();
    Ok(ImageGrid {
        values: extended.slice(s![off..off + n, off..off + n]).to_owned(),
        half_width: target.half_width,
    })
}

fn embed_offset<T: Real>(image: &ImageGrid<T>, ext: &ExtendedBox) -> Result<usize> {
    let h = image.spacing();
    if ((h - ext.spacing) / h).abs() > 1e-12 {
        return Err(Error::Misaligned(format!(
            "image spacing {h} differs from extended spacing {}",
            ext.spacing
        )));
    }
    let n = image.n();
    if n % 2 == 0 {
        return Err(Error::Misaligned("image grid has no node at the origin".into()));
    }
    if n > ext.n {
        return Err(Error::Misaligned(format!("image ({n}) larger than extended grid ({})", ext.n)));
    }
    Ok(ext.center() - (n - 1) / 2)
}

/// Extents derived for the forward operator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ForwardExtent {
    /// Modeled time horizon T_new = max(2T, 6).
    pub t_new: f64,
    /// Half-width L = T_new + 2 of the refined Cartesian box.
    pub half_width: f64,
}

impl ForwardExtent {
    pub fn new(cfg: &GeometryConfig) -> Self {
        let t_new = (2.0 * cfg.t_max).max(6.0);
        Self {
            t_new,
            half_width: t_new + 2.0,
        }
    }

    pub fn t_reflect(&self) -> f64 {
        2.0 * (self.half_width - 1.0)
    }
}

/// Extents shared by the adjoint and inverse operators.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdjointExtent {
    /// Zero-extended time horizon T_large = max(2.1, 4T).
    pub t_large: f64,
    /// Half-width L = 1.1 + T.
    pub half_width: f64,
}

impl AdjointExtent {
    pub fn new(cfg: &GeometryConfig) -> Self {
        Self {
            t_large: (4.0 * cfg.t_max).max(2.1),
            half_width: 1.1 + cfg.t_max,
        }
    }
}

/// Number of DCT-I intervals covering `[0, horizon]` at step `dt`, rounded up
/// so that the length-2M FFT behind the transform is 7-smooth.
pub fn time_intervals(horizon: f64, dt: f64) -> usize {
    let m = (horizon / dt - 1e-9).ceil() as usize;
    next_fft_size(2 * m.max(1)) / 2
}

/// Angle of a detector index, used by the oracles.
pub fn detector_angle(l: usize, n_theta: usize) -> f64 {
    2.0 * PI * l as f64 / n_theta as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn forward_extent_rules() {
        let cfg = GeometryConfig::default();
        let e = ForwardExtent::new(&cfg);
        assert_eq!(e.t_new, 8.0);
        assert_eq!(e.half_width, 10.0);
        assert_eq!(e.t_reflect(), 18.0);
        assert!(e.t_reflect() > e.t_new);

        let e1 = ForwardExtent::new(&GeometryConfig { t_max: 1.0, ..cfg });
        assert_eq!(e1.t_new, 6.0);
    }

    #[test]
    fn adjoint_extent_rules() {
        let cfg = GeometryConfig::default();
        let e = AdjointExtent::new(&cfg);
        assert!((e.half_width - 5.1).abs() < 1e-15);
        assert_eq!(e.t_large, 16.0);
        let e = AdjointExtent::new(&GeometryConfig { t_max: 0.5, ..cfg });
        assert_eq!(e.t_large, 2.1);
    }

    #[test]
    fn extended_box_sizes() {
        let h = 2.0 / 256.0;
        let b = ExtendedBox::new(5.1, h);
        assert!(b.n as f64 * h >= 10.2);
        assert_eq!(b.n % 2, 0);
        assert_eq!(b.n, 1344);
        assert_eq!(ExtendedBox::new(10.0, h).n, 2560);
        assert_eq!(next_fft_size(1306), 1344);
        assert_eq!(next_fft_size(7), 8);
    }

    #[test]
    fn validation_rejects_bad_configs() {
        let ok = GeometryConfig::default();
        assert!(ok.validate().is_ok());
        for bad in [
            GeometryConfig { t_max: 0.0, ..ok.clone() },
            GeometryConfig { t_max: -1.0, ..ok.clone() },
            GeometryConfig { n_theta: 361, ..ok.clone() },
            GeometryConfig { n_image: 256, ..ok.clone() },
            GeometryConfig { support_radius: 1.0, ..ok.clone() },
        ] {
            assert!(bad.validate().is_err(), "{bad:?}");
        }
    }

    #[test]
    fn arc_counts() {
        let cfg = GeometryConfig::default();
        assert!(arc_mask(&cfg).iter().all(|&a| a));

        let half = arc_mask(&cfg.clone().with_arc(Arc::degrees(0.0, 180.0)));
        assert_eq!(half.iter().filter(|&&a| a).count(), 181);
        assert!(half[0] && half[180] && !half[181] && !half[359]);

        let top = arc_mask(&cfg.clone().with_arc(Arc::top(120.0)));
        let on: Vec<usize> = (0..360).filter(|&l| top[l]).collect();
        assert_eq!(on.first(), Some(&30));
        assert_eq!(on.last(), Some(&150));
        assert_eq!(on.len(), 121);
    }

    #[test]
    fn wrapping_arc() {
        let a = Arc::degrees(300.0, 60.0);
        assert!((a.length() - 120f64.to_radians()).abs() < 1e-12);
        assert!(a.contains(0.0));
        assert!(a.contains(350f64.to_radians()));
        assert!(!a.contains(180f64.to_radians()));
    }

    #[test]
    fn arc_json_forms() {
        let full: Arc = serde_json::from_str("\"full\"").unwrap();
        assert_eq!(full, Arc::Full);
        let iv: Arc = serde_json::from_str("[0.0, 1.5]").unwrap();
        assert_eq!(iv, Arc::Interval { start: 0.0, end: 1.5 });
        assert!(serde_json::from_str::<Arc>("\"half\"").is_err());
        let cfg = GeometryConfig::default();
        let text = serde_json::to_string(&cfg).unwrap();
        assert!(text.contains("\"T\":4.0"));
        let back: GeometryConfig = serde_json::from_str(&text).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn embed_restrict_identity() {
        let img = ImageGrid::<f64>::from_fn(9, 1.0, |x, y| 1.0 + x * 3.0 - y * y);
        let ext = ExtendedBox::new(3.0, img.spacing());
        let big = embed(&img, &ext).unwrap();
        assert_eq!(big.sum(), img.values.sum());
        let back = restrict(&big, &ext, &img).unwrap();
        assert_eq!(back.values, img.values);
        assert_eq!(big[[ext.center(), ext.center()]], img.values[[4, 4]]);

        let zero = ImageGrid::<f64>::zeros(9, 1.0);
        assert!(embed(&zero, &ext).unwrap().iter().all(|&v| v == 0.0));

        let wrong = ExtendedBox::new(3.0, 0.3);
        assert!(embed(&img, &wrong).is_err());
    }

    #[test]
    fn sinogram_restriction() {
        let cfg = GeometryConfig {
            n_theta: 8,
            n_time: 3,
            ..GeometryConfig::default()
        }
        .with_arc(Arc::degrees(0.0, 90.0));
        let mut g = cfg.blank_sinogram::<f64>();
        g.values.fill(1.0);
        assert!(g.has_data_outside_arc());
        g.restrict_to_arc();
        assert!(!g.has_data_outside_arc());
        assert_eq!(g.values.sum(), 9.0);
    }
}
