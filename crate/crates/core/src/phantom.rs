//! Test images built from smoothed disks and ellipses.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::ImageGrid;
use crate::scalar::Real;

const PAPER_PHANTOM: &str = include_str!("../data/paper_phantom.json");

/// Clamped C¹ smoothstep: 0 for u ≤ 0, 1 for u ≥ 1, `3u² − 2u³` between.
pub fn smoothstep(u: f64) -> f64 {
    if u <= 0.0 {
        0.0
    } else if u >= 1.0 {
        1.0
    } else {
        u * u * (3.0 - 2.0 * u)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Primitive {
    /// `amplitude · s((radius − |x − center|)/edge_width)`.
    Disk {
        center: [f64; 2],
        radius: f64,
        edge_width: f64,
        amplitude: f64,
    },
    /// Same profile in the ellipse's normalized radius, edge measured along the minor axis.
    Ellipse {
        center: [f64; 2],
        semi_axes: [f64; 2],
        angle: f64,
        edge_width: f64,
        amplitude: f64,
    },
}

impl Primitive {
    pub fn value(&self, x: f64, y: f64) -> f64 {
        match *self {
            Primitive::Disk {
                center,
                radius,
                edge_width,
                amplitude,
            } => {
                let d = (x - center[0]).hypot(y - center[1]);
                amplitude * smoothstep((radius - d) / edge_width)
            }
            Primitive::Ellipse {
                center,
                semi_axes,
                angle,
                edge_width,
                amplitude,
            } => {
                let (s, c) = angle.sin_cos();
                let dx = x - center[0];
                let dy = y - center[1];
                let u = (c * dx + s * dy) / semi_axes[0];
                let v = (-s * dx + c * dy) / semi_axes[1];
                let rho = u.hypot(v);
                let minor = semi_axes[0].min(semi_axes[1]);
                amplitude * smoothstep((1.0 - rho) * minor / edge_width)
            }
        }
    }

    /// Radius of a centered disk containing the primitive's support.
    pub fn extent(&self) -> f64 {
        match *self {
            Primitive::Disk { center, radius, .. } => center[0].hypot(center[1]) + radius,
            Primitive::Ellipse { center, semi_axes, .. } => {
                center[0].hypot(center[1]) + semi_axes[0].max(semi_axes[1])
            }
        }
    }

    fn validate(&self) -> Result<()> {
        let (edge, size) = match *self {
            Primitive::Disk { radius, edge_width, .. } => (edge_width, radius),
            Primitive::Ellipse {
                semi_axes, edge_width, ..
            } => (edge_width, semi_axes[0].min(semi_axes[1])),
        };
        if !(edge > 0.0) || !(size > 0.0) {
            return Err(Error::InvalidArgument(format!("primitive needs positive size and edge width: {self:?}")));
        }
        Ok(())
    }
}

/// Multiplies the image by `s((y − offset)/width)`, keeping the part above `y = offset`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UpperHalfWindow {
    pub offset: f64,
    pub width: f64,
}

/// A phantom as a sum of primitives with an optional window.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct PhantomSpec {
    pub primitives: Vec<Primitive>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window: Option<UpperHalfWindow>,
}

impl PhantomSpec {
    pub fn value(&self, x: f64, y: f64) -> f64 {
        let v: f64 = self.primitives.iter().map(|p| p.value(x, y)).sum();
        match self.window {
            Some(w) => v * smoothstep((y - w.offset) / w.width),
            None => v,
        }
    }

    /// Checks every primitive lies inside the disk of radius `support`.
    pub fn validate(&self, support: f64) -> Result<()> {
        for p in &self.primitives {
            p.validate()?;
            if p.extent() > support + 1e-12 {
                return Err(Error::InvalidArgument(format!(
                    "primitive reaches radius {:.4}, beyond the support disk {support}",
                    p.extent()
                )));
            }
        }
        Ok(())
    }

    pub fn render<T: Real>(&self, n: usize, half_width: f64) -> ImageGrid<T> {
        ImageGrid::from_fn(n, half_width, |x, y| self.value(x, y))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// One smoothed disk on the grid of `like`.
pub fn smoothed_disk<T: Real>(
    center: [f64; 2],
    radius: f64,
    edge_width: f64,
    amplitude: f64,
    like: &ImageGrid<T>,
    support: f64,
) -> Result<ImageGrid<T>> {
    let spec = PhantomSpec {
        primitives: vec![Primitive::Disk {
            center,
            radius,
            edge_width,
            amplitude,
        }],
        window: None,
    };
    spec.validate(support)?;
    Ok(spec.render(like.n(), like.half_width))
}

/// The frozen nine-disk phantom used by the experiments.
pub fn paper_phantom_spec() -> PhantomSpec {
    PhantomSpec::from_json(PAPER_PHANTOM).expect("bundled phantom is valid JSON")
}

/// The upper half of [`paper_phantom_spec`], cut smoothly just above `y = 0`.
pub fn half_phantom_spec() -> PhantomSpec {
    PhantomSpec {
        window: Some(UpperHalfWindow {
            offset: 0.02,
            width: 0.04,
        }),
        ..paper_phantom_spec()
    }
}

pub fn paper_phantom<T: Real>(n: usize, half_width: f64) -> ImageGrid<T> {
    paper_phantom_spec().render(n, half_width)
}

/// Parameter ranges for [`random_ellipses`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EllipseRanges {
    pub count: (usize, usize),
    pub semi_axis: (f64, f64),
    pub amplitude: (f64, f64),
    pub edge_width: (f64, f64),
    pub support: f64,
}

impl Default for EllipseRanges {
    fn default() -> Self {
        Self {
            count: (6, 12),
            semi_axis: (0.05, 0.25),
            amplitude: (0.3, 1.0),
            edge_width: (0.01, 0.08),
            support: 0.98,
        }
    }
}

/// Seeded random smoothed ellipses, all inside the support disk.
pub fn random_ellipses_spec(seed: u64, ranges: &EllipseRanges) -> PhantomSpec {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let count = rng.gen_range(ranges.count.0..=ranges.count.1.max(ranges.count.0));
    // one random offset, then one center angle per equal sector: each angle is
    // still uniform, but a single phantom cannot pile up on one side
    let offset = rng.gen_range(0.0..std::f64::consts::TAU);
    let primitives = (0..count)
        .map(|i| {
            let a = rng.gen_range(ranges.semi_axis.0..=ranges.semi_axis.1);
            let b = rng.gen_range(ranges.semi_axis.0..=ranges.semi_axis.1);
            let room = (ranges.support - a.max(b)).max(0.0);
            let r = room * rng.gen::<f64>().sqrt();
            let t = offset + std::f64::consts::TAU * (i as f64 + rng.gen::<f64>()) / count as f64;
            Primitive::Ellipse {
                center: [r * t.cos(), r * t.sin()],
                semi_axes: [a, b],
                angle: rng.gen_range(0.0..std::f64::consts::PI),
                edge_width: rng.gen_range(ranges.edge_width.0..=ranges.edge_width.1),
                amplitude: rng.gen_range(ranges.amplitude.0..=ranges.amplitude.1),
            }
        })
        .collect();
    PhantomSpec { primitives, window: None }
}

pub fn random_ellipses<T: Real>(seed: u64, ranges: &EllipseRanges, n: usize, half_width: f64) -> ImageGrid<T> {
    random_ellipses_spec(seed, ranges).render(n, half_width)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn smoothstep_shape() {
        assert_eq!(smoothstep(-1.0), 0.0);
        assert_eq!(smoothstep(2.0), 1.0);
        assert_eq!(smoothstep(0.5), 0.5);
    }

    #[test]
    fn disk_profile() {
        let grid = ImageGrid::<f64>::zeros(257, 1.0);
        let f = smoothed_disk([0.0, 0.0], 0.5, 0.1, 0.8, &grid, 0.98).unwrap();
        assert_eq!(f.values[[128, 128]], 0.8);
        assert_eq!(f.values[[0, 0]], 0.0);
        // half height at distance radius − edge/2 along the x axis
        let h = f.spacing();
        let row = f.values.row(128);
        let j = (128..257).find(|&j| row[j] < 0.4).unwrap();
        let crossing = (j as f64 - 128.0) * h;
        assert!((crossing - 0.45).abs() <= h, "{crossing}");
    }

    #[test]
    fn disk_outside_support_rejected() {
        let grid = ImageGrid::<f64>::zeros(33, 1.0);
        assert!(smoothed_disk([0.9, 0.0], 0.2, 0.05, 1.0, &grid, 0.98).is_err());
        assert!(smoothed_disk([0.0, 0.0], 0.2, 0.0, 1.0, &grid, 0.98).is_err());
    }

    #[test]
    fn paper_phantom_properties() {
        let spec = paper_phantom_spec();
        spec.validate(0.98).unwrap();
        let a = paper_phantom::<f64>(257, 1.0);
        let b = paper_phantom::<f64>(257, 1.0);
        assert_eq!(a, b);
        let max = a.values.iter().cloned().fold(f64::MIN, f64::max);
        let min = a.values.iter().cloned().fold(f64::MAX, f64::min);
        assert!(max <= 1.0 + 1e-12 && min >= 0.0);
        assert_eq!(a.max_outside(0.98), 0.0);
        // nonzero fraction of the support disk (frozen regression value)
        let (mut inside, mut nonzero) = (0usize, 0usize);
        for i in 0..257 {
            for j in 0..257 {
                let (x, y) = (a.coord(j), a.coord(i));
                if x * x + y * y <= 0.98 * 0.98 {
                    inside += 1;
                    nonzero += usize::from(a.values[[i, j]] != 0.0);
                }
            }
        }
        let frac = nonzero as f64 / inside as f64;
        assert!((0.1..=0.6).contains(&frac), "{frac}");
        assert!((frac - 0.5501).abs() < 1e-3, "{frac}");
    }

    #[test]
    fn half_phantom_vanishes_below_axis() {
        let f = half_phantom_spec().render::<f64>(129, 1.0);
        for i in 0..129 {
            if f.coord(i) <= 0.02 {
                assert!(f.values.row(i).iter().all(|v| *v == 0.0));
            }
        }
        assert!(f.values.iter().any(|v| *v > 0.5));
    }

    #[test]
    fn random_ellipses_deterministic_and_supported() {
        let r = EllipseRanges::default();
        let a = random_ellipses::<f64>(7, &r, 65, 1.0);
        assert_eq!(a, random_ellipses::<f64>(7, &r, 65, 1.0));
        assert_ne!(a, random_ellipses::<f64>(8, &r, 65, 1.0));
        for seed in 0..50 {
            let s = random_ellipses_spec(seed, &r);
            s.validate(0.98).unwrap();
            let f = s.render::<f64>(65, 1.0);
            assert!(f.values.iter().all(|v| *v >= 0.0));
            assert_eq!(f.max_outside(0.98), 0.0);
        }
    }

    #[test]
    fn ellipse_ensemble_mass_is_rotationally_flat() {
        let r = EllipseRanges::default();
        let n = 65;
        let bins = 8;
        let mut hist = vec![0.0; bins];
        for seed in 0..100 {
            let f = random_ellipses::<f64>(seed, &r, n, 1.0);
            for i in 0..n {
                for j in 0..n {
                    let (x, y) = (f.coord(j), f.coord(i));
                    if x == 0.0 && y == 0.0 {
                        continue;
                    }
                    let t = y.atan2(x).rem_euclid(std::f64::consts::TAU);
                    let b = ((t / std::f64::consts::TAU * bins as f64) as usize).min(bins - 1);
                    hist[b] += f.values[[i, j]];
                }
            }
        }
        let mean = hist.iter().sum::<f64>() / bins as f64;
        for h in &hist {
            assert!((h - mean).abs() <= 0.1 * mean, "{hist:?}");
        }
    }

    #[test]
    fn ellipse_centers_are_rotationally_flat() {
        let r = EllipseRanges::default();
        let bins = 8;
        let mut hist = vec![0usize; bins];
        let mut total = 0usize;
        for seed in 0..4000 {
            for p in random_ellipses_spec(seed, &r).primitives {
                let Primitive::Ellipse { center, .. } = p else { unreachable!() };
                let t = center[1].atan2(center[0]).rem_euclid(std::f64::consts::TAU);
                hist[((t / std::f64::consts::TAU * bins as f64) as usize).min(bins - 1)] += 1;
                total += 1;
            }
        }
        let mean = total as f64 / bins as f64;
        for h in &hist {
            assert!((*h as f64 - mean).abs() <= 0.05 * mean, "{hist:?}");
        }
    }

    #[test]
    fn json_round_trip() {
        let s = random_ellipses_spec(3, &EllipseRanges::default());
        assert_eq!(PhantomSpec::from_json(&s.to_json().unwrap()).unwrap(), s);
        let h = half_phantom_spec();
        assert_eq!(PhantomSpec::from_json(&h.to_json().unwrap()).unwrap(), h);
    }
}
