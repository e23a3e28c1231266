//! Fast photoacoustic forward, adjoint and inverse operators for a circular
//! detection surface, plus slow references and iterative reconstruction.

pub mod bench;
pub mod error;
pub mod geometry;
pub mod io;
pub mod operators;
pub mod oracle;
pub mod phantom;
pub mod recon;
pub mod scalar;
mod scratch;
pub mod selftest;
pub mod special;
pub mod spectral;

pub use error::{Error, Result};
pub use geometry::{Arc, ExtendedBox, GeometryConfig, ImageGrid, Sinogram};
pub use scalar::{Complex, Real};

pub type Image = ImageGrid<f64>;
pub type Image32 = ImageGrid<f32>;
pub type Data = Sinogram<f64>;
pub type Data32 = Sinogram<f32>;
