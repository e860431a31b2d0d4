//! Numerical toolkit for the stochastic surface quasi-geostrophic equation in
//! the regularity-structures framework: symbolic model spaces, singular
//! kernels, white noise, canonical models, a spectral solver and norm
//! estimators.

pub mod field;
pub mod fit;
pub mod kernels;
pub mod model;
pub mod krn1;
pub mod noise;
pub mod norms;
pub mod quad;
pub mod solver;
pub mod structure;

pub use field::{PeriodicField, Spectrum};
pub use fit::ScalingFit;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
