//! Noisy anharmonic lattice field model with conservative exchange noise.

pub mod chaos;
pub mod dynamics;
pub mod equilibrium;
pub mod hydro;
pub mod error;
pub mod fields;
pub mod quad;
pub mod scalar;
pub mod spectral;

pub use error::{Error, Result};
pub use scalar::Real;

pub type ModelParams64 = equilibrium::ModelParams<f64>;
pub type ModelParams32 = equilibrium::ModelParams<f32>;
pub type TestFunction64 = fields::TestFunction<f64>;
pub type TestFunction32 = fields::TestFunction<f32>;
