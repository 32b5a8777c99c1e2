//! Simulation and numerical verification toolkit for the true self-avoiding
//! walk and the self-repelling Brownian polymer in stationary environments.

pub mod error;
pub mod fft;
pub mod field;
pub mod fock;
pub mod model;
pub mod poly;
pub mod polymer;
pub mod presets;
pub mod record;
pub mod spectral;
pub mod stats;
pub mod torus;
pub mod walk;

pub use error::{Error, Result};
