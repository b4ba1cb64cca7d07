//! Simulation and analysis of a wave-memory walker confined in a harmonic
//! well.
//!
//! Units throughout: lengths in Faraday wavelengths, times in Faraday
//! periods, so the Faraday wavenumber is `2 pi`.

pub mod analysis;
pub mod lab;
pub mod model;
pub mod specfun;
pub mod vec2;

pub use vec2::Vec2;
