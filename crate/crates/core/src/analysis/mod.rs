//! Observables, modal decomposition, curve fitting, eigenstate
//! classification and intermittency analysis of impact records.
//!
//! Everything here is a pure function of its inputs.

mod cassini;
mod classify;
mod intermittency;
mod observables;
mod spectrum;
pub mod synthetic;

use thiserror::Error;

use crate::specfun::SpecFunError;

pub use cassini::{fit_cassini, fit_cassini_points, CassiniFit, MIN_FIT_SAMPLES};
pub use classify::{classify, classify_point, lattice_node, quantized_radius, EigenstateLabel, EPSILON};
pub use intermittency::{
    default_window, find_peaks, histogram, segment_eigenstates, sliding_lz, Histogram,
    IntermittencyProfile, Peak, Segment, HISTOGRAM_BIN_WIDTH, HISTOGRAM_MAX, HISTOGRAM_MIN,
    PEAK_FACTOR,
};
pub use observables::{
    mean_angular_momentum, mean_radius, orbit_stability, Observables, OrbitStability,
    CONVERGED_LZ_SPREAD, CONVERGED_RADIUS_SPREAD,
};
pub use spectrum::{circular_orbit_amplitude, effective_potential, graf_spectrum, reconstruct_field, ModeSpectrum};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalysisError {
    #[error("trajectory has no samples")]
    EmptyTrajectory,
    #[error("need at least {needed} samples, found {found}")]
    InsufficientSamples { needed: usize, found: usize },
    #[error("trajectory spans {duration} bounces, shorter than the window of {window}")]
    ShorterThanWindow { duration: usize, window: f64 },
    #[error("fit did not converge within {sweeps} sweeps")]
    NonConvergence { sweeps: usize },
    #[error("invalid argument: {name} = {value}")]
    InvalidArgument { name: &'static str, value: f64 },
    #[error(transparent)]
    SpecFun(#[from] SpecFunError),
}
