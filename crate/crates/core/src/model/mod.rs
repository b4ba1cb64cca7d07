//! The walker model: memory wave field, harmonic trap, bounce map.

mod calibrate;
mod config;
mod dynamics;
mod field;
pub mod io;

use thiserror::Error;

pub use calibrate::{
    calibrate_kick, free_walking_speed, with_calibrated_kick, CALIBRATION_BOUNCES, MAX_KICK,
};
pub(crate) use calibrate::median;
pub use config::{
    default_transient, memory_from_forcing, speed_from_si, speed_to_si, Heading, InitialCondition,
    SimConfig, DEFAULT_FRICTION, DEFAULT_SOURCE_CUTOFF, DEFAULT_TARGET_SPEED, FARADAY_PERIOD_S,
    FARADAY_WAVELENGTH_M, FORCING_FREQUENCY_HZ,
};
pub use dynamics::{initial_state, simulate, spring_force, step, Impact, Trajectory, Walker, WalkerState};
pub use field::{prune_sources, wave_gradient, wave_height, WaveSource};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("invalid configuration: {field} = {value}")]
    InvalidConfig { field: &'static str, value: f64 },
    #[error("forcing {gamma_m} is not below the Faraday threshold {gamma_faraday}")]
    AboveThreshold { gamma_m: f64, gamma_faraday: f64 },
    #[error("no kick up to {MAX_KICK} reaches walking speed {target}")]
    UnreachableSpeed { target: f64 },
    #[error("simulation diverged by bounce {bounce}")]
    Diverged { bounce: u64 },
}
