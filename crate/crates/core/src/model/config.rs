use serde::{Deserialize, Serialize};

use super::ModelError;

/// Faraday wavelength in metres.
pub const FARADAY_WAVELENGTH_M: f64 = 4.75e-3;
/// Faraday period in seconds (twice the 80 Hz forcing period).
pub const FARADAY_PERIOD_S: f64 = 0.025;
/// Bath forcing frequency in hertz.
pub const FORCING_FREQUENCY_HZ: f64 = 80.0;

/// Velocity retained across one contact. Low-friction bounces are what let
/// the quantized circular orbits persist at long memory.
pub const DEFAULT_FRICTION: f64 = 0.95;
/// Free walking speed, 7.0 mm/s.
pub const DEFAULT_TARGET_SPEED: f64 = 0.037;
pub const DEFAULT_SOURCE_CUTOFF: f64 = 1e-4;

/// Converts a speed in m/s to Faraday wavelengths per Faraday period.
pub fn speed_from_si(speed_m_per_s: f64) -> f64 {
    speed_m_per_s * FARADAY_PERIOD_S / FARADAY_WAVELENGTH_M
}

pub fn speed_to_si(speed: f64) -> f64 {
    speed * FARADAY_WAVELENGTH_M / FARADAY_PERIOD_S
}

/// Memory parameter `gamma_m / (gamma_F - gamma_m)` from the forcing
/// acceleration and the Faraday threshold (any common unit).
pub fn memory_from_forcing(gamma_m: f64, gamma_faraday: f64) -> Result<f64, ModelError> {
    if !(gamma_m > 0.0 && gamma_m < gamma_faraday) || !gamma_faraday.is_finite() {
        return Err(ModelError::AboveThreshold {
            gamma_m,
            gamma_faraday,
        });
    }
    Ok(gamma_m / (gamma_faraday - gamma_m))
}

/// Initial heading of the walker.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "angle")]
pub enum Heading {
    /// Uniform over the circle, drawn from the seeded generator.
    Random,
    /// Perpendicular to the radius vector, counter-clockwise.
    Tangential,
    /// Fixed angle in radians.
    Fixed(f64),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct InitialCondition {
    /// Starting distance from the trap axis; `None` means the well width.
    pub radius: Option<f64>,
    pub heading: Heading,
}

impl Default for InitialCondition {
    fn default() -> Self {
        Self {
            radius: None,
            heading: Heading::Random,
        }
    }
}

/// All dynamical parameters of one run, in Faraday units.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    /// Memory parameter M (memory time in Faraday periods).
    pub memory: f64,
    /// Dimensionless well width; 0 switches the trap off.
    pub lambda_well: f64,
    /// Spatial damping length; `None` is the undamped kernel.
    pub spatial_damping: Option<f64>,
    /// Velocity retained through each impact, in (0, 1).
    pub friction: f64,
    /// Slope-to-momentum coefficient of the kick.
    pub kick: f64,
    pub target_speed: f64,
    /// Sources whose temporal weight drops below this are discarded.
    pub source_cutoff: f64,
    pub seed: u64,
    pub initial: InitialCondition,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            memory: 10.0,
            lambda_well: 1.0,
            spatial_damping: None,
            friction: DEFAULT_FRICTION,
            kick: 0.0,
            target_speed: DEFAULT_TARGET_SPEED,
            source_cutoff: DEFAULT_SOURCE_CUTOFF,
            seed: 0,
            initial: InitialCondition::default(),
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), ModelError> {
        let bad = |field: &'static str, value: f64| Err(ModelError::InvalidConfig { field, value });
        if !(self.memory > 0.0 && self.memory.is_finite()) {
            return bad("memory", self.memory);
        }
        if !(self.lambda_well >= 0.0 && self.lambda_well.is_finite()) {
            return bad("lambda_well", self.lambda_well);
        }
        if let Some(delta) = self.spatial_damping {
            if !(delta > 0.0) {
                return bad("spatial_damping", delta);
            }
        }
        if !(self.friction > 0.0 && self.friction < 1.0) {
            return bad("friction", self.friction);
        }
        if !(self.kick >= 0.0 && self.kick.is_finite()) {
            return bad("kick", self.kick);
        }
        if !(self.target_speed >= 0.0 && self.target_speed.is_finite()) {
            return bad("target_speed", self.target_speed);
        }
        if !(self.source_cutoff > 0.0 && self.source_cutoff < 1.0) {
            return bad("source_cutoff", self.source_cutoff);
        }
        if let Some(r) = self.initial.radius {
            if !(r >= 0.0 && r.is_finite()) {
                return bad("initial.radius", r);
            }
        }
        if self.lambda_well > 0.0 && !self.trap_frequency().is_finite() {
            return bad("lambda_well", self.lambda_well);
        }
        Ok(())
    }

    /// Trap angular frequency `V / Lambda` in radians per Faraday period.
    pub fn trap_frequency(&self) -> f64 {
        if self.lambda_well > 0.0 {
            self.target_speed / self.lambda_well
        } else {
            0.0
        }
    }

    /// Age beyond which a source is pruned: `M ln(1/eps_cut)`.
    pub fn source_horizon(&self) -> f64 {
        self.memory * (1.0 / self.source_cutoff).ln()
    }

    /// Bounces dropped from the head of a run before analysis.
    pub fn transient(&self) -> usize {
        default_transient(self.memory)
    }

    /// Spatial damping as a length, infinite when undamped.
    pub fn damping_length(&self) -> f64 {
        self.spatial_damping.unwrap_or(f64::INFINITY)
    }
}

/// `max(2000, 20 M)` bounces.
pub fn default_transient(memory: f64) -> usize {
    (20.0 * memory).ceil().max(2000.0) as usize
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn memory_from_forcing_values() {
        assert_eq!(memory_from_forcing(1.9, 3.8).unwrap(), 1.0);
        let m = memory_from_forcing(3.45, 3.8).unwrap();
        assert!((m - 3.45 / 0.35).abs() < 1e-12);
        assert!((m - 9.857142857142858).abs() < 1e-12);
        let near = memory_from_forcing(3.8 - 1e-9, 3.8).unwrap();
        assert!(near > 1e9);
        assert!(memory_from_forcing(3.8, 3.8).is_err());
        assert!(memory_from_forcing(4.0, 3.8).is_err());
        assert!(memory_from_forcing(0.0, 3.8).is_err());
    }

    #[test]
    fn si_conversion_matches_mid_range_speed() {
        // 9.5 mm/s
        assert!((speed_from_si(9.5e-3) - 0.05).abs() < 1e-12);
        assert!((speed_to_si(0.05) - 9.5e-3).abs() < 1e-15);
        assert!((FARADAY_PERIOD_S - 2.0 / FORCING_FREQUENCY_HZ).abs() < 1e-15);
    }

    #[test]
    fn validation() {
        let ok = SimConfig::default();
        ok.validate().unwrap();
        for cfg in [
            SimConfig { memory: 0.0, ..ok },
            SimConfig { friction: 1.0, ..ok },
            SimConfig { friction: 0.0, ..ok },
            SimConfig { spatial_damping: Some(0.0), ..ok },
            SimConfig { lambda_well: -1.0, ..ok },
            SimConfig { source_cutoff: 0.0, ..ok },
            SimConfig { kick: f64::NAN, ..ok },
        ] {
            assert!(cfg.validate().is_err(), "{cfg:?}");
        }
        assert_eq!(SimConfig { lambda_well: 0.0, ..ok }.trap_frequency(), 0.0);
        assert!((SimConfig { lambda_well: 0.5, target_speed: 0.05, ..ok }.trap_frequency() - 0.1).abs() < 1e-15);
    }

    #[test]
    fn transient_rule() {
        assert_eq!(default_transient(10.0), 2000);
        assert_eq!(default_transient(100.0), 2000);
        assert_eq!(default_transient(250.0), 5000);
    }

    #[test]
    fn config_json_round_trip() {
        let cfg = SimConfig {
            spatial_damping: Some(3.0),
            kick: 1.234567890123e-3,
            initial: InitialCondition {
                radius: Some(0.4),
                heading: Heading::Fixed(0.25),
            },
            ..SimConfig::default()
        };
        let text = serde_json::to_string(&cfg).unwrap();
        let back: SimConfig = serde_json::from_str(&text).unwrap();
        assert_eq!(back, cfg);
    }
}
