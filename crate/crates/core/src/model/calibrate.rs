//! Kick calibration: the coefficient `C` whose free walker settles at a
//! requested speed.

use super::config::{Heading, InitialCondition, SimConfig};
use super::dynamics::Walker;
use super::ModelError;

pub const CALIBRATION_BOUNCES: usize = 5000;
/// Upper end of the bracketing search.
pub const MAX_KICK: f64 = 10.0;
/// Bisection stops once the speed is this close (relative) to the target.
const SPEED_TOLERANCE: f64 = 1e-3;

/// Median speed over the last 20% of a free (untrapped) run with `kick`.
pub fn free_walking_speed(config: &SimConfig, kick: f64) -> Result<f64, ModelError> {
    let probe = SimConfig {
        lambda_well: 0.0,
        kick,
        initial: InitialCondition {
            radius: Some(0.0),
            heading: Heading::Fixed(0.0),
        },
        ..*config
    };
    let mut walker = Walker::new(probe)?;
    let tail_start = CALIBRATION_BOUNCES - CALIBRATION_BOUNCES / 5;
    let mut speeds = Vec::with_capacity(CALIBRATION_BOUNCES / 5);
    for k in 0..CALIBRATION_BOUNCES {
        let impact = walker.advance();
        if k >= tail_start {
            speeds.push(impact.velocity.norm());
        }
    }
    if speeds.iter().any(|s| !s.is_finite()) {
        return Err(ModelError::Diverged {
            bounce: CALIBRATION_BOUNCES as u64,
        });
    }
    Ok(median(&mut speeds))
}

pub(crate) fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n == 0 {
        return f64::NAN;
    }
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// Finds `C` such that the free walker's asymptotic speed matches
/// `target_speed`. The trap setting of `config` is ignored.
pub fn calibrate_kick(config: &SimConfig, target_speed: f64) -> Result<f64, ModelError> {
    if !(target_speed >= 0.0 && target_speed.is_finite()) {
        return Err(ModelError::InvalidConfig {
            field: "target_speed",
            value: target_speed,
        });
    }
    if target_speed == 0.0 {
        return Ok(0.0);
    }
    let base = SimConfig {
        target_speed,
        ..*config
    };
    let speed = |kick: f64| free_walking_speed(&base, kick);

    let mut lo = 0.0;
    let mut hi = 1e-5;
    loop {
        let s = speed(hi)?;
        if s >= target_speed {
            break;
        }
        lo = hi;
        hi *= 2.0;
        if hi > MAX_KICK {
            return Err(ModelError::UnreachableSpeed { target: target_speed });
        }
    }
    let mut best = hi;
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        let s = speed(mid)?;
        best = mid;
        if (s - target_speed).abs() <= SPEED_TOLERANCE * target_speed {
            break;
        }
        if s < target_speed {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(best)
}

/// Copy of `config` with the kick calibrated to its own target speed.
pub fn with_calibrated_kick(config: &SimConfig) -> Result<SimConfig, ModelError> {
    let kick = calibrate_kick(config, config.target_speed)?;
    Ok(SimConfig { kick, ..*config })
}
