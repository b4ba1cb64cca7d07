//! Orbit observables: RMS radius and normalized angular momentum.

use serde::{Deserialize, Serialize};

use super::AnalysisError;
use crate::model::{Impact, Trajectory};

/// Windowed radius spread below which an orbit counts as converged.
pub const CONVERGED_RADIUS_SPREAD: f64 = 0.03;
/// Windowed angular-momentum spread below which an orbit counts as converged.
pub const CONVERGED_LZ_SPREAD: f64 = 0.05;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Observables {
    pub mean_radius: f64,
    pub mean_angular_momentum: f64,
    pub sample_count: usize,
    pub transient_discarded: usize,
}

impl Observables {
    /// Observables of `impacts[transient..]` relative to walking speed `speed`.
    pub fn from_impacts(impacts: &[Impact], transient: usize, speed: f64) -> Result<Self, AnalysisError> {
        let skip = transient.min(impacts.len());
        let kept = &impacts[skip..];
        Ok(Self {
            mean_radius: mean_radius(kept)?,
            mean_angular_momentum: mean_angular_momentum(kept, speed)?,
            sample_count: kept.len(),
            transient_discarded: skip,
        })
    }

    /// Observables past the trajectory's default transient, relative to its
    /// configured walking speed.
    pub fn of_trajectory(trajectory: &Trajectory) -> Result<Self, AnalysisError> {
        Self::from_impacts(
            &trajectory.impacts,
            trajectory.config.transient(),
            trajectory.config.target_speed,
        )
    }
}

/// `sqrt(mean |r|^2)` over the samples.
pub fn mean_radius(impacts: &[Impact]) -> Result<f64, AnalysisError> {
    if impacts.is_empty() {
        return Err(AnalysisError::EmptyTrajectory);
    }
    let sum: f64 = impacts.iter().map(|i| i.position.norm_sq()).sum();
    Ok((sum / impacts.len() as f64).sqrt())
}

fn check_speed(speed: f64) -> Result<(), AnalysisError> {
    if speed > 0.0 && speed.is_finite() {
        Ok(())
    } else {
        Err(AnalysisError::InvalidArgument {
            name: "reference_speed",
            value: speed,
        })
    }
}

/// `mean (r x v)_z / V` over the samples.
pub fn mean_angular_momentum(impacts: &[Impact], speed: f64) -> Result<f64, AnalysisError> {
    check_speed(speed)?;
    if impacts.is_empty() {
        return Err(AnalysisError::EmptyTrajectory);
    }
    let sum: f64 = impacts.iter().map(|i| i.position.cross(i.velocity) / speed).sum();
    Ok(sum / impacts.len() as f64)
}

/// A window's centre time together with its RMS radius and mean angular
/// momentum.
#[derive(Clone, Copy, Debug, PartialEq)]
pub(crate) struct WindowStats {
    pub centre: f64,
    pub radius: f64,
    pub lz: f64,
}

/// Statistics of every window of `width` consecutive samples starting at
/// multiples of `stride`. Requires `1 <= width <= impacts.len()`.
pub(crate) fn windowed(impacts: &[Impact], width: usize, stride: usize, speed: f64) -> Vec<WindowStats> {
    debug_assert!(width >= 1 && width <= impacts.len() && stride >= 1);
    let mut r2 = Vec::with_capacity(impacts.len() + 1);
    let mut lz = Vec::with_capacity(impacts.len() + 1);
    r2.push(0.0);
    lz.push(0.0);
    let (mut sr, mut sl) = (0.0, 0.0);
    for i in impacts {
        sr += i.position.norm_sq();
        sl += i.position.cross(i.velocity) / speed;
        r2.push(sr);
        lz.push(sl);
    }
    let w = width as f64;
    (0..=impacts.len() - width)
        .step_by(stride)
        .map(|s| WindowStats {
            centre: 0.5 * (impacts[s].t + impacts[s + width - 1].t),
            radius: ((r2[s + width] - r2[s]) / w).max(0.0).sqrt(),
            lz: (lz[s + width] - lz[s]) / w,
        })
        .collect()
}

/// How much one-orbit averages of R̄ and L̄z wander over a record.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrbitStability {
    /// Window length in samples (one orbital period at the mean radius).
    pub window: usize,
    pub radius_spread: f64,
    pub lz_spread: f64,
}

impl OrbitStability {
    /// Both spreads below the convergence thresholds.
    pub fn is_converged(&self) -> bool {
        self.radius_spread < CONVERGED_RADIUS_SPREAD && self.lz_spread < CONVERGED_LZ_SPREAD
    }
}

fn std_dev(values: impl Iterator<Item = f64> + Clone) -> f64 {
    let n = values.clone().count() as f64;
    let mean = values.clone().sum::<f64>() / n;
    (values.map(|v| (v - mean) * (v - mean)).sum::<f64>() / n).sqrt()
}

/// Standard deviation of windowed R̄ and L̄z, with windows one orbital period
/// `2 pi R̄ / V` long, sampled a quarter-window apart.
pub fn orbit_stability(impacts: &[Impact], speed: f64) -> Result<OrbitStability, AnalysisError> {
    check_speed(speed)?;
    let radius = mean_radius(impacts)?;
    let period = (std::f64::consts::TAU * radius / speed).round();
    let window = (period as usize).clamp(1, impacts.len());
    let stats = windowed(impacts, window, (window / 4).max(1), speed);
    Ok(OrbitStability {
        window,
        radius_spread: std_dev(stats.iter().map(|s| s.radius)),
        lz_spread: std_dev(stats.iter().map(|s| s.lz)),
    })
}
