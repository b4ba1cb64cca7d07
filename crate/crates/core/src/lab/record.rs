//! One grid point: simulate, analyse, and record.

use serde::{Deserialize, Serialize};

use crate::analysis::{
    classify, fit_cassini, orbit_stability, CassiniFit, EigenstateLabel, Observables, OrbitStability,
};
use crate::model::{simulate, SimConfig, Trajectory};

/// Position of a run in the sweep grid.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct PointKey {
    pub memory_index: usize,
    pub lambda_index: usize,
    pub replicate: u32,
}

/// Everything derived from one trajectory's post-transient record.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointAnalysis {
    pub observables: Observables,
    pub label: EigenstateLabel,
    pub stability: OrbitStability,
    /// Two-focus fit; `None` when the fit is impossible (too few samples).
    pub cassini2: Option<CassiniFit>,
    /// Three-focus fit.
    pub cassini3: Option<CassiniFit>,
}

impl PointAnalysis {
    pub fn of(trajectory: &Trajectory) -> Result<Self, crate::analysis::AnalysisError> {
        let observables = Observables::of_trajectory(trajectory)?;
        let steady = trajectory.steady();
        Ok(Self {
            label: classify(&observables),
            stability: orbit_stability(steady, trajectory.config.target_speed)?,
            cassini2: fit_cassini(steady, 2).ok(),
            cassini3: fit_cassini(steady, 3).ok(),
            observables,
        })
    }

    /// Converged orbit with `|m| = n`.
    pub fn is_stable_circle(&self) -> bool {
        self.stability.is_converged() && self.label.is_circular()
    }
}

/// Wall-clock bookkeeping; the only part of a record that varies between
/// identical reruns.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RuntimeMeta {
    pub elapsed_ms: u64,
}

/// One line of `records.jsonl`. Re-running `simulate(&config, bounces)`
/// reproduces `analysis` bit for bit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub key: PointKey,
    pub lambda_well: f64,
    pub memory: f64,
    pub seed: u64,
    pub bounces: usize,
    pub config: SimConfig,
    pub analysis: Option<PointAnalysis>,
    pub error: Option<String>,
    pub runtime: RuntimeMeta,
}

/// Simulates and analyses `config` for `bounces` bounces.
pub fn evaluate_point(config: &SimConfig, bounces: usize) -> Result<(Trajectory, PointAnalysis), String> {
    let trajectory = simulate(config, bounces).map_err(|e| format!("simulation: {e}"))?;
    let analysis = PointAnalysis::of(&trajectory).map_err(|e| format!("analysis: {e}"))?;
    Ok((trajectory, analysis))
}
