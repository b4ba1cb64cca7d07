//! Experiment harness: parameter sweeps over (Λ, M), run records persisted
//! as JSON lines, and the tables behind the calibration, tongue, lattice and
//! intermittency plots.

mod record;
mod sweep;
mod tables;

use std::path::PathBuf;

use thiserror::Error;

use crate::analysis::AnalysisError;
use crate::model::io::TrajectoryIoError;
use crate::model::ModelError;

pub use record::{evaluate_point, PointAnalysis, PointKey, RunRecord, RuntimeMeta};
pub use sweep::{
    point_seed, read_records, run_sweep, trajectory_path, SweepOptions, SweepSpec, SweepSummary,
    RECORDS_FILE, SPEC_FILE, TRAJECTORY_DIR,
};
pub use tables::{
    calibration_line, intermittency_histogram, lattice_table, state_table, tongue_table, write_csv,
    CalibrationLine, CalibrationPoint, IntermittencySummary, LatticeRow, StateRow, TableRow, TongueRow,
    CALIBRATION_MAX_MEMORY, LATTICE_MAX_DISTANCE,
};

#[derive(Debug, Error)]
pub enum LabError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}:{line}: {message}")]
    Parse { path: PathBuf, line: usize, message: String },
    #[error("invalid sweep: {0}")]
    InvalidSpec(String),
    #[error("{0} holds a different sweep specification")]
    SpecMismatch(PathBuf),
    #[error("no run records in {0}")]
    MissingRecords(PathBuf),
    #[error("no kept trajectories in {0}")]
    MissingTrajectories(PathBuf),
    #[error("need at least {needed} usable records, found {found}")]
    InsufficientPoints { needed: usize, found: usize },
    #[error("records must share one memory value; found {0} and {1}")]
    MixedMemory(f64, f64),
    #[error("calibration needs memory <= {max}, found {found}")]
    MemoryTooHigh { max: f64, found: f64 },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
    #[error(transparent)]
    Trajectory(#[from] TrajectoryIoError),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}
