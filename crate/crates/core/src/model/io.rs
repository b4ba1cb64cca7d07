//! Trajectory files: `bounce,t,x,y,vx,vy` CSV plus a JSON sidecar with the
//! configuration. Floats are written with 17 significant digits, which
//! round-trips every `f64` exactly.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::config::SimConfig;
use super::dynamics::{Impact, Trajectory};
use crate::vec2::Vec2;

pub const CSV_HEADER: [&str; 6] = ["bounce", "t", "x", "y", "vx", "vy"];
pub const FORMAT_TAG: &str = "walker-trajectory/1";

#[derive(Debug, Error)]
pub enum TrajectoryIoError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Malformed {
        path: PathBuf,
        line: u64,
        message: String,
    },
    #[error("{path}: sidecar: {source}")]
    Sidecar {
        path: PathBuf,
        source: serde_json::Error,
    },
}

/// Contents of the JSON document written next to each trajectory CSV.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryMeta {
    pub format: String,
    pub config: SimConfig,
    pub seed: u64,
    pub bounces: usize,
    /// Leading bounces analysis should skip (not removed from the file).
    pub transient: usize,
}

/// `run.csv` -> `run.json`.
pub fn sidecar_path(csv_path: &Path) -> PathBuf {
    csv_path.with_extension("json")
}

pub fn format_float(v: f64) -> String {
    format!("{v:.16e}")
}

/// Writes the CSV and sidecar, marking the configuration's default transient.
pub fn write_trajectory(trajectory: &Trajectory, csv_path: &Path) -> Result<(), TrajectoryIoError> {
    write_trajectory_with_transient(trajectory, csv_path, trajectory.config.transient())
}

/// Writes the CSV and sidecar with an explicit transient length (0 keeps every
/// bounce in later analysis).
pub fn write_trajectory_with_transient(
    trajectory: &Trajectory,
    csv_path: &Path,
    transient: usize,
) -> Result<(), TrajectoryIoError> {
    let io_err = |path: &Path| {
        let path = path.to_path_buf();
        move |source| TrajectoryIoError::Io { path, source }
    };
    let file = File::create(csv_path).map_err(io_err(csv_path))?;
    let mut out = csv::Writer::from_writer(BufWriter::new(file));
    let to_io = |e: csv::Error| TrajectoryIoError::Io {
        path: csv_path.to_path_buf(),
        source: e.into(),
    };
    out.write_record(CSV_HEADER).map_err(to_io)?;
    for imp in &trajectory.impacts {
        out.write_record([
            imp.bounce.to_string(),
            format_float(imp.t),
            format_float(imp.position.x),
            format_float(imp.position.y),
            format_float(imp.velocity.x),
            format_float(imp.velocity.y),
        ])
        .map_err(to_io)?;
    }
    out.flush().map_err(io_err(csv_path))?;

    let meta = TrajectoryMeta {
        format: FORMAT_TAG.to_string(),
        config: trajectory.config,
        seed: trajectory.config.seed,
        bounces: trajectory.len(),
        transient,
    };
    let json_path = sidecar_path(csv_path);
    let mut side = File::create(&json_path).map_err(io_err(&json_path))?;
    let text = serde_json::to_string_pretty(&meta).map_err(|source| TrajectoryIoError::Sidecar {
        path: json_path.clone(),
        source,
    })?;
    side.write_all(text.as_bytes()).map_err(io_err(&json_path))?;
    side.write_all(b"\n").map_err(io_err(&json_path))?;
    Ok(())
}

pub fn read_meta(csv_path: &Path) -> Result<TrajectoryMeta, TrajectoryIoError> {
    let json_path = sidecar_path(csv_path);
    let text = std::fs::read_to_string(&json_path).map_err(|source| TrajectoryIoError::Io {
        path: json_path.clone(),
        source,
    })?;
    serde_json::from_str(&text).map_err(|source| TrajectoryIoError::Sidecar {
        path: json_path,
        source,
    })
}

/// Reads the CSV and its sidecar back into a [`Trajectory`].
pub fn read_trajectory(csv_path: &Path) -> Result<Trajectory, TrajectoryIoError> {
    let meta = read_meta(csv_path)?;
    let impacts = read_impacts(csv_path)?;
    Ok(Trajectory::new(meta.config, impacts))
}

pub fn read_impacts(csv_path: &Path) -> Result<Vec<Impact>, TrajectoryIoError> {
    let malformed = |line: u64, message: String| TrajectoryIoError::Malformed {
        path: csv_path.to_path_buf(),
        line,
        message,
    };
    let file = File::open(csv_path).map_err(|source| TrajectoryIoError::Io {
        path: csv_path.to_path_buf(),
        source,
    })?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .from_reader(std::io::BufReader::new(file));
    let mut records = reader.records();
    match records.next() {
        None => return Err(malformed(1, "empty file, expected header".into())),
        Some(Err(e)) => return Err(malformed(1, e.to_string())),
        Some(Ok(header)) => {
            if header.iter().ne(CSV_HEADER.iter().copied()) {
                return Err(malformed(1, format!("expected header {}", CSV_HEADER.join(","))));
            }
        }
    }
    let mut impacts = Vec::new();
    for rec in records {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            malformed(line, e.to_string())
        })?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.len() != CSV_HEADER.len() {
            return Err(malformed(line, format!("expected 6 fields, found {}", rec.len())));
        }
        let bounce: u64 = rec[0]
            .trim()
            .parse()
            .map_err(|e| malformed(line, format!("bounce: {e}")))?;
        let mut vals = [0.0; 5];
        for (k, slot) in vals.iter_mut().enumerate() {
            *slot = rec[k + 1]
                .trim()
                .parse()
                .map_err(|e| malformed(line, format!("{}: {e}", CSV_HEADER[k + 1])))?;
        }
        if let Some(prev) = impacts.last() {
            let prev: &Impact = prev;
            if bounce != prev.bounce + 1 {
                return Err(malformed(line, format!("bounce {bounce} does not follow {}", prev.bounce)));
            }
        }
        impacts.push(Impact {
            bounce,
            t: vals[0],
            position: Vec2::new(vals[1], vals[2]),
            velocity: Vec2::new(vals[3], vals[4]),
        });
    }
    Ok(impacts)
}
