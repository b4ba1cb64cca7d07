//! Sweep execution with resumable JSON-lines output.
//!
//! Output is a pure function of the [`SweepSpec`]: points are processed in
//! key order in batches, each batch is computed in parallel and appended in
//! key order, so the record file is always a prefix of the full key-ordered
//! list whatever the thread count or the point at which a run was
//! interrupted.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::record::{evaluate_point, PointKey, RunRecord, RuntimeMeta};
use super::LabError;
use crate::model::io::write_trajectory;
use crate::model::{calibrate_kick, SimConfig};

pub const SPEC_FILE: &str = "spec.json";
pub const RECORDS_FILE: &str = "records.jsonl";
pub const TRAJECTORY_DIR: &str = "trajectories";

fn default_true() -> bool {
    true
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub lambda_grid: Vec<f64>,
    pub memory_grid: Vec<f64>,
    pub replicates: u32,
    pub bounces: usize,
    /// Template for every run; `lambda_well`, `memory` and `seed` are replaced
    /// per point, and `seed` is the base seed of the sweep.
    pub base_config: SimConfig,
    /// Calibrate the kick per memory value to `base_config.target_speed`
    /// (otherwise `base_config.kick` is used as given).
    #[serde(default = "default_true")]
    pub calibrate_kick: bool,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<(), LabError> {
        for (name, grid) in [("lambda_grid", &self.lambda_grid), ("memory_grid", &self.memory_grid)] {
            if grid.is_empty() {
                return Err(LabError::InvalidSpec(format!("{name} is empty")));
            }
            if grid.iter().any(|v| !v.is_finite()) {
                return Err(LabError::InvalidSpec(format!("{name} has a non-finite value")));
            }
            if grid.windows(2).any(|w| w[1] <= w[0]) {
                return Err(LabError::InvalidSpec(format!("{name} is not strictly increasing")));
            }
        }
        if self.replicates < 1 {
            return Err(LabError::InvalidSpec("replicates must be at least 1".into()));
        }
        for &memory in &self.memory_grid {
            for &lambda_well in &self.lambda_grid {
                SimConfig {
                    memory,
                    lambda_well,
                    ..self.base_config
                }
                .validate()?;
            }
        }
        Ok(())
    }

    /// Every grid key in processing order.
    pub fn keys(&self) -> Vec<PointKey> {
        let mut keys = Vec::new();
        for memory_index in 0..self.memory_grid.len() {
            for lambda_index in 0..self.lambda_grid.len() {
                for replicate in 0..self.replicates {
                    keys.push(PointKey {
                        memory_index,
                        lambda_index,
                        replicate,
                    });
                }
            }
        }
        keys
    }

    /// Configuration of one point, with the given kick.
    pub fn point_config(&self, key: PointKey, kick: f64) -> SimConfig {
        SimConfig {
            lambda_well: self.lambda_grid[key.lambda_index],
            memory: self.memory_grid[key.memory_index],
            seed: point_seed(self.base_config.seed, key),
            kick,
            ..self.base_config
        }
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of one grid point, a hash of the base seed and the point's indices.
pub fn point_seed(base_seed: u64, key: PointKey) -> u64 {
    let mut h = splitmix64(base_seed);
    for part in [key.lambda_index as u64, key.memory_index as u64, u64::from(key.replicate)] {
        h = splitmix64(h ^ part);
    }
    h
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SweepOptions {
    /// Worker threads (at least 1).
    pub parallelism: usize,
    /// Also write each point's trajectory under `trajectories/`.
    pub keep_trajectories: bool,
}

impl Default for SweepOptions {
    fn default() -> Self {
        Self {
            parallelism: 1,
            keep_trajectories: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepSummary {
    pub directory: PathBuf,
    pub total: usize,
    pub computed: usize,
    pub resumed: usize,
    pub failed: usize,
}

/// `trajectories/M{i}_L{j}_r{k}.csv` inside the run directory.
pub fn trajectory_path(dir: &Path, key: PointKey) -> PathBuf {
    dir.join(TRAJECTORY_DIR).join(format!(
        "M{:03}_L{:03}_r{:02}.csv",
        key.memory_index, key.lambda_index, key.replicate
    ))
}

fn io_error(path: &Path) -> impl FnOnce(std::io::Error) -> LabError + '_ {
    move |source| LabError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Reads every complete record. A trailing partial line (an interrupted
/// write) is ignored; a malformed line elsewhere is an error.
pub fn read_records(dir: &Path) -> Result<Vec<RunRecord>, LabError> {
    Ok(read_records_with_length(dir)?.0)
}

/// Records plus the byte length of the well-formed prefix of the file.
fn read_records_with_length(dir: &Path) -> Result<(Vec<RunRecord>, u64), LabError> {
    let path = dir.join(RECORDS_FILE);
    let file = match File::open(&path) {
        Ok(f) => f,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok((Vec::new(), 0)),
        Err(e) => return Err(io_error(&path)(e)),
    };
    let mut reader = BufReader::new(file);
    let mut records = Vec::new();
    let mut good_len = 0u64;
    let mut line = String::new();
    let mut number = 0;
    loop {
        line.clear();
        let n = reader.read_line(&mut line).map_err(io_error(&path))?;
        if n == 0 {
            break;
        }
        number += 1;
        let complete = line.ends_with('\n');
        match serde_json::from_str::<RunRecord>(line.trim_end()) {
            Ok(rec) if complete => {
                records.push(rec);
                good_len += n as u64;
            }
            Ok(_) => break,
            Err(_) if !complete => break,
            Err(e) => {
                return Err(LabError::Parse {
                    path,
                    line: number,
                    message: e.to_string(),
                })
            }
        }
    }
    Ok((records, good_len))
}

fn write_spec(dir: &Path, spec: &SweepSpec) -> Result<(), LabError> {
    let path = dir.join(SPEC_FILE);
    let text = serde_json::to_string_pretty(spec).expect("sweep spec serializes") + "\n";
    match fs::read_to_string(&path) {
        Ok(existing) => {
            let old: SweepSpec = serde_json::from_str(&existing).map_err(|e| LabError::Parse {
                path: path.clone(),
                line: e.line(),
                message: e.to_string(),
            })?;
            if &old != spec {
                return Err(LabError::SpecMismatch(path));
            }
            Ok(())
        }
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => fs::write(&path, text).map_err(io_error(&path)),
        Err(e) => Err(io_error(&path)(e)),
    }
}

/// Runs (or resumes) the sweep into `dir`.
pub fn run_sweep(spec: &SweepSpec, dir: &Path, options: SweepOptions) -> Result<SweepSummary, LabError> {
    spec.validate()?;
    if options.parallelism == 0 {
        return Err(LabError::InvalidSpec("parallelism must be at least 1".into()));
    }
    fs::create_dir_all(dir).map_err(io_error(dir))?;
    write_spec(dir, spec)?;
    if options.keep_trajectories {
        let tdir = dir.join(TRAJECTORY_DIR);
        fs::create_dir_all(&tdir).map_err(io_error(&tdir))?;
    }

    let (existing, good_len) = read_records_with_length(dir)?;
    let done: BTreeSet<PointKey> = existing.iter().map(|r| r.key).collect();
    let pending: Vec<PointKey> = spec.keys().into_iter().filter(|k| !done.contains(k)).collect();

    let records_path = dir.join(RECORDS_FILE);
    let out = OpenOptions::new()
        .create(true)
        .write(true)
        .truncate(false)
        .open(&records_path)
        .map_err(io_error(&records_path))?;
    // Drop any partial trailing line before appending.
    out.set_len(good_len).map_err(io_error(&records_path))?;
    drop(out);
    let mut out = OpenOptions::new()
        .append(true)
        .open(&records_path)
        .map_err(io_error(&records_path))?;

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(options.parallelism)
        .build()
        .map_err(|e| LabError::InvalidSpec(e.to_string()))?;

    let memories: BTreeSet<usize> = pending.iter().map(|k| k.memory_index).collect();
    let kicks: BTreeMap<usize, Result<f64, String>> = pool.install(|| {
        memories
            .into_par_iter()
            .map(|mi| {
                let kick = if spec.calibrate_kick {
                    let probe = SimConfig {
                        memory: spec.memory_grid[mi],
                        ..spec.base_config
                    };
                    calibrate_kick(&probe, probe.target_speed).map_err(|e| format!("calibration: {e}"))
                } else {
                    Ok(spec.base_config.kick)
                };
                (mi, kick)
            })
            .collect()
    });

    let mut failed = existing.iter().filter(|r| r.error.is_some()).count();
    let batch = 4 * options.parallelism;
    for chunk in pending.chunks(batch) {
        let records: Vec<RunRecord> = pool.install(|| {
            chunk
                .par_iter()
                .map(|&key| run_point(spec, dir, key, &kicks[&key.memory_index], options.keep_trajectories))
                .collect()
        });
        let mut text = String::new();
        for rec in &records {
            failed += usize::from(rec.error.is_some());
            text.push_str(&serde_json::to_string(rec).expect("run record serializes"));
            text.push('\n');
        }
        out.write_all(text.as_bytes()).map_err(io_error(&records_path))?;
        out.flush().map_err(io_error(&records_path))?;
    }

    Ok(SweepSummary {
        directory: dir.to_path_buf(),
        total: spec.keys().len(),
        computed: pending.len(),
        resumed: existing.len(),
        failed,
    })
}

fn run_point(spec: &SweepSpec, dir: &Path, key: PointKey, kick: &Result<f64, String>, keep: bool) -> RunRecord {
    let start = Instant::now();
    let config = spec.point_config(key, *kick.as_ref().unwrap_or(&0.0));
    let mut record = RunRecord {
        key,
        lambda_well: config.lambda_well,
        memory: config.memory,
        seed: config.seed,
        bounces: spec.bounces,
        config,
        analysis: None,
        error: None,
        runtime: RuntimeMeta { elapsed_ms: 0 },
    };
    match kick {
        Err(e) => record.error = Some(e.clone()),
        Ok(_) => match evaluate_point(&config, spec.bounces) {
            Ok((trajectory, analysis)) => {
                record.analysis = Some(analysis);
                if keep {
                    if let Err(e) = write_trajectory(&trajectory, &trajectory_path(dir, key)) {
                        record.error = Some(format!("trajectory: {e}"));
                    }
                }
            }
            Err(e) => record.error = Some(e),
        },
    }
    record.runtime.elapsed_ms = start.elapsed().as_millis() as u64;
    record
}
