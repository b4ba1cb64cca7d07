//! Figure tables extracted from run records.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::record::RunRecord;
use super::sweep::{read_records, trajectory_path};
use super::LabError;
use crate::analysis::{default_window, find_peaks, histogram, sliding_lz, Histogram, Peak};
use crate::model::io::read_trajectory;

/// Largest memory accepted for the calibration line.
pub const CALIBRATION_MAX_MEMORY: f64 = 15.0;
/// Default lattice admission threshold: half the smallest node spacing.
pub const LATTICE_MAX_DISTANCE: f64 = 0.2;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CalibrationPoint {
    #[serde(rename = "Lambda")]
    pub lambda_well: f64,
    #[serde(rename = "R_bar")]
    pub mean_radius: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CalibrationLine {
    pub memory: f64,
    pub slope: f64,
    pub intercept: f64,
    /// `slope - 1`.
    pub shift: f64,
    pub points: Vec<CalibrationPoint>,
}

/// Least-squares line `R̄ = slope Λ + intercept` through the converged
/// circular orbits of a single low-memory sweep.
pub fn calibration_line(records: &[RunRecord]) -> Result<CalibrationLine, LabError> {
    let usable: Vec<&RunRecord> = records
        .iter()
        .filter(|r| r.analysis.as_ref().is_some_and(|a| a.is_stable_circle()))
        .collect();
    let Some(first) = usable.first() else {
        return Err(LabError::InsufficientPoints { needed: 3, found: 0 });
    };
    let memory = first.memory;
    if let Some(other) = usable.iter().find(|r| r.memory != memory) {
        return Err(LabError::MixedMemory(memory, other.memory));
    }
    if memory > CALIBRATION_MAX_MEMORY {
        return Err(LabError::MemoryTooHigh {
            max: CALIBRATION_MAX_MEMORY,
            found: memory,
        });
    }
    let mut points: Vec<CalibrationPoint> = usable
        .iter()
        .map(|r| CalibrationPoint {
            lambda_well: r.lambda_well,
            mean_radius: r.analysis.as_ref().map_or(f64::NAN, |a| a.observables.mean_radius),
        })
        .collect();
    points.sort_by(|p, q| p.lambda_well.total_cmp(&q.lambda_well));
    let distinct = {
        let mut l: Vec<f64> = points.iter().map(|p| p.lambda_well).collect();
        l.dedup();
        l.len()
    };
    if points.len() < 3 || distinct < 2 {
        return Err(LabError::InsufficientPoints {
            needed: 3,
            found: points.len(),
        });
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.lambda_well).sum::<f64>() / n;
    let my = points.iter().map(|p| p.mean_radius).sum::<f64>() / n;
    let sxy: f64 = points.iter().map(|p| (p.lambda_well - mx) * (p.mean_radius - my)).sum();
    let sxx: f64 = points.iter().map(|p| (p.lambda_well - mx).powi(2)).sum();
    let slope = sxy / sxx;
    Ok(CalibrationLine {
        memory,
        slope,
        intercept: my - slope * mx,
        shift: slope - 1.0,
        points,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TongueRow {
    #[serde(rename = "M")]
    pub memory: f64,
    #[serde(rename = "Lambda")]
    pub lambda_well: f64,
    #[serde(rename = "R_bar")]
    pub mean_radius: f64,
}

/// `(M, Λ, R̄)` for every analysed record, sorted by `(M, Λ)`.
pub fn tongue_table(records: &[RunRecord]) -> Vec<TongueRow> {
    let mut rows: Vec<(crate::lab::PointKey, TongueRow)> = records
        .iter()
        .filter_map(|r| {
            r.analysis.as_ref().map(|a| {
                (
                    r.key,
                    TongueRow {
                        memory: r.memory,
                        lambda_well: r.lambda_well,
                        mean_radius: a.observables.mean_radius,
                    },
                )
            })
        })
        .collect();
    rows.sort_by(|(ka, a), (kb, b)| {
        a.memory
            .total_cmp(&b.memory)
            .then(a.lambda_well.total_cmp(&b.lambda_well))
            .then(ka.cmp(kb))
    });
    rows.into_iter().map(|(_, r)| r).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LatticeRow {
    pub n: u32,
    pub m: i32,
    #[serde(rename = "R_bar")]
    pub mean_radius: f64,
    #[serde(rename = "Lz_bar")]
    pub mean_lz: f64,
    #[serde(rename = "R_spread")]
    pub radius_spread: f64,
    #[serde(rename = "Lz_spread")]
    pub lz_spread: f64,
    pub count: usize,
}

/// Records whose lattice residual is below `max_distance`, grouped by
/// `(n, m)` with the mean and standard deviation of (R̄, L̄z).
pub fn lattice_table(records: &[RunRecord], max_distance: f64) -> Vec<LatticeRow> {
    let mut groups: BTreeMap<(u32, i32), Vec<(f64, f64)>> = BTreeMap::new();
    for a in records.iter().filter_map(|r| r.analysis.as_ref()) {
        if a.label.distance < max_distance {
            groups
                .entry((a.label.n, a.label.m))
                .or_default()
                .push((a.observables.mean_radius, a.observables.mean_angular_momentum));
        }
    }
    groups
        .into_iter()
        .map(|((n, m), pts)| {
            let k = pts.len() as f64;
            let mr = pts.iter().map(|p| p.0).sum::<f64>() / k;
            let ml = pts.iter().map(|p| p.1).sum::<f64>() / k;
            let sr = (pts.iter().map(|p| (p.0 - mr).powi(2)).sum::<f64>() / k).sqrt();
            let sl = (pts.iter().map(|p| (p.1 - ml).powi(2)).sum::<f64>() / k).sqrt();
            LatticeRow {
                n,
                m,
                mean_radius: mr,
                mean_lz: ml,
                radius_spread: sr,
                lz_spread: sl,
                count: pts.len(),
            }
        })
        .collect()
}

/// Per-run state summary for the R̄(Λ) and L̄z(Λ) plots.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StateRow {
    #[serde(rename = "M")]
    pub memory: f64,
    #[serde(rename = "Lambda")]
    pub lambda_well: f64,
    pub replicate: u32,
    #[serde(rename = "R_bar")]
    pub mean_radius: f64,
    #[serde(rename = "Lz_bar")]
    pub mean_lz: f64,
    pub n: u32,
    pub m: i32,
    pub distance: f64,
    pub converged: bool,
    /// Two-focus Cassini aspect `a / b` (0 for a circle, 1 for a lemniscate).
    pub aspect: f64,
}

/// One row per analysed record, sorted by `(M, Λ, replicate)`.
pub fn state_table(records: &[RunRecord]) -> Vec<StateRow> {
    let mut rows: Vec<(crate::lab::PointKey, StateRow)> = records
        .iter()
        .filter_map(|r| {
            let a = r.analysis.as_ref()?;
            Some((
                r.key,
                StateRow {
                    memory: r.memory,
                    lambda_well: r.lambda_well,
                    replicate: r.key.replicate,
                    mean_radius: a.observables.mean_radius,
                    mean_lz: a.observables.mean_angular_momentum,
                    n: a.label.n,
                    m: a.label.m,
                    distance: a.label.distance,
                    converged: a.stability.is_converged(),
                    aspect: a.cassini2.map_or(f64::NAN, |c| c.aspect()),
                },
            ))
        })
        .collect();
    rows.sort_by(|(ka, a), (kb, b)| {
        a.memory
            .total_cmp(&b.memory)
            .then(a.lambda_well.total_cmp(&b.lambda_well))
            .then(ka.cmp(kb))
    });
    rows.into_iter().map(|(_, r)| r).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntermittencySummary {
    /// Trajectories that contributed.
    pub runs: usize,
    /// Windowed values pooled into the histogram.
    pub windows: usize,
    pub histogram: Histogram,
    pub peaks: Vec<Peak>,
}

/// Pooled windowed-L̄z histogram over every kept trajectory of a sweep
/// (post-transient samples, default window for each run's walking speed).
pub fn intermittency_histogram(dir: &Path) -> Result<IntermittencySummary, LabError> {
    let records = read_records(dir)?;
    if records.is_empty() {
        return Err(LabError::MissingRecords(dir.to_path_buf()));
    }
    let mut values = Vec::new();
    let mut runs = 0;
    for rec in &records {
        let path = trajectory_path(dir, rec.key);
        if !path.exists() {
            continue;
        }
        let trajectory = read_trajectory(&path)?;
        let speed = trajectory.config.target_speed;
        let profile = sliding_lz(trajectory.steady(), default_window(speed), speed)?;
        values.extend(profile.series.iter().map(|s| s.1));
        runs += 1;
    }
    if runs == 0 {
        return Err(LabError::MissingTrajectories(dir.to_path_buf()));
    }
    let histogram = histogram(values.iter().copied());
    let peaks = find_peaks(&histogram);
    Ok(IntermittencySummary {
        runs,
        windows: values.len(),
        histogram,
        peaks,
    })
}

/// A row type of a figure table, with its CSV column names.
pub trait TableRow: Serialize {
    /// Column names, matching the serialized field names in order.
    const HEADER: &'static [&'static str];
}

impl TableRow for CalibrationPoint {
    const HEADER: &'static [&'static str] = &["Lambda", "R_bar"];
}

impl TableRow for TongueRow {
    const HEADER: &'static [&'static str] = &["M", "Lambda", "R_bar"];
}

impl TableRow for LatticeRow {
    const HEADER: &'static [&'static str] = &["n", "m", "R_bar", "Lz_bar", "R_spread", "Lz_spread", "count"];
}

impl TableRow for StateRow {
    const HEADER: &'static [&'static str] = &[
        "M", "Lambda", "replicate", "R_bar", "Lz_bar", "n", "m", "distance", "converged", "aspect",
    ];
}

/// Writes `rows` as CSV under the row type's header (present even when
/// `rows` is empty).
pub fn write_csv<T: TableRow>(path: &Path, rows: &[T]) -> Result<(), LabError> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_path(path)?;
    w.write_record(T::HEADER)?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush().map_err(|source| LabError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::{classify_point, Observables, OrbitStability};
    use crate::lab::{PointAnalysis, PointKey, RuntimeMeta};
    use crate::model::SimConfig;

    fn record(lambda_index: usize, memory: f64, lambda: f64, radius: f64, lz: f64, converged: bool) -> RunRecord {
        let spread = if converged { 0.0 } else { 1.0 };
        RunRecord {
            key: PointKey {
                memory_index: 0,
                lambda_index,
                replicate: 0,
            },
            lambda_well: lambda,
            memory,
            seed: 1,
            bounces: 100,
            config: SimConfig::default(),
            analysis: Some(PointAnalysis {
                observables: Observables {
                    mean_radius: radius,
                    mean_angular_momentum: lz,
                    sample_count: 100,
                    transient_discarded: 0,
                },
                label: classify_point(radius, lz),
                stability: OrbitStability {
                    window: 10,
                    radius_spread: spread,
                    lz_spread: spread,
                },
                cassini2: None,
                cassini3: None,
            }),
            error: None,
            runtime: RuntimeMeta { elapsed_ms: 0 },
        }
    }

    #[test]
    fn exact_proportionality_gives_unit_slope() {
        let recs: Vec<_> = (0..5)
            .map(|i| {
                let l = 0.5 + 0.25 * i as f64;
                record(i, 10.0, l, l, l, true)
            })
            .collect();
        let line = calibration_line(&recs).unwrap();
        assert!((line.slope - 1.0).abs() < 1e-12);
        assert!(line.shift.abs() < 1e-12 && line.intercept.abs() < 1e-12);
        assert_eq!(line.points.len(), 5);
    }

    #[test]
    fn calibration_filters_and_errors() {
        let single = [record(0, 10.0, 1.0, 1.0, 1.0, true)];
        assert!(matches!(
            calibration_line(&single),
            Err(LabError::InsufficientPoints { found: 1, .. })
        ));
        // unconverged and non-circular runs are ignored
        let recs = [
            record(0, 10.0, 0.5, 0.5, 0.5, true),
            record(1, 10.0, 1.0, 1.0, 1.0, true),
            record(2, 10.0, 1.5, 1.5, 1.5, false),
            record(3, 10.0, 1.7, 1.7, 0.0, true),
        ];
        assert!(matches!(calibration_line(&recs), Err(LabError::InsufficientPoints { found: 2, .. })));
        let mixed = [
            record(0, 10.0, 0.5, 0.5, 0.5, true),
            record(1, 12.0, 1.0, 1.0, 1.0, true),
            record(2, 10.0, 1.5, 1.5, 1.5, true),
        ];
        assert!(matches!(calibration_line(&mixed), Err(LabError::MixedMemory(..))));
        let high: Vec<_> = (0..3).map(|i| record(i, 50.0, 0.5 + i as f64, 0.5 + i as f64, 0.5 + i as f64, true)).collect();
        assert!(matches!(calibration_line(&high), Err(LabError::MemoryTooHigh { .. })));
    }

    #[test]
    fn tongue_rows_sorted() {
        assert!(tongue_table(&[]).is_empty());
        let recs = [
            record(1, 50.0, 0.9, 0.88, 0.1, false),
            record(0, 10.0, 1.2, 1.3, 0.0, false),
            record(0, 50.0, 0.4, 0.41, 0.0, false),
        ];
        let rows = tongue_table(&recs);
        assert_eq!(rows.len(), recs.len());
        let order: Vec<(f64, f64)> = rows.iter().map(|r| (r.memory, r.lambda_well)).collect();
        assert_eq!(order, vec![(10.0, 1.2), (50.0, 0.4), (50.0, 0.9)]);
    }

    #[test]
    fn lattice_groups_by_state() {
        let recs = [
            record(0, 50.0, 0.4, 0.37, 0.37, true),
            record(1, 50.0, 0.45, 0.39, 0.35, true),
            record(2, 50.0, 0.5, 0.37, -0.37, true),
            // too far from any node
            record(3, 50.0, 0.6, 0.62, 0.1, true),
        ];
        let rows = lattice_table(&recs, LATTICE_MAX_DISTANCE);
        let states: Vec<(u32, i32, usize)> = rows.iter().map(|r| (r.n, r.m, r.count)).collect();
        assert_eq!(states, vec![(1, -1, 1), (1, 1, 2)]);
        assert!((rows[1].mean_radius - 0.38).abs() < 1e-12);
        assert!((rows[1].radius_spread - 0.01).abs() < 1e-12);
        for r in &rows {
            assert!(r.m.unsigned_abs() <= r.n && (r.n as i32 - r.m) % 2 == 0);
        }
    }

    #[test]
    fn csv_headers_match_field_names() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        write_csv(&path, &tongue_table(&[record(0, 50.0, 0.4, 0.41, 0.0, false)])).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("M,Lambda,R_bar\n"), "{text}");
        let path = dir.path().join("l.csv");
        write_csv(&path, &lattice_table(&[record(0, 50.0, 0.4, 0.37, 0.37, true)], 0.2)).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("n,m,R_bar,Lz_bar,R_spread,Lz_spread,count\n"), "{text}");
    }

    /// Header the csv crate derives from the field names of `row`.
    fn derived_header<T: Serialize>(row: &T) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.serialize(row).unwrap();
        let text = String::from_utf8(w.into_inner().unwrap()).unwrap();
        text.lines().next().unwrap().to_string()
    }

    #[test]
    fn declared_headers_match_serialized_fields() {
        let recs = [record(0, 10.0, 0.4, 0.41, 0.0, true), record(1, 10.0, 0.8, 0.83, 0.83, true)];
        assert_eq!(derived_header(&tongue_table(&recs)[0]), TongueRow::HEADER.join(","));
        assert_eq!(derived_header(&lattice_table(&recs, 1.0)[0]), LatticeRow::HEADER.join(","));
        assert_eq!(derived_header(&state_table(&recs)[0]), StateRow::HEADER.join(","));
        let point = CalibrationPoint {
            lambda_well: 1.0,
            mean_radius: 1.0,
        };
        assert_eq!(derived_header(&point), CalibrationPoint::HEADER.join(","));
    }

    #[test]
    fn empty_table_keeps_its_header() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("empty.csv");
        write_csv::<LatticeRow>(&path, &[]).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text, "n,m,R_bar,Lz_bar,R_spread,Lz_spread,count\n");
    }

    #[test]
    fn intermittency_needs_trajectories() {
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(intermittency_histogram(dir.path()), Err(LabError::MissingRecords(_))));
    }
}
