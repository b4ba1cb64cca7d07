//! One function per verb. Each returns the JSON summary line.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::Context;
use serde_json::{json, Value};
use walker_core::analysis::{
    classify as label_of, classify_point, default_window, fit_cassini, graf_spectrum, lattice_node, orbit_stability,
    quantized_radius, segment_eigenstates, sliding_lz, EigenstateLabel, Observables,
};
use walker_core::lab::{
    calibration_line, intermittency_histogram, lattice_table, read_records, run_sweep, state_table,
    tongue_table, write_csv, LabError, RunRecord, SweepOptions, SweepSpec, LATTICE_MAX_DISTANCE,
};
use walker_core::model::io::{format_float, read_impacts, read_meta, write_trajectory_with_transient, TrajectoryMeta};
use walker_core::model::{
    calibrate_kick, free_walking_speed, simulate as run_simulation, speed_from_si, speed_to_si, Impact,
    SimConfig, Trajectory, FARADAY_PERIOD_S, FARADAY_WAVELENGTH_M,
};

use crate::{
    AnalyzeArgs, BathArgs, CalibrateArgs, ClassifyArgs, DecomposeArgs, Failure, Figure, FiguresArgs,
    SimulateArgs, SweepArgs,
};

type Outcome = Result<Value, Failure>;

fn usage(message: impl Into<String>) -> Failure {
    Failure::Usage(message.into())
}

fn runtime(e: impl Into<anyhow::Error>) -> Failure {
    Failure::Runtime(e.into())
}

fn length_in(value: f64, si: bool) -> f64 {
    if si {
        value / FARADAY_WAVELENGTH_M
    } else {
        value
    }
}

fn time_in(value: f64, si: bool) -> f64 {
    if si {
        value / FARADAY_PERIOD_S
    } else {
        value
    }
}

fn speed_in(value: f64, si: bool) -> f64 {
    if si {
        speed_from_si(value)
    } else {
        value
    }
}

impl BathArgs {
    /// Template configuration with these bath settings (no trap, no kick).
    fn config(&self, si: bool) -> SimConfig {
        SimConfig {
            target_speed: speed_in(self.speed, si),
            friction: self.friction,
            spatial_damping: self.delta.map(|d| length_in(d, si)),
            source_cutoff: self.cutoff,
            ..SimConfig::default()
        }
    }
}

fn validated(config: SimConfig) -> Result<SimConfig, Failure> {
    config.validate().map_err(|e| usage(e.to_string()))?;
    Ok(config)
}

fn calibrated(config: SimConfig) -> Result<SimConfig, Failure> {
    eprintln!(
        "calibrating kick for M = {} to walking speed {}",
        config.memory, config.target_speed
    );
    let kick = calibrate_kick(&config, config.target_speed).map_err(runtime)?;
    eprintln!("kick = {kick:.6e}");
    Ok(SimConfig { kick, ..config })
}

fn to_value<T: serde::Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("summary values serialize")
}

fn label_value(label: &EigenstateLabel) -> Value {
    let (r, lz) = lattice_node(label.n, label.m);
    json!({
        "n": label.n,
        "m": label.m,
        "distance": label.distance,
        "node": { "R_bar": r, "Lz_bar": lz },
    })
}

/// Observables, label, stability and orbit fits of `impacts[transient..]`,
/// or `null`s with the reason when the record is too short.
fn steady_summary(impacts: &[Impact], transient: usize, speed: f64, si: bool) -> Value {
    let observables = match Observables::from_impacts(impacts, transient, speed) {
        Ok(o) => o,
        Err(e) => {
            return json!({
                "observables": null,
                "label": null,
                "analysis_error": e.to_string(),
            })
        }
    };
    let steady = &impacts[observables.transient_discarded..];
    let label = label_of(&observables);
    let mut summary = json!({
        "observables": to_value(&observables),
        "label": label_value(&label),
        "stability": orbit_stability(steady, speed).ok().map(|s| json!({
            "window": s.window,
            "radius_spread": s.radius_spread,
            "lz_spread": s.lz_spread,
            "converged": s.is_converged(),
        })),
        "cassini2": fit_cassini(steady, 2).ok().map(|f| to_value(&f)),
        "cassini3": fit_cassini(steady, 3).ok().map(|f| to_value(&f)),
    });
    if si {
        summary["si"] = json!({
            "mean_radius_m": observables.mean_radius * FARADAY_WAVELENGTH_M,
            "mean_lz_m": observables.mean_angular_momentum * FARADAY_WAVELENGTH_M,
            "speed_m_per_s": speed_to_si(speed),
        });
    }
    summary
}

/// Reads the configuration document given to `simulate --config`.
fn read_config_document(path: &Path) -> anyhow::Result<(SimConfig, Option<usize>)> {
    let text = fs::read_to_string(path).with_context(|| format!("{}", path.display()))?;
    if let Ok(meta) = serde_json::from_str::<TrajectoryMeta>(&text) {
        return Ok((meta.config, Some(meta.bounces)));
    }
    let config: SimConfig = serde_json::from_str(&text)
        .with_context(|| format!("{}: neither a trajectory sidecar nor a configuration", path.display()))?;
    Ok((config, None))
}

pub fn simulate(args: SimulateArgs, si: bool) -> Outcome {
    let (config, bounces) = match &args.config {
        Some(path) => {
            let (config, recorded) = read_config_document(path).map_err(Failure::Runtime)?;
            let bounces = args
                .bounces
                .or(recorded)
                .ok_or_else(|| usage("--bounces is required with a bare configuration document"))?;
            (validated(config)?, bounces)
        }
        None => {
            let template = SimConfig {
                lambda_well: args.lambda.expect("required by clap"),
                memory: args.memory.expect("required by clap"),
                seed: args.seed,
                kick: args.kick.unwrap_or(0.0),
                ..args.bath.config(si)
            };
            let config = validated(template)?;
            let config = if args.kick.is_some() { config } else { calibrated(config)? };
            (config, args.bounces.expect("required by clap"))
        }
    };

    let trajectory = run_simulation(&config, bounces).map_err(runtime)?;
    fs::create_dir_all(&args.output).with_context(|| format!("{}", args.output.display()))?;
    let path = args.output.join("trajectory.csv");
    let transient = if args.keep_transient { 0 } else { config.transient() };
    write_trajectory_with_transient(&trajectory, &path, transient).map_err(runtime)?;
    eprintln!("wrote {} bounces to {}", trajectory.len(), path.display());

    let mut summary = json!({
        "command": "simulate",
        "trajectory": path,
        "config": to_value(&config),
        "bounces": trajectory.len(),
        "transient": transient,
    });
    merge(&mut summary, steady_summary(&trajectory.impacts, transient, config.target_speed, si));
    Ok(summary)
}

fn merge(into: &mut Value, from: Value) {
    if let (Value::Object(a), Value::Object(b)) = (into, from) {
        a.extend(b);
    }
}

pub fn calibrate(args: CalibrateArgs, si: bool) -> Outcome {
    let config = validated(SimConfig {
        memory: args.memory,
        ..args.bath.config(si)
    })?;
    let kick = calibrate_kick(&config, config.target_speed).map_err(runtime)?;
    let measured = free_walking_speed(&config, kick).map_err(runtime)?;
    let mut summary = json!({
        "command": "calibrate",
        "memory": config.memory,
        "target_speed": config.target_speed,
        "kick": kick,
        "measured_speed": measured,
        "config": to_value(&SimConfig { kick, ..config }),
    });
    if si {
        summary["si"] = json!({
            "target_speed_m_per_s": speed_to_si(config.target_speed),
            "measured_speed_m_per_s": speed_to_si(measured),
        });
    }
    Ok(summary)
}

/// Trajectory file contents: sidecar plus impacts.
fn load(path: &Path) -> Result<(TrajectoryMeta, Vec<Impact>), Failure> {
    let meta = read_meta(path).map_err(runtime)?;
    let impacts = read_impacts(path).map_err(runtime)?;
    Ok((meta, impacts))
}

pub fn analyze(args: AnalyzeArgs, si: bool) -> Outcome {
    let (meta, impacts) = load(&args.trajectory)?;
    if impacts.is_empty() {
        return Err(runtime(anyhow::anyhow!("{}: trajectory has no impacts", args.trajectory.display())));
    }
    let speed = meta.config.target_speed;
    let window = args.window.map_or_else(|| default_window(speed), |w| time_in(w, si));
    if !(window > 0.0 && window.is_finite()) {
        return Err(usage(format!("--window must be positive, got {window}")));
    }
    let steady = &impacts[meta.transient.min(impacts.len())..];

    let intermittency = match sliding_lz(steady, window, speed) {
        Ok(profile) => json!({
            "window": profile.window,
            "windows": profile.series.len(),
            "peaks": to_value(&profile.peaks),
            "segments": segment_eigenstates(steady, window, speed).ok().map(|segs| {
                segs.iter()
                    .map(|s| json!({
                        "t_start": s.t_start,
                        "t_end": s.t_end,
                        "n": s.label.n,
                        "m": s.label.m,
                    }))
                    .collect::<Vec<_>>()
            }),
        }),
        Err(e) => json!({ "window": window, "error": e.to_string() }),
    };

    let mut summary = json!({
        "command": "analyze",
        "trajectory": args.trajectory,
        "bounces": impacts.len(),
        "transient": meta.transient,
    });
    merge(&mut summary, steady_summary(&impacts, meta.transient, speed, si));
    summary["intermittency"] = intermittency;
    Ok(summary)
}

fn stem(path: &Path) -> String {
    path.file_stem()
        .map_or_else(|| "trajectory".to_string(), |s| s.to_string_lossy().into_owned())
}

pub fn decompose(args: DecomposeArgs) -> Outcome {
    let (meta, impacts) = load(&args.trajectory)?;
    let Some(&last) = impacts.last() else {
        return Err(runtime(anyhow::anyhow!("{}: trajectory has no impacts", args.trajectory.display())));
    };
    let end = last.bounce + 1;
    let at = args.at_bounce.unwrap_or(end);
    if at == 0 || at > end {
        return Err(usage(format!("--at-bounce must lie in 1..={end}, got {at}")));
    }
    let trajectory = Trajectory::new(meta.config, impacts);
    let now = trajectory
        .impacts
        .iter()
        .find(|i| i.bounce == at)
        .map_or(last.t + (at - last.bounce) as f64, |i| i.t);
    let sources = trajectory.sources_before(at);
    let spectrum = graf_spectrum(&sources, now, meta.config.memory, args.nmax).map_err(|e| usage(e.to_string()))?;

    let dir = args.output.clone().unwrap_or_else(|| {
        args.trajectory
            .parent()
            .map_or_else(|| PathBuf::from("."), Path::to_path_buf)
    });
    fs::create_dir_all(&dir).with_context(|| format!("{}", dir.display()))?;
    let name = stem(&args.trajectory);
    let spectrum_path = dir.join(format!("{name}.spectrum.json"));
    let powers_path = dir.join(format!("{name}.powers.csv"));
    fs::write(&spectrum_path, serde_json::to_string_pretty(&spectrum).expect("spectrum serializes") + "\n")
        .with_context(|| format!("{}", spectrum_path.display()))?;

    let powers = spectrum.powers();
    let normalized = spectrum.normalized_powers();
    let mut csv = String::from("n,P_n,P_n_normalized\n");
    for (n, (p, q)) in powers.iter().zip(&normalized).enumerate() {
        csv.push_str(&format!("{n},{},{}\n", format_float(*p), format_float(*q)));
    }
    fs::write(&powers_path, csv).with_context(|| format!("{}", powers_path.display()))?;
    eprintln!("wrote {} and {}", spectrum_path.display(), powers_path.display());

    let n_max = spectrum.n_max;
    Ok(json!({
        "command": "decompose",
        "trajectory": args.trajectory,
        "spectrum": spectrum_path,
        "powers": powers_path,
        "n_max": n_max,
        "at_bounce": at,
        "evaluation_time": now,
        "sources": sources.len(),
        "a0": spectrum.a[0],
        "dominant_mode": spectrum.dominant_mode(1..=n_max),
        "dominant_even_mode": spectrum.dominant_mode((2..=n_max).step_by(2)),
        "dominant_odd_mode": spectrum.dominant_mode((1..=n_max).step_by(2)),
    }))
}

pub fn classify(args: ClassifyArgs, si: bool) -> Outcome {
    let (source, radius, lz) = match &args.trajectory {
        Some(path) => {
            let (meta, impacts) = load(path)?;
            let o = Observables::from_impacts(&impacts, meta.transient, meta.config.target_speed)
                .map_err(runtime)?;
            (json!(path), o.mean_radius, o.mean_angular_momentum)
        }
        None => (
            Value::Null,
            length_in(args.radius.expect("required by clap"), si),
            length_in(args.lz.expect("required by clap"), si),
        ),
    };
    if !(radius >= 0.0 && radius.is_finite() && lz.is_finite()) {
        return Err(usage(format!("invalid (R, Lz) = ({radius}, {lz})")));
    }
    let label = classify_point(radius, lz);
    Ok(json!({
        "command": "classify",
        "trajectory": source,
        "R_bar": radius,
        "Lz_bar": lz,
        "label": label_value(&label),
        "quantized_radius": quantized_radius(label.n),
    }))
}

/// `start:stop:step` (inclusive, within a small tolerance) or `a,b,c`.
fn parse_grid(name: &str, text: &str) -> Result<Vec<f64>, Failure> {
    let bad = || usage(format!("--{name}: expected start:stop:step or a comma-separated list, got {text:?}"));
    let values: Vec<f64> = if text.contains(':') {
        let parts: Vec<f64> = text
            .split(':')
            .map(|p| p.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|_| bad())?;
        let [start, stop, step] = parts[..] else { return Err(bad()) };
        if !(step > 0.0 && stop >= start && ((stop - start) / step) < 1e7) {
            return Err(bad());
        }
        let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
        // Rounding keeps grid values such as 0.3 + 3 * 0.05 readable in records.
        (0..count)
            .map(|k| ((start + k as f64 * step) * 1e9).round() / 1e9)
            .collect()
    } else {
        text.split(',')
            .map(|p| p.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|_| bad())?
    };
    if values.is_empty() {
        return Err(bad());
    }
    Ok(values)
}

pub fn sweep(args: SweepArgs, si: bool) -> Outcome {
    let spec = match &args.spec {
        Some(path) => {
            let text = fs::read_to_string(path).with_context(|| format!("{}", path.display()))?;
            serde_json::from_str::<SweepSpec>(&text).with_context(|| format!("{}", path.display()))?
        }
        None => SweepSpec {
            lambda_grid: parse_grid("lambda-grid", args.lambda_grid.as_deref().expect("required by clap"))?,
            memory_grid: parse_grid("memory-grid", args.memory_grid.as_deref().expect("required by clap"))?,
            replicates: args.replicates,
            bounces: args.bounces.expect("required by clap"),
            base_config: SimConfig {
                seed: args.seed,
                kick: args.kick.unwrap_or(0.0),
                ..args.bath.config(si)
            },
            calibrate_kick: args.kick.is_none(),
        },
    };
    if let Err(e) = spec.validate() {
        return Err(usage(e.to_string()));
    }
    if args.jobs == 0 {
        return Err(usage("--jobs must be at least 1"));
    }
    eprintln!(
        "sweep: {} points into {}",
        spec.keys().len(),
        args.output.display()
    );
    let summary = run_sweep(
        &spec,
        &args.output,
        SweepOptions {
            parallelism: args.jobs,
            keep_trajectories: args.keep_trajectories,
        },
    )
    .map_err(|e| match e {
        LabError::InvalidSpec(_) => usage(e.to_string()),
        other => runtime(other),
    })?;
    Ok(json!({
        "command": "sweep",
        "directory": summary.directory,
        "total": summary.total,
        "computed": summary.computed,
        "resumed": summary.resumed,
        "failed": summary.failed,
    }))
}

fn write_rows(path: &Path, header: &str, rows: impl IntoIterator<Item = String>) -> anyhow::Result<()> {
    let mut out = std::io::BufWriter::new(fs::File::create(path).with_context(|| format!("{}", path.display()))?);
    writeln!(out, "{header}")?;
    for row in rows {
        writeln!(out, "{row}")?;
    }
    out.flush()?;
    Ok(())
}

fn figure_key(figure: Figure) -> &'static str {
    match figure {
        Figure::Calibration => "2a",
        Figure::Tongues => "2b",
        Figure::Radii => "4a",
        Figure::AngularMomenta => "4b",
        Figure::Lattice => "4c",
        Figure::Intermittency => "6c",
    }
}

fn figure(figure: Figure, records: &[RunRecord], sweep_dir: &Path, dir: &Path) -> anyhow::Result<Value> {
    let key = figure_key(figure);
    let path = dir.join(format!("fig{key}.csv"));
    let value = match figure {
        Figure::Calibration => {
            let line = calibration_line(records)?;
            write_csv(&path, &line.points)?;
            let fit_path = dir.join("fig2a_fit.csv");
            write_rows(
                &fit_path,
                "M,slope,intercept,shift",
                [format!("{},{},{},{}", line.memory, line.slope, line.intercept, line.shift)],
            )?;
            json!({
                "table": path,
                "fit": fit_path,
                "memory": line.memory,
                "slope": line.slope,
                "intercept": line.intercept,
                "shift": line.shift,
                "points": line.points.len(),
            })
        }
        Figure::Tongues => {
            let rows = tongue_table(records);
            write_csv(&path, &rows)?;
            json!({ "table": path, "rows": rows.len() })
        }
        Figure::Radii | Figure::AngularMomenta => {
            let rows = state_table(records);
            let (column, pick): (&str, fn(f64, f64) -> f64) = if figure == Figure::Radii {
                ("R_bar", |r, _| r)
            } else {
                ("Lz_bar", |_, l| l)
            };
            write_rows(
                &path,
                &format!("M,Lambda,replicate,{column},n,m,distance,converged"),
                rows.iter().map(|r| {
                    format!(
                        "{},{},{},{},{},{},{},{}",
                        r.memory,
                        r.lambda_well,
                        r.replicate,
                        pick(r.mean_radius, r.mean_lz),
                        r.n,
                        r.m,
                        r.distance,
                        r.converged
                    )
                }),
            )?;
            json!({ "table": path, "rows": rows.len() })
        }
        Figure::Lattice => {
            let rows = lattice_table(records, LATTICE_MAX_DISTANCE);
            write_csv(&path, &rows)?;
            let states: Vec<Value> = rows.iter().map(|r| json!({ "n": r.n, "m": r.m, "count": r.count })).collect();
            json!({ "table": path, "rows": rows.len(), "states": states })
        }
        Figure::Intermittency => {
            let summary = intermittency_histogram(sweep_dir)?;
            let h = &summary.histogram;
            write_rows(
                &path,
                "bin_low,bin_high,probability",
                h.probabilities
                    .iter()
                    .enumerate()
                    .map(|(i, p)| format!("{},{},{}", h.edges[i], h.edges[i + 1], p)),
            )?;
            json!({
                "table": path,
                "runs": summary.runs,
                "windows": summary.windows,
                "peaks": to_value(&summary.peaks),
            })
        }
    };
    Ok(value)
}

pub fn figures(args: FiguresArgs) -> Outcome {
    let records = read_records(&args.directory).map_err(runtime)?;
    if records.is_empty() {
        return Err(runtime(LabError::MissingRecords(args.directory.clone())));
    }
    let dir = args.output.clone().unwrap_or_else(|| args.directory.clone());
    fs::create_dir_all(&dir).with_context(|| format!("{}", dir.display()))?;
    let mut tables = serde_json::Map::new();
    for &which in &args.which {
        let value = figure(which, &records, &args.directory, &dir)
            .with_context(|| format!("figure {}", figure_key(which)))?;
        eprintln!("figure {}: {}", figure_key(which), value["table"]);
        tables.insert(figure_key(which).to_string(), value);
    }
    Ok(json!({
        "command": "figures",
        "directory": args.directory,
        "figures": tables,
    }))
}
