use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use walker_core::analysis::synthetic::lemniscate_orbit;
use walker_core::model::io::write_trajectory;
use walker_core::model::{SimConfig, Trajectory};

/// Kick that gives the default walking speed at M = 50.
const KICK_M50: &str = "7.5e-5";

fn walker_lab(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_walker-lab"))
        .args(args)
        .current_dir(cwd)
        .env_remove("WALKER_LAB_SEED")
        .output()
        .expect("binary runs")
}

/// The single JSON line on stdout of a successful command.
fn summary(out: &Output) -> Value {
    assert!(
        out.status.success(),
        "exit {:?}\nstderr: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    let stdout = String::from_utf8(out.stdout.clone()).unwrap();
    let lines: Vec<&str> = stdout.lines().collect();
    assert_eq!(lines.len(), 1, "stdout: {stdout}");
    serde_json::from_str(lines[0]).expect("summary is JSON")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn simulate_circle(dir: &Path, out: &str) -> Value {
    summary(&walker_lab(
        &[
            "simulate", "--lambda", "0.6", "--memory", "50", "--bounces", "20000", "--seed", "3", "--kick",
            KICK_M50, "-o", out,
        ],
        dir,
    ))
}

#[test]
fn simulate_writes_files_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let s = summary(&walker_lab(
        &[
            "simulate", "--lambda", "0.4", "--memory", "50", "--bounces", "20000", "--seed", "7", "--kick",
            KICK_M50, "-o", "run1/",
        ],
        dir.path(),
    ));
    assert!(dir.path().join("run1/trajectory.csv").exists());
    assert!(dir.path().join("run1/trajectory.json").exists());
    assert_eq!(s["command"], "simulate");
    assert_eq!(s["bounces"], 20000);
    assert!(s["observables"]["mean_radius"].as_f64().unwrap() > 0.0);
    assert!(s["label"]["n"].as_u64().unwrap() >= 1);
}

#[test]
fn zero_bounces_is_an_empty_trajectory() {
    let dir = tempfile::tempdir().unwrap();
    let s = summary(&walker_lab(
        &["simulate", "--lambda", "1", "--memory", "10", "--bounces", "0", "--kick", "1e-4", "-o", "e"],
        dir.path(),
    ));
    assert_eq!(s["bounces"], 0);
    assert!(s["observables"].is_null());
    let csv = fs::read_to_string(dir.path().join("e/trajectory.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1);
}

#[test]
fn usage_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let missing = walker_lab(&["simulate", "--memory", "50", "--bounces", "10", "-o", "x"], dir.path());
    assert_eq!(missing.status.code(), Some(2));
    assert!(stderr(&missing).contains("Usage"));
    assert!(missing.stdout.is_empty());

    let unknown = walker_lab(
        &["simulate", "--lambda", "1", "--memory", "5", "--bounces", "1", "--bogus", "-o", "x"],
        dir.path(),
    );
    assert_eq!(unknown.status.code(), Some(2));

    let invalid = walker_lab(
        &["simulate", "--lambda", "1", "--memory", "5", "--bounces", "1", "--friction", "1.5", "-o", "x"],
        dir.path(),
    );
    assert_eq!(invalid.status.code(), Some(2));
    assert!(stderr(&invalid).contains("friction"));
}

#[test]
fn identical_seeds_give_identical_files_and_config_reruns() {
    let dir = tempfile::tempdir().unwrap();
    simulate_circle(dir.path(), "a");
    simulate_circle(dir.path(), "b");
    let read = |p: &str| fs::read(dir.path().join(p)).unwrap();
    assert_eq!(read("a/trajectory.csv"), read("b/trajectory.csv"));
    assert_eq!(read("a/trajectory.json"), read("b/trajectory.json"));

    summary(&walker_lab(&["simulate", "--config", "a/trajectory.json", "-o", "c"], dir.path()));
    assert_eq!(read("a/trajectory.csv"), read("c/trajectory.csv"));
}

#[test]
fn seed_environment_variable_sets_the_default_seed() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_walker-lab"))
        .args(["simulate", "--lambda", "1", "--memory", "5", "--bounces", "3", "--kick", "1e-4", "-o", "s"])
        .current_dir(dir.path())
        .env("WALKER_LAB_SEED", "42")
        .output()
        .unwrap();
    assert_eq!(summary(&out)["config"]["seed"], 42);
}

#[test]
fn decompose_circle_is_dominated_by_first_mode() {
    let dir = tempfile::tempdir().unwrap();
    let sim = simulate_circle(dir.path(), "run");
    assert_eq!(sim["label"]["n"], 1);
    let s = summary(&walker_lab(&["decompose", "run/trajectory.csv", "--nmax", "40"], dir.path()));
    assert_eq!(s["dominant_mode"], 1);
    let powers = fs::read_to_string(dir.path().join("run/trajectory.powers.csv")).unwrap();
    let mut lines = powers.lines();
    assert_eq!(lines.next(), Some("n,P_n,P_n_normalized"));
    assert_eq!(lines.count(), 41);
    let spectrum: Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("run/trajectory.spectrum.json")).unwrap()).unwrap();
    assert_eq!(spectrum["a_coeffs"].as_array().unwrap().len(), 41);
}

#[test]
fn decompose_lemniscate_is_dominated_by_fourth_even_mode() {
    let dir = tempfile::tempdir().unwrap();
    let config = SimConfig {
        memory: 50.0,
        ..SimConfig::default()
    };
    let trajectory = Trajectory::new(config, lemniscate_orbit(1.0, config.target_speed, 3000));
    write_trajectory(&trajectory, &dir.path().join("lem.csv")).unwrap();
    let s = summary(&walker_lab(&["decompose", "lem.csv"], dir.path()));
    assert_eq!(s["dominant_even_mode"], 4);
}

#[test]
fn decompose_rejects_bad_files() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("empty.csv"), "").unwrap();
    let out = walker_lab(&["decompose", "empty.csv"], dir.path());
    assert_eq!(out.status.code(), Some(1));

    simulate_circle(dir.path(), "run");
    let path = dir.path().join("run/trajectory.csv");
    let mut text = fs::read_to_string(&path).unwrap();
    text.push_str("1,2,three,4,5,6\n");
    fs::write(&path, text).unwrap();
    let out = walker_lab(&["decompose", "run/trajectory.csv"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains(":20002:"), "{}", stderr(&out));
}

#[test]
fn classify_explicit_pair_and_si_units() {
    let dir = tempfile::tempdir().unwrap();
    let s = summary(&walker_lab(&["classify", "--radius", "0.9", "--lz", "0"], dir.path()));
    assert_eq!((s["label"]["n"].as_u64(), s["label"]["m"].as_i64()), (Some(2), Some(0)));
    let s = summary(&walker_lab(
        &["--si", "classify", "--radius", "4.2e-3", "--lz", "-4.1e-3"],
        dir.path(),
    ));
    assert_eq!((s["label"]["n"].as_u64(), s["label"]["m"].as_i64()), (Some(2), Some(-2)));
}

#[test]
fn analyze_reports_observables_and_intermittency() {
    let dir = tempfile::tempdir().unwrap();
    simulate_circle(dir.path(), "run");
    let s = summary(&walker_lab(&["analyze", "run/trajectory.csv"], dir.path()));
    assert_eq!(s["label"]["n"], 1);
    assert_eq!(s["stability"]["converged"], true);
    let peaks = s["intermittency"]["peaks"].as_array().unwrap();
    assert_eq!(peaks.len(), 1);
}

#[test]
fn sweep_then_figures() {
    let dir = tempfile::tempdir().unwrap();
    let s = summary(&walker_lab(
        &[
            "sweep", "--lambda-grid", "0.5:2.0:0.5", "--memory-grid", "10", "--bounces", "6000", "-o", "low",
        ],
        dir.path(),
    ));
    assert_eq!(s["total"], 4);
    assert_eq!(s["computed"], 4);

    // Resuming computes nothing new.
    let again = summary(&walker_lab(
        &[
            "sweep", "--lambda-grid", "0.5:2.0:0.5", "--memory-grid", "10", "--bounces", "6000", "-o", "low",
        ],
        dir.path(),
    ));
    assert_eq!(again["resumed"], 4);
    assert_eq!(again["computed"], 0);

    let f = summary(&walker_lab(&["figures", "low", "--which", "2a,4c"], dir.path()));
    let slope = f["figures"]["2a"]["slope"].as_f64().unwrap();
    assert!((0.9..1.2).contains(&slope), "slope {slope}");
    let fit = fs::read_to_string(dir.path().join("low/fig2a_fit.csv")).unwrap();
    assert!(fit.starts_with("M,slope,intercept,shift\n"));
    let table = fs::read_to_string(dir.path().join("low/fig2a.csv")).unwrap();
    assert!(table.starts_with("Lambda,R_bar\n"));
    let lattice = fs::read_to_string(dir.path().join("low/fig4c.csv")).unwrap();
    assert!(lattice.starts_with("n,m,"));

    let bad = walker_lab(&["figures", "low", "--which", "9z"], dir.path());
    assert_eq!(bad.status.code(), Some(2));
    fs::create_dir(dir.path().join("nothing")).unwrap();
    let missing = walker_lab(&["figures", "nothing", "--which", "4c"], dir.path());
    assert_eq!(missing.status.code(), Some(1));
    assert!(stderr(&missing).contains("no run records"));
}

#[test]
fn intermittency_figure_needs_kept_trajectories() {
    let dir = tempfile::tempdir().unwrap();
    let args = |keep: bool, out: &'static str| {
        let mut v = vec![
            "sweep", "--lambda-grid", "0.85", "--memory-grid", "50", "--bounces", "6000", "--kick", KICK_M50, "-o",
            out,
        ];
        if keep {
            v.push("--keep-trajectories");
        }
        v
    };
    summary(&walker_lab(&args(false, "plain"), dir.path()));
    let out = walker_lab(&["figures", "plain", "--which", "6c"], dir.path());
    assert_eq!(out.status.code(), Some(1));

    summary(&walker_lab(&args(true, "kept"), dir.path()));
    let f = summary(&walker_lab(&["figures", "kept", "--which", "6c"], dir.path()));
    assert_eq!(f["figures"]["6c"]["runs"], 1);
    let hist = fs::read_to_string(dir.path().join("kept/fig6c.csv")).unwrap();
    assert_eq!(hist.lines().count(), 121);
}
