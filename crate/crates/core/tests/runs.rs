//! End-to-end runs through the artifact layer.

use std::fs;
use std::path::{Path, PathBuf};

use maxbloch::io::{read_trace, run_scenario, RunManifest, RunOptions, RunStatus, MANIFEST_FILE};
use maxbloch::scenario::{qcl_hfc_scenario, Scenario, ScenarioError};

fn scenario_path(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../scenarios")
        .join(name)
}

fn short_sf(duration: f64) -> Scenario {
    let mut s = Scenario::load(&scenario_path("superfluorescence.toml")).unwrap();
    s.run.duration_s = duration;
    s.run.trace_decimation = 1;
    s
}

fn trace_bytes(dir: &Path, s: &Scenario) -> Vec<Vec<u8>> {
    s.probes
        .iter()
        .map(|p| fs::read(dir.join(format!("{}.trace", p.name))).unwrap())
        .collect()
}

#[test]
fn worker_count_does_not_change_traces() {
    let s = short_sf(20e-12);
    let one = tempfile::tempdir().unwrap();
    let eight = tempfile::tempdir().unwrap();
    let m1 = run_scenario(&s, &RunOptions::new(one.path(), 11, 1)).unwrap();
    let m8 = run_scenario(&s, &RunOptions::new(eight.path(), 11, 8)).unwrap();
    assert_eq!(trace_bytes(one.path(), &s), trace_bytes(eight.path(), &s));
    let h1: Vec<&str> = m1.traces.iter().map(|t| t.sha256.as_str()).collect();
    let h8: Vec<&str> = m8.traces.iter().map(|t| t.sha256.as_str()).collect();
    assert_eq!(h1, h8);
    assert_eq!(m1.noise, m8.noise);

    let other = tempfile::tempdir().unwrap();
    run_scenario(&s, &RunOptions::new(other.path(), 12, 1)).unwrap();
    assert_ne!(trace_bytes(one.path(), &s), trace_bytes(other.path(), &s));
}

#[test]
fn manifest_reproduces_the_run() {
    let s = short_sf(10e-12);
    let first = tempfile::tempdir().unwrap();
    run_scenario(&s, &RunOptions::new(first.path(), 5, 1)).unwrap();
    let m = RunManifest::load(&first.path().join(MANIFEST_FILE)).unwrap();
    let replay = Scenario::from_toml_str(&m.scenario_toml).unwrap();
    let second = tempfile::tempdir().unwrap();
    let m2 = run_scenario(&replay, &RunOptions::new(second.path(), m.seed, 1)).unwrap();
    assert_eq!(m.scenario_sha256, m2.scenario_sha256);
    for (a, b) in m.traces.iter().zip(&m2.traces) {
        assert_eq!(a.sha256, b.sha256, "{}", a.file);
    }
}

#[test]
fn one_picosecond_run_emits_a_snapshot() {
    let s = short_sf(1e-12);
    let dir = tempfile::tempdir().unwrap();
    let m = run_scenario(&s, &RunOptions::new(dir.path(), 0, 1)).unwrap();
    assert_eq!(m.status, RunStatus::Completed);
    assert!(!m.snapshots.is_empty());
    for snap in &m.snapshots {
        assert!(dir.path().join(&snap.file).exists());
    }
    let (h, t) = read_trace(&dir.path().join("output.trace")).unwrap();
    assert_eq!(h.count as usize, t.samples.len());
    assert_eq!(t.samples.len() as u64, m.steps_completed);
}

#[test]
fn shipped_scenarios_run_at_reduced_duration() {
    for name in ["superfluorescence.toml", "qcl_hfc.toml"] {
        let mut s = Scenario::load(&scenario_path(name)).unwrap();
        s.run.duration_s = 200.0 * s.dt();
        s.run.check_every_steps = 10;
        let dir = tempfile::tempdir().unwrap();
        let m = run_scenario(&s, &RunOptions::new(dir.path(), 1, 1)).unwrap();
        assert_eq!(m.status, RunStatus::Completed, "{name}");
        assert!(m.invariants.checks >= 20, "{name}");
        assert!(m.invariants.max_trace_error < 1e-9, "{name}");
        assert!(m.invariants.min_eigenvalue >= -1e-7, "{name}");
    }
}

#[test]
fn shipped_qcl_scenario_matches_its_parameter_file() {
    let generated = qcl_hfc_scenario(&scenario_path("qcl_hfc_params.toml")).unwrap();
    let shipped = Scenario::load(&scenario_path("qcl_hfc.toml")).unwrap();
    assert_eq!(
        generated, shipped,
        "regenerate with `maxbloch generate-qcl scenarios/qcl_hfc_params.toml --out scenarios/qcl_hfc.toml`"
    );
}

#[test]
fn missing_key_is_named() {
    let text = fs::read_to_string(scenario_path("superfluorescence.toml")).unwrap();
    let without: String = text
        .lines()
        .filter(|l| !l.starts_with("duration_s"))
        .map(|l| format!("{l}\n"))
        .collect();
    let err = Scenario::from_toml_str(&without).unwrap_err();
    assert!(matches!(err, ScenarioError::Parse(_)));
    assert!(err.to_string().contains("duration_s"), "{err}");
}
