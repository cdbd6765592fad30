use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use maxbloch::analysis::TraceRecord;
use maxbloch::io::write_trace;

fn maxbloch(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_maxbloch"))
        .args(args)
        .env_remove("MAXBLOCH_THREADS")
        .output()
        .expect("binary runs")
}

fn scenario(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../scenarios")
        .join(name)
}

fn text(out: &Output) -> String {
    format!(
        "{}{}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    )
}

/// Header map and numeric rows of an analysis table.
fn read_table(path: &Path) -> (Vec<(String, String)>, Vec<Vec<f64>>) {
    let body = std::fs::read_to_string(path).unwrap();
    let mut header = Vec::new();
    let mut rows = Vec::new();
    for line in body.lines() {
        if let Some(h) = line.strip_prefix("# ") {
            let (k, v) = h.split_once(" = ").unwrap();
            header.push((k.to_string(), v.to_string()));
        } else {
            rows.push(
                line.split_whitespace()
                    .map(|v| v.parse().unwrap())
                    .collect(),
            );
        }
    }
    (header, rows)
}

fn header_value<'a>(h: &'a [(String, String)], key: &str) -> &'a str {
    &h.iter()
        .find(|(k, _)| k == key)
        .unwrap_or_else(|| panic!("no {key}"))
        .1
}

#[test]
fn unknown_subcommand_is_a_usage_error() {
    for args in [&["frobnicate"][..], &["analyze", "wavelet", "x.trace"]] {
        let out = maxbloch(args);
        assert_eq!(out.status.code(), Some(2), "{}", text(&out));
        assert!(text(&out).contains("Usage"), "{}", text(&out));
    }
}

#[test]
fn schema_lists_every_section() {
    let out = maxbloch(&["schema"]);
    assert!(out.status.success());
    let t = text(&out);
    for section in [
        "[geometry]",
        "[material]",
        "[quantum]",
        "[noise]",
        "[run]",
        "[[probes]]",
    ] {
        assert!(t.contains(section), "{section} missing");
    }
}

#[test]
fn short_run_writes_artifacts_and_a_snapshot() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("run");
    let out = maxbloch(&[
        "run",
        scenario("superfluorescence.toml").to_str().unwrap(),
        "--duration-override",
        "1ps",
        "--seed",
        "4",
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", text(&out));
    assert!(out_dir.join("manifest.json").exists());
    assert!(out_dir.join("scenario.toml").exists());
    assert!(
        std::fs::read_dir(out_dir.join("snapshots"))
            .unwrap()
            .count()
            >= 1
    );

    let txt = dir.path().join("output.txt");
    let out = maxbloch(&[
        "analyze",
        "text",
        out_dir.join("output.trace").to_str().unwrap(),
        "--out",
        txt.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", text(&out));
    assert!(std::fs::read_to_string(&txt)
        .unwrap()
        .contains("# probe = output"));
}

#[test]
fn thread_env_var_does_not_change_results() {
    let dir = tempfile::tempdir().unwrap();
    let run = |threads: &str, sub: &str| {
        let out_dir = dir.path().join(sub);
        let out = Command::new(env!("CARGO_BIN_EXE_maxbloch"))
            .args(["run", scenario("superfluorescence.toml").to_str().unwrap()])
            .args([
                "--duration-override",
                "5ps",
                "--seed",
                "9",
                "--out",
                out_dir.to_str().unwrap(),
            ])
            .env("MAXBLOCH_THREADS", threads)
            .output()
            .unwrap();
        assert!(out.status.success(), "{}", text(&out));
        std::fs::read(out_dir.join("output.trace")).unwrap()
    };
    assert_eq!(run("1", "a"), run("8", "b"));
}

#[test]
fn missing_key_exits_with_config_code() {
    let dir = tempfile::tempdir().unwrap();
    let body = std::fs::read_to_string(scenario("superfluorescence.toml")).unwrap();
    let broken: String = body
        .lines()
        .filter(|l| !l.starts_with("carrier_density_per_m3"))
        .map(|l| format!("{l}\n"))
        .collect();
    let path = dir.path().join("broken.toml");
    std::fs::write(&path, broken).unwrap();
    let out = maxbloch(&[
        "run",
        path.to_str().unwrap(),
        "--out",
        dir.path().join("o").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(
        text(&out).contains("carrier_density_per_m3"),
        "{}",
        text(&out)
    );
}

#[test]
fn malformed_trace_reports_byte_offset() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.trace");
    std::fs::write(&path, "MAXBLOCH-TRACE\nversion = 7\n").unwrap();
    let out = maxbloch(&[
        "analyze",
        "spectrum",
        path.to_str().unwrap(),
        "--out",
        "/dev/null",
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(
        text(&out).contains("malformed trace at byte"),
        "{}",
        text(&out)
    );
}

#[test]
fn rin_of_a_modulated_tone_matches_closed_form() {
    // P = P0 (1 + m cos(2 pi f0 t)) over T = 10 us.
    let (m, f0, dt, n) = (1e-4, 1e6, 1e-9, 10_000);
    let t_total = n as f64 * dt;
    let p: Vec<f64> = (0..n)
        .map(|k| 3e-3 * (1.0 + m * (2.0 * std::f64::consts::PI * f0 * k as f64 * dt).cos()))
        .collect();
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("power.trace");
    write_trace(
        &input,
        &TraceRecord::new(dt, 0.0, p, "facet_power", "W", "tone").unwrap(),
        1,
    )
    .unwrap();
    let out_path = dir.path().join("rin.txt");
    let out = maxbloch(&[
        "analyze",
        "rin",
        input.to_str().unwrap(),
        "--out",
        out_path.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", text(&out));
    let (h, rows) = read_table(&out_path);
    assert_eq!(header_value(&h, "input"), input.to_str().unwrap());
    assert_eq!(header_value(&h, "window"), "rectangular");
    let row = rows.iter().find(|r| (r[0] - f0).abs() < 1.0).unwrap();
    let expected = 10.0 * (m * m * t_total / 4.0).log10();
    assert!((row[1] - expected).abs() < 1.0, "{} vs {expected}", row[1]);
}

#[test]
fn instfreq_of_a_chirp_is_a_linear_ramp() {
    let (f0, rate, dt, n) = (1e11, 2e21, 1e-13, 4096);
    let x: Vec<f64> = (0..n)
        .map(|k| {
            let t = k as f64 * dt;
            (2.0 * std::f64::consts::PI * (f0 * t + 0.5 * rate * t * t)).cos()
        })
        .collect();
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("chirp.trace");
    write_trace(
        &input,
        &TraceRecord::new(dt, 0.0, x, "e_field", "V/m", "chirp").unwrap(),
        1,
    )
    .unwrap();
    let out_path = dir.path().join("f.txt");
    let out = maxbloch(&[
        "analyze",
        "instfreq",
        input.to_str().unwrap(),
        "--out",
        out_path.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", text(&out));
    let (_, rows) = read_table(&out_path);
    // Away from the ends the ramp is f0 + rate t; the ends ring.
    for r in &rows[n / 4..3 * n / 4] {
        assert_eq!(r[3], 1.0);
        let expected = f0 + rate * r[0];
        assert!(
            (r[1] - expected).abs() < 5e-3 * expected,
            "{} vs {expected} at {}",
            r[1],
            r[0]
        );
    }
}

#[test]
fn verify_reports_json_and_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let json = dir.path().join("solver.json");
    let out = maxbloch(&[
        "verify",
        "--suite",
        "solver",
        "--json",
        json.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", text(&out));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&json).unwrap()).unwrap();
    let checks = report["checks"].as_array().unwrap();
    assert!(checks.iter().all(|c| c["passed"] == true));
    assert!(checks.iter().any(|c| c["name"] == "rabi_frequency"));

    let out = maxbloch(&["verify", "--suite", "diffusion", "--samples", "50"]);
    assert!(out.status.success(), "{}", text(&out));
    let out = maxbloch(&["verify", "--suite", "everything"]);
    assert_eq!(out.status.code(), Some(2));
}
