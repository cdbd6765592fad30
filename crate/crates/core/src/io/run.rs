//! Run orchestration: stepping on the calling thread, persistence on a
//! writer thread behind a bounded queue, and the run manifest.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::mpsc::{sync_channel, Receiver, SyncSender};
use std::thread::JoinHandle;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use super::trace::{TraceError, TraceWriter};
use crate::noise::NoiseDiagnostics;
use crate::scenario::{Scenario, ScenarioError};
use crate::sim::{
    InvariantLimits, InvariantStats, InvariantViolation, RunSink, SimError, Simulation, Snapshot,
};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const FAILURE_MARKER: &str = "FAILED";
pub const SCENARIO_COPY: &str = "scenario.toml";
const SNAPSHOT_DIR: &str = "snapshots";

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error("setup: {0}")]
    Setup(SimError),
    #[error("invariant violation: {violation}; partial artifacts kept in {}", out_dir.display())]
    Invariant {
        violation: InvariantViolation,
        out_dir: PathBuf,
    },
    #[error("writing artifacts: {0}")]
    Io(String),
}

impl From<TraceError> for RunError {
    fn from(e: TraceError) -> Self {
        RunError::Io(e.to_string())
    }
}

fn io_error(path: &Path, e: impl std::fmt::Display) -> RunError {
    RunError::Io(format!("{}: {e}", path.display()))
}

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub seed: u64,
    /// Worker threads for the matter update; 0 picks rayon's default.
    pub threads: usize,
    pub out_dir: PathBuf,
    /// Messages the writer may lag behind before stepping blocks.
    pub queue_bound: usize,
    pub limits: InvariantLimits,
}

impl RunOptions {
    pub fn new(out_dir: impl Into<PathBuf>, seed: u64, threads: usize) -> Self {
        Self {
            seed,
            threads,
            out_dir: out_dir.into(),
            queue_bound: 1024,
            limits: InvariantLimits::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "state", rename_all = "snake_case")]
pub enum RunStatus {
    Completed,
    Failed { message: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub file: String,
    pub probe: String,
    pub quantity: String,
    pub units: String,
    pub samples: u64,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnapshotEntry {
    pub file: String,
    pub step: u64,
}

/// Everything needed to reproduce the artifacts of one run: the full
/// scenario text plus the seed. Thread count does not affect results.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub software: String,
    pub software_version: String,
    pub scenario_name: String,
    pub scenario_sha256: String,
    pub scenario_toml: String,
    pub seed: u64,
    pub threads: usize,
    pub dt_s: f64,
    pub steps_requested: u64,
    pub steps_completed: u64,
    pub simulated_time_s: f64,
    pub wall_time_s: f64,
    pub started_unix_s: u64,
    pub status: RunStatus,
    pub noise: NoiseDiagnostics,
    pub clamp_fraction: f64,
    pub invariants: InvariantStats,
    pub traces: Vec<TraceEntry>,
    pub snapshots: Vec<SnapshotEntry>,
}

impl RunManifest {
    pub fn load(path: &Path) -> Result<Self, RunError> {
        let text = fs::read_to_string(path).map_err(|e| io_error(path, e))?;
        serde_json::from_str(&text).map_err(|e| io_error(path, e))
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

enum Message {
    Samples(Vec<f64>),
    Snapshot(Box<Snapshot>),
}

struct WriterOutput {
    snapshots: Vec<SnapshotEntry>,
}

/// [`RunSink`] that hands data to a writer thread. Sends block when the
/// queue is full, so nothing is dropped.
pub struct ArtifactWriter {
    tx: Option<SyncSender<Message>>,
    handle: Option<JoinHandle<Result<WriterOutput, String>>>,
}

impl ArtifactWriter {
    fn spawn(traces: Vec<TraceWriter>, out_dir: PathBuf, bound: usize) -> Self {
        let (tx, rx) = sync_channel(bound.max(1));
        let handle = std::thread::Builder::new()
            .name("maxbloch-writer".into())
            .spawn(move || writer_loop(rx, traces, &out_dir))
            .expect("spawning the writer thread");
        Self {
            tx: Some(tx),
            handle: Some(handle),
        }
    }

    fn send(&mut self, m: Message) {
        if let Some(tx) = &self.tx {
            // A closed channel means the writer failed; finish() reports why.
            if tx.send(m).is_err() {
                self.tx = None;
            }
        }
    }

    fn finish(mut self) -> Result<WriterOutput, String> {
        self.tx = None;
        match self.handle.take().unwrap().join() {
            Ok(r) => r,
            Err(_) => Err("writer thread panicked".into()),
        }
    }
}

impl RunSink for ArtifactWriter {
    fn samples(&mut self, _step: u64, values: &[f64]) {
        self.send(Message::Samples(values.to_vec()));
    }

    fn snapshot(&mut self, snapshot: Snapshot) {
        self.send(Message::Snapshot(Box::new(snapshot)));
    }
}

fn writer_loop(
    rx: Receiver<Message>,
    mut traces: Vec<TraceWriter>,
    out_dir: &Path,
) -> Result<WriterOutput, String> {
    let mut snapshots = Vec::new();
    for m in rx {
        match m {
            Message::Samples(v) => {
                for (w, x) in traces.iter_mut().zip(v) {
                    w.push(x).map_err(|e| e.to_string())?;
                }
            }
            Message::Snapshot(s) => {
                let file = format!("{SNAPSHOT_DIR}/snapshot_{:012}.json", s.step);
                let path = out_dir.join(&file);
                let text = serde_json::to_string(&*s).map_err(|e| e.to_string())?;
                fs::write(&path, text).map_err(|e| format!("{}: {e}", path.display()))?;
                snapshots.push(SnapshotEntry { file, step: s.step });
            }
        }
    }
    for w in traces {
        w.finish().map_err(|e| e.to_string())?;
    }
    Ok(WriterOutput { snapshots })
}

/// Runs `scenario` for its configured duration and writes traces,
/// snapshots, a copy of the scenario and `manifest.json` into
/// `opts.out_dir`. On an invariant violation the partial artifacts are
/// finalized, the manifest records the failure and a `FAILED` marker is
/// written.
pub fn run_scenario(scenario: &Scenario, opts: &RunOptions) -> Result<RunManifest, RunError> {
    scenario.validate()?;
    let out = &opts.out_dir;
    fs::create_dir_all(out.join(SNAPSHOT_DIR)).map_err(|e| io_error(out, e))?;
    let marker = out.join(FAILURE_MARKER);
    if marker.exists() {
        fs::remove_file(&marker).map_err(|e| io_error(&marker, e))?;
    }
    let scenario_toml = scenario.to_toml_string();
    fs::write(out.join(SCENARIO_COPY), &scenario_toml).map_err(|e| io_error(out, e))?;

    let mut sim = match Simulation::new(scenario, opts.seed, opts.threads) {
        Ok(s) => s,
        Err(SimError::Scenario(e)) => return Err(RunError::Scenario(e)),
        Err(e) => return Err(RunError::Setup(e)),
    };
    sim.set_limits(opts.limits);
    let dt = scenario.dt();
    let dec = scenario.run.trace_decimation;
    let mut traces = Vec::new();
    let mut entries = Vec::new();
    for p in &scenario.probes {
        let file = format!("{}.trace", p.name);
        let dt_trace = dt * dec as f64;
        traces.push(TraceWriter::create(
            &out.join(&file),
            &p.name,
            p.quantity_name(),
            p.units(),
            dt_trace,
            dt_trace,
            dec,
        )?);
        entries.push(TraceEntry {
            file,
            probe: p.name.clone(),
            quantity: p.quantity_name().to_string(),
            units: p.units().to_string(),
            samples: 0,
            sha256: String::new(),
        });
    }

    let started_unix_s = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let clock = Instant::now();
    let steps = scenario.num_steps();
    let mut writer = ArtifactWriter::spawn(traces, out.clone(), opts.queue_bound);
    let result = sim.run(steps, &mut writer);
    let written = writer.finish().map_err(RunError::Io)?;
    let wall_time_s = clock.elapsed().as_secs_f64();

    for e in &mut entries {
        let path = out.join(&e.file);
        let bytes = fs::read(&path).map_err(|err| io_error(&path, err))?;
        e.sha256 = sha256_hex(&bytes);
        e.samples = super::trace::parse_trace(&bytes)?.0.count;
    }
    let status = match &result {
        Ok(_) => RunStatus::Completed,
        Err(e) => RunStatus::Failed {
            message: e.to_string(),
        },
    };
    let noise = sim.diagnostics();
    let manifest = RunManifest {
        software: "maxbloch".into(),
        software_version: env!("CARGO_PKG_VERSION").into(),
        scenario_name: scenario.name.clone(),
        scenario_sha256: sha256_hex(scenario_toml.as_bytes()),
        scenario_toml,
        seed: opts.seed,
        threads: opts.threads,
        dt_s: dt,
        steps_requested: steps,
        steps_completed: sim.step_index(),
        simulated_time_s: sim.time(),
        wall_time_s,
        started_unix_s,
        status,
        noise,
        clamp_fraction: noise.clamp_fraction(),
        invariants: sim.invariant_stats(),
        traces: entries,
        snapshots: written.snapshots,
    };
    let path = out.join(MANIFEST_FILE);
    let text = serde_json::to_string_pretty(&manifest).map_err(|e| io_error(&path, e))?;
    fs::write(&path, text).map_err(|e| io_error(&path, e))?;

    match result {
        Ok(_) => Ok(manifest),
        Err(SimError::Invariant(v)) => {
            fs::write(&marker, format!("invariant violation: {v}\n"))
                .map_err(|e| io_error(&marker, e))?;
            Err(RunError::Invariant {
                violation: v,
                out_dir: out.clone(),
            })
        }
        Err(e) => {
            fs::write(&marker, format!("{e}\n")).map_err(|err| io_error(&marker, err))?;
            Err(RunError::Setup(e))
        }
    }
}
