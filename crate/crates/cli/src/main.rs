//! `maxbloch` command line: run scenarios, analyze traces, run the oracle
//! suites and print the configuration schema.
//!
//! Exit codes: 0 success, 1 I/O or other failure, 2 configuration or usage
//! error, 3 invariant violation during a run, 4 verification failure.

mod analyze;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use maxbloch::io::{parse_duration, run_scenario, RunError, RunOptions, MANIFEST_FILE};
use maxbloch::scenario::{qcl_hfc_scenario, Scenario, SCHEMA_TEXT};
use maxbloch::verify::{run_suite, Suite};

const EXIT_FAILURE: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_INVARIANT: u8 = 3;
const EXIT_VERIFY: u8 = 4;

#[derive(Parser)]
#[command(
    name = "maxbloch",
    version,
    about = "1D Maxwell-density-matrix simulator with Langevin noise"
)]
#[command(
    after_help = "Exit codes: 0 ok, 1 I/O failure, 2 configuration or usage error, \
                        3 invariant violation, 4 verification failure"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario and write traces, snapshots and a manifest.
    Run {
        /// Scenario TOML file.
        config: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Worker threads for the matter update (0 = all cores).
        #[arg(long, env = "MAXBLOCH_THREADS", default_value_t = 0)]
        threads: usize,
        /// Replace the configured duration, e.g. `1ps` or `2.5ns`.
        #[arg(long, value_parser = parse_duration)]
        duration_override: Option<f64>,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
    },
    /// Post-process a trace file.
    Analyze {
        #[command(subcommand)]
        kind: analyze::AnalyzeCommand,
    },
    /// Run an oracle suite and report pass/fail per check.
    Verify {
        #[arg(long, value_parser = parse_suite)]
        suite: Suite,
        /// Sample count (suite default when omitted).
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Also write the report as JSON to this file.
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Print the scenario file schema.
    Schema,
    /// Build the QCL comb scenario from its parameter file.
    GenerateQcl {
        params: PathBuf,
        /// Destination scenario file.
        #[arg(long)]
        out: PathBuf,
    },
}

fn parse_suite(s: &str) -> Result<Suite, String> {
    s.parse()
}

/// Error carrying its exit code.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn new(code: u8, message: impl std::fmt::Display) -> Self {
        Self {
            code,
            message: message.to_string(),
        }
    }
}

impl From<RunError> for Failure {
    fn from(e: RunError) -> Self {
        let code = match &e {
            RunError::Scenario(_) | RunError::Setup(_) => EXIT_CONFIG,
            RunError::Invariant { .. } => EXIT_INVARIANT,
            RunError::Io(_) => EXIT_FAILURE,
        };
        Failure::new(code, e)
    }
}

fn run(
    config: PathBuf,
    seed: u64,
    threads: usize,
    duration: Option<f64>,
    out: PathBuf,
) -> Result<(), Failure> {
    let mut scenario = Scenario::load(&config).map_err(|e| Failure::new(EXIT_CONFIG, e))?;
    if let Some(d) = duration {
        scenario.run.duration_s = d;
    }
    let opts = RunOptions::new(&out, seed, threads);
    eprintln!(
        "running {} for {:e} s ({} steps), seed {seed}",
        scenario.name,
        scenario.run.duration_s,
        scenario.num_steps()
    );
    let m = run_scenario(&scenario, &opts)?;
    println!(
        "completed {} steps in {:.1} s; clamp fraction {:.3e}; {} traces, {} snapshots; manifest {}",
        m.steps_completed,
        m.wall_time_s,
        m.clamp_fraction,
        m.traces.len(),
        m.snapshots.len(),
        out.join(MANIFEST_FILE).display()
    );
    Ok(())
}

fn verify(
    suite: Suite,
    samples: Option<usize>,
    seed: u64,
    json: Option<PathBuf>,
) -> Result<(), Failure> {
    let report = run_suite(suite, samples.unwrap_or(suite.default_samples()), seed);
    print!("{}", report.to_text());
    if let Some(path) = json {
        let text =
            serde_json::to_string_pretty(&report).map_err(|e| Failure::new(EXIT_FAILURE, e))?;
        std::fs::write(&path, text)
            .map_err(|e| Failure::new(EXIT_FAILURE, format!("{}: {e}", path.display())))?;
    }
    if report.passed() {
        Ok(())
    } else {
        let names: Vec<&str> = report.failures().map(|c| c.name.as_str()).collect();
        Err(Failure::new(
            EXIT_VERIFY,
            format!("failed checks: {}", names.join(", ")),
        ))
    }
}

fn generate_qcl(params: PathBuf, out: PathBuf) -> Result<(), Failure> {
    let s = qcl_hfc_scenario(&params).map_err(|e| Failure::new(EXIT_CONFIG, e))?;
    let text = format!(
        "# Generated by `maxbloch generate-qcl {}`; edit the parameter file instead.\n{}",
        params.display(),
        s.to_toml_string()
    );
    std::fs::write(&out, text)
        .map_err(|e| Failure::new(EXIT_FAILURE, format!("{}: {e}", out.display())))?;
    println!(
        "wrote {} ({} cells, {} steps)",
        out.display(),
        s.geometry.cells,
        s.num_steps()
    );
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run {
            config,
            seed,
            threads,
            duration_override,
            out,
        } => run(config, seed, threads, duration_override, out),
        Command::Analyze { kind } => analyze::execute(kind).map_err(|e| Failure::new(e.code(), e)),
        Command::Verify {
            suite,
            samples,
            seed,
            json,
        } => verify(suite, samples, seed, json),
        Command::Schema => {
            print!("{SCHEMA_TEXT}");
            Ok(())
        }
        Command::GenerateQcl { params, out } => generate_qcl(params, out),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
