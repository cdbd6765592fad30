//! `analyze` subcommands. Every product is a text table whose `# key = value`
//! header names the input trace, its hash and the parameters used.

use std::fmt::Display;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Subcommand, ValueEnum};
use maxbloch::analysis::{
    bandpass_extract, comb_lines, detector_power, instantaneous_frequency, intensity_spectrum,
    mode_spacing, rf_spectrum, rin_spectrum, AnalysisError, RinOptions, Sidedness, Spectrum,
    TraceRecord, Window,
};
use maxbloch::io::{parse_trace, sha256_hex, write_trace_text, TraceError, TraceHeader};

#[derive(Debug, thiserror::Error)]
pub enum AnalyzeError {
    #[error(transparent)]
    Trace(#[from] TraceError),
    #[error("analysis: {0}")]
    Analysis(#[from] AnalysisError),
    #[error("{0}")]
    Write(String),
}

impl AnalyzeError {
    pub fn code(&self) -> u8 {
        match self {
            AnalyzeError::Trace(TraceError::Io { .. }) | AnalyzeError::Write(_) => 1,
            _ => 2,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
pub enum WindowArg {
    Hann,
    Rectangular,
}

impl From<WindowArg> for Window {
    fn from(w: WindowArg) -> Self {
        match w {
            WindowArg::Hann => Window::Hann,
            WindowArg::Rectangular => Window::Rectangular,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
pub enum SidednessArg {
    /// The plain finite-T periodogram at f >= 0.
    Formula,
    /// Negative frequencies folded onto positive ones.
    OneSided,
}

#[derive(Args)]
pub struct Io {
    /// Input trace file.
    pub trace: PathBuf,
    /// Output file.
    #[arg(long)]
    pub out: PathBuf,
}

/// Converts a field trace to detected power before the transform.
#[derive(Args)]
pub struct Detector {
    /// Treat the input as a field and square-law detect it with this
    /// low-pass cutoff (Hz).
    #[arg(long)]
    pub detector_cutoff: Option<f64>,
    /// Decimation after detection.
    #[arg(long, default_value_t = 1)]
    pub decimation: usize,
}

#[derive(Subcommand)]
pub enum AnalyzeCommand {
    /// Optical intensity spectrum |E(f)|^2.
    Spectrum {
        #[command(flatten)]
        io: Io,
        #[arg(long, value_enum, default_value_t = WindowArg::Hann)]
        window: WindowArg,
    },
    /// Comb lines of the intensity spectrum and their spacing.
    Lines {
        #[command(flatten)]
        io: Io,
        #[arg(long)]
        f_lo: f64,
        #[arg(long)]
        f_hi: f64,
        /// Lines more than this far below the strongest are dropped.
        #[arg(long, default_value_t = 40.0)]
        floor_db: f64,
        /// Weaker maxima closer than this (Hz) to a stronger line are dropped.
        #[arg(long, default_value_t = 0.0)]
        min_separation: f64,
    },
    /// RF (intensity beat) spectrum in dB.
    Rf {
        #[command(flatten)]
        io: Io,
        #[arg(long, value_enum, default_value_t = WindowArg::Hann)]
        window: WindowArg,
        #[command(flatten)]
        detector: Detector,
    },
    /// Relative intensity noise in dB/Hz.
    Rin {
        #[command(flatten)]
        io: Io,
        #[arg(long, value_enum, default_value_t = SidednessArg::Formula)]
        sidedness: SidednessArg,
        /// Non-overlapping segments to average.
        #[arg(long, default_value_t = 1)]
        segments: usize,
        #[command(flatten)]
        detector: Detector,
    },
    /// Instantaneous frequency from the analytic signal.
    Instfreq {
        #[command(flatten)]
        io: Io,
        /// Samples with envelope below this fraction of the peak are masked.
        #[arg(long, default_value_t = 0.05)]
        threshold: f64,
    },
    /// Band-pass extraction of one line as a complex envelope.
    Filter {
        #[command(flatten)]
        io: Io,
        /// Center frequency (Hz).
        #[arg(long)]
        center: f64,
        /// Full -3 dB bandwidth (Hz).
        #[arg(long)]
        bandwidth: f64,
    },
    /// Export a binary trace as text.
    Text {
        #[command(flatten)]
        io: Io,
    },
}

struct Input {
    path: PathBuf,
    sha256: String,
    header: TraceHeader,
    trace: TraceRecord,
}

fn load(path: &Path) -> Result<Input, AnalyzeError> {
    let bytes = std::fs::read(path).map_err(|source| TraceError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let (header, samples) = parse_trace(&bytes)?;
    // Each analysis validates its input; the text export takes any length.
    let trace = TraceRecord {
        dt: header.dt,
        t0: header.t0,
        samples,
        quantity: header.quantity.clone(),
        units: header.units.clone(),
        probe: header.probe.clone(),
    };
    Ok(Input {
        path: path.to_path_buf(),
        sha256: sha256_hex(&bytes),
        header,
        trace,
    })
}

struct Table {
    out: BufWriter<File>,
    path: PathBuf,
}

impl Table {
    fn create(path: &Path, analysis: &str, input: &Input) -> Result<Self, AnalyzeError> {
        let file = File::create(path)
            .map_err(|e| AnalyzeError::Write(format!("{}: {e}", path.display())))?;
        let mut t = Self {
            out: BufWriter::new(file),
            path: path.to_path_buf(),
        };
        t.field("maxbloch_analysis", analysis)?;
        t.field("software_version", env!("CARGO_PKG_VERSION"))?;
        t.field("input", input.path.display())?;
        t.field("input_sha256", &input.sha256)?;
        t.field("probe", &input.header.probe)?;
        t.field("input_quantity", &input.header.quantity)?;
        t.field("input_units", &input.header.units)?;
        t.field("input_dt_s", format!("{:e}", input.header.dt))?;
        t.field("input_samples", input.header.count)?;
        Ok(t)
    }

    fn err(&self, e: std::io::Error) -> AnalyzeError {
        AnalyzeError::Write(format!("{}: {e}", self.path.display()))
    }

    fn field(&mut self, key: &str, value: impl Display) -> Result<(), AnalyzeError> {
        writeln!(self.out, "# {key} = {value}").map_err(|e| self.err(e))
    }

    fn row(&mut self, values: &[f64]) -> Result<(), AnalyzeError> {
        let line: Vec<String> = values.iter().map(|v| format!("{v:e}")).collect();
        writeln!(self.out, "{}", line.join(" ")).map_err(|e| self.err(e))
    }

    fn finish(mut self) -> Result<PathBuf, AnalyzeError> {
        self.out.flush().map_err(|e| self.err(e))?;
        Ok(self.path)
    }
}

fn write_spectrum(mut t: Table, s: &Spectrum) -> Result<PathBuf, AnalyzeError> {
    t.field("window", s.window.name())?;
    t.field("resolution_hz", format!("{:e}", s.resolution_hz))?;
    t.field("sidedness", &s.sidedness)?;
    t.field("units", &s.units)?;
    t.field("columns", "frequency_hz value")?;
    for (f, v) in s.frequency.iter().zip(&s.values) {
        t.row(&[*f, *v])?;
    }
    t.finish()
}

/// Input trace, optionally square-law detected.
fn power_input(
    t: &mut Table,
    trace: &TraceRecord,
    det: &Detector,
) -> Result<TraceRecord, AnalyzeError> {
    match det.detector_cutoff {
        Some(cutoff) => {
            t.field("detector_cutoff_hz", format!("{cutoff:e}"))?;
            t.field("detector_decimation", det.decimation)?;
            Ok(detector_power(trace, cutoff, det.decimation)?)
        }
        None => Ok(trace.clone()),
    }
}

pub fn execute(cmd: AnalyzeCommand) -> Result<(), AnalyzeError> {
    let written = match cmd {
        AnalyzeCommand::Spectrum { io, window } => {
            let input = load(&io.trace)?;
            let s = intensity_spectrum(&input.trace, window.into())?;
            write_spectrum(Table::create(&io.out, "spectrum", &input)?, &s)?
        }
        AnalyzeCommand::Lines {
            io,
            f_lo,
            f_hi,
            floor_db,
            min_separation,
        } => {
            let input = load(&io.trace)?;
            let s = intensity_spectrum(&input.trace, Window::Hann)?;
            let lines = comb_lines(&s, f_lo, f_hi, floor_db, min_separation)?;
            let mut t = Table::create(&io.out, "lines", &input)?;
            t.field("window", "hann")?;
            t.field("resolution_hz", format!("{:e}", s.resolution_hz))?;
            t.field("band_hz", format!("{f_lo:e} {f_hi:e}"))?;
            t.field("floor_db", floor_db)?;
            t.field("min_separation_hz", format!("{min_separation:e}"))?;
            match mode_spacing(&lines) {
                Ok(sp) => {
                    println!("{} lines, spacing {:.6e} Hz", lines.len(), sp);
                    t.field("mode_spacing_hz", format!("{sp:e}"))?
                }
                Err(_) => {
                    println!("{} lines", lines.len());
                    t.field("mode_spacing_hz", "undefined")?
                }
            }
            t.field("columns", "frequency_hz level_db")?;
            for l in &lines {
                t.row(&[l.frequency, l.level_db])?;
            }
            t.finish()?
        }
        AnalyzeCommand::Rf {
            io,
            window,
            detector,
        } => {
            let input = load(&io.trace)?;
            let mut t = Table::create(&io.out, "rf", &input)?;
            let p = power_input(&mut t, &input.trace, &detector)?;
            let s = rf_spectrum(&p, window.into())?;
            write_spectrum(t, &s)?
        }
        AnalyzeCommand::Rin {
            io,
            sidedness,
            segments,
            detector,
        } => {
            let input = load(&io.trace)?;
            let mut t = Table::create(&io.out, "rin", &input)?;
            let p = power_input(&mut t, &input.trace, &detector)?;
            let opts = RinOptions {
                sidedness: match sidedness {
                    SidednessArg::Formula => Sidedness::Formula,
                    SidednessArg::OneSided => Sidedness::OneSided,
                },
                segments,
            };
            t.field("segments", segments)?;
            let s = rin_spectrum(&p, opts)?;
            write_spectrum(t, &s)?
        }
        AnalyzeCommand::Instfreq { io, threshold } => {
            let input = load(&io.trace)?;
            let r = instantaneous_frequency(&input.trace, threshold)?;
            let mut t = Table::create(&io.out, "instfreq", &input)?;
            t.field("threshold", threshold)?;
            t.field("units", format!("s Hz {} 1", input.header.units))?;
            t.field("columns", "time_s frequency_hz envelope valid")?;
            for k in 0..r.time.len() {
                t.row(&[
                    r.time[k],
                    r.frequency[k],
                    r.envelope[k],
                    if r.valid[k] { 1.0 } else { 0.0 },
                ])?;
            }
            t.finish()?
        }
        AnalyzeCommand::Filter {
            io,
            center,
            bandwidth,
        } => {
            let input = load(&io.trace)?;
            let z = bandpass_extract(&input.trace, center, bandwidth)?;
            let mut t = Table::create(&io.out, "filter", &input)?;
            t.field("center_hz", format!("{center:e}"))?;
            t.field("bandwidth_3db_hz", format!("{bandwidth:e}"))?;
            t.field("columns", "time_s re im power")?;
            for (k, v) in z.samples.iter().enumerate() {
                t.row(&[z.t0 + k as f64 * z.dt, v.re, v.im, v.norm_sqr()])?;
            }
            t.finish()?
        }
        AnalyzeCommand::Text { io } => {
            let input = load(&io.trace)?;
            write_trace_text(&io.out, &input.header, &input.trace)?;
            io.out
        }
    };
    eprintln!("wrote {}", written.display());
    Ok(())
}
