//! Probe trace files: a short text header followed by little-endian f64
//! samples.
//!
//! ```text
//! MAXBLOCH-TRACE
//! version = 1
//! probe = output
//! quantity = facet_power
//! units = W
//! dt = 2e-14
//! t0 = 0
//! decimation = 20
//! count = 00000000000000015000
//! END_HEADER
//! <count * 8 bytes>
//! ```
//!
//! `count` is zero padded to a fixed width so a streaming writer can patch
//! it in place once the run ends.

use std::fs::File;
use std::io::{BufWriter, Read, Seek, SeekFrom, Write};
use std::path::Path;

use thiserror::Error;

use crate::analysis::TraceRecord;

pub const TRACE_MAGIC: &str = "MAXBLOCH-TRACE";
pub const TRACE_VERSION: u32 = 1;
const END: &str = "END_HEADER";
const COUNT_WIDTH: usize = 20;

#[derive(Debug, Error)]
pub enum TraceError {
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed trace at byte {offset}: {message}")]
    Format { offset: usize, message: String },
    #[error(
        "header field {field} must be a single line without leading or trailing spaces: {value:?}"
    )]
    BadField { field: &'static str, value: String },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> TraceError + '_ {
    move |source| TraceError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// Everything in a trace file except the samples.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceHeader {
    pub version: u32,
    pub probe: String,
    pub quantity: String,
    pub units: String,
    pub dt: f64,
    pub t0: f64,
    pub decimation: u64,
    pub count: u64,
}

impl TraceHeader {
    fn check_text(field: &'static str, value: &str) -> Result<(), TraceError> {
        if value.contains(['\n', '\r']) || value.trim() != value {
            return Err(TraceError::BadField {
                field,
                value: value.to_string(),
            });
        }
        Ok(())
    }

    fn render(&self) -> Result<String, TraceError> {
        Self::check_text("probe", &self.probe)?;
        Self::check_text("quantity", &self.quantity)?;
        Self::check_text("units", &self.units)?;
        // f64 Display is the shortest string that parses back exactly.
        Ok(format!(
            "{TRACE_MAGIC}\nversion = {}\nprobe = {}\nquantity = {}\nunits = {}\ndt = {:e}\nt0 = {:e}\ndecimation = {}\ncount = {:0width$}\n{END}\n",
            self.version,
            self.probe,
            self.quantity,
            self.units,
            self.dt,
            self.t0,
            self.decimation,
            self.count,
            width = COUNT_WIDTH
        ))
    }

    /// Byte offset of the count digits inside the rendered header.
    fn count_offset(&self) -> Result<usize, TraceError> {
        let text = self.render()?;
        Ok(text.find("\ncount = ").unwrap() + "\ncount = ".len())
    }
}

fn bad(offset: usize, message: impl Into<String>) -> TraceError {
    TraceError::Format {
        offset,
        message: message.into(),
    }
}

/// Parses a whole trace file held in memory.
pub fn parse_trace(bytes: &[u8]) -> Result<(TraceHeader, Vec<f64>), TraceError> {
    let mut pos = 0usize;
    let mut next_line = |what: &str| -> Result<(usize, String), TraceError> {
        let start = pos;
        let rest = &bytes[start..];
        let nl = rest
            .iter()
            .position(|&b| b == b'\n')
            .ok_or_else(|| bad(start, format!("unterminated header while reading {what}")))?;
        let line = std::str::from_utf8(&rest[..nl])
            .map_err(|e| bad(start + e.valid_up_to(), "header is not UTF-8"))?;
        pos = start + nl + 1;
        Ok((start, line.to_string()))
    };

    let (off, magic) = next_line("magic")?;
    if magic != TRACE_MAGIC {
        return Err(bad(
            off,
            format!("expected {TRACE_MAGIC:?}, found {magic:?}"),
        ));
    }
    let keys = [
        "version",
        "probe",
        "quantity",
        "units",
        "dt",
        "t0",
        "decimation",
        "count",
    ];
    let mut values: Vec<String> = Vec::with_capacity(keys.len());
    let mut offsets = Vec::with_capacity(keys.len());
    for key in keys {
        let (off, line) = next_line(key)?;
        let (k, v) = line
            .split_once(" = ")
            .ok_or_else(|| bad(off, format!("expected `{key} = ...`, found {line:?}")))?;
        if k != key {
            return Err(bad(off, format!("expected key {key:?}, found {k:?}")));
        }
        values.push(v.to_string());
        offsets.push(off + key.len() + 3);
    }
    let (off, end) = next_line("end marker")?;
    if end != END {
        return Err(bad(off, format!("expected {END:?}, found {end:?}")));
    }
    let payload_start = pos;

    fn num<T: std::str::FromStr>(v: &str, off: usize, key: &str) -> Result<T, TraceError> {
        v.parse()
            .map_err(|_| bad(off, format!("{key} = {v:?} is not a valid number")))
    }
    let header = TraceHeader {
        version: num(&values[0], offsets[0], "version")?,
        probe: values[1].clone(),
        quantity: values[2].clone(),
        units: values[3].clone(),
        dt: num(&values[4], offsets[4], "dt")?,
        t0: num(&values[5], offsets[5], "t0")?,
        decimation: num(&values[6], offsets[6], "decimation")?,
        count: num(&values[7], offsets[7], "count")?,
    };
    if header.version != TRACE_VERSION {
        return Err(bad(
            offsets[0],
            format!(
                "unsupported version {}, expected {TRACE_VERSION}",
                header.version
            ),
        ));
    }
    if !(header.dt.is_finite() && header.dt > 0.0) {
        return Err(bad(
            offsets[4],
            format!("dt = {} must be positive", header.dt),
        ));
    }
    let payload = &bytes[payload_start..];
    let expected = header.count as usize * 8;
    if payload.len() != expected {
        return Err(bad(
            payload_start + payload.len().min(expected),
            format!(
                "payload holds {} bytes but count = {} needs {expected}",
                payload.len(),
                header.count
            ),
        ));
    }
    let samples = payload
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Ok((header, samples))
}

pub fn read_trace(path: &Path) -> Result<(TraceHeader, TraceRecord), TraceError> {
    let mut bytes = Vec::new();
    File::open(path)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(io_err(path))?;
    let (h, samples) = parse_trace(&bytes)?;
    let rec = TraceRecord {
        dt: h.dt,
        t0: h.t0,
        samples,
        quantity: h.quantity.clone(),
        units: h.units.clone(),
        probe: h.probe.clone(),
    };
    Ok((h, rec))
}

pub fn write_trace(path: &Path, trace: &TraceRecord, decimation: u64) -> Result<(), TraceError> {
    let mut w = TraceWriter::create(
        path,
        &trace.probe,
        &trace.quantity,
        &trace.units,
        trace.dt,
        trace.t0,
        decimation,
    )?;
    for &v in &trace.samples {
        w.push(v)?;
    }
    w.finish()
}

/// Two-column text export (`time value`) with the header as comments.
pub fn write_trace_text(
    path: &Path,
    header: &TraceHeader,
    trace: &TraceRecord,
) -> Result<(), TraceError> {
    let mut out = BufWriter::new(File::create(path).map_err(io_err(path))?);
    let mut body = String::new();
    for line in header.render()?.lines() {
        body.push_str("# ");
        body.push_str(line);
        body.push('\n');
    }
    body.push_str(&format!("# time_s {}\n", trace.units));
    out.write_all(body.as_bytes()).map_err(io_err(path))?;
    for (k, v) in trace.samples.iter().enumerate() {
        writeln!(out, "{:e} {:e}", trace.time(k), v).map_err(io_err(path))?;
    }
    out.flush().map_err(io_err(path))
}

/// Incremental writer; the sample count is patched on [`TraceWriter::finish`].
pub struct TraceWriter {
    out: BufWriter<File>,
    path: std::path::PathBuf,
    header: TraceHeader,
}

impl TraceWriter {
    pub fn create(
        path: &Path,
        probe: &str,
        quantity: &str,
        units: &str,
        dt: f64,
        t0: f64,
        decimation: u64,
    ) -> Result<Self, TraceError> {
        let header = TraceHeader {
            version: TRACE_VERSION,
            probe: probe.to_string(),
            quantity: quantity.to_string(),
            units: units.to_string(),
            dt,
            t0,
            decimation,
            count: 0,
        };
        let text = header.render()?;
        let mut out = BufWriter::new(File::create(path).map_err(io_err(path))?);
        out.write_all(text.as_bytes()).map_err(io_err(path))?;
        Ok(Self {
            out,
            path: path.to_path_buf(),
            header,
        })
    }

    pub fn push(&mut self, v: f64) -> Result<(), TraceError> {
        self.header.count += 1;
        self.out
            .write_all(&v.to_le_bytes())
            .map_err(io_err(&self.path))
    }

    pub fn count(&self) -> u64 {
        self.header.count
    }

    pub fn finish(mut self) -> Result<(), TraceError> {
        let off = self.header.count_offset()?;
        let path = self.path.clone();
        self.out.flush().map_err(io_err(&path))?;
        let f = self.out.get_mut();
        f.seek(SeekFrom::Start(off as u64)).map_err(io_err(&path))?;
        f.write_all(format!("{:0width$}", self.header.count, width = COUNT_WIDTH).as_bytes())
            .map_err(io_err(&path))?;
        f.sync_all().map_err(io_err(&path))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> TraceRecord {
        TraceRecord::new(
            1.7856395298502425e-14,
            -3.0e-15,
            vec![
                0.0,
                -0.0,
                1.0 / 3.0,
                f64::MIN_POSITIVE,
                1e300,
                -2.5,
                f64::NAN,
            ],
            "facet_power",
            "W",
            "output",
        )
        .unwrap()
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("t.trace");
        let t = sample();
        write_trace(&p, &t, 20).unwrap();
        let (h, back) = read_trace(&p).unwrap();
        assert_eq!(h.count, 7);
        assert_eq!(h.decimation, 20);
        assert_eq!(back.dt.to_bits(), t.dt.to_bits());
        assert_eq!(back.t0.to_bits(), t.t0.to_bits());
        let bits = |v: &[f64]| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&back.samples), bits(&t.samples));
        assert_eq!(
            (back.probe, back.units, back.quantity),
            (t.probe, t.units, t.quantity)
        );
    }

    #[test]
    fn errors_carry_byte_offsets() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("t.trace");
        write_trace(&p, &sample(), 1).unwrap();
        let good = std::fs::read(&p).unwrap();

        let truncated = &good[..good.len() - 3];
        match parse_trace(truncated) {
            Err(TraceError::Format { offset, .. }) => assert_eq!(offset, truncated.len()),
            other => panic!("{other:?}"),
        }

        let text = String::from_utf8_lossy(&good).into_owned();
        let at = text.find("dt = ").unwrap();
        let mut broken = good.clone();
        broken[at + 5] = b'x';
        match parse_trace(&broken) {
            Err(TraceError::Format { offset, message }) => {
                assert_eq!(offset, at + 5);
                assert!(message.contains("dt"), "{message}");
            }
            other => panic!("{other:?}"),
        }

        let mut bad_magic = good.clone();
        bad_magic[0] = b'N';
        assert!(matches!(
            parse_trace(&bad_magic),
            Err(TraceError::Format { offset: 0, .. })
        ));
    }

    #[test]
    fn rejects_multiline_names() {
        let dir = tempfile::tempdir().unwrap();
        let mut t = sample();
        t.probe = "a\nb".into();
        assert!(matches!(
            write_trace(&dir.path().join("x"), &t, 1),
            Err(TraceError::BadField { field: "probe", .. })
        ));
    }

    #[test]
    fn text_export_lists_every_sample() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("t.trace");
        write_trace(&p, &sample(), 1).unwrap();
        let (h, t) = read_trace(&p).unwrap();
        let q = dir.path().join("t.txt");
        write_trace_text(&q, &h, &t).unwrap();
        let text = std::fs::read_to_string(q).unwrap();
        let rows: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
        assert_eq!(rows.len(), 7);
        let v: f64 = rows[2].split(' ').nth(1).unwrap().parse().unwrap();
        assert_eq!(v, 1.0 / 3.0);
    }
}
