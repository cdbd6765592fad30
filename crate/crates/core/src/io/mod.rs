//! Files on disk: probe traces, run artifacts and analysis products.

mod run;
mod trace;

pub use run::{
    run_scenario, sha256_hex, ArtifactWriter, RunError, RunManifest, RunOptions, RunStatus,
    SnapshotEntry, TraceEntry, FAILURE_MARKER, MANIFEST_FILE, SCENARIO_COPY,
};
pub use trace::{
    parse_trace, read_trace, write_trace, write_trace_text, TraceError, TraceHeader, TraceWriter,
    TRACE_MAGIC, TRACE_VERSION,
};

/// Parses a duration such as `1ps`, `2.5 ns` or `3e-12` (seconds).
pub fn parse_duration(text: &str) -> Result<f64, String> {
    let t = text.trim();
    let split = t
        .char_indices()
        .rev()
        .take_while(|(_, c)| c.is_alphabetic())
        .last()
        .map_or(t.len(), |(i, _)| i);
    let (num, unit) = t.split_at(split);
    let value: f64 = num.trim().parse().map_err(|_| {
        format!("invalid duration {text:?}: expected a number with an optional unit")
    })?;
    let scale = match unit.trim() {
        "" | "s" => 1.0,
        "ms" => 1e-3,
        "us" | "µs" => 1e-6,
        "ns" => 1e-9,
        "ps" => 1e-12,
        "fs" => 1e-15,
        u => {
            return Err(format!(
                "invalid duration {text:?}: unknown unit {u:?} (use s, ms, us, ns, ps or fs)"
            ))
        }
    };
    let v = value * scale;
    if !(v.is_finite() && v > 0.0) {
        return Err(format!("invalid duration {text:?}: must be positive"));
    }
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn durations() {
        assert_eq!(parse_duration("1ps").unwrap(), 1e-12);
        assert_eq!(parse_duration(" 2.5 ns ").unwrap(), 2.5e-9);
        assert_eq!(parse_duration("3e-12").unwrap(), 3e-12);
        assert_eq!(parse_duration("4us").unwrap(), 4e-6);
        assert!(parse_duration("1 parsec").is_err());
        assert!(parse_duration("-1ps").is_err());
        assert!(parse_duration("ps").is_err());
    }
}
