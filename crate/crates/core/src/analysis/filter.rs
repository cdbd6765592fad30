use rustfft::FftPlanner;

use super::{AnalysisError, TraceRecord};
use crate::C64;

/// Complex envelope trace.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexTrace {
    pub dt: f64,
    pub t0: f64,
    pub samples: Vec<C64>,
}

impl ComplexTrace {
    /// Instantaneous power |z|^2 as a real trace.
    pub fn power(&self, probe: &str) -> TraceRecord {
        TraceRecord {
            dt: self.dt,
            t0: self.t0,
            samples: self.samples.iter().map(|z| z.norm_sqr()).collect(),
            quantity: "modal_power".into(),
            units: "arb".into(),
            probe: probe.into(),
        }
    }
}

/// Amplitude response: flat within |f - fc| <= 0.25 B, raised-cosine
/// roll-off to zero at 0.75 B, so the power response is -3 dB at B/2.
pub fn bandpass_response(f: f64, f_center: f64, bandwidth_3db: f64) -> f64 {
    let d = (f - f_center).abs();
    let w = 0.5 * bandwidth_3db;
    let lo = 0.5 * bandwidth_3db - 0.5 * w;
    if d <= lo {
        1.0
    } else if d >= lo + w {
        0.0
    } else {
        (0.5 * std::f64::consts::PI * (d - lo) / w).cos()
    }
}

/// Filters the positive-frequency band around `f_center` and mixes it down
/// to a complex envelope. The filter is real and even, hence zero phase.
pub fn bandpass_extract(
    trace: &TraceRecord,
    f_center: f64,
    bandwidth_3db: f64,
) -> Result<ComplexTrace, AnalysisError> {
    trace.validate()?;
    if !(bandwidth_3db > 0.0) {
        return Err(AnalysisError::Parameter(format!(
            "bandwidth {bandwidth_3db} Hz must be positive"
        )));
    }
    let nyquist = 0.5 / trace.dt;
    let (low, high) = (
        f_center - 0.75 * bandwidth_3db,
        f_center + 0.75 * bandwidth_3db,
    );
    if low < 0.0 || high > nyquist {
        return Err(AnalysisError::BandOutsideNyquist { low, high, nyquist });
    }
    let n = trace.len();
    let mut planner = FftPlanner::new();
    let mut buf: Vec<C64> = trace.samples.iter().map(|&v| C64::new(v, 0.0)).collect();
    planner.plan_fft_forward(n).process(&mut buf);
    let df = 1.0 / trace.duration();
    for (k, v) in buf.iter_mut().enumerate() {
        let f = if k <= n / 2 { k as f64 * df } else { -1.0 };
        let h = if f > 0.0 {
            bandpass_response(f, f_center, bandwidth_3db)
        } else {
            0.0
        };
        *v *= 2.0 * h;
    }
    planner.plan_fft_inverse(n).process(&mut buf);
    let inv = 1.0 / n as f64;
    let samples = buf
        .iter()
        .enumerate()
        .map(|(k, z)| {
            let t = trace.time(k);
            z * inv * C64::from_polar(1.0, -2.0 * std::f64::consts::PI * f_center * t)
        })
        .collect();
    Ok(ComplexTrace {
        dt: trace.dt,
        t0: trace.t0,
        samples,
    })
}

/// Square-law detector: E^2 low-passed below `cutoff_hz` (raised-cosine
/// edge over the last 10 %), then decimated.
pub fn detector_power(
    field: &TraceRecord,
    cutoff_hz: f64,
    decimation: usize,
) -> Result<TraceRecord, AnalysisError> {
    field.validate()?;
    if decimation == 0 {
        return Err(AnalysisError::Parameter(
            "decimation must be at least 1".into(),
        ));
    }
    let out_nyquist = 0.5 / (field.dt * decimation as f64);
    if cutoff_hz > out_nyquist {
        return Err(AnalysisError::Parameter(format!(
            "cutoff {cutoff_hz} Hz above the decimated Nyquist frequency {out_nyquist} Hz"
        )));
    }
    let n = field.len();
    let mut planner = FftPlanner::new();
    let mut buf: Vec<C64> = field
        .samples
        .iter()
        .map(|&v| C64::new(v * v, 0.0))
        .collect();
    planner.plan_fft_forward(n).process(&mut buf);
    let df = 1.0 / field.duration();
    let edge = 0.9 * cutoff_hz;
    for (k, v) in buf.iter_mut().enumerate() {
        let f = k.min(n - k) as f64 * df;
        let h = if f <= edge {
            1.0
        } else if f >= cutoff_hz {
            0.0
        } else {
            let x = (f - edge) / (cutoff_hz - edge);
            0.5 * (1.0 + (std::f64::consts::PI * x).cos())
        };
        *v *= h;
    }
    planner.plan_fft_inverse(n).process(&mut buf);
    let inv = 1.0 / n as f64;
    let samples = buf.iter().step_by(decimation).map(|z| z.re * inv).collect();
    TraceRecord::new(
        field.dt * decimation as f64,
        field.t0,
        samples,
        "power",
        &format!("({})^2", field.units),
        &field.probe,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn tone(n: usize, dt: f64, f: f64) -> TraceRecord {
        let s = (0..n)
            .map(|k| (2.0 * PI * f * k as f64 * dt).cos())
            .collect();
        TraceRecord::new(dt, 0.0, s, "e_field", "V/m", "p").unwrap()
    }

    fn db(x: f64) -> f64 {
        20.0 * x.log10()
    }

    fn mean_amp(z: &ComplexTrace) -> f64 {
        let n = z.samples.len();
        z.samples[n / 4..3 * n / 4]
            .iter()
            .map(|v| v.norm())
            .sum::<f64>()
            / (n / 2) as f64
    }

    #[test]
    fn response_shape() {
        assert_eq!(bandpass_response(100.0, 100.0, 20.0), 1.0);
        let edge = bandpass_response(110.0, 100.0, 20.0);
        assert!((db(edge) + 3.0103).abs() < 1e-3);
        assert_eq!(bandpass_response(130.0, 100.0, 20.0), 0.0);
    }

    #[test]
    fn passthrough_edge_and_stop() {
        let n = 1 << 14;
        let dt = 1.0 / 1024.0;
        let df = 1.0 / (n as f64 * dt);
        let fc = 200.0;
        let bw = 1280.0 * df;
        let inband = bandpass_extract(&tone(n, dt, fc + 64.0 * df), fc, bw).unwrap();
        assert!(db(mean_amp(&inband)).abs() < 0.1);
        let edge = bandpass_extract(&tone(n, dt, fc + 0.5 * bw), fc, bw).unwrap();
        assert!((db(mean_amp(&edge)) + 3.0).abs() < 0.2);
        let out = bandpass_extract(&tone(n, dt, fc + 1.5 * bw), fc, bw).unwrap();
        assert!(db(mean_amp(&out)) < -60.0);
    }

    #[test]
    fn rejects_band_beyond_nyquist() {
        let t = tone(1024, 1e-3, 10.0);
        assert!(matches!(
            bandpass_extract(&t, 490.0, 40.0),
            Err(AnalysisError::BandOutsideNyquist { .. })
        ));
    }

    #[test]
    fn idempotent_in_band() {
        let n = 1 << 13;
        let dt = 1.0 / 1024.0;
        let t = tone(n, dt, 100.0);
        let once = bandpass_extract(&t, 100.0, 20.0).unwrap();
        // Re-modulate and filter again.
        let re: Vec<f64> = once
            .samples
            .iter()
            .enumerate()
            .map(|(k, z)| (z * C64::from_polar(1.0, 2.0 * PI * 100.0 * k as f64 * dt)).re)
            .collect();
        let t2 = TraceRecord::new(dt, 0.0, re, "e", "V/m", "p").unwrap();
        let twice = bandpass_extract(&t2, 100.0, 20.0).unwrap();
        assert!((db(mean_amp(&twice)) - db(mean_amp(&once))).abs() < 0.01);
    }

    #[test]
    fn detector_tracks_envelope() {
        let dt = 1e-3;
        let n = 1 << 14;
        let s: Vec<f64> = (0..n)
            .map(|k| {
                let t = k as f64 * dt;
                (1.0 + 0.5 * (2.0 * PI * 2.0 * t).cos()) * (2.0 * PI * 200.0 * t).cos()
            })
            .collect();
        let tr = TraceRecord::new(dt, 0.0, s, "e", "V/m", "p").unwrap();
        let p = detector_power(&tr, 20.0, 10).unwrap();
        for k in (p.len() / 4)..(3 * p.len() / 4) {
            let t = p.time(k);
            let env = 1.0 + 0.5 * (2.0 * PI * 2.0 * t).cos();
            assert!((p.samples[k] - 0.5 * env * env).abs() < 1e-3);
        }
    }
}
