use rustfft::FftPlanner;

use super::{AnalysisError, TraceRecord};
use crate::C64;

/// Analytic signal x + i H[x] computed in the frequency domain.
pub fn analytic_signal(x: &[f64]) -> Vec<C64> {
    let n = x.len();
    let mut planner = FftPlanner::new();
    let mut buf: Vec<C64> = x.iter().map(|&v| C64::new(v, 0.0)).collect();
    planner.plan_fft_forward(n).process(&mut buf);
    for (k, v) in buf.iter_mut().enumerate() {
        let nyquist = n.is_multiple_of(2) && k == n / 2;
        if k == 0 || nyquist {
            continue;
        }
        if k < n.div_ceil(2) {
            *v *= 2.0;
        } else {
            *v = C64::new(0.0, 0.0);
        }
    }
    planner.plan_fft_inverse(n).process(&mut buf);
    let inv = 1.0 / n as f64;
    buf.iter().map(|v| v * inv).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct InstantaneousFrequency {
    pub time: Vec<f64>,
    pub frequency: Vec<f64>,
    pub envelope: Vec<f64>,
    /// False where the envelope is below the threshold; the frequency there
    /// is NaN rather than interpolated.
    pub valid: Vec<bool>,
}

/// f(t) = (1/2 pi) d(phase)/dt from the unwrapped analytic phase with
/// central differences. Samples with envelope below `threshold` times the
/// peak envelope are masked.
pub fn instantaneous_frequency(
    trace: &TraceRecord,
    threshold: f64,
) -> Result<InstantaneousFrequency, AnalysisError> {
    trace.validate()?;
    if trace.len() < 3 {
        return Err(AnalysisError::TooShort(trace.len()));
    }
    let z = analytic_signal(&trace.samples);
    let envelope: Vec<f64> = z.iter().map(|v| v.norm()).collect();
    let mut phase: Vec<f64> = z.iter().map(|v| v.arg()).collect();
    let tau = 2.0 * std::f64::consts::PI;
    for k in 1..phase.len() {
        let d = phase[k] - phase[k - 1];
        phase[k] -= tau * (d / tau).round();
    }
    let n = phase.len();
    let peak = envelope.iter().copied().fold(0.0, f64::max);
    let mut frequency = vec![0.0; n];
    let mut valid = vec![true; n];
    for k in 0..n {
        let d = if k == 0 {
            (phase[1] - phase[0]) / trace.dt
        } else if k == n - 1 {
            (phase[n - 1] - phase[n - 2]) / trace.dt
        } else {
            (phase[k + 1] - phase[k - 1]) / (2.0 * trace.dt)
        };
        frequency[k] = d / tau;
        if envelope[k] < threshold * peak {
            valid[k] = false;
            frequency[k] = f64::NAN;
        }
    }
    Ok(InstantaneousFrequency {
        time: (0..n).map(|k| trace.time(k)).collect(),
        frequency,
        envelope,
        valid,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn constant_tone() {
        let dt = 1e-3;
        let f0 = 37.0;
        let s: Vec<f64> = (0..4000)
            .map(|k| (2.0 * PI * f0 * k as f64 * dt).cos())
            .collect();
        for amp in [1.0, 1e-6] {
            let t = TraceRecord::new(
                dt,
                0.0,
                s.iter().map(|v| v * amp).collect(),
                "e",
                "V/m",
                "p",
            )
            .unwrap();
            let r = instantaneous_frequency(&t, 0.1).unwrap();
            for k in 400..3600 {
                assert!(
                    (r.frequency[k] - f0).abs() < 1e-3 * f0,
                    "{k}: {}",
                    r.frequency[k]
                );
            }
        }
    }

    #[test]
    fn linear_chirp() {
        let dt = 1e-4;
        let n = 20_000;
        let (f0, rate) = (200.0, 300.0);
        let s: Vec<f64> = (0..n)
            .map(|k| {
                let t = k as f64 * dt;
                (2.0 * PI * (f0 * t + 0.5 * rate * t * t)).cos()
            })
            .collect();
        let t = TraceRecord::new(dt, 0.0, s, "e", "V/m", "p").unwrap();
        let r = instantaneous_frequency(&t, 0.1).unwrap();
        for k in (n / 10)..(9 * n / 10) {
            let expect = f0 + rate * k as f64 * dt;
            assert!((r.frequency[k] - expect).abs() < 5e-3 * expect, "{k}");
        }
    }

    #[test]
    fn two_tone_beat_oscillates_between_tones() {
        let dt = 1e-3;
        let n = 8000;
        let (f1, f2, a2) = (50.0, 60.0, 0.5);
        let s: Vec<f64> = (0..n)
            .map(|k| {
                let t = k as f64 * dt;
                (2.0 * PI * f1 * t).cos() + a2 * (2.0 * PI * f2 * t).cos()
            })
            .collect();
        let t = TraceRecord::new(dt, 0.0, s, "e", "V/m", "p").unwrap();
        let r = instantaneous_frequency(&t, 0.05).unwrap();
        // Closed form: f = f1 + df * (a^2 + a cos x) / (1 + a^2 + 2 a cos x).
        let df = f2 - f1;
        for k in 1000..7000 {
            let x = 2.0 * PI * df * k as f64 * dt;
            let expect = f1 + df * (a2 * a2 + a2 * x.cos()) / (1.0 + a2 * a2 + 2.0 * a2 * x.cos());
            assert!(
                (r.frequency[k] - expect).abs() < 0.05,
                "{k}: {} vs {expect}",
                r.frequency[k]
            );
        }
    }

    #[test]
    fn silent_samples_are_masked() {
        let mut s = vec![0.0; 1000];
        for (k, v) in s.iter_mut().enumerate().take(500) {
            *v = (2.0 * PI * 0.05 * k as f64).cos();
        }
        let t = TraceRecord::new(1.0, 0.0, s, "e", "V/m", "p").unwrap();
        let r = instantaneous_frequency(&t, 0.1).unwrap();
        assert!(!r.valid[800] && r.frequency[800].is_nan());
        assert!(r.valid[250]);
    }
}
