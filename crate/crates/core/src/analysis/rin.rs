use serde::{Deserialize, Serialize};

use super::spectrum::{scaled_transform, Spectrum, Window};
use super::{AnalysisError, TraceRecord};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Sidedness {
    /// (1/T)|dt sum dP e^{-i 2 pi f t}|^2 / <P>^2 at f >= 0, no folding.
    #[default]
    Formula,
    /// Negative frequencies folded onto positive ones (factor 2 off DC).
    OneSided,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RinOptions {
    pub sidedness: Sidedness,
    /// Number of non-overlapping segments averaged (Welch, rectangular).
    pub segments: usize,
}

impl Default for RinOptions {
    fn default() -> Self {
        Self {
            sidedness: Sidedness::Formula,
            segments: 1,
        }
    }
}

/// Relative intensity noise in dB/Hz of a power trace.
pub fn rin_spectrum(power: &TraceRecord, opts: RinOptions) -> Result<Spectrum, AnalysisError> {
    power.validate()?;
    if opts.segments == 0 {
        return Err(AnalysisError::Parameter(
            "segments must be at least 1".into(),
        ));
    }
    let seg_len = power.len() / opts.segments;
    if seg_len < 2 {
        return Err(AnalysisError::TooShort(seg_len));
    }
    let mean = power.samples.iter().sum::<f64>() / power.len() as f64;
    if !(mean > 0.0) {
        return Err(AnalysisError::NonPositiveMean(mean));
    }
    let t_seg = seg_len as f64 * power.dt;
    let half = seg_len / 2;
    let mut acc = vec![0.0; half + 1];
    for s in 0..opts.segments {
        let seg = &power.samples[s * seg_len..(s + 1) * seg_len];
        let m = seg.iter().sum::<f64>() / seg_len as f64;
        let dev: Vec<f64> = seg.iter().map(|p| p - m).collect();
        let x = scaled_transform(&dev, power.dt, Window::Rectangular);
        for k in 0..=half {
            let mut v = x[k].norm_sqr();
            if opts.sidedness == Sidedness::OneSided
                && k != 0
                && !(seg_len.is_multiple_of(2) && k == half)
            {
                v += x[seg_len - k].norm_sqr();
            }
            acc[k] += v;
        }
    }
    let scale = 1.0 / (opts.segments as f64 * t_seg * mean * mean);
    let values = acc
        .iter()
        .map(|v| {
            let r = v * scale;
            if r > 0.0 {
                10.0 * r.log10()
            } else {
                f64::NEG_INFINITY
            }
        })
        .collect();
    let df = 1.0 / t_seg;
    Ok(Spectrum {
        frequency: (0..=half).map(|k| k as f64 * df).collect(),
        values,
        resolution_hz: df,
        window: Window::Rectangular,
        units: "dB/Hz".into(),
        sidedness: match opts.sidedness {
            Sidedness::Formula => "formula".into(),
            Sidedness::OneSided => "one_sided".into(),
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn modulated(p0: f64, m: f64, fm: f64, dt: f64, n: usize) -> TraceRecord {
        let s = (0..n)
            .map(|k| p0 * (1.0 + m * (2.0 * PI * fm * k as f64 * dt).cos()))
            .collect();
        TraceRecord::new(dt, 0.0, s, "power", "W", "p").unwrap()
    }

    #[test]
    fn modulation_line_matches_closed_form() {
        let (m, t, n) = (1e-4, 10e-6, 10_000);
        let dt = t / n as f64;
        let tr = modulated(2e-3, m, 10e6, dt, n);
        let s = rin_spectrum(&tr, RinOptions::default()).unwrap();
        let expected = 10.0 * (m * m * t / 4.0).log10();
        let got = s.values[s.bin_of(10e6)];
        assert!((got - expected).abs() < 1.0, "{got} vs {expected}");
        assert!((expected + 136.02).abs() < 0.01);
        let two = rin_spectrum(
            &tr,
            RinOptions {
                sidedness: Sidedness::OneSided,
                segments: 1,
            },
        )
        .unwrap();
        assert!((two.values[s.bin_of(10e6)] - got - 10.0 * 2f64.log10()).abs() < 1e-9);
    }

    #[test]
    fn rescaling_is_exact() {
        let tr = modulated(1.0, 0.01, 3e6, 1e-9, 4096);
        let mut big = tr.clone();
        big.samples.iter_mut().for_each(|p| *p *= 1024.0);
        let a = rin_spectrum(&tr, RinOptions::default()).unwrap();
        let b = rin_spectrum(&big, RinOptions::default()).unwrap();
        for (x, y) in a.values.iter().zip(&b.values) {
            assert!(x == y || (x - y).abs() < 1e-9 || (x.is_infinite() && y.is_infinite()));
        }
    }

    #[test]
    fn constant_power_has_no_noise() {
        let tr = TraceRecord::new(1e-9, 0.0, vec![0.5; 256], "power", "W", "p").unwrap();
        let s = rin_spectrum(&tr, RinOptions::default()).unwrap();
        assert!(s.values.iter().all(|v| *v == f64::NEG_INFINITY));
    }

    #[test]
    fn zero_mean_rejected() {
        let tr = TraceRecord::new(1e-9, 0.0, vec![0.0; 16], "power", "W", "p").unwrap();
        assert!(matches!(
            rin_spectrum(&tr, RinOptions::default()),
            Err(AnalysisError::NonPositiveMean(_))
        ));
    }

    #[test]
    fn welch_segments_shrink_resolution() {
        let tr = modulated(1.0, 1e-3, 8e6, 1e-9, 8000);
        let s = rin_spectrum(
            &tr,
            RinOptions {
                sidedness: Sidedness::Formula,
                segments: 4,
            },
        )
        .unwrap();
        assert!((s.resolution_hz - 0.5e6).abs() < 1.0);
    }
}
