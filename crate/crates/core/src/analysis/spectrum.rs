use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use super::{AnalysisError, TraceRecord};
use crate::C64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Window {
    Rectangular,
    Hann,
}

impl Window {
    /// Periodic window coefficients.
    pub fn coefficients(&self, n: usize) -> Vec<f64> {
        match self {
            Window::Rectangular => vec![1.0; n],
            Window::Hann => (0..n)
                .map(|k| {
                    let x = std::f64::consts::PI * k as f64 / n as f64;
                    let s = x.sin();
                    s * s
                })
                .collect(),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Window::Rectangular => "rectangular",
            Window::Hann => "hann",
        }
    }
}

/// One-sided spectrum on a uniform frequency grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    pub frequency: Vec<f64>,
    pub values: Vec<f64>,
    pub resolution_hz: f64,
    pub window: Window,
    pub units: String,
    pub sidedness: String,
}

impl Spectrum {
    /// Index of the largest value.
    pub fn peak_index(&self) -> usize {
        self.values
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |(bi, bv), (i, &v)| {
                if v > bv {
                    (i, v)
                } else {
                    (bi, bv)
                }
            })
            .0
    }

    /// Bin nearest to frequency `f`.
    pub fn bin_of(&self, f: f64) -> usize {
        ((f / self.resolution_hz).round().max(0.0) as usize).min(self.values.len() - 1)
    }
}

/// Windowed transform scaled by dt and normalized to unit mean window power.
pub(crate) fn scaled_transform(x: &[f64], dt: f64, window: Window) -> Vec<C64> {
    let n = x.len();
    let w = window.coefficients(n);
    let norm = (w.iter().map(|v| v * v).sum::<f64>() / n as f64).sqrt();
    let mut buf: Vec<C64> = x
        .iter()
        .zip(&w)
        .map(|(&v, &wk)| C64::new(v * wk * dt / norm, 0.0))
        .collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    buf
}

/// Folds a two-sided density |X_k|^2 onto k = 0 ..= n/2.
pub(crate) fn fold_one_sided(spec: &[C64]) -> Vec<f64> {
    let n = spec.len();
    (0..=n / 2)
        .map(|k| {
            let p = spec[k].norm_sqr();
            if k == 0 || (n.is_multiple_of(2) && k == n / 2) {
                p
            } else {
                2.0 * p
            }
        })
        .collect()
}

/// One-sided energy spectral density of a field trace. With the
/// rectangular window, sum(x^2) dt equals sum(S) df.
pub fn intensity_spectrum(trace: &TraceRecord, window: Window) -> Result<Spectrum, AnalysisError> {
    trace.validate()?;
    let x = scaled_transform(&trace.samples, trace.dt, window);
    let values = fold_one_sided(&x);
    let df = 1.0 / trace.duration();
    Ok(Spectrum {
        frequency: (0..values.len()).map(|k| k as f64 * df).collect(),
        values,
        resolution_hz: df,
        window,
        units: format!("({})^2 s/Hz", trace.units),
        sidedness: "one-sided".into(),
    })
}

/// Periodogram of the mean-subtracted power in dB (10 log10 of units^2/Hz).
/// Empty bins come out as negative infinity.
pub fn rf_spectrum(trace: &TraceRecord, window: Window) -> Result<Spectrum, AnalysisError> {
    trace.validate()?;
    let mean = trace.samples.iter().sum::<f64>() / trace.len() as f64;
    let centered: Vec<f64> = trace.samples.iter().map(|v| v - mean).collect();
    let x = scaled_transform(&centered, trace.dt, window);
    let t = trace.duration();
    let values = fold_one_sided(&x)
        .into_iter()
        .map(|p| 10.0 * (p / t).log10())
        .collect::<Vec<_>>();
    let df = 1.0 / t;
    Ok(Spectrum {
        frequency: (0..values.len()).map(|k| k as f64 * df).collect(),
        values,
        resolution_hz: df,
        window,
        units: format!("dB(({})^2/Hz)", trace.units),
        sidedness: "one-sided".into(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn tone(n: usize, dt: f64, f: f64, amp: f64) -> TraceRecord {
        let s = (0..n)
            .map(|k| amp * (2.0 * std::f64::consts::PI * f * k as f64 * dt).cos())
            .collect();
        TraceRecord::new(dt, 0.0, s, "e_field", "V/m", "t").unwrap()
    }

    #[test]
    fn parseval_rectangular() {
        let n = 4096;
        let dt = 1e-3;
        let s: Vec<f64> = (0..n)
            .map(|k| ((k * 7919) % 113) as f64 / 50.0 - 1.0)
            .collect();
        let t = TraceRecord::new(dt, 0.0, s.clone(), "x", "V", "p").unwrap();
        let sp = intensity_spectrum(&t, Window::Rectangular).unwrap();
        let e_time: f64 = s.iter().map(|v| v * v).sum::<f64>() * dt;
        let e_freq: f64 = sp.values.iter().sum::<f64>() * sp.resolution_hz;
        assert_relative_eq!(e_time, e_freq, max_relative = 1e-9);
    }

    #[test]
    fn dc_goes_to_zero_bin() {
        let t = TraceRecord::new(1.0, 0.0, vec![2.5; 256], "x", "V", "p").unwrap();
        let sp = intensity_spectrum(&t, Window::Rectangular).unwrap();
        let total: f64 = sp.values.iter().sum();
        assert_relative_eq!(sp.values[0], total, max_relative = 1e-12);
    }

    #[test]
    fn hann_leakage_below_60_db() {
        let n = 8192;
        let dt = 1.0 / 1000.0;
        // Deliberately between bins.
        let f0 = 123.37;
        let sp = intensity_spectrum(&tone(n, dt, f0, 1.0), Window::Hann).unwrap();
        let pk = sp.peak_index();
        assert_eq!(pk, sp.bin_of(f0));
        let peak = sp.values[pk];
        for (k, v) in sp.values.iter().enumerate() {
            if (k as i64 - pk as i64).abs() > 10 {
                assert!(10.0 * (v / peak).log10() < -60.0, "bin {k}");
            }
        }
    }

    #[test]
    fn two_tones_resolved() {
        let n = 1 << 14;
        let dt = 1.0 / 4096.0;
        let (f1, f2) = (300.0, 300.0 + 5.0 * 9.94);
        let s: Vec<f64> = (0..n)
            .map(|k| {
                let t = k as f64 * dt;
                (2.0 * std::f64::consts::PI * f1 * t).cos()
                    + (2.0 * std::f64::consts::PI * f2 * t).cos()
            })
            .collect();
        let tr = TraceRecord::new(dt, 0.0, s, "x", "V", "p").unwrap();
        let sp = intensity_spectrum(&tr, Window::Hann).unwrap();
        let b1 = sp.bin_of(f1);
        let b2 = sp.bin_of(f2);
        let local_max = |b: usize| {
            (b - 2..=b + 2).all(|k| sp.values[k] <= sp.values[b] * (1.0 + 1e-9) || k == b)
        };
        assert!(local_max(b1) && local_max(b2));
        assert_relative_eq!(sp.values[b1], sp.values[b2], max_relative = 0.3);
    }

    #[test]
    fn rf_of_constant_is_empty_and_am_line_found() {
        let t = TraceRecord::new(1e-9, 0.0, vec![1.0; 1000], "power", "W", "p").unwrap();
        let sp = rf_spectrum(&t, Window::Hann).unwrap();
        assert!(sp
            .values
            .iter()
            .all(|v| *v == f64::NEG_INFINITY || *v < -250.0));
        let dt = 1e-11;
        let n = 200_000;
        let s: Vec<f64> = (0..n)
            .map(|k| 1.0 + 0.01 * (2.0 * std::f64::consts::PI * 49.7e9 * k as f64 * dt).cos())
            .collect();
        let t = TraceRecord::new(dt, 0.0, s, "power", "W", "p").unwrap();
        let sp = rf_spectrum(&t, Window::Hann).unwrap();
        assert_eq!(sp.peak_index(), sp.bin_of(49.7e9));
        // 2 us record gives 500 kHz bins.
        assert_relative_eq!(sp.resolution_hz, 500e3, max_relative = 1e-12);
    }
}
