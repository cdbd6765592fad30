//! Post-processing of recorded probe traces: spectra, instantaneous
//! frequency, band extraction and relative intensity noise.

mod comb;
mod filter;
mod hilbert;
mod rin;
mod spectrum;

pub use comb::{comb_lines, mode_spacing, CombLine};
pub use filter::{bandpass_extract, bandpass_response, detector_power, ComplexTrace};
pub use hilbert::{analytic_signal, instantaneous_frequency, InstantaneousFrequency};
pub use rin::{rin_spectrum, RinOptions, Sidedness};
pub use spectrum::{intensity_spectrum, rf_spectrum, Spectrum, Window};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalysisError {
    #[error("trace needs at least 2 samples, got {0}")]
    TooShort(usize),
    #[error("sample times are not uniform at index {index}: step {step} s vs {expected} s")]
    NonUniform {
        index: usize,
        step: f64,
        expected: f64,
    },
    #[error("sample interval {0} s must be finite and positive")]
    BadInterval(f64),
    #[error("mean power must be positive, got {0}")]
    NonPositiveMean(f64),
    #[error("band {low} .. {high} Hz lies outside 0 .. {nyquist} Hz")]
    BandOutsideNyquist { low: f64, high: f64, nyquist: f64 },
    #[error("{0}")]
    Parameter(String),
}

/// Uniformly sampled real trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub dt: f64,
    pub t0: f64,
    pub samples: Vec<f64>,
    pub quantity: String,
    pub units: String,
    pub probe: String,
}

impl TraceRecord {
    pub fn new(
        dt: f64,
        t0: f64,
        samples: Vec<f64>,
        quantity: &str,
        units: &str,
        probe: &str,
    ) -> Result<Self, AnalysisError> {
        let t = Self {
            dt,
            t0,
            samples,
            quantity: quantity.to_string(),
            units: units.to_string(),
            probe: probe.to_string(),
        };
        t.validate()?;
        Ok(t)
    }

    /// Builds a trace from explicit sample times, which must be uniform to
    /// 1e-9 relative.
    pub fn from_times(
        times: &[f64],
        samples: Vec<f64>,
        quantity: &str,
        units: &str,
        probe: &str,
    ) -> Result<Self, AnalysisError> {
        if times.len() < 2 || times.len() != samples.len() {
            return Err(AnalysisError::TooShort(times.len().min(samples.len())));
        }
        let dt = (times[times.len() - 1] - times[0]) / (times.len() - 1) as f64;
        for (k, w) in times.windows(2).enumerate() {
            let step = w[1] - w[0];
            if (step - dt).abs() > 1e-9 * dt.abs() {
                return Err(AnalysisError::NonUniform {
                    index: k + 1,
                    step,
                    expected: dt,
                });
            }
        }
        Self::new(dt, times[0], samples, quantity, units, probe)
    }

    pub fn validate(&self) -> Result<(), AnalysisError> {
        if self.samples.len() < 2 {
            return Err(AnalysisError::TooShort(self.samples.len()));
        }
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(AnalysisError::BadInterval(self.dt));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Record length N dt.
    pub fn duration(&self) -> f64 {
        self.dt * self.samples.len() as f64
    }

    pub fn time(&self, k: usize) -> f64 {
        self.t0 + self.dt * k as f64
    }
}
