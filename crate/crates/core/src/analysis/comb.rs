//! Comb line detection and mode spacing from an intensity spectrum.

use serde::{Deserialize, Serialize};

use super::{AnalysisError, Spectrum};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CombLine {
    /// Peak position refined by a parabola through the log values.
    pub frequency: f64,
    /// Level relative to the strongest line in dB.
    pub level_db: f64,
}

/// Local maxima in `[f_lo, f_hi]` within `floor_db` of the strongest one.
/// Maxima closer than `min_separation` Hz to a stronger line are dropped.
pub fn comb_lines(
    spec: &Spectrum,
    f_lo: f64,
    f_hi: f64,
    floor_db: f64,
    min_separation: f64,
) -> Result<Vec<CombLine>, AnalysisError> {
    if !(f_lo < f_hi) || !(floor_db > 0.0) || !(min_separation >= 0.0) {
        return Err(AnalysisError::Parameter(format!(
            "need f_lo < f_hi, floor_db > 0, min_separation >= 0 (got {f_lo}, {f_hi}, {floor_db}, {min_separation})"
        )));
    }
    let v = &spec.values;
    let lo = spec.bin_of(f_lo).max(1);
    let hi = spec.bin_of(f_hi).min(v.len().saturating_sub(2));
    let mut peaks: Vec<(usize, f64)> = (lo..=hi)
        .filter(|&k| v[k] > 0.0 && v[k] > v[k - 1] && v[k] >= v[k + 1])
        .map(|k| (k, v[k]))
        .collect();
    let top = peaks.iter().map(|p| p.1).fold(0.0, f64::max);
    if top <= 0.0 {
        return Ok(Vec::new());
    }
    let floor = top * 10f64.powf(-floor_db / 10.0);
    peaks.retain(|p| p.1 >= floor);
    // Strongest first, so weaker neighbours are the ones suppressed.
    peaks.sort_by(|a, b| b.1.total_cmp(&a.1));
    let df = spec.resolution_hz;
    let mut kept: Vec<CombLine> = Vec::new();
    for (k, val) in peaks {
        let db = |x: f64| 10.0 * x.max(f64::MIN_POSITIVE).log10();
        let (a, b, c) = (db(v[k - 1]), db(val), db(v[k + 1]));
        let denom = a - 2.0 * b + c;
        let shift = if denom < 0.0 {
            0.5 * (a - c) / denom
        } else {
            0.0
        };
        let f = spec.frequency[k] + shift.clamp(-0.5, 0.5) * df;
        if kept
            .iter()
            .all(|l| (l.frequency - f).abs() >= min_separation)
        {
            kept.push(CombLine {
                frequency: f,
                level_db: 10.0 * (val / top).log10(),
            });
        }
    }
    kept.sort_by(|a, b| a.frequency.total_cmp(&b.frequency));
    Ok(kept)
}

/// Line spacing from a least-squares fit of f = f0 + k s, where the mode
/// numbers k come from rounding against the median neighbour gap. Missing
/// lines in between are tolerated.
pub fn mode_spacing(lines: &[CombLine]) -> Result<f64, AnalysisError> {
    if lines.len() < 2 {
        return Err(AnalysisError::Parameter(format!(
            "mode spacing needs at least 2 lines, got {}",
            lines.len()
        )));
    }
    let mut gaps: Vec<f64> = lines
        .windows(2)
        .map(|w| w[1].frequency - w[0].frequency)
        .collect();
    gaps.sort_by(f64::total_cmp);
    let guess = gaps[gaps.len() / 2];
    let f0 = lines[0].frequency;
    let ks: Vec<f64> = lines
        .iter()
        .map(|l| ((l.frequency - f0) / guess).round())
        .collect();
    let n = ks.len() as f64;
    let mk = ks.iter().sum::<f64>() / n;
    let mf = lines.iter().map(|l| l.frequency).sum::<f64>() / n;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (k, l) in ks.iter().zip(lines) {
        sxy += (k - mk) * (l.frequency - mf);
        sxx += (k - mk) * (k - mk);
    }
    if sxx == 0.0 {
        return Err(AnalysisError::Parameter(
            "lines collapse onto one mode".into(),
        ));
    }
    Ok(sxy / sxx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::{intensity_spectrum, TraceRecord, Window};
    use std::f64::consts::PI;

    fn comb_trace(f0: f64, spacing: f64, modes: &[(i32, f64)], dt: f64, n: usize) -> TraceRecord {
        let x = (0..n)
            .map(|k| {
                let t = k as f64 * dt;
                modes
                    .iter()
                    .map(|&(m, a)| {
                        a * (2.0 * PI * (f0 + m as f64 * spacing) * t + 0.3 * m as f64).cos()
                    })
                    .sum()
            })
            .collect();
        TraceRecord::new(dt, 0.0, x, "e", "V/m", "f").unwrap()
    }

    #[test]
    fn recovers_spacing_of_an_off_grid_comb() {
        let spacing = 9.94e9;
        let modes = [
            (-3, 0.01),
            (-2, 0.1),
            (-1, 0.5),
            (0, 1.0),
            (1, 0.6),
            (3, 0.05),
        ];
        let tr = comb_trace(3.5e12, spacing, &modes, 2e-14, 1 << 17);
        let sp = intensity_spectrum(&tr, Window::Hann).unwrap();
        let lines = comb_lines(&sp, 3.4e12, 3.6e12, 60.0, 0.5 * spacing).unwrap();
        assert_eq!(lines.len(), modes.len(), "{lines:?}");
        let s = mode_spacing(&lines).unwrap();
        // Resolution is 382 MHz; the fit is far finer.
        assert!((s / spacing - 1.0).abs() < 2e-3, "{s}");
        let strongest = lines.iter().find(|l| l.level_db == 0.0).unwrap();
        assert!((strongest.frequency - 3.5e12).abs() < sp.resolution_hz);
    }

    #[test]
    fn floor_and_separation_filter_lines() {
        let tr = comb_trace(1e12, 1e10, &[(0, 1.0), (1, 1e-2)], 1e-13, 1 << 14);
        let sp = intensity_spectrum(&tr, Window::Hann).unwrap();
        let lines = comb_lines(&sp, 0.9e12, 1.1e12, 30.0, 5e9).unwrap();
        assert_eq!(lines.len(), 1);
        let lines = comb_lines(&sp, 0.9e12, 1.1e12, 50.0, 5e9).unwrap();
        assert_eq!(lines.len(), 2);
        assert!(mode_spacing(&lines[..1]).is_err());
        assert!(comb_lines(&sp, 2.0, 1.0, 10.0, 0.0).is_err());
    }
}
