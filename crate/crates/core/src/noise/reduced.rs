//! Reduced fluctuation terms: pairwise population exchange noise and
//! complex coherence noise, both scaled to one cell's carrier count.

use super::NoiseDiagnostics;
use crate::quantum::QuantumSystem;
use crate::C64;

/// Square root with negative arguments clamped to zero and counted.
#[inline]
pub(crate) fn clamped_sqrt(x: f64, diag: &mut NoiseDiagnostics) -> f64 {
    diag.radicands += 1;
    if x > 0.0 {
        x.sqrt()
    } else {
        if x < 0.0 {
            diag.clamped += 1;
        }
        0.0
    }
}

/// Population increment F_ii^j for the channel between levels `i` and `j`.
/// Level `j` receives the negative of the returned value.
pub fn reduced_population_noise(
    system: &QuantumSystem,
    rho: &[C64],
    i: usize,
    j: usize,
    n_cell: f64,
    xi: f64,
    diag: &mut NoiseDiagnostics,
) -> f64 {
    assert_ne!(i, j, "population noise needs two distinct levels");
    let n = system.num_levels();
    let radicand =
        (system.rate(j, i) * rho[i * n + i].re + system.rate(i, j) * rho[j * n + j].re) / n_cell;
    xi * clamped_sqrt(radicand, diag)
}

/// Variance per unit time of [`reduced_coherence_noise`] for the pair
/// (`i`, `j`), where `j` is the level whose population drives the noise.
pub fn reduced_coherence_radicand(system: &QuantumSystem, rho: &[C64], i: usize, j: usize) -> f64 {
    let n = system.num_levels();
    let pj = rho[j * n + j].re;
    let mut r = -system.inverse_lifetime(j) * pj + 2.0 * system.dephasing(i, j) * pj;
    for k in 0..n {
        if k != j {
            r += system.rate(j, k) * rho[k * n + k].re;
        }
    }
    r
}

/// Complex coherence increment F_ij with E|F|^2 equal to the radicand over
/// `n_cell`, split evenly between real and imaginary parts.
#[allow(clippy::too_many_arguments)]
pub fn reduced_coherence_noise(
    system: &QuantumSystem,
    rho: &[C64],
    i: usize,
    j: usize,
    n_cell: f64,
    xi2: f64,
    xi3: f64,
    diag: &mut NoiseDiagnostics,
) -> C64 {
    assert_ne!(i, j, "coherence noise needs two distinct levels");
    let amp = clamped_sqrt(
        reduced_coherence_radicand(system, rho, i, j) / (2.0 * n_cell),
        diag,
    );
    C64::new(xi2 * amp, xi3 * amp)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::{DensityMatrix, QuantumSystemSpec};
    use approx::assert_relative_eq;

    fn system(rate: f64, gp: f64) -> QuantumSystem {
        let mut spec = QuantumSystemSpec::empty(2, 1.0, 1.0);
        spec.energies = vec![0.0, 1e-21];
        spec.rates[(0, 1)] = rate;
        spec.pure_dephasing[(0, 1)] = gp;
        spec.pure_dephasing[(1, 0)] = gp;
        QuantumSystem::new(spec).unwrap()
    }

    #[test]
    fn empty_levels_give_no_noise() {
        let s = system(1e12, 0.0);
        let rho = DensityMatrix::zeros(2);
        let mut d = NoiseDiagnostics::default();
        assert_eq!(
            reduced_population_noise(&s, rho.data(), 1, 0, 1e6, 1.0, &mut d),
            0.0
        );
        assert_eq!(d.clamped, 0);
    }

    #[test]
    fn population_amplitude_literal() {
        // r = 1/ps out of level 1, fully occupied, 1e6 carriers, xi = 1.
        let s = system(1e12, 0.0);
        let rho = DensityMatrix::pure_level(2, 1);
        let mut d = NoiseDiagnostics::default();
        let f = reduced_population_noise(&s, rho.data(), 1, 0, 1e6, 1.0, &mut d);
        assert_relative_eq!(f, (1e12f64 / 1e6).sqrt(), max_relative = 1e-15);
        // 1e-3 in units of ps^-1/2.
        assert_relative_eq!(f * 1e-6, 1e-3, max_relative = 1e-12);
    }

    #[test]
    fn coherence_radicand_single_channel() {
        // gamma equals r when pure dephasing is r/2 for a level decaying at r
        // into a level that never decays.
        let r = 2e11;
        let s = system(r, 0.5 * r);
        assert_relative_eq!(s.dephasing(0, 1), r);
        let rho = DensityMatrix::pure_level(2, 1);
        assert_relative_eq!(reduced_coherence_radicand(&s, rho.data(), 0, 1), r);
        let mut d = NoiseDiagnostics::default();
        let f = reduced_coherence_noise(&s, rho.data(), 0, 1, 1e6, 1.0, 0.0, &mut d);
        assert_relative_eq!(f.re, (r / 2e6).sqrt(), max_relative = 1e-15);
    }

    #[test]
    fn negative_radicand_is_clamped_and_counted() {
        let s = system(1e12, 0.0);
        let rho = DensityMatrix::from_populations(&[1.1, -0.1]);
        let mut d = NoiseDiagnostics::default();
        let f = reduced_population_noise(&s, rho.data(), 1, 0, 1e6, 1.0, &mut d);
        assert_eq!(f, 0.0);
        assert_eq!(d.clamped, 1);
        assert_eq!(d.radicands, 1);
    }

    #[test]
    fn zero_rates_zero_coherence_noise() {
        let s = system(0.0, 0.0);
        let rho = DensityMatrix::from_populations(&[0.4, 0.6]);
        let mut d = NoiseDiagnostics::default();
        let f = reduced_coherence_noise(&s, rho.data(), 0, 1, 1e6, 0.3, -1.2, &mut d);
        assert_eq!(f, C64::new(0.0, 0.0));
    }
}
