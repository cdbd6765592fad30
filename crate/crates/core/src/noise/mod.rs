//! Stochastic fluctuation increments and random initial states.

mod full;
mod reduced;
mod rng;

pub(crate) use reduced::clamped_sqrt;

pub use full::{full_fluctuation_vector, FluctuationMatrix, FULL_DRAWS};
pub use reduced::{reduced_coherence_noise, reduced_coherence_radicand, reduced_population_noise};
pub use rng::{NoiseStream, StreamDomain};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::constants::{HBAR, KB};
use crate::diffusion::Topology;
use crate::quantum::{DensityMatrix, QuantumSystem, MAX_LEVELS};
use crate::C64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseScheme {
    Off,
    Reduced,
    Full,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NoiseError {
    #[error("the full noise scheme needs exactly three levels, got {0}")]
    FullNeedsThreeLevels(usize),
    #[error("the full noise scheme needs a level topology (injector, lower, upper)")]
    MissingTopology,
}

/// Counts of square-root arguments evaluated and clamped at zero.
#[derive(Debug, Default, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct NoiseDiagnostics {
    pub radicands: u64,
    pub clamped: u64,
}

impl NoiseDiagnostics {
    pub fn merge(&mut self, other: &NoiseDiagnostics) {
        self.radicands += other.radicands;
        self.clamped += other.clamped;
    }

    pub fn clamp_fraction(&self) -> f64 {
        if self.radicands == 0 {
            0.0
        } else {
            self.clamped as f64 / self.radicands as f64
        }
    }
}

/// Fluctuation model bound to one quantum system.
#[derive(Debug, Clone)]
pub struct NoiseModel {
    scheme: NoiseScheme,
    system: QuantumSystem,
    pop_pairs: Vec<(usize, usize)>,
    /// (lower, upper) level pairs; the upper level drives the variance.
    coh_pairs: Vec<(usize, usize)>,
    topology: Option<Topology>,
}

impl NoiseModel {
    pub fn new(
        system: &QuantumSystem,
        scheme: NoiseScheme,
        topology: Option<Topology>,
    ) -> Result<Self, NoiseError> {
        let n = system.num_levels();
        if scheme == NoiseScheme::Full {
            if n != 3 {
                return Err(NoiseError::FullNeedsThreeLevels(n));
            }
            if topology.is_none() {
                return Err(NoiseError::MissingTopology);
            }
        }
        let mut pop_pairs = Vec::new();
        let mut coh_pairs = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                if system.rate(i, j) > 0.0 || system.rate(j, i) > 0.0 {
                    pop_pairs.push((i, j));
                }
                if system.is_above(j, i) {
                    coh_pairs.push((i, j));
                } else {
                    coh_pairs.push((j, i));
                }
            }
        }
        Ok(Self {
            scheme,
            system: system.clone(),
            pop_pairs,
            coh_pairs,
            topology,
        })
    }

    pub fn off(system: &QuantumSystem) -> Self {
        Self::new(system, NoiseScheme::Off, None).expect("off scheme is always valid")
    }

    pub fn scheme(&self) -> NoiseScheme {
        self.scheme
    }

    pub fn system(&self) -> &QuantumSystem {
        &self.system
    }

    /// Ito kick rho += sqrt(dt) F(rho) using rho before the kick.
    pub fn kick(
        &self,
        rho: &mut [C64],
        e_z: f64,
        n_cell: f64,
        dt: f64,
        stream: &mut NoiseStream,
        diag: &mut NoiseDiagnostics,
    ) {
        match self.scheme {
            NoiseScheme::Off => {}
            NoiseScheme::Reduced => self.kick_reduced(rho, n_cell, dt, stream, diag),
            NoiseScheme::Full => {
                let topo = self.topology.expect("checked at construction");
                let mut xi = [0.0; FULL_DRAWS];
                stream.fill_normal(&mut xi);
                let f = full_fluctuation_vector(rho, &self.system, topo, e_z, n_cell, &xi, diag);
                let sdt = dt.sqrt();
                for (k, v) in rho.iter_mut().enumerate() {
                    *v += f.data[k] * sdt;
                }
            }
        }
    }

    fn kick_reduced(
        &self,
        rho: &mut [C64],
        n_cell: f64,
        dt: f64,
        stream: &mut NoiseStream,
        diag: &mut NoiseDiagnostics,
    ) {
        let n = self.system.num_levels();
        let mut dpop = [0.0; MAX_LEVELS];
        for &(i, j) in &self.pop_pairs {
            let xi = stream.normal();
            let f = reduced_population_noise(&self.system, rho, i, j, n_cell, xi, diag);
            dpop[i] += f;
            dpop[j] -= f;
        }
        let mut dcoh = [C64::new(0.0, 0.0); MAX_LEVELS * MAX_LEVELS];
        for &(lo, up) in &self.coh_pairs {
            let xi2 = stream.normal();
            let xi3 = stream.normal();
            dcoh[up * n + lo] =
                reduced_coherence_noise(&self.system, rho, lo, up, n_cell, xi2, xi3, diag);
        }
        let sdt = dt.sqrt();
        for i in 0..n {
            rho[i * n + i].re += sdt * dpop[i];
        }
        for &(lo, up) in &self.coh_pairs {
            let f = dcoh[up * n + lo] * sdt;
            rho[up * n + lo] += f;
            rho[lo * n + up] += f.conj();
        }
    }
}

/// Bose occupation 1/(exp(hbar w / kB T) - 1); zero at T = 0.
pub fn thermal_photon_number(omega0: f64, temperature: f64) -> f64 {
    assert!(omega0 > 0.0 && temperature >= 0.0);
    if temperature == 0.0 {
        return 0.0;
    }
    1.0 / (HBAR * omega0 / (KB * temperature)).exp_m1()
}

/// Inverted two-level state tipped by (theta, phi). Level 1 is excited.
pub fn tipped_inverted_state(theta: f64, phi: f64) -> DensityMatrix {
    let mut rho = DensityMatrix::zeros(2);
    let (s, c) = (0.5 * theta).sin_cos();
    rho.set(1, 1, C64::new(c * c, 0.0));
    rho.set(0, 0, C64::new(s * s, 0.0));
    let coh = C64::from_polar(0.5 * theta.sin(), phi);
    rho.set(1, 0, coh);
    rho.set(0, 1, coh.conj());
    rho
}

/// Random tipping angle with standard deviation 2/sqrt(n_cell) and
/// uniform azimuth.
pub fn initial_condition_2lvl(n_cell: f64, stream: &mut NoiseStream) -> DensityMatrix {
    assert!(n_cell > 0.0);
    let theta = 2.0 / n_cell.sqrt() * stream.normal();
    let phi = 2.0 * std::f64::consts::PI * stream.uniform();
    tipped_inverted_state(theta, phi)
}
