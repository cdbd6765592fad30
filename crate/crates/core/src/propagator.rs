//! Strang-split density-matrix step: half dissipation, Cayley coherent
//! step, half dissipation, then the stochastic kick.

use nalgebra::DMatrix;
use thiserror::Error;

use crate::constants::HBAR;
use crate::noise::{NoiseDiagnostics, NoiseModel, NoiseStream};
use crate::quantum::{
    dipole_expectation, hermitize_slice, DensityMatrix, QuantumSystem, MAX_LEVELS,
};
use crate::C64;

const MM: usize = MAX_LEVELS * MAX_LEVELS;
const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

/// Largest allowed dt times the fastest dissipative rate.
pub const MAX_RATE_STEP: f64 = 0.1;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PropagatorError {
    #[error("dt = {dt} s times fastest rate {rate} 1/s = {product} exceeds {MAX_RATE_STEP}")]
    StepTooLong { dt: f64, rate: f64, product: f64 },
    #[error("time step {0} s must be finite and positive")]
    BadStep(f64),
}

/// Solves (I + iA) X = (I - iA) for the n x n complex matrix A and returns
/// X row-major in the first n*n entries.
fn cayley_matrix(a: &[C64; MM], n: usize) -> [C64; MM] {
    let i = C64::new(0.0, 1.0);
    let mut m = [ZERO; MM];
    let mut x = [ZERO; MM];
    for r in 0..n {
        for c in 0..n {
            let delta = if r == c { ONE } else { ZERO };
            m[r * n + c] = delta + i * a[r * n + c];
            x[r * n + c] = delta - i * a[r * n + c];
        }
    }
    // Gauss-Jordan with partial pivoting.
    for col in 0..n {
        let mut piv = col;
        let mut best = m[col * n + col].norm_sqr();
        for r in (col + 1)..n {
            let v = m[r * n + col].norm_sqr();
            if v > best {
                best = v;
                piv = r;
            }
        }
        if piv != col {
            for c in 0..n {
                m.swap(col * n + c, piv * n + c);
                x.swap(col * n + c, piv * n + c);
            }
        }
        let inv = ONE / m[col * n + col];
        for c in 0..n {
            m[col * n + c] *= inv;
            x[col * n + c] *= inv;
        }
        for r in 0..n {
            if r == col {
                continue;
            }
            let f = m[r * n + col];
            if f == ZERO {
                continue;
            }
            for c in 0..n {
                let mc = m[col * n + c];
                let xc = x[col * n + c];
                m[r * n + c] -= f * mc;
                x[r * n + c] -= f * xc;
            }
        }
    }
    x
}

/// Cayley matrix for a real symmetric A: with S = I + A^2,
/// U = S^-1 (I - A^2) - 2i S^-1 A, all in real arithmetic.
#[inline(always)]
fn cayley_fixed<const N: usize>(a: &[[f64; N]; N]) -> [[C64; N]; N] {
    let mut s = [[0.0; N]; N];
    let mut re = [[0.0; N]; N];
    let mut im = [[0.0; N]; N];
    for r in 0..N {
        for c in 0..N {
            let mut a2 = 0.0;
            for k in 0..N {
                a2 += a[r][k] * a[k][c];
            }
            let delta = if r == c { 1.0 } else { 0.0 };
            s[r][c] = delta + a2;
            re[r][c] = delta - a2;
            im[r][c] = -2.0 * a[r][c];
        }
    }
    // S is symmetric positive definite: elimination without pivoting.
    for col in 0..N {
        let inv = 1.0 / s[col][col];
        for r in 0..N {
            if r == col {
                continue;
            }
            let f = s[r][col] * inv;
            if f == 0.0 {
                continue;
            }
            for c in 0..N {
                s[r][c] -= f * s[col][c];
                re[r][c] -= f * re[col][c];
                im[r][c] -= f * im[col][c];
            }
        }
    }
    let mut u = [[ZERO; N]; N];
    for r in 0..N {
        let inv = 1.0 / s[r][r];
        for c in 0..N {
            u[r][c] = C64::new(re[r][c] * inv, im[r][c] * inv);
        }
    }
    u
}

#[inline(always)]
fn apply_cayley_fixed<const N: usize>(rho: &mut [C64], a: &[[f64; N]; N]) {
    let u = cayley_fixed::<N>(a);
    let rho = &mut rho[..N * N];
    let mut m = [[ZERO; N]; N];
    for r in 0..N {
        m[r].copy_from_slice(&rho[r * N..(r + 1) * N]);
    }
    let mut tmp = [[ZERO; N]; N];
    for r in 0..N {
        for c in 0..N {
            let mut s = ZERO;
            for k in 0..N {
                s += u[r][k] * m[k][c];
            }
            tmp[r][c] = s;
        }
    }
    // The result is Hermitian: fill the upper triangle and mirror it.
    for r in 0..N {
        for c in r..N {
            let mut s = ZERO;
            for k in 0..N {
                s += tmp[r][k] * u[c][k].conj();
            }
            if r == c {
                rho[r * N + c] = C64::new(s.re, 0.0);
            } else {
                rho[r * N + c] = s;
                rho[c * N + r] = s.conj();
            }
        }
    }
}

/// rho <- U rho U^dagger with U the Cayley form of exp(-i a).
fn apply_cayley(rho: &mut [C64], n: usize, a: &[C64; MM]) {
    let u = cayley_matrix(a, n);
    let mut tmp = [ZERO; MM];
    for r in 0..n {
        for c in 0..n {
            let mut s = ZERO;
            for k in 0..n {
                s += u[r * n + k] * rho[k * n + c];
            }
            tmp[r * n + c] = s;
        }
    }
    for r in 0..n {
        for c in 0..n {
            let mut s = ZERO;
            for k in 0..n {
                s += tmp[r * n + k] * u[c * n + k].conj();
            }
            rho[r * n + c] = s;
        }
    }
}

/// Unitary Cayley step of length `dt` under Hamiltonian `h` (joule).
pub fn coherent_substep(rho: &DensityMatrix, h: &DMatrix<C64>, dt: f64) -> DensityMatrix {
    let n = rho.dim();
    assert!(n <= MAX_LEVELS && h.nrows() == n && h.ncols() == n);
    let mut a = [ZERO; MM];
    let scale = dt / (2.0 * HBAR);
    for r in 0..n {
        for c in 0..n {
            a[r * n + c] = h[(r, c)] * scale;
        }
    }
    let mut out = rho.clone();
    apply_cayley(out.data_mut(), n, &a);
    out
}

/// Population rate matrix: dp_i/dt = sum_k R_ik p_k.
fn rate_matrix(system: &QuantumSystem) -> DMatrix<f64> {
    let n = system.num_levels();
    DMatrix::from_fn(n, n, |i, k| {
        if i == k {
            -system.inverse_lifetime(i)
        } else {
            system.rate(i, k)
        }
    })
}

/// Exact evolution under the dissipator alone for time `dt`.
pub fn dissipative_substep(rho: &DensityMatrix, system: &QuantumSystem, dt: f64) -> DensityMatrix {
    let n = system.num_levels();
    let prop = (rate_matrix(system) * dt).exp();
    let mut out = rho.clone();
    for i in 0..n {
        let mut p = 0.0;
        for k in 0..n {
            p += prop[(i, k)] * rho.population(k);
        }
        out.set(i, i, C64::new(p, 0.0));
        for j in 0..n {
            if j != i {
                out.set(i, j, rho.get(i, j) * (-system.dephasing(i, j) * dt).exp());
            }
        }
    }
    out
}

/// Precomputed propagator for a fixed system and time step.
#[derive(Debug, Clone)]
pub struct LindbladPropagator {
    n: usize,
    dt: f64,
    /// Bare Hamiltonian times dt/(2 hbar).
    a0: [C64; MM],
    /// Dipole times dt/(2 hbar).
    a_dip: [f64; MM],
    pop_half: [f64; MM],
    coh_half: [f64; MM],
    dipole: DMatrix<f64>,
    carrier_density: f64,
}

impl LindbladPropagator {
    pub fn new(system: &QuantumSystem, dt: f64) -> Result<Self, PropagatorError> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(PropagatorError::BadStep(dt));
        }
        let rate = system.max_rate();
        if dt * rate >= MAX_RATE_STEP {
            return Err(PropagatorError::StepTooLong {
                dt,
                rate,
                product: dt * rate,
            });
        }
        let n = system.num_levels();
        let h0 = system.hamiltonian(0.0);
        let scale = dt / (2.0 * HBAR);
        let mut a0 = [ZERO; MM];
        let mut a_dip = [0.0; MM];
        let mut coh_half = [0.0; MM];
        let mut pop_half = [0.0; MM];
        let prop = (rate_matrix(system) * (0.5 * dt)).exp();
        for r in 0..n {
            for c in 0..n {
                a0[r * n + c] = h0[(r, c)] * scale;
                a_dip[r * n + c] = system.dipole(r, c) * scale;
                pop_half[r * n + c] = prop[(r, c)];
                coh_half[r * n + c] = if r == c {
                    1.0
                } else {
                    (-0.5 * system.dephasing(r, c) * dt).exp()
                };
            }
        }
        Ok(Self {
            n,
            dt,
            a0,
            a_dip,
            pop_half,
            coh_half,
            dipole: DMatrix::from_fn(n, n, |r, c| system.dipole(r, c)),
            carrier_density: system.carrier_density(),
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn num_levels(&self) -> usize {
        self.n
    }

    /// Exact dissipative evolution over dt/2, in place.
    pub fn dissipative_half(&self, rho: &mut [C64]) {
        let n = self.n;
        let mut pops = [0.0; MAX_LEVELS];
        for (i, p) in pops.iter_mut().enumerate().take(n) {
            *p = rho[i * n + i].re;
        }
        for i in 0..n {
            let mut p = 0.0;
            for k in 0..n {
                p += self.pop_half[i * n + k] * pops[k];
            }
            rho[i * n + i] = C64::new(p, 0.0);
            for j in 0..n {
                if j != i {
                    rho[i * n + j] *= self.coh_half[i * n + j];
                }
            }
        }
    }

    /// Cayley step over the full dt at field `e_z`, in place.
    pub fn coherent(&self, rho: &mut [C64], e_z: f64) {
        match self.n {
            1 => {}
            2 => self.coherent_fixed::<2>(rho, e_z),
            3 => self.coherent_fixed::<3>(rho, e_z),
            _ => self.coherent_general(rho, e_z),
        }
    }

    fn coherent_fixed<const N: usize>(&self, rho: &mut [C64], e_z: f64) {
        let mut a = [[0.0; N]; N];
        for r in 0..N {
            for c in 0..N {
                let k = r * N + c;
                a[r][c] = self.a0[k].re - self.a_dip[k] * e_z;
            }
        }
        apply_cayley_fixed::<N>(rho, &a);
    }

    fn coherent_general(&self, rho: &mut [C64], e_z: f64) {
        let mut a = self.a0;
        let nn = self.n * self.n;
        for k in 0..nn {
            a[k].re -= self.a_dip[k] * e_z;
        }
        apply_cayley(rho, self.n, &a);
    }

    /// Deterministic part of one step.
    pub fn drift_step(&self, rho: &mut [C64], e_z: f64) {
        self.dissipative_half(rho);
        self.coherent(rho, e_z);
        self.dissipative_half(rho);
    }

    /// One full step including the noise kick; returns the polarization.
    pub fn full_step(&self, rho: &mut [C64], e_z: f64, kick: Option<NoiseKick<'_>>) -> f64 {
        self.drift_step(rho, e_z);
        if let Some(k) = kick {
            k.model
                .kick(rho, e_z, k.n_cell, self.dt, k.stream, k.diagnostics);
        }
        hermitize_slice(rho, self.n);
        self.polarization(rho)
    }

    pub fn polarization(&self, rho: &[C64]) -> f64 {
        self.carrier_density * dipole_expectation(&self.dipole, rho, self.n)
    }
}

/// Borrowed noise context for one cell step.
pub struct NoiseKick<'a> {
    pub model: &'a NoiseModel,
    pub stream: &'a mut NoiseStream,
    pub n_cell: f64,
    pub diagnostics: &'a mut NoiseDiagnostics,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::QuantumSystemSpec;
    use approx::assert_relative_eq;

    fn two_level(rate: f64, gp: f64) -> QuantumSystem {
        let mut spec = QuantumSystemSpec::empty(2, 1e23, 1e-6);
        spec.energies = vec![
            0.0,
            crate::constants::HBAR * 2.0 * std::f64::consts::PI * 5e12,
        ];
        spec.dipole[(0, 1)] = 1e-29;
        spec.dipole[(1, 0)] = 1e-29;
        spec.rates[(0, 1)] = rate;
        spec.pure_dephasing[(0, 1)] = gp;
        spec.pure_dephasing[(1, 0)] = gp;
        QuantumSystem::new(spec).unwrap()
    }

    #[test]
    fn cayley_is_unitary_and_matches_rabi() {
        // Resonant drive in the rotating frame reduces to H = -mu E sigma_x.
        let mut spec = QuantumSystemSpec::empty(2, 1.0, 1.0);
        spec.dipole[(0, 1)] = 1e-29;
        spec.dipole[(1, 0)] = 1e-29;
        let s = QuantumSystem::new(spec).unwrap();
        let e = 1e6;
        let omega_r = 2.0 * 1e-29 * e / HBAR;
        let period = 2.0 * std::f64::consts::PI / omega_r;
        let steps = 20_000;
        let dt = period / steps as f64 / 2.0;
        let prop = LindbladPropagator::new(&s, dt).unwrap();
        let mut rho = DensityMatrix::pure_level(2, 0);
        for _ in 0..steps {
            prop.coherent(rho.data_mut(), e);
        }
        // Half a Rabi period inverts the population.
        assert_relative_eq!(rho.population(1), 1.0, epsilon = 1e-6);
        assert_relative_eq!(rho.trace().re, 1.0, epsilon = 1e-10);
        assert!(rho.min_eigenvalue() > -1e-12);
    }

    #[test]
    fn dissipative_half_matches_exact() {
        let s = two_level(1e11, 1e12);
        let dt = 1e-14;
        let prop = LindbladPropagator::new(&s, dt).unwrap();
        let mut rho = DensityMatrix::from_populations(&[0.3, 0.7]);
        rho.set(0, 1, C64::new(0.1, 0.2));
        rho.set(1, 0, C64::new(0.1, -0.2));
        let exact = dissipative_substep(&rho, &s, dt);
        let mut work = rho.clone();
        prop.dissipative_half(work.data_mut());
        prop.dissipative_half(work.data_mut());
        for (a, b) in work.data().iter().zip(exact.data()) {
            assert!((a - b).norm() < 1e-14);
        }
        let decay = (-1e11f64 * dt).exp();
        assert_relative_eq!(exact.population(1), 0.7 * decay, max_relative = 1e-12);
    }

    #[test]
    fn rejects_long_step() {
        let s = two_level(1e13, 1e13);
        assert!(matches!(
            LindbladPropagator::new(&s, 1e-14),
            Err(PropagatorError::StepTooLong { .. })
        ));
    }

    #[test]
    fn free_coherent_substep_agrees_with_fast_path() {
        let s = two_level(0.0, 0.0);
        let dt = 2e-15;
        let prop = LindbladPropagator::new(&s, dt).unwrap();
        let mut rho = DensityMatrix::from_populations(&[0.6, 0.4]);
        rho.set(0, 1, C64::new(0.2, 0.1));
        rho.set(1, 0, C64::new(0.2, -0.1));
        let slow = coherent_substep(&rho, &s.hamiltonian(3e7), dt);
        let mut fast = rho.clone();
        prop.coherent(fast.data_mut(), 3e7);
        for (a, b) in fast.data().iter().zip(slow.data()) {
            assert!((a - b).norm() < 1e-15);
        }
    }

    #[test]
    fn fixed_size_paths_match_general_solver() {
        for n in [3usize, 4] {
            let mut spec = QuantumSystemSpec::empty(n, 1e22, 1e-8);
            for i in 0..n {
                spec.energies[i] = 1e-21 * i as f64;
            }
            spec.dipole[(0, 1)] = 2e-28;
            spec.dipole[(1, 0)] = 2e-28;
            spec.tunneling[(0, n - 1)] = 3e12;
            spec.tunneling[(n - 1, 0)] = 3e12;
            let s = QuantumSystem::new(spec).unwrap();
            let dt = 1e-14;
            let prop = LindbladPropagator::new(&s, dt).unwrap();
            let pops: Vec<f64> = (0..n).map(|k| (k + 1) as f64).collect();
            let total: f64 = pops.iter().sum();
            let mut rho = DensityMatrix::from_populations(
                &pops.iter().map(|p| p / total).collect::<Vec<_>>(),
            );
            rho.set(0, 1, C64::new(0.05, -0.02));
            rho.set(1, 0, C64::new(0.05, 0.02));
            let slow = coherent_substep(&rho, &s.hamiltonian(2e6), dt);
            let mut fast = rho.clone();
            prop.coherent(fast.data_mut(), 2e6);
            for (a, b) in fast.data().iter().zip(slow.data()) {
                assert!((a - b).norm() < 1e-15, "n = {n}");
            }
        }
    }
}
