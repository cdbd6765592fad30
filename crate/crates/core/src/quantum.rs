//! Level structure, Hamiltonian and dissipator of the active medium.
//!
//! Rate convention: `rate(i, j)` is the scattering rate from level `j` into
//! level `i`. The inverse lifetime of level `j` is the sum of all rates
//! leaving it.

use nalgebra::DMatrix;
use thiserror::Error;

use crate::constants::HBAR;
use crate::C64;

/// Largest level count supported by the stack-allocated inner loops.
pub const MAX_LEVELS: usize = 8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("level count {0} outside 1..={MAX_LEVELS}")]
    LevelCount(usize),
    #[error("{what} must be {n}x{n}, got {rows}x{cols}")]
    Shape {
        what: &'static str,
        n: usize,
        rows: usize,
        cols: usize,
    },
    #[error("{what} is not symmetric at ({i}, {j})")]
    NotSymmetric {
        what: &'static str,
        i: usize,
        j: usize,
    },
    #[error("{what} has a nonzero diagonal entry at level {i}")]
    Diagonal { what: &'static str, i: usize },
    #[error("{what} entry ({i}, {j}) = {value} must be finite and non-negative")]
    Negative {
        what: &'static str,
        i: usize,
        j: usize,
        value: f64,
    },
    #[error("lifetime {0} s must be positive")]
    Lifetime(f64),
    #[error("{what} = {value} must be finite and positive")]
    NotPositive { what: &'static str, value: f64 },
    #[error("energy of level {0} is not finite")]
    Energy(usize),
}

/// Dense density matrix stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    n: usize,
    data: Vec<C64>,
}

impl DensityMatrix {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![C64::new(0.0, 0.0); n * n],
        }
    }

    /// All population in `level`.
    pub fn pure_level(n: usize, level: usize) -> Self {
        let mut rho = Self::zeros(n);
        rho.set(level, level, C64::new(1.0, 0.0));
        rho
    }

    pub fn from_populations(pops: &[f64]) -> Self {
        let mut rho = Self::zeros(pops.len());
        for (i, &p) in pops.iter().enumerate() {
            rho.set(i, i, C64::new(p, 0.0));
        }
        rho
    }

    pub fn from_matrix(m: &DMatrix<C64>) -> Self {
        assert_eq!(m.nrows(), m.ncols(), "density matrix must be square");
        let n = m.nrows();
        let mut rho = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                rho.set(i, j, m[(i, j)]);
            }
        }
        rho
    }

    pub fn to_matrix(&self) -> DMatrix<C64> {
        DMatrix::from_fn(self.n, self.n, |i, j| self.get(i, j))
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: C64) {
        self.data[i * self.n + j] = v;
    }

    pub fn data(&self) -> &[C64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [C64] {
        &mut self.data
    }

    pub fn population(&self, i: usize) -> f64 {
        self.get(i, i).re
    }

    pub fn trace(&self) -> C64 {
        (0..self.n).map(|i| self.get(i, i)).sum()
    }

    /// Largest |rho_ij - conj(rho_ji)|.
    pub fn hermiticity_error(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.n {
            for j in i..self.n {
                worst = worst.max((self.get(i, j) - self.get(j, i).conj()).norm());
            }
        }
        worst
    }

    /// Replaces the matrix by its Hermitian part.
    pub fn hermitize(&mut self) {
        hermitize_slice(&mut self.data, self.n);
    }

    /// Smallest eigenvalue of the Hermitian part.
    pub fn min_eigenvalue(&self) -> f64 {
        let m = self.to_matrix();
        let h = (&m + m.adjoint()) * C64::new(0.5, 0.0);
        h.symmetric_eigenvalues()
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }

    pub fn is_finite(&self) -> bool {
        self.data
            .iter()
            .all(|z| z.re.is_finite() && z.im.is_finite())
    }
}

pub(crate) fn hermitize_slice(data: &mut [C64], n: usize) {
    for i in 0..n {
        data[i * n + i].im = 0.0;
        for j in (i + 1)..n {
            let avg = (data[i * n + j] + data[j * n + i].conj()) * 0.5;
            data[i * n + j] = avg;
            data[j * n + i] = avg.conj();
        }
    }
}

/// Raw inputs of a level scheme. Energies in joule, dipoles in C m,
/// tunneling couplings and rates in 1/s (tunneling as angular frequency).
#[derive(Debug, Clone, PartialEq)]
pub struct QuantumSystemSpec {
    pub energies: Vec<f64>,
    pub dipole: DMatrix<f64>,
    pub tunneling: DMatrix<f64>,
    pub rates: DMatrix<f64>,
    pub pure_dephasing: DMatrix<f64>,
    pub carrier_density: f64,
    pub period_length: f64,
}

impl QuantumSystemSpec {
    /// Spec with `n` levels and every coupling zero.
    pub fn empty(n: usize, carrier_density: f64, period_length: f64) -> Self {
        Self {
            energies: vec![0.0; n],
            dipole: DMatrix::zeros(n, n),
            tunneling: DMatrix::zeros(n, n),
            rates: DMatrix::zeros(n, n),
            pure_dephasing: DMatrix::zeros(n, n),
            carrier_density,
            period_length,
        }
    }
}

/// Validated level scheme with derived dephasing rates.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantumSystem {
    energies: Vec<f64>,
    dipole: DMatrix<f64>,
    tunneling: DMatrix<f64>,
    rates: DMatrix<f64>,
    pure_dephasing: DMatrix<f64>,
    carrier_density: f64,
    period_length: f64,
    dephasing: DMatrix<f64>,
}

fn check_shape(what: &'static str, m: &DMatrix<f64>, n: usize) -> Result<(), ModelError> {
    if m.nrows() != n || m.ncols() != n {
        return Err(ModelError::Shape {
            what,
            n,
            rows: m.nrows(),
            cols: m.ncols(),
        });
    }
    Ok(())
}

fn check_symmetric(what: &'static str, m: &DMatrix<f64>) -> Result<(), ModelError> {
    let n = m.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            if m[(i, j)] != m[(j, i)] {
                return Err(ModelError::NotSymmetric { what, i, j });
            }
        }
    }
    Ok(())
}

fn check_nonnegative(what: &'static str, m: &DMatrix<f64>) -> Result<(), ModelError> {
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            let value = m[(i, j)];
            if !value.is_finite() || value < 0.0 {
                return Err(ModelError::Negative { what, i, j, value });
            }
        }
    }
    Ok(())
}

fn check_zero_diagonal(what: &'static str, m: &DMatrix<f64>) -> Result<(), ModelError> {
    for i in 0..m.nrows() {
        if m[(i, i)] != 0.0 {
            return Err(ModelError::Diagonal { what, i });
        }
    }
    Ok(())
}

impl QuantumSystem {
    pub fn new(spec: QuantumSystemSpec) -> Result<Self, ModelError> {
        let n = spec.energies.len();
        if n == 0 || n > MAX_LEVELS {
            return Err(ModelError::LevelCount(n));
        }
        if let Some(i) = spec.energies.iter().position(|e| !e.is_finite()) {
            return Err(ModelError::Energy(i));
        }
        check_shape("dipole matrix", &spec.dipole, n)?;
        check_shape("tunneling matrix", &spec.tunneling, n)?;
        check_shape("rate matrix", &spec.rates, n)?;
        check_shape("pure dephasing matrix", &spec.pure_dephasing, n)?;
        check_symmetric("dipole matrix", &spec.dipole)?;
        check_symmetric("tunneling matrix", &spec.tunneling)?;
        check_symmetric("pure dephasing matrix", &spec.pure_dephasing)?;
        check_zero_diagonal("tunneling matrix", &spec.tunneling)?;
        check_zero_diagonal("rate matrix", &spec.rates)?;
        check_nonnegative("rate matrix", &spec.rates)?;
        check_nonnegative("pure dephasing matrix", &spec.pure_dephasing)?;
        for (what, value) in [
            ("carrier density", spec.carrier_density),
            ("period length", spec.period_length),
        ] {
            if !(value.is_finite() && value > 0.0) {
                return Err(ModelError::NotPositive { what, value });
            }
        }
        let e_min = spec.energies.iter().copied().fold(f64::INFINITY, f64::min);
        let energies: Vec<f64> = spec.energies.iter().map(|e| e - e_min).collect();

        let inv_tau: Vec<f64> = (0..n)
            .map(|j| (0..n).filter(|&i| i != j).map(|i| spec.rates[(i, j)]).sum())
            .collect();
        let dephasing = DMatrix::from_fn(n, n, |i, j| {
            if i == j {
                0.0
            } else {
                0.5 * (inv_tau[i] + inv_tau[j]) + spec.pure_dephasing[(i, j)]
            }
        });
        Ok(Self {
            energies,
            dipole: spec.dipole,
            tunneling: spec.tunneling,
            rates: spec.rates,
            pure_dephasing: spec.pure_dephasing,
            carrier_density: spec.carrier_density,
            period_length: spec.period_length,
            dephasing,
        })
    }

    pub fn num_levels(&self) -> usize {
        self.energies.len()
    }

    /// Level energy in joule, lowest level at zero.
    pub fn energy(&self, i: usize) -> f64 {
        self.energies[i]
    }

    pub fn dipole(&self, i: usize, j: usize) -> f64 {
        self.dipole[(i, j)]
    }

    pub fn tunneling(&self, i: usize, j: usize) -> f64 {
        self.tunneling[(i, j)]
    }

    /// Scattering rate from level `j` into level `i`.
    pub fn rate(&self, i: usize, j: usize) -> f64 {
        self.rates[(i, j)]
    }

    pub fn pure_dephasing(&self, i: usize, j: usize) -> f64 {
        self.pure_dephasing[(i, j)]
    }

    /// Total dephasing rate of the coherence between `i` and `j`.
    pub fn dephasing(&self, i: usize, j: usize) -> f64 {
        self.dephasing[(i, j)]
    }

    pub fn inverse_lifetime(&self, j: usize) -> f64 {
        (0..self.num_levels())
            .filter(|&i| i != j)
            .map(|i| self.rates[(i, j)])
            .sum()
    }

    /// Lifetime of level `j`, infinite when nothing leaves it.
    pub fn lifetime(&self, j: usize) -> f64 {
        let r = self.inverse_lifetime(j);
        if r == 0.0 {
            f64::INFINITY
        } else {
            1.0 / r
        }
    }

    pub fn carrier_density(&self) -> f64 {
        self.carrier_density
    }

    pub fn period_length(&self) -> f64 {
        self.period_length
    }

    /// Largest rate appearing in the dissipator.
    pub fn max_rate(&self) -> f64 {
        let n = self.num_levels();
        let mut m = 0.0f64;
        for i in 0..n {
            m = m.max(self.inverse_lifetime(i));
            for j in 0..n {
                m = m.max(self.dephasing[(i, j)]);
            }
        }
        m
    }

    /// True when `i` lies above `j`; ties go to the higher index.
    pub fn is_above(&self, i: usize, j: usize) -> bool {
        match self.energies[i].partial_cmp(&self.energies[j]) {
            Some(std::cmp::Ordering::Greater) => true,
            Some(std::cmp::Ordering::Less) => false,
            _ => i > j,
        }
    }

    /// H = diag(energies) - hbar * tunneling - dipole * e_z, in joule.
    pub fn hamiltonian(&self, e_z: f64) -> DMatrix<C64> {
        let n = self.num_levels();
        DMatrix::from_fn(n, n, |i, j| {
            let mut h = -HBAR * self.tunneling[(i, j)] - self.dipole[(i, j)] * e_z;
            if i == j {
                h += self.energies[i];
            }
            C64::new(h, 0.0)
        })
    }

    /// Dissipative part of d(rho)/dt.
    pub fn dissipator(&self, rho: &DensityMatrix) -> DMatrix<C64> {
        let n = self.num_levels();
        DMatrix::from_fn(n, n, |i, j| {
            if i == j {
                let mut d = 0.0;
                for k in 0..n {
                    if k != i {
                        d += self.rates[(i, k)] * rho.population(k)
                            - self.rates[(k, i)] * rho.population(i);
                    }
                }
                C64::new(d, 0.0)
            } else {
                -rho.get(i, j) * self.dephasing[(i, j)]
            }
        })
    }

    /// Full drift d(rho)/dt at field `e_z`.
    pub fn drift(&self, rho: &DensityMatrix, e_z: f64) -> DMatrix<C64> {
        let h = self.hamiltonian(e_z);
        let r = rho.to_matrix();
        let comm = &h * &r - &r * &h;
        comm * C64::new(0.0, -1.0 / HBAR) + self.dissipator(rho)
    }

    /// Macroscopic polarization n3D tr(mu rho) in C/m^2.
    pub fn polarization(&self, rho: &DensityMatrix) -> f64 {
        self.carrier_density * dipole_expectation(&self.dipole, rho.data(), self.num_levels())
    }
}

#[inline]
pub(crate) fn dipole_expectation(dipole: &DMatrix<f64>, rho: &[C64], n: usize) -> f64 {
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            let mu = dipole[(i, j)];
            if mu != 0.0 {
                s += mu * rho[j * n + i].re;
            }
        }
    }
    s
}

/// gamma_ij = (1/tau_i + 1/tau_j)/2 + gamma_p. Infinite lifetimes are allowed.
pub fn dephasing_rate(tau_i: f64, tau_j: f64, gamma_p: f64) -> Result<f64, ModelError> {
    for tau in [tau_i, tau_j] {
        if tau.is_nan() || tau <= 0.0 {
            return Err(ModelError::Lifetime(tau));
        }
    }
    if !(gamma_p.is_finite() && gamma_p >= 0.0) {
        return Err(ModelError::Negative {
            what: "pure dephasing",
            i: 0,
            j: 0,
            value: gamma_p,
        });
    }
    Ok(0.5 * (1.0 / tau_i + 1.0 / tau_j) + gamma_p)
}
