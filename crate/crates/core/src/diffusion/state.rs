//! c-number state vector and the parameter bundle of the three-level system.

use serde::{Deserialize, Serialize};

use crate::constants::HBAR;
use crate::quantum::QuantumSystem;
use crate::C64;

/// Canonical level indices: injector 1', lower laser level 2, upper 3.
pub const L1P: usize = 0;
pub const L2: usize = 1;
pub const L3: usize = 2;

/// Component positions in the 11-vector
/// (a*, a, s23*, s31'*, s21'*, s33, s22, s1'1', s21', s31', s23).
pub mod comp {
    pub const A_CONJ: usize = 0;
    pub const A: usize = 1;
    pub const S23_CONJ: usize = 2;
    pub const S31P_CONJ: usize = 3;
    pub const S21P_CONJ: usize = 4;
    pub const S33: usize = 5;
    pub const S22: usize = 6;
    pub const S1P1P: usize = 7;
    pub const S21P: usize = 8;
    pub const S31P: usize = 9;
    pub const S23: usize = 10;
}

pub const NUM_COMPONENTS: usize = 11;

pub const COMPONENT_NAMES: [&str; NUM_COMPONENTS] = [
    "a*", "a", "s23*", "s31'*", "s21'*", "s33", "s22", "s1'1'", "s21'", "s31'", "s23",
];

/// Matter components with their operator |row><col| in canonical levels.
pub const MATTER_OPERATORS: [(usize, (usize, usize)); 9] = [
    (comp::S23_CONJ, (L3, L2)),
    (comp::S31P_CONJ, (L1P, L3)),
    (comp::S21P_CONJ, (L1P, L2)),
    (comp::S33, (L3, L3)),
    (comp::S22, (L2, L2)),
    (comp::S1P1P, (L1P, L1P)),
    (comp::S21P, (L2, L1P)),
    (comp::S31P, (L3, L1P)),
    (comp::S23, (L2, L3)),
];

/// Component index of the operator |i><j|.
pub fn component_of(i: usize, j: usize) -> usize {
    MATTER_OPERATORS
        .iter()
        .find(|(_, op)| *op == (i, j))
        .map(|(c, _)| *c)
        .expect("every 3x3 matrix unit is a component")
}

/// Which system levels play the roles 1', 2 and 3.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Topology {
    pub injector: usize,
    pub lower: usize,
    pub upper: usize,
}

impl Topology {
    /// System index of canonical level `c`.
    pub fn level(&self, c: usize) -> usize {
        match c {
            L1P => self.injector,
            L2 => self.lower,
            L3 => self.upper,
            _ => panic!("canonical level {c} out of range"),
        }
    }
}

/// Rates, dephasing and couplings in canonical level order.
#[derive(Debug, Clone, PartialEq)]
pub struct ThreeLevelParams {
    /// Light-matter coupling multiplying the field components.
    pub g: f64,
    /// Tunneling coupling between 1' and 3 (rad/s).
    pub omega: f64,
    /// `rates[i][j]`: rate from j into i.
    pub rates: [[f64; 3]; 3],
    /// Total dephasing rates.
    pub gamma: [[f64; 3]; 3],
    /// Level energies over hbar (rad/s).
    pub energies: [f64; 3],
    pub kappa: f64,
    pub n_th: f64,
}

impl ThreeLevelParams {
    /// Parameters of `system` with g = 1, so the field components carry the
    /// coupling frequency directly.
    pub fn from_system(system: &QuantumSystem, topo: Topology) -> Self {
        let mut rates = [[0.0; 3]; 3];
        let mut gamma = [[0.0; 3]; 3];
        let mut energies = [0.0; 3];
        for i in 0..3 {
            energies[i] = system.energy(topo.level(i)) / HBAR;
            for j in 0..3 {
                rates[i][j] = system.rate(topo.level(i), topo.level(j));
                gamma[i][j] = system.dephasing(topo.level(i), topo.level(j));
            }
        }
        Self {
            g: 1.0,
            omega: system.tunneling(topo.injector, topo.upper),
            rates,
            gamma,
            energies,
            kappa: 0.0,
            n_th: 0.0,
        }
    }

    #[inline]
    pub fn r(&self, i: usize, j: usize) -> f64 {
        self.rates[i][j]
    }

    pub fn inv_tau(&self, j: usize) -> f64 {
        (0..3).filter(|&i| i != j).map(|i| self.rates[i][j]).sum()
    }
}

/// Semiclassical replacement for g a: -mu_23 E / hbar.
pub fn semiclassical_field(system: &QuantumSystem, topo: Topology, e_z: f64) -> f64 {
    -system.dipole(topo.upper, topo.lower) * e_z / HBAR
}

/// The 11-component c-number vector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CNumberState {
    pub v: [C64; NUM_COMPONENTS],
}

impl CNumberState {
    pub fn zero() -> Self {
        Self {
            v: [C64::new(0.0, 0.0); NUM_COMPONENTS],
        }
    }

    /// State of a density matrix in system order, with field amplitude `a`.
    pub fn from_density(rho: &[C64], topo: Topology, a: C64) -> Self {
        let n = 3;
        let mut s = Self::zero();
        for &(c, (i, j)) in MATTER_OPERATORS.iter() {
            let (si, sj) = (topo.level(i), topo.level(j));
            s.v[c] = rho[sj * n + si];
        }
        s.v[comp::A] = a;
        s.v[comp::A_CONJ] = a.conj();
        s
    }

    /// Density matrix in canonical order implied by the matter components.
    pub fn canonical_density(&self) -> [[C64; 3]; 3] {
        let mut rho = [[C64::new(0.0, 0.0); 3]; 3];
        for &(c, (i, j)) in MATTER_OPERATORS.iter() {
            rho[j][i] = self.v[c];
        }
        rho
    }

    /// True when starred components are conjugates and populations real.
    pub fn is_physical(&self, tol: f64) -> bool {
        use comp::*;
        let pairs = [
            (A_CONJ, A),
            (S23_CONJ, S23),
            (S31P_CONJ, S31P),
            (S21P_CONJ, S21P),
        ];
        pairs
            .iter()
            .all(|&(x, y)| (self.v[x] - self.v[y].conj()).norm() <= tol)
            && [S33, S22, S1P1P].iter().all(|&p| self.v[p].im.abs() <= tol)
    }
}

impl std::ops::Index<usize> for CNumberState {
    type Output = C64;
    fn index(&self, i: usize) -> &C64 {
        &self.v[i]
    }
}
