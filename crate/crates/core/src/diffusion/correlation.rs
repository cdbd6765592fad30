//! Quantum noise correlations and the generalized Einstein relation.
//!
//! Two independent routes to diffusion coefficients live here: closed-form
//! operator correlations, and a direct evaluation of
//! 2D = d<AB>/dt - <M_A B> - <A M_B> from the master equation.

use std::str::FromStr;

use nalgebra::Matrix3;
use thiserror::Error;

use super::state::{
    component_of, CNumberState, ThreeLevelParams, L1P, L2, L3, MATTER_OPERATORS, NUM_COMPONENTS,
};
use crate::C64;

type M3 = Matrix3<C64>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CorrelationPair {
    FieldDagField,
    FieldFieldDag,
    Coh23DagCoh23,
    Coh23Coh23Dag,
    Coh31DagCoh31,
    Coh31Coh31Dag,
    Coh21DagCoh21,
    Coh21Coh21Dag,
    Pop33,
    Pop22,
    Pop11,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("unknown correlation pair `{0}`")]
pub struct UnknownPair(pub String);

impl CorrelationPair {
    pub const ALL: [CorrelationPair; 11] = [
        Self::FieldDagField,
        Self::FieldFieldDag,
        Self::Coh23DagCoh23,
        Self::Coh23Coh23Dag,
        Self::Coh31DagCoh31,
        Self::Coh31Coh31Dag,
        Self::Coh21DagCoh21,
        Self::Coh21Coh21Dag,
        Self::Pop33,
        Self::Pop22,
        Self::Pop11,
    ];

    pub fn label(&self) -> &'static str {
        match self {
            Self::FieldDagField => "Fa+Fa",
            Self::FieldFieldDag => "FaFa+",
            Self::Coh23DagCoh23 => "F23+F23",
            Self::Coh23Coh23Dag => "F23F23+",
            Self::Coh31DagCoh31 => "F31'+F31'",
            Self::Coh31Coh31Dag => "F31'F31'+",
            Self::Coh21DagCoh21 => "F21'+F21'",
            Self::Coh21Coh21Dag => "F21'F21'+",
            Self::Pop33 => "F33F33",
            Self::Pop22 => "F22F22",
            Self::Pop11 => "F1'1'F1'1'",
        }
    }

    /// Operator pair (A, B) whose Einstein relation gives this correlation,
    /// as matrix units (row, col) in canonical levels.
    pub fn operators(&self) -> Option<((usize, usize), (usize, usize))> {
        Some(match self {
            Self::FieldDagField | Self::FieldFieldDag => return None,
            Self::Coh23DagCoh23 => ((L3, L2), (L2, L3)),
            Self::Coh23Coh23Dag => ((L2, L3), (L3, L2)),
            Self::Coh31DagCoh31 => ((L1P, L3), (L3, L1P)),
            Self::Coh31Coh31Dag => ((L3, L1P), (L1P, L3)),
            Self::Coh21DagCoh21 => ((L1P, L2), (L2, L1P)),
            Self::Coh21Coh21Dag => ((L2, L1P), (L1P, L2)),
            Self::Pop33 => ((L3, L3), (L3, L3)),
            Self::Pop22 => ((L2, L2), (L2, L2)),
            Self::Pop11 => ((L1P, L1P), (L1P, L1P)),
        })
    }
}

impl FromStr for CorrelationPair {
    type Err = UnknownPair;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .iter()
            .copied()
            .find(|p| p.label() == s)
            .ok_or_else(|| UnknownPair(s.to_string()))
    }
}

/// Closed-form coefficient of delta(t - t') for `pair`.
pub fn quantum_correlation(pair: CorrelationPair, s: &CNumberState, p: &ThreeLevelParams) -> C64 {
    use super::state::comp::{S1P1P, S22, S33};
    let (s33, s22, s11) = (s[S33], s[S22], s[S1P1P]);
    let r = |i, j| p.r(i, j);
    let g = |i: usize, j: usize| p.gamma[i][j];
    let it = |j| p.inv_tau(j);
    match pair {
        CorrelationPair::FieldDagField => C64::new(p.kappa * p.n_th, 0.0),
        CorrelationPair::FieldFieldDag => C64::new(p.kappa * (p.n_th + 1.0), 0.0),
        CorrelationPair::Coh23DagCoh23 => {
            (2.0 * g(L2, L3) - it(L3)) * s33 + r(L3, L2) * s22 + r(L3, L1P) * s11
        }
        CorrelationPair::Coh23Coh23Dag => {
            r(L2, L3) * s33 + (2.0 * g(L2, L3) - it(L2)) * s22 + r(L2, L1P) * s11
        }
        CorrelationPair::Coh31DagCoh31 => {
            r(L1P, L3) * s33 + r(L1P, L2) * s22 + (2.0 * g(L1P, L3) - it(L1P)) * s11
        }
        CorrelationPair::Coh31Coh31Dag => {
            (2.0 * g(L1P, L3) - it(L3)) * s33 + r(L3, L2) * s22 + r(L3, L1P) * s11
        }
        CorrelationPair::Coh21DagCoh21 => {
            r(L1P, L3) * s33 + r(L1P, L2) * s22 + (2.0 * g(L1P, L2) - it(L1P)) * s11
        }
        CorrelationPair::Coh21Coh21Dag => {
            r(L2, L3) * s33 + (2.0 * g(L1P, L2) - it(L2)) * s22 + r(L2, L1P) * s11
        }
        CorrelationPair::Pop33 => it(L3) * s33 + r(L3, L2) * s22 + r(L3, L1P) * s11,
        CorrelationPair::Pop22 => r(L2, L3) * s33 + it(L2) * s22 + r(L2, L1P) * s11,
        CorrelationPair::Pop11 => r(L1P, L3) * s33 + r(L1P, L2) * s22 + it(L1P) * s11,
    }
}

fn unit(i: usize, j: usize) -> M3 {
    let mut m = M3::zeros();
    m[(i, j)] = C64::new(1.0, 0.0);
    m
}

/// Hamiltonian over hbar in canonical levels with a classical field:
/// energies + g a |3><2| + g a* |2><3| - Omega (|1'><3| + |3><1'|).
fn hamiltonian(p: &ThreeLevelParams, ga: C64, gac: C64) -> M3 {
    let mut h = M3::zeros();
    for k in 0..3 {
        h[(k, k)] = C64::new(p.energies[k], 0.0);
    }
    h[(L3, L2)] += ga;
    h[(L2, L3)] += gac;
    h[(L1P, L3)] -= C64::new(p.omega, 0.0);
    h[(L3, L1P)] -= C64::new(p.omega, 0.0);
    h
}

fn dissipator(rho: &M3, p: &ThreeLevelParams) -> M3 {
    let mut d = M3::zeros();
    for i in 0..3 {
        for j in 0..3 {
            if i == j {
                let mut v = C64::new(0.0, 0.0);
                for k in 0..3 {
                    if k != i {
                        v += rho[(k, k)] * p.r(i, k) - rho[(i, i)] * p.r(k, i);
                    }
                }
                d[(i, i)] = v;
            } else {
                d[(i, j)] = -rho[(i, j)] * p.gamma[i][j];
            }
        }
    }
    d
}

/// d(rho)/dt.
fn lindblad(rho: &M3, p: &ThreeLevelParams, ga: C64, gac: C64) -> M3 {
    let h = hamiltonian(p, ga, gac);
    let i = C64::new(0.0, 1.0);
    (h * rho - rho * h) * (-i) + dissipator(rho, p)
}

/// Heisenberg drift of operator `x`, defined by tr(M_x rho) = tr(x L(rho)).
fn heisenberg(x: &M3, p: &ThreeLevelParams, ga: C64, gac: C64) -> M3 {
    let mut m = M3::zeros();
    for a in 0..3 {
        for b in 0..3 {
            m[(b, a)] = (x * lindblad(&unit(a, b), p, ga, gac)).trace();
        }
    }
    m
}

fn canonical_rho(s: &CNumberState) -> M3 {
    let c = s.canonical_density();
    M3::from_fn(|i, j| c[i][j])
}

fn operator_of(component: usize) -> M3 {
    let (_, (i, j)) = MATTER_OPERATORS
        .iter()
        .find(|(c, _)| *c == component)
        .copied()
        .expect("matter component");
    unit(i, j)
}

/// Product of two c-number components read as operators in chosen order.
fn ordered(x: usize, y: usize) -> M3 {
    let (a, b) = if x <= y { (x, y) } else { (y, x) };
    operator_of(a) * operator_of(b)
}

/// c-number diffusion coefficients of the matter block evaluated from the
/// master equation with chosen-order operator correspondence. Rows and
/// columns outside the matter block are left zero.
pub fn ordered_einstein_matrix(
    s: &CNumberState,
    p: &ThreeLevelParams,
) -> [[C64; NUM_COMPONENTS]; NUM_COMPONENTS] {
    use super::state::comp::{A, A_CONJ};
    let ga = s[A] * p.g;
    let gac = s[A_CONJ] * p.g;
    let rho = canonical_rho(s);
    let l_rho = lindblad(&rho, p, ga, gac);
    let mut out = [[C64::new(0.0, 0.0); NUM_COMPONENTS]; NUM_COMPONENTS];
    let drift_of = |y: usize| heisenberg(&operator_of(y), p, ga, gac);
    let comps: Vec<usize> = MATTER_OPERATORS.iter().map(|(c, _)| *c).collect();
    let drifts: Vec<(usize, M3)> = comps.iter().map(|&c| (c, drift_of(c))).collect();
    // <A_x M_y> with M_y expanded over matrix units.
    let cross = |x: usize, my: &M3| -> C64 {
        let mut acc = C64::new(0.0, 0.0);
        for a in 0..3 {
            for b in 0..3 {
                let c = my[(a, b)];
                if c != C64::new(0.0, 0.0) {
                    acc += c * (ordered(x, component_of(a, b)) * rho).trace();
                }
            }
        }
        acc
    };
    for &(x, ref mx) in &drifts {
        for &(y, ref my) in &drifts {
            let dt_moment = (ordered(x, y) * l_rho).trace();
            out[x][y] = dt_moment - cross(x, my) - cross(y, mx);
        }
    }
    out
}

/// Quantum diffusion coefficient of the operator pair (A, B) from the
/// Einstein relation, with d<AB>/dt taken by central differences of the
/// deterministic evolution over +-dt. Returns (finite-difference value,
/// residual against the closed form).
pub fn einstein_check(
    pair: CorrelationPair,
    s: &CNumberState,
    p: &ThreeLevelParams,
    dt: f64,
) -> Option<(C64, f64)> {
    use super::state::comp::{A, A_CONJ};
    let ((ai, aj), (bi, bj)) = pair.operators()?;
    let ga = s[A] * p.g;
    let gac = s[A_CONJ] * p.g;
    let a = unit(ai, aj);
    let b = unit(bi, bj);
    let rho = canonical_rho(s);
    let fwd = rk4(&rho, p, ga, gac, dt);
    let bwd = rk4(&rho, p, ga, gac, -dt);
    let ab = a * b;
    let d_moment = ((ab * fwd).trace() - (ab * bwd).trace()) / (2.0 * dt);
    let ma = heisenberg(&a, p, ga, gac);
    let mb = heisenberg(&b, p, ga, gac);
    let value = d_moment - (ma * b * rho).trace() - (a * mb * rho).trace();
    let closed = quantum_correlation(pair, s, p);
    Some((value, (value - closed).norm()))
}

fn rk4(rho: &M3, p: &ThreeLevelParams, ga: C64, gac: C64, dt: f64) -> M3 {
    let h = C64::new(dt, 0.0);
    let k1 = lindblad(rho, p, ga, gac);
    let k2 = lindblad(&(rho + k1 * (h * 0.5)), p, ga, gac);
    let k3 = lindblad(&(rho + k2 * (h * 0.5)), p, ga, gac);
    let k4 = lindblad(&(rho + k3 * h), p, ga, gac);
    let two = C64::new(2.0, 0.0);
    rho + (k1 + k2 * two + k3 * two + k4) * (h / 6.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diffusion::matrix::cnumber_diffusion_matrix;
    use crate::diffusion::state::comp;

    fn params(energies: [f64; 3]) -> ThreeLevelParams {
        let mut rates = [[0.0; 3]; 3];
        rates[L2][L3] = 2e11;
        rates[L1P][L2] = 2e12;
        rates[L1P][L3] = 1e10;
        rates[L3][L2] = 3e9;
        rates[L3][L1P] = 5e9;
        rates[L2][L1P] = 4e9;
        let mut p = ThreeLevelParams {
            g: 1.0,
            omega: 1.5e12,
            rates,
            gamma: [[0.0; 3]; 3],
            energies,
            kappa: 0.0,
            n_th: 0.0,
        };
        for a in 0..3 {
            for b in 0..3 {
                if a != b {
                    p.gamma[a][b] = 0.5 * (p.inv_tau(a) + p.inv_tau(b)) + 1e12;
                }
            }
        }
        p
    }

    fn state() -> CNumberState {
        let mut s = CNumberState::zero();
        s.v[comp::S33] = C64::new(0.45, 0.0);
        s.v[comp::S22] = C64::new(0.2, 0.0);
        s.v[comp::S1P1P] = C64::new(0.35, 0.0);
        s.v[comp::S23] = C64::new(0.05, -0.02);
        s.v[comp::S31P] = C64::new(-0.03, 0.07);
        s.v[comp::S21P] = C64::new(0.01, 0.04);
        s.v[comp::A] = C64::new(3e11, -1e11);
        for (x, y) in [
            (comp::S23_CONJ, comp::S23),
            (comp::S31P_CONJ, comp::S31P),
            (comp::S21P_CONJ, comp::S21P),
            (comp::A_CONJ, comp::A),
        ] {
            s.v[x] = s.v[y].conj();
        }
        s
    }

    #[test]
    fn transcribed_matrix_matches_master_equation() {
        for energies in [[0.0; 3], [0.0, 2e13, 2.3e13]] {
            let p = params(energies);
            let s = state();
            let d = cnumber_diffusion_matrix(&s, &p);
            let e = ordered_einstein_matrix(&s, &p);
            let scale = d.iter().map(|z| z.norm()).fold(0.0, f64::max);
            for &(x, _) in MATTER_OPERATORS.iter() {
                for &(y, _) in MATTER_OPERATORS.iter() {
                    let diff = (d[(x, y)] - e[x][y]).norm();
                    assert!(
                        diff < 1e-12 * scale,
                        "({}, {}): table {} vs master equation {}",
                        super::super::state::COMPONENT_NAMES[x],
                        super::super::state::COMPONENT_NAMES[y],
                        d[(x, y)],
                        e[x][y]
                    );
                }
            }
        }
    }

    #[test]
    fn finite_difference_agrees_with_closed_forms() {
        let p = params([0.0, 2e13, 2.3e13]);
        let s = state();
        for pair in CorrelationPair::ALL {
            let Some((value, residual)) = einstein_check(pair, &s, &p, 2e-17) else {
                continue;
            };
            assert!(
                residual < 1e-6 * value.norm().max(1e9),
                "{}: {value} residual {residual}",
                pair.label()
            );
        }
    }

    #[test]
    fn labels_round_trip() {
        for pair in CorrelationPair::ALL {
            assert_eq!(pair.label().parse::<CorrelationPair>().unwrap(), pair);
        }
        assert!("F99".parse::<CorrelationPair>().is_err());
    }
}
