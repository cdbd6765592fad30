//! The c-number diffusion matrix of the three-level system.
//!
//! Entries are the coefficients of <F_mu F_nu> (twice the diffusion
//! coefficient). Three printed entries are corrected here; see
//! [`TRANSCRIPTION_NOTES`].

use nalgebra::SMatrix;

use super::state::{comp::*, CNumberState, ThreeLevelParams, L1P, L2, L3, NUM_COMPONENTS};
use crate::C64;

pub type Matrix11 = SMatrix<C64, NUM_COMPONENTS, NUM_COMPONENTS>;

/// Entries whose printed form is inconsistent with the surrounding
/// structure, and what is used instead.
pub const TRANSCRIPTION_NOTES: [&str; 4] = [
    "(a*, a): printed sqrt(n_th kappa); kappa n_th used, matching <F_a^dag F_a>",
    "(s31'*, s1'1'): printed -r1'3 s31'; -r1'3 s31'* used, the mirror of (s1'1', s31'*) and the only conjugation-consistent form",
    "(s23*, s23): printed without r31' s1'1'; the term is restored, since this pair is already in chosen order and must equal <F23^dag F23>",
    "(s22, s22): missing '+' before the ig(...) term read as addition",
];

pub fn cnumber_diffusion_matrix(s: &CNumberState, p: &ThreeLevelParams) -> Matrix11 {
    let i = C64::new(0.0, 1.0);
    let ga = s[A] * p.g;
    let gac = s[A_CONJ] * p.g;
    let om = p.omega;
    let (s23c, s31c, s21c) = (s[S23_CONJ], s[S31P_CONJ], s[S21P_CONJ]);
    let (s33, s22, s11) = (s[S33], s[S22], s[S1P1P]);
    let (s21, s31, s23) = (s[S21P], s[S31P], s[S23]);

    let r32 = p.r(L3, L2);
    let r23 = p.r(L2, L3);
    let r12 = p.r(L1P, L2);
    let r21 = p.r(L2, L1P);
    let r13 = p.r(L1P, L3);
    let r31 = p.r(L3, L1P);
    let g23 = p.gamma[L2][L3];
    let g12 = p.gamma[L1P][L2];
    let g13 = p.gamma[L1P][L3];

    let mut d = Matrix11::zeros();
    let mut set = |a: usize, b: usize, v: C64| {
        d[(a, b)] = v;
        d[(b, a)] = v;
    };

    set(A_CONJ, A, C64::new(p.kappa * p.n_th, 0.0));

    set(S23_CONJ, S23_CONJ, -2.0 * i * gac * s23c);
    set(S23_CONJ, S31P_CONJ, i * gac * s31c);
    set(S23_CONJ, S21P_CONJ, -i * gac * s21c);
    set(S31P_CONJ, S31P_CONJ, 2.0 * i * om * s31c);

    set(S23_CONJ, S33, -r32 * s23c);
    set(S23_CONJ, S22, (r32 + r12) * s23c);
    set(S23_CONJ, S1P1P, -r12 * s23c);
    set(S31P_CONJ, S33, -i * ga * s21c + (r23 + r13) * s31c);
    set(S31P_CONJ, S22, i * ga * s21c - r23 * s31c);
    set(S31P_CONJ, S1P1P, -r13 * s31c);
    set(S21P_CONJ, S33, -r32 * s21c);
    set(S21P_CONJ, S22, (r32 + r12) * s21c);
    set(S21P_CONJ, S1P1P, -r12 * s21c);

    set(S23_CONJ, S21P, (g23 + g12 - g13) * s31);
    set(
        S21P_CONJ,
        S21P,
        (2.0 * g12 - r21 - r31) * s11 + r12 * s22 + r13 * s33,
    );
    set(
        S31P_CONJ,
        S31P,
        (2.0 * g13 - r21 - r31) * s11 + r12 * s22 + r13 * s33,
    );
    set(
        S23_CONJ,
        S23,
        (2.0 * g23 - r23 - r13) * s33 + r32 * s22 + r31 * s11,
    );
    set(S21P_CONJ, S23, (g12 + g23 - g13) * s31c);

    set(
        S33,
        S33,
        (r23 + r13) * s33
            + r32 * s22
            + r31 * s11
            + i * (gac * s23 - ga * s23c)
            + i * om * (s31c - s31),
    );
    set(
        S33,
        S22,
        -r32 * s22 - r23 * s33 + i * (ga * s23c - gac * s23),
    );
    set(S33, S1P1P, i * om * (s31 - s31c) - r31 * s11 - r13 * s33);
    set(
        S22,
        S22,
        r23 * s33 + (r32 + r12) * s22 + r21 * s11 + i * (gac * s23 - ga * s23c),
    );
    set(S22, S1P1P, -r21 * s11 - r12 * s22);
    set(
        S1P1P,
        S1P1P,
        r12 * s22 + (r21 + r31) * s11 + i * om * (s31c - s31) + r13 * s33,
    );

    set(S33, S21P, -r32 * s21);
    set(S22, S21P, (r32 + r12) * s21);
    set(S1P1P, S21P, -r12 * s21);
    set(S33, S31P, i * gac * s21 + (r23 + r13) * s31);
    set(S22, S31P, -i * gac * s21 - r23 * s31);
    set(S1P1P, S31P, -r13 * s31);
    set(S33, S23, -r32 * s23);
    set(S22, S23, (r32 + r12) * s23);
    set(S1P1P, S23, -r12 * s23);

    set(S21P, S23, i * ga * s21);
    set(S31P, S31P, -2.0 * i * om * s31);
    set(S31P, S23, -i * ga * s31);
    set(S23, S23, 2.0 * i * ga * s23);
    d
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diffusion::state::comp;

    fn params() -> ThreeLevelParams {
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
            energies: [0.0; 3],
            kappa: 1e11,
            n_th: 0.14,
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

    #[test]
    fn zero_state_gives_only_field_constant() {
        let p = params();
        let d = cnumber_diffusion_matrix(&CNumberState::zero(), &p);
        for a in 0..NUM_COMPONENTS {
            for b in 0..NUM_COMPONENTS {
                if (a, b) != (comp::A_CONJ, comp::A) && (a, b) != (comp::A, comp::A_CONJ) {
                    assert_eq!(d[(a, b)], C64::new(0.0, 0.0), "({a},{b})");
                }
            }
        }
    }

    #[test]
    fn upper_population_entry_matches_closed_form() {
        let p = params();
        let mut s = CNumberState::zero();
        s.v[comp::S33] = C64::new(0.4, 0.0);
        s.v[comp::S22] = C64::new(0.25, 0.0);
        s.v[comp::S1P1P] = C64::new(0.35, 0.0);
        s.v[comp::S23] = C64::new(0.05, -0.02);
        s.v[comp::S23_CONJ] = s.v[comp::S23].conj();
        s.v[comp::S31P] = C64::new(-0.03, 0.07);
        s.v[comp::S31P_CONJ] = s.v[comp::S31P].conj();
        s.v[comp::A] = C64::new(3e11, 0.0);
        s.v[comp::A_CONJ] = C64::new(3e11, 0.0);
        let d = cnumber_diffusion_matrix(&s, &p);
        let i = C64::new(0.0, 1.0);
        let tau3 = p.inv_tau(L3);
        let expect = s[comp::S33] * tau3
            + s[comp::S22] * p.r(L3, L2)
            + s[comp::S1P1P] * p.r(L3, L1P)
            + i * (s[comp::A_CONJ] * s[comp::S23] - s[comp::A] * s[comp::S23_CONJ])
            + i * p.omega * (s[comp::S31P_CONJ] - s[comp::S31P]);
        assert!((d[(comp::S33, comp::S33)] - expect).norm() < 1e-12 * expect.norm());
        assert_eq!(
            d[(comp::S23, comp::S23)],
            2.0 * i * s[comp::A] * s[comp::S23]
        );
    }

    #[test]
    fn population_block_rows_sum_to_zero() {
        let p = params();
        let mut s = CNumberState::zero();
        for (k, v) in s.v.iter_mut().enumerate() {
            *v = C64::new(0.1 * k as f64 - 0.3, 0.05 * (k as f64).sin());
        }
        let d = cnumber_diffusion_matrix(&s, &p);
        let pops = [comp::S33, comp::S22, comp::S1P1P];
        for row in 0..NUM_COMPONENTS {
            let sum: C64 = pops.iter().map(|&c| d[(row, c)]).sum();
            let scale: f64 = pops
                .iter()
                .map(|&c| d[(row, c)].norm())
                .sum::<f64>()
                .max(1.0);
            assert!(sum.norm() < 1e-14 * scale, "row {row}: {sum}");
        }
    }

    #[test]
    fn symmetric() {
        let p = params();
        let mut s = CNumberState::zero();
        for (k, v) in s.v.iter_mut().enumerate() {
            *v = C64::new(k as f64, 1.0 - k as f64);
        }
        let d = cnumber_diffusion_matrix(&s, &p);
        assert_eq!(d, d.transpose());
    }
}
