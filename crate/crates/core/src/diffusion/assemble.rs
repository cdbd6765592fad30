//! Assembly of the full noise matrix B with B B^T = D from the elementary
//! factor families.
//!
//! Column layout (31 real draws):
//! - 0..12: six coherence-population blocks, two draws each
//! - 12..18: three coherence-cross blocks, two draws each
//! - 18..20: single-draw diagonal blocks for s23 and s31'
//! - 20..28: coherence-pair blocks for s23, s31', s21' and the field
//! - 28..31: single-draw population pair blocks (33,22), (33,1'1'), (22,1'1')

use nalgebra::SMatrix;

use super::matrix::{cnumber_diffusion_matrix, Matrix11};
use super::state::{comp::*, CNumberState, ThreeLevelParams, COMPONENT_NAMES, NUM_COMPONENTS};
use crate::noise::NoiseDiagnostics;
use crate::C64;

pub const NUM_COLUMNS: usize = 31;

pub type NoiseMatrix = SMatrix<C64, NUM_COMPONENTS, NUM_COLUMNS>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AssemblyMode {
    /// Reproduce D exactly for any state, with complex square roots.
    Exact,
    /// Conjugation-consistent factor for physical states; negative
    /// radicands are clamped at zero and counted.
    Physical,
}

/// (s*, s, pop1, pop2, population unique to this block).
const COH_POP_BLOCKS: [(usize, usize, usize, usize, usize); 6] = [
    (S23_CONJ, S23, S33, S22, S33),
    (S23_CONJ, S23, S22, S1P1P, S1P1P),
    (S31P_CONJ, S31P, S33, S1P1P, S1P1P),
    (S31P_CONJ, S31P, S33, S22, S22),
    (S21P_CONJ, S21P, S22, S1P1P, S1P1P),
    (S21P_CONJ, S21P, S33, S22, S33),
];

const CROSS_BLOCKS: [[usize; 4]; 3] = [
    [S23_CONJ, S31P_CONJ, S31P, S23],
    [S23_CONJ, S21P_CONJ, S21P, S23],
    [S23_CONJ, S21P, S21P_CONJ, S23],
];

const DIAGONAL_BLOCKS: [(usize, usize); 2] = [(S23_CONJ, S23), (S31P_CONJ, S31P)];

const PAIR_BLOCKS: [(usize, usize); 4] = [
    (S23_CONJ, S23),
    (S31P_CONJ, S31P),
    (S21P_CONJ, S21P),
    (A_CONJ, A),
];

const POPULATION_BLOCKS: [(usize, usize); 3] = [(S33, S22), (S33, S1P1P), (S22, S1P1P)];

#[derive(Debug, Clone)]
pub struct NoiseFactorization {
    pub b: NoiseMatrix,
    pub d: Matrix11,
    /// D - B B^T after assembly.
    pub residual: Matrix11,
}

impl NoiseFactorization {
    /// Largest |D| entry, floored to avoid division by zero.
    pub fn scale(&self) -> f64 {
        self.d.iter().map(|z| z.norm()).fold(1e-300, f64::max)
    }

    pub fn max_relative_residual(&self) -> f64 {
        self.residual.iter().map(|z| z.norm()).fold(0.0, f64::max) / self.scale()
    }

    /// Entries of the residual above `tol` times the scale.
    pub fn offending_entries(&self, tol: f64) -> Vec<(String, String, C64)> {
        let lim = tol * self.scale();
        let mut out = Vec::new();
        for r in 0..NUM_COMPONENTS {
            for c in r..NUM_COMPONENTS {
                let v = self.residual[(r, c)];
                if v.norm() > lim {
                    out.push((
                        COMPONENT_NAMES[r].to_string(),
                        COMPONENT_NAMES[c].to_string(),
                        v,
                    ));
                }
            }
        }
        out
    }
}

fn subtract_outer(res: &mut Matrix11, rows: &[usize], cols: &[[C64; 2]], ncol: usize) {
    for (x, &rx) in rows.iter().enumerate() {
        for (y, &ry) in rows.iter().enumerate() {
            let mut s = C64::new(0.0, 0.0);
            for k in 0..ncol {
                s += cols[x][k] * cols[y][k];
            }
            res[(rx, ry)] -= s;
        }
    }
}

fn real_sqrt(x: f64, diag: &mut NoiseDiagnostics) -> f64 {
    crate::noise::clamped_sqrt(x, diag)
}

/// Complex square root of `target` picked closest to `near`.
fn sqrt_near(target: C64, near: C64) -> C64 {
    let r = target.sqrt();
    if (r - near).norm() <= (-r - near).norm() {
        r
    } else {
        -r
    }
}

pub fn assemble_noise_matrix(
    s: &CNumberState,
    p: &ThreeLevelParams,
    mode: AssemblyMode,
    diag: &mut NoiseDiagnostics,
) -> NoiseFactorization {
    let i = C64::new(0.0, 1.0);
    let zero = C64::new(0.0, 0.0);
    let d = cnumber_diffusion_matrix(s, p);
    let mut res = d;
    let mut b = NoiseMatrix::zeros();
    let mut col = 0;

    for &(cs, cc, p1, p2, unique) in COH_POP_BLOCKS.iter() {
        let (u, v) = if unique == p1 {
            (-res[(cs, p1)], -res[(p1, cc)])
        } else {
            (res[(cs, p2)], res[(p2, cc)])
        };
        let a = u.norm().max(v.norm()).sqrt();
        if a > 0.0 {
            let (bb, cv) = match mode {
                AssemblyMode::Exact => ((u + v) / (2.0 * a), (u - v) / (2.0 * a)),
                AssemblyMode::Physical => (C64::new(u.re / a, 0.0), C64::new(0.0, u.im / a)),
            };
            let a = C64::new(a, 0.0);
            let rows = [cs, p1, p2, cc];
            let vals = [
                [a, -i * a],
                [-bb, -i * cv],
                [bb, i * cv],
                [a.conj(), i * a.conj()],
            ];
            for (x, &r) in rows.iter().enumerate() {
                b[(r, col)] = vals[x][0];
                b[(r, col + 1)] = vals[x][1];
            }
            subtract_outer(&mut res, &rows, &vals, 2);
        }
        col += 2;
    }

    for rows in CROSS_BLOCKS.iter() {
        let t01 = res[(rows[0], rows[1])];
        let t23 = res[(rows[2], rows[3])];
        let a = (0.5 * t01.norm().max(t23.norm())).sqrt();
        if a > 0.0 {
            let bb = t01 / (2.0 * a);
            let cv = match mode {
                AssemblyMode::Exact => t23 / (2.0 * a),
                AssemblyMode::Physical => bb.conj(),
            };
            let a = C64::new(a, 0.0);
            let vals = [
                [a, i * a],
                [bb, -i * bb],
                [cv, i * cv],
                [a.conj(), -i * a.conj()],
            ];
            for (x, &r) in rows.iter().enumerate() {
                b[(r, col)] = vals[x][0];
                b[(r, col + 1)] = vals[x][1];
            }
            subtract_outer(&mut res, rows, &vals, 2);
        }
        col += 2;
    }

    for &(cs, cc) in DIAGONAL_BLOCKS.iter() {
        let alpha = res[(cs, cs)].sqrt();
        let beta = match mode {
            AssemblyMode::Exact => sqrt_near(res[(cc, cc)], alpha.conj()),
            AssemblyMode::Physical => alpha.conj(),
        };
        b[(cs, col)] = alpha;
        b[(cc, col)] = beta;
        subtract_outer(&mut res, &[cs, cc], &[[alpha, zero], [beta, zero]], 1);
        col += 1;
    }

    for &(cs, cc) in PAIR_BLOCKS.iter() {
        let t = res[(cs, cc)];
        let alpha = match mode {
            AssemblyMode::Exact => (t * 0.5).sqrt(),
            AssemblyMode::Physical => C64::new(real_sqrt(0.5 * t.re, diag), 0.0),
        };
        let vals = [[alpha, i * alpha], [alpha, -i * alpha]];
        b[(cs, col)] = vals[0][0];
        b[(cs, col + 1)] = vals[0][1];
        b[(cc, col)] = vals[1][0];
        b[(cc, col + 1)] = vals[1][1];
        subtract_outer(&mut res, &[cs, cc], &vals, 2);
        col += 2;
    }

    for &(p1, p2) in POPULATION_BLOCKS.iter() {
        let t = -res[(p1, p2)];
        let a = match mode {
            AssemblyMode::Exact => t.sqrt(),
            AssemblyMode::Physical => C64::new(real_sqrt(t.re, diag), 0.0),
        };
        b[(p1, col)] = a;
        b[(p2, col)] = -a;
        subtract_outer(&mut res, &[p1, p2], &[[a, zero], [-a, zero]], 1);
        col += 1;
    }
    debug_assert_eq!(col, NUM_COLUMNS);

    NoiseFactorization {
        b,
        d,
        residual: res,
    }
}
