//! The four elementary factor families used to split the diffusion matrix.

use nalgebra::DMatrix;

use crate::C64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Table1Family {
    /// (s*, p1, p2, s): one coherence with two populations, 4x2.
    CoherencePopulation,
    /// Two entries, one real draw: population pair or a (s*, s) diagonal pair.
    Single,
    /// (s*, t, u, s): two coherences, 4x2.
    CoherenceCross,
    /// (s*, s), 2x2.
    CoherencePair,
}

impl Table1Family {
    pub const ALL: [Table1Family; 4] = [
        Self::CoherencePopulation,
        Self::Single,
        Self::CoherenceCross,
        Self::CoherencePair,
    ];
}

/// Factor B of the given family. `coherence_variant` selects the
/// [a, a*] form of the single-draw family.
pub fn table1_factor(
    family: Table1Family,
    a: C64,
    b: C64,
    c: C64,
    coherence_variant: bool,
) -> DMatrix<C64> {
    let i = C64::new(0.0, 1.0);
    match family {
        Table1Family::CoherencePopulation => DMatrix::from_row_slice(
            4,
            2,
            &[a, -i * a, -b, -i * c, b, i * c, a.conj(), i * a.conj()],
        ),
        Table1Family::Single => {
            if coherence_variant {
                DMatrix::from_row_slice(2, 1, &[a, a.conj()])
            } else {
                DMatrix::from_row_slice(2, 1, &[a, -a])
            }
        }
        Table1Family::CoherenceCross => DMatrix::from_row_slice(
            4,
            2,
            &[a, i * a, b, -i * b, c, i * c, a.conj(), -i * a.conj()],
        ),
        Table1Family::CoherencePair => DMatrix::from_row_slice(2, 2, &[a, i * a, a, -i * a]),
    }
}

/// The tabulated diffusion block each factor is meant to reproduce.
pub fn table1_block(
    family: Table1Family,
    a: C64,
    b: C64,
    c: C64,
    coherence_variant: bool,
) -> DMatrix<C64> {
    let z = C64::new(0.0, 0.0);
    let ac = a.conj();
    let aa = a.norm_sqr();
    match family {
        Table1Family::CoherencePopulation => {
            let s = -a * b - a * c;
            let q = b * b - c * c;
            let t = -ac * b + ac * c;
            DMatrix::from_row_slice(
                4,
                4,
                &[
                    z,
                    s,
                    -s,
                    C64::from(2.0 * aa),
                    s,
                    q,
                    -q,
                    t,
                    -s,
                    -q,
                    q,
                    -t,
                    C64::from(2.0 * aa),
                    t,
                    -t,
                    z,
                ],
            )
        }
        Table1Family::Single => {
            if coherence_variant {
                DMatrix::from_row_slice(2, 2, &[a * a, C64::from(aa), C64::from(aa), ac * ac])
            } else {
                DMatrix::from_row_slice(2, 2, &[a * a, -a * a, -a * a, a * a])
            }
        }
        Table1Family::CoherenceCross => DMatrix::from_row_slice(
            4,
            4,
            &[
                z,
                2.0 * a * b,
                z,
                C64::from(2.0 * aa),
                2.0 * a * b,
                z,
                2.0 * b * c,
                z,
                z,
                2.0 * b * c,
                z,
                2.0 * ac * c,
                C64::from(2.0 * aa),
                z,
                2.0 * ac * c,
                z,
            ],
        ),
        Table1Family::CoherencePair => {
            DMatrix::from_row_slice(2, 2, &[z, 2.0 * a * a, 2.0 * a * a, z])
        }
    }
}

/// Largest |B B^T - D_block| over the entries, relative to max(|D|, 1e-300).
pub fn table1_check(family: Table1Family, a: C64, b: C64, c: C64, coherence_variant: bool) -> f64 {
    let f = table1_factor(family, a, b, c, coherence_variant);
    let d = table1_block(family, a, b, c, coherence_variant);
    let bbt = &f * f.transpose();
    let scale = d.iter().map(|z| z.norm()).fold(1e-300, f64::max);
    (bbt - d).iter().map(|z| z.norm()).fold(0.0, f64::max) / scale
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn pair_family_unit() {
        let f = table1_factor(
            Table1Family::CoherencePair,
            c(1.0, 0.0),
            c(0.0, 0.0),
            c(0.0, 0.0),
            false,
        );
        let bbt = &f * f.transpose();
        assert_eq!(
            bbt,
            DMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(2.0, 0.0), c(2.0, 0.0), c(0.0, 0.0)])
        );
    }

    #[test]
    fn occupation_family_unit() {
        let f = table1_factor(
            Table1Family::Single,
            c(1.0, 0.0),
            c(0.0, 0.0),
            c(0.0, 0.0),
            false,
        );
        let bbt = &f * f.transpose();
        assert_eq!(
            bbt,
            DMatrix::from_row_slice(
                2,
                2,
                &[c(1.0, 0.0), c(-1.0, 0.0), c(-1.0, 0.0), c(1.0, 0.0)]
            )
        );
    }

    #[test]
    fn coherence_population_unit() {
        // a = 1, b = 1, c = 0 expanded by hand.
        let f = table1_factor(
            Table1Family::CoherencePopulation,
            c(1.0, 0.0),
            c(1.0, 0.0),
            c(0.0, 0.0),
            false,
        );
        let bbt = &f * f.transpose();
        let expect = [
            [0.0, -1.0, 1.0, 2.0],
            [-1.0, 1.0, -1.0, -1.0],
            [1.0, -1.0, 1.0, 1.0],
            [2.0, -1.0, 1.0, 0.0],
        ];
        for r in 0..4 {
            for k in 0..4 {
                assert_eq!(bbt[(r, k)], c(expect[r][k], 0.0), "({r},{k})");
            }
        }
    }

    #[test]
    fn all_families_reproduce_their_blocks() {
        let vals = [c(0.3, -1.2), c(-0.7, 0.4), c(2.0, 0.9)];
        for fam in Table1Family::ALL {
            for variant in [false, true] {
                let r = table1_check(fam, vals[0], vals[1], vals[2], variant);
                assert!(r < 1e-15, "{fam:?} {variant}: {r}");
            }
        }
    }
}
