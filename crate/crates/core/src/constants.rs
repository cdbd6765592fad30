//! CODATA SI constants.

pub const HBAR: f64 = 1.054_571_817e-34;
pub const PLANCK: f64 = 6.626_070_15e-34;
pub const C0: f64 = 299_792_458.0;
pub const EPS0: f64 = 8.854_187_812_8e-12;
pub const MU0: f64 = 1.256_637_062_12e-6;
pub const KB: f64 = 1.380_649e-23;
pub const E_CHARGE: f64 = 1.602_176_634e-19;

/// Free-space wave impedance.
pub fn z0() -> f64 {
    (MU0 / EPS0).sqrt()
}

pub fn mev_to_joule(mev: f64) -> f64 {
    mev * 1e-3 * E_CHARGE
}
