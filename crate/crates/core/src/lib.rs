//! One-dimensional Maxwell-density-matrix simulator with Langevin noise.
//!
//! The optical field is advanced on a Yee grid, each cell carries a density
//! matrix evolved under a Lindblad-type master equation, and stochastic
//! kicks model spontaneous emission and dephasing noise.

// `!(x > 0.0)` is used on purpose so NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod analysis;
pub mod constants;
pub mod diffusion;
pub mod grid;
pub mod io;
pub mod noise;
pub mod propagator;
pub mod quantum;
pub mod scenario;
pub mod sim;
pub mod verify;

pub use num_complex::Complex64 as C64;
