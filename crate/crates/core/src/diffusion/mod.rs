//! c-number diffusion matrix of the three-level system, its factorization
//! into elementary noise blocks, and Einstein-relation cross checks.

mod assemble;
mod correlation;
mod matrix;
mod state;
mod table1;

pub use assemble::{
    assemble_noise_matrix, AssemblyMode, NoiseFactorization, NoiseMatrix, NUM_COLUMNS,
};
pub use correlation::{
    einstein_check, ordered_einstein_matrix, quantum_correlation, CorrelationPair, UnknownPair,
};
pub use matrix::{cnumber_diffusion_matrix, Matrix11, TRANSCRIPTION_NOTES};
pub use state::{
    comp, component_of, semiclassical_field, CNumberState, ThreeLevelParams, Topology,
    COMPONENT_NAMES, L1P, L2, L3, MATTER_OPERATORS, NUM_COMPONENTS,
};
pub use table1::{table1_block, table1_check, table1_factor, Table1Family};
