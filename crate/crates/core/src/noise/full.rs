//! Full three-level fluctuation terms built from the assembled noise
//! matrix, projected onto Hermitian, trace-free increments.

use super::NoiseDiagnostics;
use crate::diffusion::{
    assemble_noise_matrix, semiclassical_field, AssemblyMode, CNumberState, ThreeLevelParams,
    Topology, MATTER_OPERATORS, NUM_COLUMNS,
};
use crate::quantum::QuantumSystem;
use crate::C64;

/// Number of unit Gaussian draws consumed per call.
pub const FULL_DRAWS: usize = NUM_COLUMNS;

/// Fluctuation increments per unit sqrt(time), indexed like rho in system
/// level order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FluctuationMatrix {
    pub data: [C64; 9],
}

impl FluctuationMatrix {
    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.data[i * 3 + j]
    }
}

/// Fluctuation matrix of a three-level cell. Increments follow the
/// c-number components: the term driving <s_ij> lands on rho_ji.
pub fn full_fluctuation_vector(
    rho: &[C64],
    system: &QuantumSystem,
    topo: Topology,
    e_z: f64,
    n_cell: f64,
    xi: &[f64; FULL_DRAWS],
    diag: &mut NoiseDiagnostics,
) -> FluctuationMatrix {
    let ga = semiclassical_field(system, topo, e_z);
    let state = CNumberState::from_density(rho, topo, C64::new(ga, 0.0));
    let params = ThreeLevelParams::from_system(system, topo);
    let fac = assemble_noise_matrix(&state, &params, AssemblyMode::Physical, diag);
    let norm = 1.0 / n_cell.sqrt();
    let mut data = [C64::new(0.0, 0.0); 9];
    for &(c, (i, j)) in MATTER_OPERATORS.iter() {
        // Off-diagonal terms are taken from the row with i > j in canonical
        // numbering and mirrored; populations keep their real part.
        if i < j {
            continue;
        }
        let mut f = C64::new(0.0, 0.0);
        for (k, &x) in xi.iter().enumerate() {
            f += fac.b[(c, k)] * x;
        }
        f *= norm;
        let (si, sj) = (topo.level(i), topo.level(j));
        if i == j {
            data[si * 3 + si] = C64::new(f.re, 0.0);
        } else {
            data[sj * 3 + si] = f;
            data[si * 3 + sj] = f.conj();
        }
    }
    // Close the population sum exactly.
    let (a, b, c) = (topo.upper, topo.lower, topo.injector);
    data[c * 3 + c] = C64::new(-(data[a * 3 + a].re + data[b * 3 + b].re), 0.0);
    FluctuationMatrix { data }
}
