//! One-dimensional Yee grid for E_z and H_y with lumped facet loads.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::constants::{C0, EPS0, MU0};
use crate::quantum::DensityMatrix;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GridError {
    #[error("facet reflectivity {0} outside [0, 1]")]
    Reflectivity(f64),
    #[error("invalid material: {0}")]
    Material(String),
    #[error("invalid geometry: {0}")]
    Geometry(String),
    #[error("time step {dt} s exceeds the stability limit {limit} s")]
    Unstable { dt: f64, limit: f64 },
}

/// Background medium of the whole grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaterialParams {
    pub eps_r: f64,
    #[serde(default)]
    pub chi: f64,
    #[serde(default, rename = "sigma_s_per_m")]
    pub sigma: f64,
    #[serde(rename = "confinement")]
    pub gamma_overlap: f64,
    #[serde(default = "one")]
    pub mu_r: f64,
}

fn one() -> f64 {
    1.0
}

impl MaterialParams {
    pub fn vacuum() -> Self {
        Self {
            eps_r: 1.0,
            chi: 0.0,
            sigma: 0.0,
            gamma_overlap: 1.0,
            mu_r: 1.0,
        }
    }

    pub fn validate(&self) -> Result<(), GridError> {
        let bad = |m: &str| Err(GridError::Material(m.to_string()));
        if !(self.eps_r >= 1.0) {
            return bad("eps_r must be >= 1");
        }
        if !(self.sigma >= 0.0) {
            return bad("sigma must be >= 0");
        }
        if !(0.0..=1.0).contains(&self.gamma_overlap) {
            return bad("confinement must lie in [0, 1]");
        }
        if !(self.mu_r > 0.0) || !(self.eps_r + self.chi > 0.0) {
            return bad("mu_r and eps_r + chi must be positive");
        }
        Ok(())
    }

    pub fn permittivity(&self) -> f64 {
        EPS0 * (self.eps_r + self.chi)
    }

    pub fn permeability(&self) -> f64 {
        MU0 * self.mu_r
    }

    pub fn refractive_index(&self) -> f64 {
        ((self.eps_r + self.chi) * self.mu_r).sqrt()
    }

    /// Wave impedance of the medium.
    pub fn impedance(&self) -> f64 {
        (self.permeability() / self.permittivity()).sqrt()
    }

    /// Fresnel amplitude reflectivity toward vacuum.
    pub fn fresnel_reflectivity(&self) -> f64 {
        let n = self.refractive_index();
        (n - 1.0) / (n + 1.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Boundary {
    PerfectReflector,
    /// Partially reflecting facet. Without an explicit value the Fresnel
    /// reflectivity toward vacuum is used.
    Facet {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        reflectivity: Option<f64>,
    },
    Absorbing,
}

/// Boundary with its reflectivity resolved against the medium.
#[derive(Debug, Clone, Copy, PartialEq)]
enum ResolvedBoundary {
    Pec,
    Mur,
    /// Conductance of the lumped load, 1/Z_L.
    Load(f64),
}

impl Boundary {
    fn resolve(&self, m: &MaterialParams) -> Result<ResolvedBoundary, GridError> {
        Ok(match *self {
            Boundary::PerfectReflector => ResolvedBoundary::Pec,
            Boundary::Absorbing => ResolvedBoundary::Mur,
            Boundary::Facet { reflectivity } => {
                let r = reflectivity.unwrap_or_else(|| m.fresnel_reflectivity());
                if !(0.0..=1.0).contains(&r) {
                    return Err(GridError::Reflectivity(r));
                }
                if r == 0.0 {
                    ResolvedBoundary::Mur
                } else {
                    // r = (Z_L - Z)/(Z_L + Z)
                    ResolvedBoundary::Load((1.0 - r) / ((1.0 + r) * m.impedance()))
                }
            }
        })
    }
}

/// s * n * dx / c.
pub fn courant_timestep(dx: f64, n: f64, s: f64) -> f64 {
    s * n * dx / C0
}

#[derive(Debug, Clone)]
pub struct GridState {
    pub num_cells: usize,
    pub dx: f64,
    pub dt: f64,
    pub e_field: Vec<f64>,
    pub h_field: Vec<f64>,
    pub rho: Vec<DensityMatrix>,
    pub p_qm: Vec<f64>,
    pub p_qm_prev: Vec<f64>,
    pub n_cell: Vec<f64>,
    /// Energy per unit area that left through each end (J/m^2).
    pub facet_energy: [f64; 2],
    /// Last power per unit area leaving through each end (W/m^2).
    pub facet_power: [f64; 2],
    material: MaterialParams,
    left: ResolvedBoundary,
    right: ResolvedBoundary,
    /// E next to each boundary before the current E update, for Mur.
    e_edge_old: [f64; 2],
}

impl GridState {
    /// Empty grid with every cell set to `rho0`.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        num_cells: usize,
        dx: f64,
        dt: f64,
        material: MaterialParams,
        left: Boundary,
        right: Boundary,
        rho0: DensityMatrix,
        n_cell: f64,
    ) -> Result<Self, GridError> {
        material.validate()?;
        if num_cells < 2 || !(dx > 0.0) {
            return Err(GridError::Geometry(format!(
                "need at least 2 cells and dx > 0, got {num_cells} cells, dx = {dx}"
            )));
        }
        let limit = courant_timestep(dx, material.refractive_index(), 1.0);
        if !(dt > 0.0) || dt > limit * (1.0 + 1e-12) {
            return Err(GridError::Unstable { dt, limit });
        }
        Ok(Self {
            num_cells,
            dx,
            dt,
            e_field: vec![0.0; num_cells + 1],
            h_field: vec![0.0; num_cells],
            rho: vec![rho0; num_cells],
            p_qm: vec![0.0; num_cells],
            p_qm_prev: vec![0.0; num_cells],
            n_cell: vec![n_cell; num_cells],
            facet_energy: [0.0; 2],
            facet_power: [0.0; 2],
            material,
            left: left.resolve(&material)?,
            right: right.resolve(&material)?,
            e_edge_old: [0.0; 2],
        })
    }

    pub fn material(&self) -> &MaterialParams {
        &self.material
    }

    /// Field at the cell center, seen by the matter of cell `k`.
    #[inline]
    pub fn e_center(&self, k: usize) -> f64 {
        0.5 * (self.e_field[k] + self.e_field[k + 1])
    }

    pub fn fields_finite(&self) -> bool {
        self.e_field
            .iter()
            .chain(self.h_field.iter())
            .all(|v| v.is_finite())
    }

    /// Discrete energy per unit area that the leapfrog scheme conserves
    /// exactly in a closed lossless cavity: E at step n with the product of
    /// the H values straddling it.
    pub fn field_energy(&self) -> f64 {
        let eps = self.material.permittivity();
        let mu = self.material.permeability();
        let m = self.num_cells;
        let coef = self.dt / (mu * self.dx);
        let mut we = 0.0;
        for (k, e) in self.e_field.iter().enumerate() {
            let w = if k == 0 || k == m { 0.5 } else { 1.0 };
            we += w * e * e;
        }
        let mut wh = 0.0;
        for k in 0..m {
            let h_next = self.h_field[k] + coef * (self.e_field[k + 1] - self.e_field[k]);
            wh += self.h_field[k] * h_next;
        }
        0.5 * eps * we * self.dx + 0.5 * mu * wh * self.dx
    }

    /// H^{n+1/2} = H^{n-1/2} + dt/(mu dx) (E[k+1] - E[k]).
    pub fn update_h(&mut self) {
        let coef = self.dt / (self.material.permeability() * self.dx);
        let e = &self.e_field;
        for (k, h) in self.h_field.iter_mut().enumerate() {
            *h += coef * (e[k + 1] - e[k]);
        }
    }

    /// Interior E update with semi-implicit loss and the quantum source
    /// -Gamma dP/dt, where `dp_qm` is given per cell. Boundary nodes are
    /// left to [`GridState::apply_boundaries`].
    pub fn update_e(&mut self, dp_qm: &[f64]) {
        let m = self.num_cells;
        debug_assert_eq!(dp_qm.len(), m);
        self.e_edge_old = [self.e_field[1], self.e_field[m - 1]];
        let (ca, cb) = self.loss_coefficients();
        let inv_dx = 1.0 / self.dx;
        let gamma = self.material.gamma_overlap;
        for k in 1..m {
            let curl = (self.h_field[k] - self.h_field[k - 1]) * inv_dx;
            let src = gamma * 0.5 * (dp_qm[k - 1] + dp_qm[k]);
            self.e_field[k] = ca * self.e_field[k] + cb * (curl - src);
        }
    }

    fn loss_coefficients(&self) -> (f64, f64) {
        let eps = self.material.permittivity();
        let l = self.material.sigma * self.dt / (2.0 * eps);
        ((1.0 - l) / (1.0 + l), (self.dt / eps) / (1.0 + l))
    }

    /// Updates the two boundary nodes and books the energy leaving.
    pub fn apply_boundaries(&mut self) {
        let m = self.num_cells;
        let h_left = self.h_field[0];
        let h_right = -self.h_field[m - 1];
        let left = self.boundary_node(self.left, 0, 1, h_left, self.e_edge_old[0]);
        let right = self.boundary_node(self.right, m, m - 1, h_right, self.e_edge_old[1]);
        for (side, (old, new, g)) in [left, right].into_iter().enumerate() {
            let mean = 0.5 * (old + new);
            let p = g * mean * mean;
            self.facet_power[side] = p;
            self.facet_energy[side] += p * self.dt;
        }
    }

    /// Returns (old E, new E, conductance used for power booking).
    fn boundary_node(
        &mut self,
        kind: ResolvedBoundary,
        node: usize,
        inner: usize,
        h_in: f64,
        e_inner_old: f64,
    ) -> (f64, f64, f64) {
        let old = self.e_field[node];
        let z = self.material.impedance();
        match kind {
            ResolvedBoundary::Pec => {
                self.e_field[node] = 0.0;
                (old, 0.0, 0.0)
            }
            ResolvedBoundary::Mur => {
                let v = C0 / self.material.refractive_index();
                let k = (v * self.dt - self.dx) / (v * self.dt + self.dx);
                let new = e_inner_old + k * (self.e_field[inner] - old);
                self.e_field[node] = new;
                (old, new, 1.0 / z)
            }
            ResolvedBoundary::Load(g) => {
                // Half-cell Ampere law: eps dx/2 dE/dt = H_in - G E.
                let c = self.material.permittivity() * self.dx / (2.0 * self.dt);
                let new = (old * (c - 0.5 * g) + h_in) / (c + 0.5 * g);
                self.e_field[node] = new;
                (old, new, g)
            }
        }
    }
}
