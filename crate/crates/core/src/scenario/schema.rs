//! Versioned scenario file format. Every dimensional key carries its unit
//! as a suffix.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::constants::HBAR;
use crate::diffusion::Topology;
use crate::grid::{courant_timestep, Boundary, MaterialParams};
use crate::noise::{NoiseModel, NoiseScheme};
use crate::quantum::{ModelError, QuantumSystem, QuantumSystemSpec};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("config error: {0}")]
    Parse(String),
    #[error("unsupported schema_version {found}, expected {expected}")]
    Version { found: u32, expected: u32 },
    #[error("config error: missing keys: {}", .0.join(", "))]
    MissingKeys(Vec<String>),
    #[error("config error: {0}")]
    Invalid(String),
    #[error("config error: {0}")]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub schema_version: u32,
    pub name: String,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub description: String,
    pub geometry: Geometry,
    pub material: MaterialParams,
    pub boundaries: Boundaries,
    pub quantum: QuantumConfig,
    pub initial: InitialState,
    pub noise: NoiseConfig,
    pub run: RunConfig,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub probes: Vec<ProbeConfig>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Geometry {
    pub length_m: f64,
    pub cross_section_m2: f64,
    pub cells: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Boundaries {
    pub left: Boundary,
    pub right: Boundary,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Coupling {
    pub i: usize,
    pub j: usize,
    pub value: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Rate {
    pub from: usize,
    pub to: usize,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuantumConfig {
    pub levels: usize,
    pub energies_mev: Vec<f64>,
    pub carrier_density_per_m3: f64,
    pub period_length_m: f64,
    /// Symmetric dipole matrix elements in e*nm.
    #[serde(default)]
    pub dipole_e_nm: Vec<Coupling>,
    /// Tunneling couplings hbar*Omega in meV.
    #[serde(default)]
    pub tunneling_mev: Vec<Coupling>,
    #[serde(default)]
    pub rates_per_s: Vec<Rate>,
    #[serde(default)]
    pub pure_dephasing_per_s: Vec<Coupling>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialState {
    /// Two-level inversion with a random tipping angle per cell.
    TippedInverted,
    /// Diagonal state with the given populations in every cell.
    Populations { populations: Vec<f64> },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseConfig {
    pub scheme: NoiseScheme,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub topology: Option<Topology>,
}

fn default_courant() -> f64 {
    1.0
}

fn default_decimation() -> u64 {
    1
}

fn default_check() -> u64 {
    100
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub duration_s: f64,
    #[serde(default = "default_courant")]
    pub courant: f64,
    /// 0 disables snapshots.
    #[serde(default)]
    pub snapshot_every_steps: u64,
    #[serde(default = "default_decimation")]
    pub trace_decimation: u64,
    #[serde(default = "default_check")]
    pub check_every_steps: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProbeQuantity {
    /// E_z at the node nearest to the position (V/m).
    EField,
    /// Power leaving through a boundary (W).
    FacetPower,
    /// Population of `level` in the cell at the position.
    Population,
    /// rho3 / rho_B of the two-level cell at the position.
    BlochRatio,
    /// rho_ee - rho_gg of the two-level cell at the position.
    BlochInversion,
    /// Macroscopic polarization of the cell at the position (C/m^2).
    Polarization,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Left,
    Right,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbeConfig {
    pub name: String,
    pub quantity: ProbeQuantity,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub position_m: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub side: Option<Side>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub level: Option<usize>,
    /// Report the mean over each decimation window instead of the last
    /// sample.
    #[serde(default)]
    pub average: bool,
}

impl ProbeConfig {
    pub fn units(&self) -> &'static str {
        match self.quantity {
            ProbeQuantity::EField => "V/m",
            ProbeQuantity::FacetPower => "W",
            ProbeQuantity::Population
            | ProbeQuantity::BlochRatio
            | ProbeQuantity::BlochInversion => "1",
            ProbeQuantity::Polarization => "C/m^2",
        }
    }

    pub fn quantity_name(&self) -> &'static str {
        match self.quantity {
            ProbeQuantity::EField => "e_field",
            ProbeQuantity::FacetPower => "facet_power",
            ProbeQuantity::Population => "population",
            ProbeQuantity::BlochRatio => "bloch_ratio",
            ProbeQuantity::BlochInversion => "bloch_inversion",
            ProbeQuantity::Polarization => "polarization",
        }
    }
}

fn invalid<T>(msg: impl Into<String>) -> Result<T, ScenarioError> {
    Err(ScenarioError::Invalid(msg.into()))
}

impl Scenario {
    pub fn from_toml_str(text: &str) -> Result<Self, ScenarioError> {
        let s: Scenario = toml::from_str(text).map_err(|e| ScenarioError::Parse(e.to_string()))?;
        s.validate()?;
        Ok(s)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("scenario types always serialize")
    }

    pub fn load(path: &Path) -> Result<Self, ScenarioError> {
        let text = std::fs::read_to_string(path).map_err(|source| ScenarioError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_toml_str(&text)
    }

    pub fn save(&self, path: &Path) -> Result<(), ScenarioError> {
        std::fs::write(path, self.to_toml_string()).map_err(|source| ScenarioError::Io {
            path: path.display().to_string(),
            source,
        })
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(ScenarioError::Version {
                found: self.schema_version,
                expected: SCHEMA_VERSION,
            });
        }
        let g = &self.geometry;
        if !(g.length_m > 0.0 && g.cross_section_m2 > 0.0) || g.cells < 2 {
            return invalid(
                "geometry needs length_m > 0, cross_section_m2 > 0 and at least 2 cells",
            );
        }
        self.material
            .validate()
            .or_else(|e| invalid(format!("material: {e}")))?;
        let r = &self.run;
        if !(r.duration_s > 0.0) || !(r.courant > 0.0 && r.courant <= 1.0) {
            return invalid("run needs duration_s > 0 and 0 < courant <= 1");
        }
        if r.trace_decimation == 0 || r.check_every_steps == 0 {
            return invalid("trace_decimation and check_every_steps must be at least 1");
        }
        let steps = r.duration_s / self.dt();
        if !(steps < u64::MAX as f64) {
            return invalid(format!("{steps:e} steps do not fit a 64-bit counter"));
        }
        let q = &self.quantum;
        let n = q.levels;
        if q.energies_mev.len() != n {
            return invalid(format!(
                "quantum.energies_mev has {} entries for {n} levels",
                q.energies_mev.len()
            ));
        }
        let in_range = |i: usize, what: &str| -> Result<(), ScenarioError> {
            if i >= n {
                invalid(format!("{what}: level {i} out of range for {n} levels"))
            } else {
                Ok(())
            }
        };
        for c in q
            .dipole_e_nm
            .iter()
            .chain(&q.tunneling_mev)
            .chain(&q.pure_dephasing_per_s)
        {
            in_range(c.i, "coupling")?;
            in_range(c.j, "coupling")?;
        }
        for r in &q.rates_per_s {
            in_range(r.from, "rates_per_s")?;
            in_range(r.to, "rates_per_s")?;
        }
        match &self.initial {
            InitialState::TippedInverted if n != 2 => {
                return invalid("initial kind tipped_inverted needs a two-level system")
            }
            InitialState::Populations { populations } => {
                if populations.len() != n || populations.iter().any(|p| !(*p >= 0.0)) {
                    return invalid(
                        "initial populations must list one non-negative value per level",
                    );
                }
                let sum: f64 = populations.iter().sum();
                if (sum - 1.0).abs() > 1e-12 {
                    return invalid(format!("initial populations sum to {sum}, expected 1"));
                }
            }
            _ => {}
        }
        if let Some(t) = self.noise.topology {
            for l in [t.injector, t.lower, t.upper] {
                in_range(l, "noise.topology")?;
            }
        }
        for p in &self.probes {
            let name_ok = !p.name.is_empty()
                && p.name
                    .chars()
                    .all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-');
            if !name_ok {
                return invalid(format!(
                    "probe name {:?} may only use ASCII letters, digits, '_' and '-'",
                    p.name
                ));
            }
            let needs_position = !matches!(p.quantity, ProbeQuantity::FacetPower);
            match p.position_m {
                Some(x) if !(0.0..=g.length_m).contains(&x) => {
                    return invalid(format!(
                        "probe {}: position_m {x} outside [0, {}]",
                        p.name, g.length_m
                    ))
                }
                None if needs_position => {
                    return invalid(format!("probe {}: missing key position_m", p.name))
                }
                _ => {}
            }
            if p.quantity == ProbeQuantity::FacetPower && p.side.is_none() {
                return invalid(format!("probe {}: missing key side", p.name));
            }
            if p.quantity == ProbeQuantity::Population {
                match p.level {
                    Some(l) => in_range(l, "probe level")?,
                    None => return invalid(format!("probe {}: missing key level", p.name)),
                }
            }
            if matches!(
                p.quantity,
                ProbeQuantity::BlochRatio | ProbeQuantity::BlochInversion
            ) && n != 2
            {
                return invalid(format!(
                    "probe {}: Bloch quantities need a two-level system",
                    p.name
                ));
            }
        }
        let mut names: Vec<&str> = self.probes.iter().map(|p| p.name.as_str()).collect();
        names.sort_unstable();
        if names.windows(2).any(|w| w[0] == w[1]) {
            return invalid("probe names must be unique");
        }
        // Surface model errors at load time.
        self.build_system()?;
        self.noise_model()?;
        Ok(())
    }

    pub fn dx(&self) -> f64 {
        self.geometry.length_m / self.geometry.cells as f64
    }

    pub fn dt(&self) -> f64 {
        courant_timestep(
            self.dx(),
            self.material.refractive_index(),
            self.run.courant,
        )
    }

    pub fn num_steps(&self) -> u64 {
        (self.run.duration_s / self.dt()).round() as u64
    }

    /// Carriers per grid cell.
    pub fn n_cell(&self) -> f64 {
        self.quantum.carrier_density_per_m3 * self.geometry.cross_section_m2 * self.dx()
    }

    /// Cell index containing `x`.
    pub fn cell_at(&self, x: f64) -> usize {
        ((x / self.dx()) as usize).min(self.geometry.cells - 1)
    }

    pub fn build_system(&self) -> Result<QuantumSystem, ScenarioError> {
        let q = &self.quantum;
        let mut spec =
            QuantumSystemSpec::empty(q.levels, q.carrier_density_per_m3, q.period_length_m);
        spec.energies = q
            .energies_mev
            .iter()
            .map(|e| crate::constants::mev_to_joule(*e))
            .collect();
        let e_nm = crate::constants::E_CHARGE * 1e-9;
        for c in &q.dipole_e_nm {
            spec.dipole[(c.i, c.j)] = c.value * e_nm;
            spec.dipole[(c.j, c.i)] = c.value * e_nm;
        }
        for c in &q.tunneling_mev {
            let w = crate::constants::mev_to_joule(c.value) / HBAR;
            spec.tunneling[(c.i, c.j)] = w;
            spec.tunneling[(c.j, c.i)] = w;
        }
        for r in &q.rates_per_s {
            spec.rates[(r.to, r.from)] = r.value;
        }
        for c in &q.pure_dephasing_per_s {
            spec.pure_dephasing[(c.i, c.j)] = c.value;
            spec.pure_dephasing[(c.j, c.i)] = c.value;
        }
        Ok(QuantumSystem::new(spec)?)
    }

    pub fn noise_model(&self) -> Result<NoiseModel, ScenarioError> {
        let system = self.build_system()?;
        NoiseModel::new(&system, self.noise.scheme, self.noise.topology)
            .map_err(|e| ScenarioError::Invalid(format!("noise: {e}")))
    }
}

/// Recursively overlays `over` onto `base`.
pub fn merge_tables(base: &mut toml::Table, over: &toml::Table) {
    for (k, v) in over {
        match (base.get_mut(k), v) {
            (Some(toml::Value::Table(b)), toml::Value::Table(o)) => merge_tables(b, o),
            _ => {
                base.insert(k.clone(), v.clone());
            }
        }
    }
}

/// Human-readable description of the scenario file format.
pub const SCHEMA_TEXT: &str = r#"# Scenario file, schema_version = 1 (TOML)
schema_version = 1                 # required
name = "text"                      # required
description = "text"               # optional

[geometry]
length_m = 0.0                     # grid length
cross_section_m2 = 0.0             # transverse area; sets carriers per cell
cells = 0                          # number of cells, dx = length_m / cells

[material]
eps_r = 1.0                        # background relative permittivity
chi = 0.0                          # optional instantaneous susceptibility
sigma_s_per_m = 0.0                # optional conductivity (waveguide loss)
confinement = 1.0                  # overlap factor of mode and active region
mu_r = 1.0                         # optional

[boundaries]
left = { kind = "absorbing" }      # absorbing | perfect_reflector | facet
right = { kind = "facet", reflectivity = 0.5 }   # reflectivity optional (Fresnel)

[quantum]
levels = 2
energies_mev = [0.0, 0.0]
carrier_density_per_m3 = 0.0
period_length_m = 0.0
dipole_e_nm = [{ i = 0, j = 1, value = 0.0 }]
tunneling_mev = [{ i = 0, j = 2, value = 0.0 }]          # hbar Omega
rates_per_s = [{ from = 1, to = 0, value = 0.0 }]
pure_dephasing_per_s = [{ i = 0, j = 1, value = 0.0 }]

[initial]
kind = "tipped_inverted"           # or: kind = "populations", populations = [...]

[noise]
scheme = "reduced"                 # off | reduced | full
topology = { injector = 0, lower = 1, upper = 2 }    # required for full

[run]
duration_s = 0.0
courant = 1.0                      # optional, dt = courant n dx / c
snapshot_every_steps = 0           # optional, 0 = off
trace_decimation = 1               # optional
check_every_steps = 100            # optional, invariant check cadence

[[probes]]
name = "text"
quantity = "e_field"               # e_field | facet_power | population | bloch_ratio | bloch_inversion | polarization
position_m = 0.0                   # all but facet_power
side = "right"                     # facet_power only
level = 0                          # population only
average = false                    # mean over each decimation window
"#;
