//! THz QCL harmonic-comb scenario built from a parameter file holding the
//! cavity targets and the three-level rates.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::schema::*;
use crate::constants::{C0, EPS0};
use crate::diffusion::Topology;
use crate::grid::{Boundary, MaterialParams};
use crate::noise::NoiseScheme;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QclParams {
    pub schema_version: u32,
    pub name: String,
    #[serde(default)]
    pub description: String,
    /// Keys whose values are estimates rather than measured or computed.
    #[serde(default)]
    pub estimated: Vec<String>,
    pub cavity: Cavity,
    pub levels: Levels,
    pub rates_per_s: QclRates,
    pub dephasing_per_s: QclDephasing,
    pub run: QclRun,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Cavity {
    pub length_m: f64,
    pub group_index: f64,
    pub cross_section_m2: f64,
    pub confinement: f64,
    /// Intensity loss of the waveguide.
    pub loss_per_m: f64,
    /// Amplitude reflectivity of both facets; Fresnel when absent.
    #[serde(default)]
    pub facet_reflectivity: Option<f64>,
    pub temperature_k: f64,
    /// Treat `group_index` as the index of the lasing cavity and lower the
    /// background index by the dispersion of the clamped gain.
    #[serde(default = "yes")]
    pub compensate_gain_dispersion: bool,
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Levels {
    pub injector_mev: f64,
    pub lower_mev: f64,
    pub upper_mev: f64,
    pub dipole_e_nm: f64,
    pub anticrossing_mev: f64,
    pub carrier_density_per_m3: f64,
    pub period_length_m: f64,
}

/// Every entry is required; they are optional here so that all absent
/// ones can be reported together.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QclRates {
    pub upper_to_lower: Option<f64>,
    pub upper_to_injector: Option<f64>,
    pub lower_to_injector: Option<f64>,
    pub lower_to_upper: Option<f64>,
    pub injector_to_upper: Option<f64>,
    pub injector_to_lower: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QclDephasing {
    /// Pure dephasing of the optical coherence (upper, lower).
    pub optical: f64,
    /// Pure dephasing of the tunneling coherence (injector, upper).
    pub tunneling: f64,
    /// Pure dephasing of (injector, lower).
    pub injector_lower: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QclRun {
    pub center_frequency_hz: f64,
    pub cells_per_wavelength: f64,
    pub round_trips: f64,
    pub trace_decimation: u64,
    #[serde(default = "default_scheme")]
    pub noise: NoiseScheme,
}

fn default_scheme() -> NoiseScheme {
    NoiseScheme::Reduced
}

const INJECTOR: usize = 0;
const LOWER: usize = 1;
const UPPER: usize = 2;

impl QclRates {
    fn resolved(&self) -> Result<Vec<Rate>, ScenarioError> {
        let entries = [
            ("upper_to_lower", self.upper_to_lower, UPPER, LOWER),
            ("upper_to_injector", self.upper_to_injector, UPPER, INJECTOR),
            ("lower_to_injector", self.lower_to_injector, LOWER, INJECTOR),
            ("lower_to_upper", self.lower_to_upper, LOWER, UPPER),
            ("injector_to_upper", self.injector_to_upper, INJECTOR, UPPER),
            ("injector_to_lower", self.injector_to_lower, INJECTOR, LOWER),
        ];
        let missing: Vec<String> = entries
            .iter()
            .filter(|e| e.1.is_none())
            .map(|e| format!("rates_per_s.{}", e.0))
            .collect();
        if !missing.is_empty() {
            return Err(ScenarioError::MissingKeys(missing));
        }
        Ok(entries
            .iter()
            .filter(|e| e.1.unwrap() > 0.0)
            .map(|e| Rate {
                from: e.2,
                to: e.3,
                value: e.1.unwrap(),
            })
            .collect())
    }
}

impl QclParams {
    /// Cavity round-trip frequency c / (2 n L).
    pub fn free_spectral_range(&self) -> f64 {
        C0 / (2.0 * self.cavity.group_index * self.cavity.length_m)
    }

    pub fn round_trip_time(&self) -> f64 {
        1.0 / self.free_spectral_range()
    }

    /// Decay rate of the optical coherence (lower, upper).
    pub fn optical_coherence_decay(&self) -> f64 {
        let r = &self.rates_per_s;
        let out_upper = r.upper_to_lower.unwrap_or(0.0) + r.upper_to_injector.unwrap_or(0.0);
        let out_lower = r.lower_to_injector.unwrap_or(0.0) + r.lower_to_upper.unwrap_or(0.0);
        0.5 * (out_upper + out_lower) + self.dephasing_per_s.optical
    }

    /// Intensity gain that balances waveguide and facet losses for a
    /// background index `n`.
    pub fn threshold_gain(&self, n: f64) -> f64 {
        let c = &self.cavity;
        let r = c.facet_reflectivity.unwrap_or((n - 1.0) / (n + 1.0));
        c.loss_per_m + (1.0 / (r * r)).ln() / c.length_m
    }

    /// Refractive index of the host material. A homogeneously broadened
    /// gain line clamped at g adds c g / (2 gamma) to the group index at
    /// line center; the host index is lowered by the same amount.
    pub fn background_index(&self) -> f64 {
        let c = &self.cavity;
        if !c.compensate_gain_dispersion {
            return c.group_index;
        }
        let gamma = self.optical_coherence_decay();
        let mut n = c.group_index;
        for _ in 0..50 {
            n = c.group_index - C0 * self.threshold_gain(n) / (2.0 * gamma);
        }
        n
    }
}

pub fn qcl_hfc_scenario_from_str(text: &str) -> Result<Scenario, ScenarioError> {
    let p: QclParams = toml::from_str(text).map_err(|e| ScenarioError::Parse(e.to_string()))?;
    if p.schema_version != SCHEMA_VERSION {
        return Err(ScenarioError::Version {
            found: p.schema_version,
            expected: SCHEMA_VERSION,
        });
    }
    let rates = p.rates_per_s.resolved()?;
    let c = &p.cavity;
    let n = p.background_index();
    if !(n >= 1.0) {
        return Err(ScenarioError::Invalid(format!(
            "gain dispersion leaves a background index of {n}; lower the loss or raise the dephasing"
        )));
    }
    let wavelength = C0 / (n * p.run.center_frequency_hz);
    let cells = (c.length_m / wavelength * p.run.cells_per_wavelength).round() as usize;
    let facet = Boundary::Facet {
        reflectivity: c.facet_reflectivity,
    };
    let l = &p.levels;
    let scenario = Scenario {
        schema_version: SCHEMA_VERSION,
        name: p.name.clone(),
        description: p.description.clone(),
        geometry: Geometry {
            length_m: c.length_m,
            cross_section_m2: c.cross_section_m2,
            cells,
        },
        material: MaterialParams {
            eps_r: n * n,
            chi: 0.0,
            sigma: c.loss_per_m * n * EPS0 * C0,
            gamma_overlap: c.confinement,
            mu_r: 1.0,
        },
        boundaries: Boundaries {
            left: facet,
            right: facet,
        },
        quantum: QuantumConfig {
            levels: 3,
            energies_mev: vec![l.injector_mev, l.lower_mev, l.upper_mev],
            carrier_density_per_m3: l.carrier_density_per_m3,
            period_length_m: l.period_length_m,
            dipole_e_nm: vec![Coupling {
                i: LOWER,
                j: UPPER,
                value: l.dipole_e_nm,
            }],
            tunneling_mev: vec![Coupling {
                i: INJECTOR,
                j: UPPER,
                value: 0.5 * l.anticrossing_mev,
            }],
            rates_per_s: rates,
            pure_dephasing_per_s: vec![
                Coupling {
                    i: LOWER,
                    j: UPPER,
                    value: p.dephasing_per_s.optical,
                },
                Coupling {
                    i: INJECTOR,
                    j: UPPER,
                    value: p.dephasing_per_s.tunneling,
                },
                Coupling {
                    i: INJECTOR,
                    j: LOWER,
                    value: p.dephasing_per_s.injector_lower,
                },
            ],
        },
        initial: InitialState::Populations {
            populations: vec![1.0, 0.0, 0.0],
        },
        noise: NoiseConfig {
            scheme: p.run.noise,
            topology: Some(Topology {
                injector: INJECTOR,
                lower: LOWER,
                upper: UPPER,
            }),
        },
        run: RunConfig {
            duration_s: p.run.round_trips * p.round_trip_time(),
            courant: 1.0,
            snapshot_every_steps: 0,
            trace_decimation: p.run.trace_decimation,
            check_every_steps: 1000,
        },
        probes: vec![
            ProbeConfig {
                name: "facet_field".into(),
                quantity: ProbeQuantity::EField,
                position_m: Some(c.length_m),
                side: None,
                level: None,
                average: false,
            },
            ProbeConfig {
                name: "facet_power".into(),
                quantity: ProbeQuantity::FacetPower,
                position_m: None,
                side: Some(Side::Right),
                level: None,
                average: true,
            },
            ProbeConfig {
                name: "upper_population".into(),
                quantity: ProbeQuantity::Population,
                position_m: Some(0.5 * c.length_m),
                side: None,
                level: Some(UPPER),
                average: false,
            },
        ],
    };
    scenario.validate()?;
    Ok(scenario)
}

/// Scenario of the QCL comb from a parameter file.
pub fn qcl_hfc_scenario(params: &Path) -> Result<Scenario, ScenarioError> {
    let text = std::fs::read_to_string(params).map_err(|source| ScenarioError::Io {
        path: params.display().to_string(),
        source,
    })?;
    qcl_hfc_scenario_from_str(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    const PARAMS: &str = include_str!("../../../../scenarios/qcl_hfc_params.toml");

    #[test]
    fn shipped_parameters_hit_the_cavity_targets() {
        let p: QclParams = toml::from_str(PARAMS).unwrap();
        assert!((p.free_spectral_range() - 9.94e9).abs() < 0.01e9);
        let s = qcl_hfc_scenario_from_str(PARAMS).unwrap();
        assert_eq!(s.geometry.length_m, 4e-3);
        let sys = s.build_system().unwrap();
        let f = (sys.energy(UPPER) - sys.energy(LOWER)) / crate::constants::PLANCK;
        assert!((f - 3.5e12).abs() < 0.02e12, "{f}");
    }

    #[test]
    fn missing_rates_are_all_listed() {
        let text = PARAMS
            .lines()
            .filter(|l| !l.starts_with("upper_to_lower") && !l.starts_with("injector_to_lower"))
            .collect::<Vec<_>>()
            .join("\n");
        match qcl_hfc_scenario_from_str(&text) {
            Err(ScenarioError::MissingKeys(k)) => {
                assert_eq!(
                    k,
                    vec![
                        "rates_per_s.upper_to_lower",
                        "rates_per_s.injector_to_lower"
                    ]
                )
            }
            other => panic!("{other:?}"),
        }
    }
}
