//! Run descriptors: the file schema plus the two shipped setups, a
//! superfluorescence ensemble and a THz QCL harmonic comb.

mod qcl;
mod schema;

pub use qcl::{qcl_hfc_scenario, qcl_hfc_scenario_from_str, QclParams};
pub use schema::{
    merge_tables, Boundaries, Coupling, Geometry, InitialState, NoiseConfig, ProbeConfig,
    ProbeQuantity, QuantumConfig, Rate, RunConfig, Scenario, ScenarioError, Side, SCHEMA_TEXT,
    SCHEMA_VERSION,
};

use crate::quantum::DensityMatrix;

/// Base superfluorescence configuration shipped with the crate.
pub const SUPERFLUORESCENCE_TOML: &str =
    include_str!("../../../../scenarios/superfluorescence.toml");

/// Superfluorescence ensemble with total dephasing time `t2`. `overrides`
/// is merged over the shipped configuration before T2 is applied.
pub fn superfluorescence_scenario(
    t2: f64,
    overrides: &toml::Table,
) -> Result<Scenario, ScenarioError> {
    if !(t2 > 0.0) {
        return Err(ScenarioError::Invalid(format!(
            "t2 = {t2} s must be positive"
        )));
    }
    let mut table: toml::Table =
        toml::from_str(SUPERFLUORESCENCE_TOML).map_err(|e| ScenarioError::Parse(e.to_string()))?;
    merge_tables(&mut table, overrides);
    let mut s: Scenario = toml::Value::Table(table)
        .try_into()
        .map_err(|e: toml::de::Error| ScenarioError::Parse(e.to_string()))?;
    if s.quantum.levels != 2 {
        return Err(ScenarioError::Invalid(
            "superfluorescence needs two levels".into(),
        ));
    }
    // 1/T2 = 1/(2 T1) + gamma_p with the upper level decaying at 1/T1.
    let decay: f64 = s
        .quantum
        .rates_per_s
        .iter()
        .filter(|r| r.from == 1 && r.to == 0)
        .map(|r| r.value)
        .sum();
    let gamma_p = 1.0 / t2 - 0.5 * decay;
    if gamma_p < 0.0 {
        return Err(ScenarioError::Invalid(format!(
            "T2 = {t2} s exceeds the lifetime limit 2 T1 = {} s",
            2.0 / decay
        )));
    }
    s.quantum.pure_dephasing_per_s = vec![Coupling {
        i: 0,
        j: 1,
        value: gamma_p,
    }];
    s.description = format!("{} (T2 = {t2:e} s)", s.description);
    s.validate()?;
    Ok(s)
}

/// Bloch vector of a two-level density matrix (level 1 excited).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlochVector {
    pub rho1: f64,
    pub rho2: f64,
    pub rho3: f64,
    /// rho3 / |rho|, `None` for a zero Bloch vector.
    pub ratio: Option<f64>,
}

pub fn bloch_vector_metric(rho: &DensityMatrix) -> BlochVector {
    assert_eq!(rho.dim(), 2, "Bloch vector needs a two-level matrix");
    let eg = rho.get(1, 0);
    let rho1 = 2.0 * eg.re;
    let rho2 = 2.0 * eg.im;
    let rho3 = rho.population(1) - rho.population(0);
    let norm = (rho1 * rho1 + rho2 * rho2 + rho3 * rho3).sqrt();
    BlochVector {
        rho1,
        rho2,
        rho3,
        ratio: if norm > 0.0 { Some(rho3 / norm) } else { None },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::noise::tipped_inverted_state;
    use crate::C64;

    #[test]
    fn bloch_metric_limits() {
        let b = bloch_vector_metric(&DensityMatrix::pure_level(2, 1));
        assert_eq!(b.ratio, Some(1.0));
        let mut rho = DensityMatrix::from_populations(&[0.5, 0.5]);
        rho.set(1, 0, C64::new(0.5, 0.0));
        rho.set(0, 1, C64::new(0.5, 0.0));
        let b = bloch_vector_metric(&rho);
        assert_eq!((b.rho1, b.rho3, b.ratio), (1.0, 0.0, Some(0.0)));
        assert_eq!(
            bloch_vector_metric(&DensityMatrix::from_populations(&[0.5, 0.5])).ratio,
            None
        );
        // A pure tipped state has unit length and ratio cos(theta).
        let b = bloch_vector_metric(&tipped_inverted_state(0.3, 1.1));
        assert!((b.ratio.unwrap() - 0.3f64.cos()).abs() < 1e-12);
    }

    #[test]
    fn superfluorescence_dephasing_follows_t2() {
        let s = superfluorescence_scenario(100e-12, &toml::Table::new()).unwrap();
        let sys = s.build_system().unwrap();
        assert!((sys.dephasing(0, 1) - 1e10).abs() < 1e-3);
        let s = superfluorescence_scenario(14.3e-12, &toml::Table::new()).unwrap();
        let sys = s.build_system().unwrap();
        assert!((1.0 / sys.dephasing(0, 1) - 14.3e-12).abs() < 1e-24);
        assert!(superfluorescence_scenario(-1.0, &toml::Table::new()).is_err());
    }

    #[test]
    fn overrides_are_merged() {
        let over: toml::Table =
            toml::from_str("[geometry]\ncells = 40\n[run]\nduration_s = 1e-12").unwrap();
        let s = superfluorescence_scenario(100e-12, &over).unwrap();
        assert_eq!(s.geometry.cells, 40);
        assert_eq!(s.run.duration_s, 1e-12);
        let bad: toml::Table = toml::from_str("[geometry]\ncolls = 40").unwrap();
        assert!(superfluorescence_scenario(100e-12, &bad).is_err());
    }
}
